#include "thermalsplat/dataset.hpp"

#include "thermalsplat/error.hpp"
#include "thermalsplat/image_io.hpp"
#include "thermalsplat/parallel.hpp"

namespace thermalsplat {

SplitResult split_train_test(std::size_t view_count) {
  SplitResult s;
  for (std::size_t i = 0; i < view_count; ++i) (i % 8 == 0 ? s.test : s.train).push_back(i);
  if (view_count < 8)
    s.warning = "only " + std::to_string(view_count) + " views; test split holds a single view";
  return s;
}

double normalized_time(int frame_index, int frame_count) {
  if (frame_count <= 1) return 0.0;
  return static_cast<double>(frame_index) / static_cast<double>(frame_count - 1);
}

Dataset load_dataset(const std::filesystem::path& root) {
  Dataset ds;
  ds.root = root;
  ds.scene = parse_colmap(find_sparse_model(root));
  const std::size_t n = ds.scene.views.size();
  if (n == 0) throw DataError(root.string() + ": scene has no images");
  ds.views.resize(n);
  std::vector<std::string> mismatch(n);
  parallel_for(0, n, [&](std::size_t i) {
    const SparseView& sv = ds.scene.views[i];
    ThermalView& v = ds.views[i];
    v.camera = ds.scene.camera(sv);
    v.frame_index = sv.frame_index;
    v.time_norm = normalized_time(sv.frame_index, static_cast<int>(n));
    v.image = load_image(root / "images" / sv.name);
    if (v.image.width != v.camera.width || v.image.height != v.camera.height) {
      mismatch[i] = sv.name + ": image is " + std::to_string(v.image.width) + "x" + std::to_string(v.image.height) +
                    ", camera expects " + std::to_string(v.camera.width) + "x" + std::to_string(v.camera.height);
      const double sx = static_cast<double>(v.image.width) / v.camera.width;
      const double sy = static_cast<double>(v.image.height) / v.camera.height;
      v.camera.fx *= sx;
      v.camera.cx *= sx;
      v.camera.fy *= sy;
      v.camera.cy *= sy;
      v.camera.width = v.image.width;
      v.camera.height = v.image.height;
    }
  });
  for (auto& m : mismatch)
    if (!m.empty()) ds.warnings.push_back(m);
  ds.split = split_train_test(n);
  if (!ds.split.warning.empty()) ds.warnings.push_back(ds.split.warning);
  return ds;
}

}  // namespace thermalsplat
