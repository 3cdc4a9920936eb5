#include "thermalsplat/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "thermalsplat/error.hpp"

namespace thermalsplat {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  // libpng requires this handler not to return; longjmp back to the caller.
  (void)msg;
  png_longjmp(png, 1);
}

void write_png(const RadianceImage& image, const std::filesystem::path& path, int bit_depth) {
  if (image.width <= 0 || image.height <= 0) throw DataError("cannot save empty image " + path.string());
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng initialization failed");
  }
  const double levels = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t bpp = bit_depth / 8;
  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * bpp);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double v = std::clamp(image.at(x, y), 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::floor(v * levels + 0.5));
      if (bit_depth == 16) {
        row[2 * x] = static_cast<png_byte>(q >> 8);
        row[2 * x + 1] = static_cast<png_byte>(q & 0xff);
      } else {
        row[x] = static_cast<png_byte>(q);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RadianceImage load_image(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw DataError("cannot open image " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("unsupported image format (not PNG): " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("libpng initialization failed");
  }
  RadianceImage image;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  const bool gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
  const bool rgb = color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA;
  if ((depth != 8 && depth != 16) || !(gray || rgb)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("unsupported PNG (need 8/16-bit gray or RGB): " + path.string());
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // host order (little-endian)
  png_read_update_info(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int channels = rgb ? 3 : 1;
  const double maxv = depth == 16 ? 65535.0 : 255.0;
  image = RadianceImage(static_cast<int>(w), static_cast<int>(h));
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int c = 0; c < channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        double v;
        if (depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + 2 * idx, 2);
          v = s;
        } else {
          v = rows[y][idx];
        }
        sum += v;
      }
      image.at(static_cast<int>(x), static_cast<int>(y)) = sum / (channels * maxv);
    }
  }
  return image;
}

void save_image(const RadianceImage& image, const std::filesystem::path& path) { write_png(image, path, 8); }
void save_image16(const RadianceImage& image, const std::filesystem::path& path) { write_png(image, path, 16); }

}  // namespace thermalsplat
