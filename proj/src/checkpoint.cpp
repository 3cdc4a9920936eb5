#include "thermalsplat/checkpoint.hpp"

#include <array>
#include <cstring>
#include <map>

#include "bytes.hpp"
#include "thermalsplat/error.hpp"

namespace thermalsplat {
namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::array<char, 8> kMagic{'T', 'S', 'P', 'L', 'C', 'K', 'P', 'T'};

using Tag = std::array<char, 4>;
constexpr Tag kConfig{'C', 'O', 'N', 'F'};
constexpr Tag kState{'S', 'T', 'A', 'T'};
constexpr Tag kGaussians{'G', 'A', 'U', 'S'};
constexpr Tag kAtf{'A', 'T', 'F', ' '};
constexpr Tag kTcm{'T', 'C', 'M', ' '};
constexpr Tag kOptimizer{'O', 'P', 'T', 'M'};

std::string tag_name(const Tag& t) {
  std::string s(t.begin(), t.end());
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

template <typename T, std::size_t N>
void put_rows(ByteWriter& w, const std::vector<T>& rows) {
  w.put<std::uint64_t>(rows.size() * N);
  for (const T& r : rows)
    for (std::size_t k = 0; k < N; ++k) w.put<double>(r[static_cast<int>(k)]);
}

template <typename T, std::size_t N>
std::vector<T> get_rows(ByteReader& r, std::size_t count) {
  const std::size_t at = r.offset();
  const std::vector<double> flat = r.get_doubles();
  if (flat.size() != count * N) r.fail("array length does not match Gaussian count", at);
  std::vector<T> rows(count);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < N; ++k) rows[i][static_cast<int>(k)] = flat[i * N + k];
  return rows;
}

void put_u32s(ByteWriter& w, const std::vector<std::uint32_t>& v) {
  w.put<std::uint64_t>(v.size());
  for (auto x : v) w.put(x);
}
std::vector<std::uint32_t> get_u32s(ByteReader& r) {
  const std::size_t at = r.offset();
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining() / 4) r.fail("array length exceeds data", at);
  std::vector<std::uint32_t> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = r.get<std::uint32_t>();
  return v;
}

void put_group(ByteWriter& w, const AdamGroup& g) {
  w.put(g.beta1);
  w.put(g.beta2);
  w.put(g.eps);
  w.put(g.step);
  w.put(g.skipped);
  w.put_doubles(g.m);
  w.put_doubles(g.v);
}
AdamGroup get_group(ByteReader& r) {
  AdamGroup g;
  g.beta1 = r.get<double>();
  g.beta2 = r.get<double>();
  g.eps = r.get<double>();
  g.step = r.get<std::uint64_t>();
  g.skipped = r.get<std::uint64_t>();
  g.m = r.get_doubles();
  g.v = r.get_doubles();
  return g;
}

void put_dense(ByteWriter& w, const DenseLayer& l) {
  w.put<std::int32_t>(l.in);
  w.put<std::int32_t>(l.out);
  w.put_doubles(l.weight);
  w.put_doubles(l.bias);
}
DenseLayer get_dense(ByteReader& r) {
  DenseLayer l;
  const std::size_t at = r.offset();
  l.in = r.get<std::int32_t>();
  l.out = r.get<std::int32_t>();
  l.weight = r.get_doubles();
  l.bias = r.get_doubles();
  if (l.in <= 0 || l.out <= 0 || l.weight.size() != static_cast<std::size_t>(l.in) * l.out ||
      l.bias.size() != static_cast<std::size_t>(l.out))
    r.fail("inconsistent dense layer shape", at);
  return l;
}

void put_conv(ByteWriter& w, const ConvLayer& l) {
  w.put<std::int32_t>(l.in);
  w.put<std::int32_t>(l.out);
  w.put_doubles(l.weight);
  w.put_doubles(l.bias);
}
ConvLayer get_conv(ByteReader& r) {
  ConvLayer l;
  const std::size_t at = r.offset();
  l.in = r.get<std::int32_t>();
  l.out = r.get<std::int32_t>();
  l.weight = r.get_doubles();
  l.bias = r.get_doubles();
  if (l.in <= 0 || l.out <= 0 || l.weight.size() != static_cast<std::size_t>(l.in) * l.out * 9 ||
      l.bias.size() != static_cast<std::size_t>(l.out))
    r.fail("inconsistent conv layer shape", at);
  return l;
}

std::vector<std::uint8_t> encode_gaussians(const Model& m) {
  ByteWriter w;
  const GaussianCloud& c = m.cloud;
  w.put<std::uint64_t>(c.size());
  w.put<std::int32_t>(c.sh_degree_active);
  for (int a = 0; a < 3; ++a) w.put(m.box.lo[a]);
  for (int a = 0; a < 3; ++a) w.put(m.box.hi[a]);
  put_rows<Vec3, 3>(w, c.positions);
  put_rows<Vec3, 3>(w, c.log_scales);
  put_rows<Quat, 4>(w, c.rotations);
  w.put_doubles(c.opacity_raw);
  put_rows<ShCoeffs, kMaxShCoeffs>(w, c.sh);
  return std::move(w.bytes());
}

void decode_gaussians(ByteReader& r, Model& m) {
  const std::size_t at = r.offset();
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining() / 8) r.fail("Gaussian count exceeds data", at);
  GaussianCloud& c = m.cloud;
  c.sh_degree_active = r.get<std::int32_t>();
  if (c.sh_degree_active < 0 || c.sh_degree_active > kMaxShDegree) r.fail("SH degree out of range", at + 8);
  for (int a = 0; a < 3; ++a) m.box.lo[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) m.box.hi[a] = r.get<double>();
  const auto count = static_cast<std::size_t>(n);
  c.positions = get_rows<Vec3, 3>(r, count);
  c.log_scales = get_rows<Vec3, 3>(r, count);
  c.rotations = get_rows<Quat, 4>(r, count);
  const std::size_t op_at = r.offset();
  c.opacity_raw = r.get_doubles();
  if (c.opacity_raw.size() != count) r.fail("array length does not match Gaussian count", op_at);
  c.sh = get_rows<ShCoeffs, kMaxShCoeffs>(r, count);
}

std::vector<std::uint8_t> encode_atf(const AtfNetwork& net) {
  ByteWriter w;
  w.put<std::int32_t>(net.frequencies);
  w.put<std::uint64_t>(net.version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) put_dense(w, l);
  return std::move(w.bytes());
}
AtfNetwork decode_atf(ByteReader& r) {
  AtfNetwork net;
  net.frequencies = r.get<std::int32_t>();
  net.version = r.get<std::uint64_t>();
  const auto layers = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < layers && !r.done(); ++i) net.layers.push_back(get_dense(r));
  if (net.layers.size() != layers) r.fail("missing layers");
  return net;
}

std::vector<std::uint8_t> encode_tcm(const TcmNetwork& net) {
  ByteWriter w;
  w.put<std::int32_t>(net.channels);
  w.put<std::uint64_t>(net.version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) put_conv(w, l);
  return std::move(w.bytes());
}
TcmNetwork decode_tcm(ByteReader& r) {
  TcmNetwork net;
  net.channels = r.get<std::int32_t>();
  net.version = r.get<std::uint64_t>();
  const auto layers = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < layers && !r.done(); ++i) net.layers.push_back(get_conv(r));
  if (net.layers.size() != layers) r.fail("missing layers");
  return net;
}

std::vector<std::uint8_t> encode_state(const TrainState& s) {
  ByteWriter w;
  w.put<std::int32_t>(s.iteration);
  w.put_string(s.rng.serialize());
  w.put(s.scene_extent);
  w.put_doubles(s.grad_accum);
  put_u32s(w, s.grad_count);
  put_u32s(w, s.view_order);
  w.put(s.view_cursor);
  return std::move(w.bytes());
}
void decode_state(ByteReader& r, TrainState& s) {
  s.iteration = r.get<std::int32_t>();
  s.rng.deserialize(r.get_string());
  s.scene_extent = r.get<double>();
  s.grad_accum = r.get_doubles();
  s.grad_count = get_u32s(r);
  s.view_order = get_u32s(r);
  s.view_cursor = r.get<std::uint32_t>();
}

std::vector<std::uint8_t> encode_optimizer(const TrainState& s) {
  ByteWriter w;
  for (const AdamGroup* g : {&s.position, &s.log_scale, &s.rotation, &s.opacity, &s.sh, &s.atf, &s.tcm})
    put_group(w, *g);
  return std::move(w.bytes());
}
void decode_optimizer(ByteReader& r, TrainState& s) {
  for (AdamGroup* g : {&s.position, &s.log_scale, &s.rotation, &s.opacity, &s.sh, &s.atf, &s.tcm}) *g = get_group(r);
}

void put_section(ByteWriter& w, const Tag& tag, const std::vector<std::uint8_t>& payload) {
  for (char c : tag) w.put<char>(c);
  w.put<std::uint64_t>(payload.size());
  w.put_bytes(payload);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  ByteWriter w;
  for (char c : kMagic) w.put<char>(c);
  w.put<std::uint32_t>(kCheckpointVersion);
  const std::string conf = ck.config.to_text();
  put_section(w, kConfig, std::vector<std::uint8_t>(conf.begin(), conf.end()));
  put_section(w, kState, encode_state(ck.state));
  put_section(w, kGaussians, encode_gaussians(ck.model));
  if (ck.model.atf) put_section(w, kAtf, encode_atf(*ck.model.atf));
  if (ck.model.tcm) put_section(w, kTcm, encode_tcm(*ck.model.tcm));
  put_section(w, kOptimizer, encode_optimizer(ck.state));
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  ByteReader top(bytes, source);
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw DataError(source + ": not a checkpoint (bad magic)");
  top.get_bytes(kMagic.size());
  if (top.remaining() < 4) throw DataError(source + ": header truncated");
  const auto version = top.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError(source + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");

  std::map<Tag, std::span<const std::uint8_t>> sections;
  std::map<Tag, std::size_t> offsets;
  while (!top.done()) {
    Tag tag{};
    if (top.remaining() < 12) throw DataError(source + ": section header truncated at byte " +
                                              std::to_string(top.offset()));
    for (char& c : tag) c = top.get<char>();
    const auto len = top.get<std::uint64_t>();
    if (len > top.remaining()) throw DataError(source + ": section " + tag_name(tag) + " truncated");
    offsets[tag] = top.offset();
    sections[tag] = top.get_bytes(static_cast<std::size_t>(len));
  }

  auto with_section = [&](const Tag& tag, bool required, auto&& fn) {
    const auto it = sections.find(tag);
    if (it == sections.end()) {
      if (required) throw DataError(source + ": missing section " + tag_name(tag));
      return;
    }
    ByteReader r(it->second, source + " section " + tag_name(tag), offsets[tag]);
    try {
      fn(r);
    } catch (const DataError& e) {
      if (r.remaining() == 0 || std::string(e.what()).find("unexpected end") != std::string::npos)
        throw DataError(source + ": section " + tag_name(tag) + " truncated (" + e.what() + ")");
      throw;
    }
    if (!r.done()) r.fail("trailing bytes");
  };

  Checkpoint ck;
  with_section(kConfig, true, [&](ByteReader& r) {
    const auto b = r.get_bytes(r.remaining());
    try {
      ck.config = TrainConfig::from_text(std::string(b.begin(), b.end()));
    } catch (const UsageError& e) {
      throw DataError(source + ": bad config section: " + e.what());
    }
  });
  with_section(kState, true, [&](ByteReader& r) { decode_state(r, ck.state); });
  with_section(kGaussians, true, [&](ByteReader& r) { decode_gaussians(r, ck.model); });
  with_section(kAtf, false, [&](ByteReader& r) { ck.model.atf = decode_atf(r); });
  with_section(kTcm, false, [&](ByteReader& r) { ck.model.tcm = decode_tcm(r); });
  with_section(kOptimizer, true, [&](ByteReader& r) { decode_optimizer(r, ck.state); });
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  detail::write_file_bytes(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  return decode_checkpoint(detail::read_file_bytes(path), path.string());
}

}  // namespace thermalsplat
