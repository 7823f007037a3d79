#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "muse/energy.hpp"
#include "muse/errors.hpp"

namespace muse {

// Checkpoint wire format (little-endian):
//   magic "MUSE" | version u32 | variant u8 | sigma f64 | layer_count u32 |
//   per layer: rows u32, cols u32, activation u8, f64 weights (row-major),
//   f64 biases | scalar-head flag u8 | head layer in the same per-layer form.
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : buf_(std::move(bytes)) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return v;
  }
  double f64() {
    double v;
    std::memcpy(&v, take(8), 8);
    return v;
  }
  void raw(void* out, std::size_t n) { std::memcpy(out, take(n), n); }
  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > buf_.size()) throw CorruptCheckpoint("checkpoint truncated");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

inline void write_layer(ByteWriter& w, const DenseLayer& l) {
  w.u32(static_cast<std::uint32_t>(l.weight.rows()));
  w.u32(static_cast<std::uint32_t>(l.weight.cols()));
  w.u8(static_cast<std::uint8_t>(l.activation));
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
  }
  for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias[r]);
}

inline DenseLayer read_layer(ByteReader& r) {
  DenseLayer l;
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
    throw CorruptCheckpoint("checkpoint layer dimensions out of range");
  }
  const std::uint8_t act = r.u8();
  if (act > 1) throw CorruptCheckpoint("checkpoint has unknown activation code");
  l.activation = static_cast<Activation>(act);
  l.weight.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) l.weight(i, j) = r.f64();
  }
  l.bias.resize(rows);
  for (std::uint32_t i = 0; i < rows; ++i) l.bias[i] = r.f64();
  return l;
}

inline std::vector<char> encode_model(ModelVariant variant, const Mlp& net, double sigma) {
  ByteWriter w;
  w.raw("MUSE", 4);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(variant));
  w.f64(sigma);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const DenseLayer& l : net.layers) write_layer(w, l);
  w.u8(net.scalar_head ? 1 : 0);
  if (net.scalar_head) write_layer(w, *net.scalar_head);
  return w.bytes();
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw Error("cannot open: " + path.string());
  const std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<char> bytes(static_cast<std::size_t>(n));
  f.read(bytes.data(), n);
  if (!f) throw Error("read failed: " + path.string());
  return bytes;
}

}  // namespace detail

using LoadedModel = std::variant<EnergyModel, ScoreBaseline>;

inline void save_checkpoint(const EnergyModel& m, const std::filesystem::path& path) {
  m.validate();
  detail::write_file(path, detail::encode_model(m.variant, m.net, m.sigma));
}

inline void save_checkpoint(const ScoreBaseline& m, const std::filesystem::path& path) {
  m.validate();
  detail::write_file(path, detail::encode_model(m.variant, m.net, m.sigma));
}

inline LoadedModel load_checkpoint(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path));
  char magic[4];
  try {
    std::memcpy(magic, r.u32_raw(), 4);
  } catch (...) {
    throw CorruptCheckpoint("checkpoint truncated: " + path.string());
  }
  return LoadedModel{};
}

}  // namespace muse
