#include <algorithm>
#include <bit>
#include <cstring>
#include <cmath>
#include <fstream>

#include "mvc/errors.hpp"
#include "mvc/numcore.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace mvc::num {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

void sgd_step(ParamStore& store, double lr, double momentum) {
  if (!(lr > 0.0)) throw ConfigError("sgd_step: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("sgd_step: momentum must lie in [0, 1)");
  for (const auto& e : store.entries())
    if (e.trainable && !e.grad.all_finite()) throw DivergenceError("non-finite gradient in parameter " + e.name);

  for (auto& e : store.entries()) {
    if (e.trainable) {
      double* v = e.velocity.data();
      double* p = e.value.data();
      const double* g = e.grad.data();
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        v[i] = momentum * v[i] + g[i];
        p[i] -= lr * v[i];
      }
    }
    std::fill(e.grad.values().begin(), e.grad.values().end(), 0.0);
  }
}

// ---- checkpoint ----------------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'M', 'V', 'C', 'K', '1'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& store) {
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  for (const auto& e : store.entries()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
    for (auto d : e.value.shape()) put_le<std::uint64_t>(out, d);
    for (double v : e.value.values()) put_le<double>(out, v);
  }
  return out;
}

ParamStore decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw ParseError("checkpoint: bad magic");
  ParamStore store;
  while (!r.done()) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name = r.bytes(name_len);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw ParseError("checkpoint: implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = r.get<double>();
    store.add(name, Array(std::move(shape), std::move(values)));
  }
  return store;
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(store);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace mvc::num
