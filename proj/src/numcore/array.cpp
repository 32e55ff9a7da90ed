#include <cmath>
#include <cstring>
#include <sstream>

#include "mvc/errors.hpp"
#include "mvc/numcore.hpp"

namespace mvc::num {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "×" : "") << shape[i];
  os << ']';
  return os.str();
}

Array::Array(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_)
    if (d == 0) throw DimensionError("array dimensions must be positive, got " + shape_string(shape_));
  values_.assign(shape_size(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  for (auto d : shape_)
    if (d == 0) throw DimensionError("array dimensions must be positive, got " + shape_string(shape_));
  if (shape_size(shape_) != values_.size())
    throw DimensionError("shape " + shape_string(shape_) + " does not match " + std::to_string(values_.size()) +
                         " values");
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Array({r, c}, std::move(v));
}

Array Array::vector(std::initializer_list<double> values) {
  return Array({values.size()}, std::vector<double>(values));
}

double Array::item() const {
  if (values_.size() != 1) throw DimensionError("item() on array of shape " + shape_string(shape_));
  return values_[0];
}

Array Array::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size())
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Array(std::move(shape), values_);
}

bool Array::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---- ParamStore ------------------------------------------------------------

ParamStore::Entry& ParamStore::add(const std::string& name, Array value, bool trainable) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  Entry e;
  e.name = name;
  e.grad = Array(value.shape(), 0.0);
  e.velocity = Array(value.shape(), 0.0);
  e.value = std::move(value);
  e.trainable = trainable;
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back();
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter: " + name);
  return entries_[it->second];
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter: " + name);
  return entries_[it->second];
}

void ParamStore::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& e : entries_)
    if (e.name.starts_with(prefix)) e.trainable = trainable;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.values().begin(), e.grad.values().end(), 0.0);
}

void ParamStore::erase_prefix(const std::string& prefix) {
  std::vector<Entry> kept;
  for (auto& e : entries_)
    if (!e.name.starts_with(prefix)) kept.push_back(std::move(e));
  entries_ = std::move(kept);
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].name] = i;
}

std::uint64_t ParamStore::fingerprint(const std::string& prefix) const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ull;
    }
  };
  for (const auto& e : entries_) {
    if (!e.name.starts_with(prefix)) continue;
    mix(e.name.data(), e.name.size());
    mix(e.value.data(), e.value.size() * sizeof(double));
  }
  return h;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.value.shape() != y.value.shape()) return false;
    if (std::memcmp(x.value.data(), y.value.data(), x.value.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace mvc::num
