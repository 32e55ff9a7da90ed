#pragma once

// Dense 64-bit arrays, a reverse-mode tape, and SGD with momentum.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mvc::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Row-major dense array of doubles. A rank-0 array is a scalar.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> values);

  static Array scalar(double v) { return Array(Shape{}, std::vector<double>{v}); }
  // Convenience for small literals in tests and examples.
  static Array matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Array vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

  // Scalar value of a one-element array.
  double item() const;
  Array reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Named trainable parameters. Iteration order is insertion order, which is
/// also the checkpoint order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Array value;
    Array grad;
    Array velocity;
    bool trainable = true;
  };

  Entry& add(const std::string& name, Array value, bool trainable = true);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Sets the trainable flag of every entry whose name starts with prefix.
  void set_trainable(const std::string& prefix, bool trainable);
  void zero_grad();
  // Removes entries whose name starts with prefix.
  void erase_prefix(const std::string& prefix);

  // FNV-1a over names and raw value bytes of entries matching prefix.
  std::uint64_t fingerprint(const std::string& prefix = "") const;

  // Values and names only; gradients and momentum are ignored.
  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records differentiable operations in execution order and replays their
/// adjoints in exact reverse order. One tape per forward pass.
class Tape {
 public:
  // Receives the gradient of the node's output; accumulates into inputs.
  using BackwardFn = std::function<void(Tape&, const Array& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  // Leaf that requires a gradient (readable with grad()).
  Var variable(Array value);
  // Leaf bound to a store entry; backward() adds its gradient into the entry
  // when the entry is trainable.
  Var parameter(ParamStore& store, const std::string& name);

  Var record(Array value, bool requires_grad, BackwardFn backward);

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer for a node, allocated as zeros on first use.
  Array& grad_buffer(std::size_t id);
  // Gradient of the last backward() w.r.t. v; zeros if none reached it.
  Array grad(const Var& v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates to every leaf. loss must hold
  // exactly one value.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    Array grad;
    bool requires_grad = false;
    BackwardFn backward;
    ParamStore::Entry* param = nullptr;
  };
  std::vector<Node> nodes_;
};

// ---- differentiable operations ---------------------------------------------

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var sum(const Var& a);
// x[B×n] + b[n] broadcast over rows.
Var add_row_bias(const Var& x, const Var& bias);
// x[B×C×H×W] + b[C] broadcast over batch and space.
Var add_channel_bias(const Var& x, const Var& bias);
Var relu(const Var& x);
// Per-channel standardization with batch statistics over (B, H, W), then
// γ·x̂ + β. x[B×C×H×W]; gamma, beta[C].
Var channel_normalize(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
// x[C_in×H×W] or x[B×C_in×H×W]; kernels[C_out×C_in×kh×kw].
Var conv2d(const Var& input, const Var& kernels, int stride, int padding);
// x[B×C×H×W] → [B×C].
Var global_mean_pool(const Var& x);
// Rank 1: whole vector. Rank 2: each row independently.
Var l2_normalize(const Var& x);
// −log softmax(logits)[label], logits[C].
Var softmax_cross_entropy(const Var& logits, int label);
// Mean over rows of −log softmax(row)[labels[row]]. With exclude_diagonal the
// entry (r, r) is removed from row r's normalizer (requires a square input).
Var cross_entropy_rows(const Var& logits, std::span<const int> labels, bool exclude_diagonal = false);

inline constexpr double kNormEpsilon = 1e-12;

// ---- plain-value conveniences ---------------------------------------------

Array matmul(const Array& a, const Array& b);
Array conv2d(const Array& input, const Array& kernels, int stride, int padding);
Array relu(const Array& x);
Array l2_normalize(const Array& x);
double softmax_cross_entropy(const Array& logits, int label);

// ---- optimization ------------------------------------------------------------

// v ← momentum·v + g; θ ← θ − lr·v for trainable entries, then all gradients
// are zeroed. Throws DivergenceError naming the first non-finite gradient.
void sgd_step(ParamStore& store, double lr, double momentum);

// Keeps large freed blocks in the glibc heap instead of returning them to the
// kernel; training allocates and frees the same buffer sizes every step.
// No-op on other C libraries.
void tune_allocator();

// ---- checkpoint ----------------------------------------------------------------

// Layout: "MVCK1", then per entry: u32 name length, name bytes, u32 rank,
// rank × u64 dims, size × f64. All integers and floats little-endian.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const ParamStore& store);
ParamStore decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace mvc::num
