#include "mvc/errors.hpp"
#include "mvc/numcore.hpp"

namespace mvc::num {

const Array& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Array value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Array value) { return record(std::move(value), true, nullptr); }

Var Tape::parameter(ParamStore& store, const std::string& name) {
  auto& entry = store.at(name);
  Var v = record(entry.value, entry.trainable, nullptr);
  nodes_[v.id()].param = &entry;
  return v;
}

Var Tape::record(Array value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Array& Tape::grad_buffer(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Array(n.value.shape(), 0.0);
  return n.grad;
}

Array Tape::grad(const Var& v) const {
  const auto& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Array(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw DimensionError("loss was not recorded on this tape");
  if (nodes_[loss.id()].value.size() != 1)
    throw DimensionError("backward requires a scalar loss, got shape " +
                         shape_string(nodes_[loss.id()].value.shape()));
  for (auto& n : nodes_) n.grad = Array();
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
    } else if (n.param != nullptr && n.param->trainable) {
      auto dst = n.param->grad.values();
      auto src = n.grad.values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

}  // namespace mvc::num
