#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "evorl/nn/tensor.hpp"

namespace evorl::nn {

/// A trainable tensor that outlives any single tape. Gradients from every
/// tape that references it accumulate into `grad` until zero_grad().
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.set_zero(); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records primitive operations in creation order; backward() visits them
/// once each in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t)>;

  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Free variable whose gradient is read back with grad().
  Var leaf(Tensor value);
  /// Leaf bound to a parameter; gradients accumulate into p.grad.
  /// Repeated calls with the same parameter return the same node.
  Var param(Parameter& p);
  /// Read-only view of a parameter that never receives gradient. Recorded
  /// and replayed like detach().
  Var frozen(const Parameter& p);
  /// Stop-gradient. When replaying, returns the value captured by an earlier
  /// recording pass instead of the live value.
  Var detach(Var v);

  void backward(Var loss);
  const Tensor& grad(Var v) const;

  /// Capture every detach() value on this tape (in call order).
  void record_detached() { detach_mode_ = DetachMode::kRecord; }
  std::vector<Tensor> take_detached() { return std::move(detached_); }
  /// Substitute previously captured values for detach() results, in order.
  void replay_detached(std::vector<Tensor> values);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Primitive-author interface.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn, const char* op);
  const Tensor& value(std::uint32_t id) const;
  const Tensor& node_grad(std::uint32_t id) const { return nodes_[id].grad; }
  std::uint32_t parent(std::uint32_t id, int k) const { return nodes_[id].parents[k]; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  /// Adds g into the adjoint of node `id` if that node carries gradient.
  void accumulate(std::uint32_t id, const Tensor& g);
  Tensor& grad_buffer(std::uint32_t id);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Parameter* param = nullptr;
    Tensor grad;
    std::uint32_t parents[3] = {0, 0, 0};
    std::uint8_t n_parents = 0;
    bool requires_grad = false;
    const char* op = "";
    BackwardFn backward;
  };

  enum class DetachMode { kLive, kRecord, kReplay };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  DetachMode detach_mode_ = DetachMode::kLive;
  std::vector<Tensor> detached_;
  std::size_t replay_cursor_ = 0;
  bool backward_done_ = false;
};

// ---- primitives -----------------------------------------------------------
// Binary elementwise ops broadcast when one operand is 1x1, 1xn or mx1.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var affine(Var x, Var w, Var b);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var square(Var a);
Var abs(Var a);
Var clamp(Var a, double lo, double hi);
Var huber(Var a, double delta = 1.0);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Elementwise binary cross-entropy between sigmoid(logits) and targets.
Var bce_with_logits(Var logits, Var targets);

Var sum(Var a);
Var mean(Var a);
/// Row-wise sum: [m x n] -> [m x 1].
Var sum_cols(Var a);
/// Column-wise sum: [m x n] -> [1 x n].
Var sum_rows(Var a);

Var concat_cols(std::initializer_list<Var> parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// Stack `times` copies of a vertically.
Var tile_rows(Var a, std::size_t times);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, Var a) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, Var a) { return add_scalar(neg(a), c); }

// ---- composites -----------------------------------------------------------

/// sqrt(sum_j a_ij^2 + eps) per row, [m x 1].
Var row_norm(Var a, double eps = 1e-12);
/// Sum of squares per row, [m x 1].
Var row_sq_norm(Var a);

}  // namespace evorl::nn
