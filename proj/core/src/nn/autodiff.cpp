#include "evorl/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace evorl::nn {

// ---- Var / Tape -------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external != nullptr ? *n.external : n.value;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.op = "leaf";
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = true;
  n.op = "param";
  Var v = push(std::move(n));
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::frozen(const Parameter& p) {
  if (detach_mode_ == DetachMode::kReplay) {
    if (replay_cursor_ >= detached_.size()) {
      throw std::logic_error("detach replay exhausted: loss graph differs from the recorded pass");
    }
    Tensor t = detached_[replay_cursor_++];
    if (!t.same_shape(p.value)) throw ShapeError("frozen replay shape mismatch");
    return constant(std::move(t));
  }
  if (detach_mode_ == DetachMode::kRecord) detached_.push_back(p.value);
  Node n;
  n.external = &p.value;
  n.op = "frozen";
  return push(std::move(n));
}

Var Tape::detach(Var v) {
  switch (detach_mode_) {
    case DetachMode::kReplay: {
      if (replay_cursor_ >= detached_.size()) {
        throw std::logic_error("detach replay exhausted: loss graph differs from the recorded pass");
      }
      Tensor t = detached_[replay_cursor_++];
      if (!t.same_shape(v.value())) throw ShapeError("detach replay shape mismatch");
      return constant(std::move(t));
    }
    case DetachMode::kRecord:
      detached_.push_back(v.value());
      return constant(v.value());
    case DetachMode::kLive:
      break;
  }
  return constant(v.value());
}

void Tape::replay_detached(std::vector<Tensor> values) {
  detached_ = std::move(values);
  replay_cursor_ = 0;
  detach_mode_ = DetachMode::kReplay;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn, const char* op) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const Var& p : parents) {
    if (p.tape_ != this) throw std::logic_error(std::string(op) + ": operand from a different tape");
    n.parents[n.n_parents++] = p.id_;
    n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& v = value(id);
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::accumulate(std::uint32_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = grad_buffer(id);
  buf += g;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::logic_error("backward: loss from a different tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + loss.value().shape_string());
  }
  if (backward_done_) throw std::logic_error("backward called twice on the same tape");
  backward_done_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  grad_buffer(loss.id_).fill(1.0);
  for (std::uint32_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (!n.grad.all_finite()) {
      throw NumericError(std::string("non-finite adjoint at node '") + n.op + "'");
    }
    if (n.backward) n.backward(*this, id);
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr && !n.grad.empty()) n.param->grad += n.grad;
  }
}

const Tensor& Tape::grad(Var v) const {
  static const Tensor kEmpty;
  const Node& n = nodes_[v.id_];
  return n.grad.empty() ? kEmpty : n.grad;
}

// ---- helpers ------------------------------------------------------------------

namespace {

Tensor::Shape broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  auto dim = [&](std::size_t x, std::size_t y) {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw ShapeError(std::string(op) + ": cannot broadcast " + a.shape_string() + " with " + b.shape_string());
  };
  return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

/// Sum g down to [rows x cols] (inverse of broadcasting).
Tensor reduce_to(const Tensor& g, std::size_t rows, std::size_t cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const std::size_t oi = rows == 1 ? 0 : i;
    for (std::size_t j = 0; j < g.cols(); ++j) {
      out(oi, cols == 1 ? 0 : j) += g(i, j);
    }
  }
  return out;
}

template <class F>
Tensor zip_broadcast(const Tensor& a, const Tensor& b, Tensor::Shape shape, F f) {
  Tensor out(shape[0], shape[1]);
  if (a.same_shape(b)) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  const bool ar = a.rows() == 1, ac = a.cols() == 1, br = b.rows() == 1, bc = b.cols() == 1;
  for (std::size_t i = 0; i < shape[0]; ++i) {
    for (std::size_t j = 0; j < shape[1]; ++j) {
      out(i, j) = f(a(ar ? 0 : i, ac ? 0 : j), b(br ? 0 : i, bc ? 0 : j));
    }
  }
  return out;
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

/// Elementwise unary op whose derivative is expressed through (x, y).
template <class F, class D>
Var unary(Var a, const char* op, F f, D dfdx) {
  Tensor y = map(a.value(), f);
  return a.tape().record(std::move(y), {a},
                         [dfdx](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           const Tensor& x = t.value(pa);
                           const Tensor& y = t.value(self);
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(x[i], y[i]);
                         },
                         op);
}

}  // namespace

// ---- elementwise binary -------------------------------------------------------

Var add(Var a, Var b) {
  const auto shape = broadcast_shape(a.value(), b.value(), "add");
  Tensor y = zip_broadcast(a.value(), b.value(), shape, [](double x, double z) { return x + z; });
  return a.tape().record(std::move(y), {a, b},
                         [](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           for (int k = 0; k < 2; ++k) {
                             const std::uint32_t p = t.parent(self, k);
                             if (!t.requires_grad(p)) continue;
                             const Tensor& v = t.value(p);
                             t.accumulate(p, reduce_to(g, v.rows(), v.cols()));
                           }
                         },
                         "add");
}

Var sub(Var a, Var b) {
  const auto shape = broadcast_shape(a.value(), b.value(), "sub");
  Tensor y = zip_broadcast(a.value(), b.value(), shape, [](double x, double z) { return x - z; });
  return a.tape().record(std::move(y), {a, b},
                         [](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           const std::uint32_t pa = t.parent(self, 0);
                           const std::uint32_t pb = t.parent(self, 1);
                           if (t.requires_grad(pa)) {
                             const Tensor& v = t.value(pa);
                             t.accumulate(pa, reduce_to(g, v.rows(), v.cols()));
                           }
                           if (t.requires_grad(pb)) {
                             const Tensor& v = t.value(pb);
                             Tensor r = reduce_to(g, v.rows(), v.cols());
                             r *= -1.0;
                             t.accumulate(pb, r);
                           }
                         },
                         "sub");
}

Var mul(Var a, Var b) {
  const auto shape = broadcast_shape(a.value(), b.value(), "mul");
  Tensor y = zip_broadcast(a.value(), b.value(), shape, [](double x, double z) { return x * z; });
  return a.tape().record(std::move(y), {a, b},
                         [shape](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           const std::uint32_t pa = t.parent(self, 0);
                           const std::uint32_t pb = t.parent(self, 1);
                           const Tensor& av = t.value(pa);
                           const Tensor& bv = t.value(pb);
                           if (t.requires_grad(pa)) {
                             Tensor ga = zip_broadcast(g, bv, shape, [](double x, double z) { return x * z; });
                             t.accumulate(pa, reduce_to(ga, av.rows(), av.cols()));
                           }
                           if (t.requires_grad(pb)) {
                             Tensor gb = zip_broadcast(g, av, shape, [](double x, double z) { return x * z; });
                             t.accumulate(pb, reduce_to(gb, bv.rows(), bv.cols()));
                           }
                         },
                         "mul");
}

Var div(Var a, Var b) {
  const auto shape = broadcast_shape(a.value(), b.value(), "div");
  Tensor y = zip_broadcast(a.value(), b.value(), shape, [](double x, double z) { return x / z; });
  return a.tape().record(std::move(y), {a, b},
                         [shape](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           const std::uint32_t pa = t.parent(self, 0);
                           const std::uint32_t pb = t.parent(self, 1);
                           const Tensor& bv = t.value(pb);
                           const Tensor& yv = t.value(self);
                           if (t.requires_grad(pa)) {
                             const Tensor& av = t.value(pa);
                             Tensor ga = zip_broadcast(g, bv, shape, [](double x, double z) { return x / z; });
                             t.accumulate(pa, reduce_to(ga, av.rows(), av.cols()));
                           }
                           if (t.requires_grad(pb)) {
                             // d(a/b)/db = -y/b
                             Tensor gy = zip_broadcast(g, yv, shape, [](double x, double z) { return x * z; });
                             Tensor gb = zip_broadcast(gy, bv, shape, [](double x, double z) { return -x / z; });
                             t.accumulate(pb, reduce_to(gb, bv.rows(), bv.cols()));
                           }
                         },
                         "div");
}

Var scale(Var a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

// ---- linear algebra -------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tensor y = nn::matmul(a.value(), b.value());
  return a.tape().record(std::move(y), {a, b},
                         [](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           const std::uint32_t pa = t.parent(self, 0);
                           const std::uint32_t pb = t.parent(self, 1);
                           if (t.requires_grad(pa)) t.accumulate(pa, nn::matmul_nt(g, t.value(pb)));
                           if (t.requires_grad(pb)) t.accumulate(pb, nn::matmul_tn(t.value(pa), g));
                         },
                         "matmul");
}

Var matmul_nt(Var a, Var b) {
  Tensor y = nn::matmul_nt(a.value(), b.value());
  return a.tape().record(std::move(y), {a, b},
                         [](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           const std::uint32_t pa = t.parent(self, 0);
                           const std::uint32_t pb = t.parent(self, 1);
                           // y = a b^T: da = g b, db = g^T a
                           if (t.requires_grad(pa)) t.accumulate(pa, nn::matmul(g, t.value(pb)));
                           if (t.requires_grad(pb)) t.accumulate(pb, nn::matmul_tn(g, t.value(pa)));
                         },
                         "matmul_nt");
}

Var affine(Var x, Var w, Var b) {
  Tensor y = nn::affine(x.value(), w.value(), b.value());
  return x.tape().record(std::move(y), {x, w, b},
                         [](Tape& t, std::uint32_t self) {
                           const Tensor& g = t.node_grad(self);
                           const std::uint32_t px = t.parent(self, 0);
                           const std::uint32_t pw = t.parent(self, 1);
                           const std::uint32_t pb = t.parent(self, 2);
                           if (t.requires_grad(px)) t.accumulate(px, nn::matmul_nt(g, t.value(pw)));
                           if (t.requires_grad(pw)) t.accumulate(pw, nn::matmul_tn(t.value(px), g));
                           if (t.requires_grad(pb)) t.accumulate(pb, reduce_to(g, 1, g.cols()));
                         },
                         "affine");
}

// ---- elementwise unary ----------------------------------------------------------

Var tanh(Var a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var sigmoid(Var a) {
  return unary(a, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value");
  }
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a) {
  for (double v : a.value().values()) {
    if (v < 0.0) throw NumericError("sqrt of negative value");
  }
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); },
               [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var square(Var a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  return unary(a, "abs", [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var huber(Var a, double delta) {
  return unary(
      a, "huber",
      [delta](double x) {
        const double ax = std::abs(x);
        return ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
      },
      [delta](double x, double) { return std::abs(x) <= delta ? x : (x > 0.0 ? delta : -delta); });
}

// ---- row-wise distributions ------------------------------------------------------

Var softmax_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row_view(i);
    auto out = y.row_view(i);
    const double m = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) z += (out[j] = std::exp(in[j] - m));
    for (double& v : out) v /= z;
  }
  return a.tape().record(std::move(y), {a},
                         [](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           const Tensor& y = t.value(self);
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < y.rows(); ++i) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
                             for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
                           }
                         },
                         "softmax_rows");
}

Var log_softmax_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row_view(i);
    auto out = y.row_view(i);
    const double m = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] - lse;
  }
  return a.tape().record(std::move(y), {a},
                         [](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           const Tensor& y = t.value(self);
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < y.rows(); ++i) {
                             double gs = 0.0;
                             for (std::size_t j = 0; j < y.cols(); ++j) gs += g(i, j);
                             for (std::size_t j = 0; j < y.cols(); ++j) {
                               ga(i, j) += g(i, j) - std::exp(y(i, j)) * gs;
                             }
                           }
                         },
                         "log_softmax_rows");
}

Var bce_with_logits(Var logits, Var targets) {
  const Tensor& x = logits.value();
  const Tensor& z = targets.value();
  if (!x.same_shape(z)) throw ShapeError("bce_with_logits shape mismatch");
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::max(x[i], 0.0) - x[i] * z[i] + std::log1p(std::exp(-std::abs(x[i])));
  }
  return logits.tape().record(std::move(y), {logits, targets},
                              [](Tape& t, std::uint32_t self) {
                                const Tensor& g = t.node_grad(self);
                                const std::uint32_t px = t.parent(self, 0);
                                const std::uint32_t pz = t.parent(self, 1);
                                const Tensor& x = t.value(px);
                                const Tensor& z = t.value(pz);
                                if (t.requires_grad(px)) {
                                  Tensor& gx = t.grad_buffer(px);
                                  for (std::size_t i = 0; i < g.size(); ++i) {
                                    gx[i] += g[i] * (stable_sigmoid(x[i]) - z[i]);
                                  }
                                }
                                if (t.requires_grad(pz)) {
                                  Tensor& gz = t.grad_buffer(pz);
                                  for (std::size_t i = 0; i < g.size(); ++i) gz[i] -= g[i] * x[i];
                                }
                              },
                              "bce_with_logits");
}

// ---- reductions -----------------------------------------------------------------

Var sum(Var a) {
  return a.tape().record(Tensor::scalar(a.value().sum()), {a},
                         [](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const double g = t.node_grad(self)[0];
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
                         },
                         "sum");
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row_view(i)) s += v;
    y[i] = s;
  }
  return a.tape().record(std::move(y), {a},
                         [](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < ga.rows(); ++i) {
                             for (double& v : ga.row_view(i)) v += g[i];
                           }
                         },
                         "sum_cols");
}

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y = reduce_to(x, 1, x.cols());
  return a.tape().record(std::move(y), {a},
                         [](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < ga.rows(); ++i) {
                             for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g[j];
                           }
                         },
                         "sum_rows");
}

// ---- structural -----------------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  if (parts.size() > 3) {
    // The node layout holds at most three parents; fold longer lists.
    std::vector<Var> head(parts.begin(), parts.begin() + 2);
    Var left = concat_cols(head);
    std::vector<Var> rest{left};
    rest.insert(rest.end(), parts.begin() + 2, parts.end());
    return concat_cols(rest);
  }
  std::vector<const Tensor*> views;
  for (const Var& p : parts) views.push_back(&p.value());
  Tensor y = nn::concat_cols(views);
  std::vector<std::size_t> widths;
  for (const Var& p : parts) widths.push_back(p.cols());
  auto fn = [widths](Tape& t, std::uint32_t self) {
    const Tensor& g = t.node_grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::uint32_t p = t.parent(self, static_cast<int>(k));
      if (t.requires_grad(p)) {
        Tensor& gp = t.grad_buffer(p);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < widths[k]; ++j) gp(i, j) += g(i, offset + j);
        }
      }
      offset += widths[k];
    }
  };
  Tape& tape = parts[0].tape();
  switch (parts.size()) {
    case 1: return tape.record(std::move(y), {parts[0]}, fn, "concat_cols");
    case 2: return tape.record(std::move(y), {parts[0], parts[1]}, fn, "concat_cols");
    default: return tape.record(std::move(y), {parts[0], parts[1], parts[2]}, fn, "concat_cols");
  }
}

Var concat_cols(std::initializer_list<Var> parts) { return concat_cols(std::vector<Var>(parts)); }

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.cols()) throw ShapeError("slice_cols out of range");
  Tensor y(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x(i, begin + j);
  }
  return a.tape().record(std::move(y), {a},
                         [begin, count](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           Tensor& ga = t.grad_buffer(pa);
                           for (std::size_t i = 0; i < g.rows(); ++i) {
                             for (std::size_t j = 0; j < count; ++j) ga(i, begin + j) += g(i, j);
                           }
                         },
                         "slice_cols");
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.rows()) throw ShapeError("slice_rows out of range");
  Tensor y(count, x.cols());
  std::copy_n(x.data() + begin * x.cols(), count * x.cols(), y.data());
  return a.tape().record(std::move(y), {a},
                         [begin](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           Tensor& ga = t.grad_buffer(pa);
                           double* dst = ga.data() + begin * ga.cols();
                           for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                         },
                         "slice_rows");
}

Var tile_rows(Var a, std::size_t times) {
  const Tensor& x = a.value();
  Tensor y(x.rows() * times, x.cols());
  for (std::size_t k = 0; k < times; ++k) {
    std::copy(x.values().begin(), x.values().end(), y.data() + k * x.size());
  }
  return a.tape().record(std::move(y), {a},
                         [times](Tape& t, std::uint32_t self) {
                           const std::uint32_t pa = t.parent(self, 0);
                           if (!t.requires_grad(pa)) return;
                           const Tensor& g = t.node_grad(self);
                           Tensor& ga = t.grad_buffer(pa);
                           const std::size_t n = ga.size();
                           for (std::size_t k = 0; k < times; ++k) {
                             for (std::size_t i = 0; i < n; ++i) ga[i] += g[k * n + i];
                           }
                         },
                         "tile_rows");
}

// ---- composites -----------------------------------------------------------------

Var row_sq_norm(Var a) { return sum_cols(square(a)); }

Var row_norm(Var a, double eps) { return sqrt(add_scalar(row_sq_norm(a), eps)); }

}  // namespace evorl::nn
