#include "renpol/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "renpol/linalg.hpp"

namespace renpol::ad {

namespace {

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_str(a) << " and " << shape_str(b);
  throw ShapeError(os.str());
}

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, std::string_view what) {
  std::ostringstream os;
  os << op << ": shape " << shape_str(a) << " " << what;
  throw ShapeError(os.str());
}

bool is_scalar_like(const Tensor& t) { return t.size() == 1; }

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// ---- Tensor ---------------------------------------------------------------

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    std::ostringstream os;
    os << "Tensor: shape " << shape_str(shape_) << " needs " << shape_size(shape_) << " values, got "
       << data_.size();
    throw ShapeError(os.str());
  }
}

Tensor Tensor::from_values(Shape shape, std::vector<double> data) {
  for (double v : data)
    if (!std::isfinite(v)) throw ValidationError("Tensor: non-finite value in external input");
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double v) { return from_values({}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return from_values({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return from_values({rows, cols}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
  return t;
}

std::size_t Tensor::rows() const { return shape_.empty() ? 1 : shape_[0]; }

std::size_t Tensor::cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

double Tensor::item() const {
  if (data_.size() != 1) shape_fail("item", shape_, "is not a scalar");
  return data_[0];
}

Parameter::Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  std::fill(grad.mutable_data().begin(), grad.mutable_data().end(), 0.0);
}

// ---- Tape -----------------------------------------------------------------

Tensor Tape::leaf(Parameter& param) {
  Tensor t = param.value.detach();
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back(Node{"leaf", t.shape(), {}, nullptr, &param});
  return t;
}

Tensor Tape::variable(const Tensor& value) {
  Tensor t = value.detach();
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back(Node{"leaf", t.shape(), {}, nullptr, nullptr});
  return t;
}

Tensor Tape::record(std::string_view op, Tensor value, std::span<const Tensor* const> inputs,
                    BackwardFn backward) {
  Node node{op, value.shape(), {}, std::move(backward), nullptr};
  node.parents.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    if (in->tape_ == nullptr) {
      node.parents.push_back(kNoParent);
    } else {
      if (in->tape_ != this) throw Error(std::string(op) + ": inputs recorded on different tapes");
      node.parents.push_back(in->node_);
    }
  }
  value.tape_ = this;
  value.node_ = nodes_.size();
  nodes_.push_back(std::move(node));
  return value;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape_ != this) throw Error("backward: loss is not tracked on this tape");
  if (loss.size() != 1) shape_fail("backward", loss.shape(), "is not a scalar loss");

  grads_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i <= loss.node_; ++i) grads_[i].assign(shape_size(nodes_[i].shape), 0.0);
  std::vector<char> live(nodes_.size(), 0);
  grads_[loss.node_][0] = 1.0;
  live[loss.node_] = 1;

  std::vector<double*> slots;
  for (std::size_t i = loss.node_ + 1; i-- > 0;) {
    if (!live[i]) continue;
    Node& node = nodes_[i];
    if (node.param != nullptr) {
      if (node.param->grad.shape() != node.param->value.shape()) node.param->zero_grad();
      auto g = node.param->grad.mutable_data();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += grads_[i][k];
      continue;
    }
    if (!node.backward) continue;
    slots.assign(node.parents.size(), nullptr);
    for (std::size_t p = 0; p < node.parents.size(); ++p) {
      const std::size_t parent = node.parents[p];
      if (parent == kNoParent) continue;
      slots[p] = grads_[parent].data();
      live[parent] = 1;
    }
    node.backward(grads_[i], slots);
    for (std::size_t p = 0; p < node.parents.size(); ++p) {
      const std::size_t parent = node.parents[p];
      if (parent == kNoParent) continue;
      for (double v : grads_[parent])
        if (!std::isfinite(v)) throw Error("backward: non-finite gradient produced by op '" + std::string(node.op) + "'");
    }
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.tape_ != this) throw Error("grad: tensor is not tracked on this tape");
  if (t.node_ >= grads_.size() || grads_[t.node_].empty()) return Tensor(t.shape());
  return Tensor(t.shape(), grads_[t.node_]);
}

// ---- op plumbing ----------------------------------------------------------

Tensor make_op(std::string_view op, Tensor value, std::span<const Tensor* const> inputs,
               BackwardFn backward) {
  Tape* tape = nullptr;
  for (const Tensor* in : inputs)
    if (in->tracked()) {
      tape = in->tape();
      break;
    }
  if (tape == nullptr) return value;
  return tape->record(op, std::move(value), inputs, std::move(backward));
}

Tensor make_op(std::string_view op, Tensor value, std::initializer_list<const Tensor*> inputs,
               BackwardFn backward) {
  return make_op(op, std::move(value), std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                 std::move(backward));
}

namespace {

// Elementwise binary op with scalar broadcast. f computes the value,
// da / db give the local partials given (a_i, b_i).
template <class F, class DA, class DB>
Tensor binary(std::string_view op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const bool same = a.shape() == b.shape() || (a.size() == b.size() && a.size() == 1);
  const bool a_bcast = !same && is_scalar_like(a);
  const bool b_bcast = !same && !a_bcast && is_scalar_like(b);
  if (!same && !a_bcast && !b_bcast) shape_fail(op, a.shape(), b.shape());
  const Shape& out_shape = a_bcast ? b.shape() : a.shape();
  const std::size_t n = shape_size(out_shape);
  std::vector<double> out(n);
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[a_bcast ? 0 : i], bv[b_bcast ? 0 : i]);
  if (!a.tracked() && !b.tracked()) return Tensor(out_shape, std::move(out));
  std::vector<double> ac(av.begin(), av.end());
  std::vector<double> bc(bv.begin(), bv.end());
  return make_op(op, Tensor(out_shape, std::move(out)), {&a, &b},
                 [ac = std::move(ac), bc = std::move(bc), a_bcast, b_bcast, da, db](
                     std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     const double x = ac[a_bcast ? 0 : i];
                     const double y = bc[b_bcast ? 0 : i];
                     if (in[0]) in[0][a_bcast ? 0 : i] += g[i] * da(x, y);
                     if (in[1]) in[1][b_bcast ? 0 : i] += g[i] * db(x, y);
                   }
                 });
}

// Elementwise unary op; dfdx receives (x, f(x)).
template <class F, class D>
Tensor unary(std::string_view op, const Tensor& a, F f, D dfdx) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  if (!a.tracked()) return Tensor(a.shape(), std::move(out));
  std::vector<double> ac(av.begin(), av.end());
  std::vector<double> oc = out;
  return make_op(op, Tensor(a.shape(), std::move(out)), {&a},
                 [ac = std::move(ac), oc = std::move(oc), dfdx](std::span<const double> g,
                                                               std::span<double* const> in) {
                   for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * dfdx(ac[i], oc[i]);
                 });
}

}  // namespace

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  return unary(
      "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data())
    if (!(v > 0.0)) throw Error("log: non-positive argument");
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor softplus(const Tensor& a) {
  return unary(
      "softplus", a,
      [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const std::size_t n = a.size();
  return make_op("sum", Tensor({}, {s}), {&a}, [n](std::span<const double> g, std::span<double* const> in) {
    for (std::size_t i = 0; i < n; ++i) in[0][i] += g[0];
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.size());
  return scale(sum(a), 1.0 / n);
}

Tensor norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  const double r = std::sqrt(s);
  std::vector<double> ac(a.data().begin(), a.data().end());
  return make_op("norm", Tensor({}, {r}), {&a},
                 [ac = std::move(ac), r](std::span<const double> g, std::span<double* const> in) {
                   if (r == 0.0) return;  // subgradient 0 at the origin
                   for (std::size_t i = 0; i < ac.size(); ++i) in[0][i] += g[0] * ac[i] / r;
                 });
}

Tensor logsumexp(const Tensor& a) {
  if (a.size() == 0) shape_fail("logsumexp", a.shape(), "is empty");
  const auto av = a.data();
  const double m = *std::max_element(av.begin(), av.end());
  double s = 0.0;
  for (double v : av) s += std::exp(v - m);
  const double r = m + std::log(s);
  std::vector<double> soft(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) soft[i] = std::exp(av[i] - r);
  return make_op("logsumexp", Tensor({}, {r}), {&a},
                 [soft = std::move(soft)](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t i = 0; i < soft.size(); ++i) in[0][i] += g[0] * soft[i];
                 });
}

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.shape()[1] != b.shape()[0])
    shape_fail("matmul", a.shape(), b.shape());
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.rank() == 2 ? b.shape()[1] : 1;
  Shape out_shape = b.rank() == 2 ? Shape{m, n} : Shape{m};
  std::vector<double> out(m * n);
  linalg::gemm(a.data(), b.data(), out, m, k, n);
  if (!a.tracked() && !b.tracked()) return Tensor(std::move(out_shape), std::move(out));
  std::vector<double> ac(a.data().begin(), a.data().end());
  std::vector<double> bc(b.data().begin(), b.data().end());
  return make_op("matmul", Tensor(std::move(out_shape), std::move(out)), {&a, &b},
                 [ac = std::move(ac), bc = std::move(bc), m, k, n](std::span<const double> g,
                                                                  std::span<double* const> in) {
                   // dA = G B^T, dB = A^T G
                   if (in[0]) {
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t p = 0; p < k; ++p) {
                         double s = 0.0;
                         for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bc[p * n + j];
                         in[0][i * k + p] += s;
                       }
                   }
                   if (in[1]) {
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t p = 0; p < k; ++p) {
                         const double aip = ac[i * k + p];
                         for (std::size_t j = 0; j < n; ++j) in[1][p * n + j] += aip * g[i * n + j];
                       }
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) shape_fail("transpose", a.shape(), "is not a matrix");
  const std::size_t r = a.shape()[0];
  const std::size_t c = a.shape()[1];
  std::vector<double> out(r * c);
  const auto av = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return make_op("transpose", Tensor({c, r}, std::move(out)), {&a},
                 [r, c](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t i = 0; i < r; ++i)
                     for (std::size_t j = 0; j < c; ++j) in[0][i * c + j] += g[j * r + i];
                 });
}

Tensor inverse(const Tensor& a) {
  if (a.rank() != 2 || a.shape()[0] != a.shape()[1]) shape_fail("inverse", a.shape(), "is not square");
  const std::size_t n = a.shape()[0];
  std::vector<double> inv = linalg::inverse(a.data(), n);
  if (!a.tracked()) return Tensor({n, n}, std::move(inv));
  std::vector<double> ic = inv;
  return make_op("inverse", Tensor({n, n}, std::move(inv)), {&a},
                 [ic = std::move(ic), n](std::span<const double> g, std::span<double* const> in) {
                   // d(A^-1) = -A^-1 dA A^-1  =>  dA = -A^-T G A^-T
                   std::vector<double> t(n * n, 0.0);
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t k = 0; k < n; ++k) {
                       const double aki = ic[k * n + i];  // (A^-T)_{ik}
                       if (aki == 0.0) continue;
                       for (std::size_t j = 0; j < n; ++j) t[i * n + j] += aki * g[k * n + j];
                     }
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t j = 0; j < n; ++j) {
                       double s = 0.0;
                       for (std::size_t k = 0; k < n; ++k) s += t[i * n + k] * ic[j * n + k];
                       in[0][i * n + j] -= s;
                     }
                 });
}

// ---- structural -----------------------------------------------------------

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rank = parts[0].rank();
  for (const auto& p : parts)
    if (p.rank() != rank) shape_fail("concat", parts[0].shape(), p.shape());
  std::vector<const Tensor*> inputs;
  for (const auto& p : parts) inputs.push_back(&p);

  if (rank <= 1) {
    std::vector<double> out;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
      offsets.push_back(out.size());
      out.insert(out.end(), p.data().begin(), p.data().end());
    }
    const std::size_t n = out.size();
    return make_op("concat", Tensor({n}, std::move(out)), inputs,
                   [offsets](std::span<const double> g, std::span<double* const> in) {
                     for (std::size_t k = 0; k < in.size(); ++k) {
                       if (!in[k]) continue;
                       const std::size_t end = k + 1 < offsets.size() ? offsets[k + 1] : g.size();
                       for (std::size_t i = offsets[k]; i < end; ++i) in[k][i - offsets[k]] += g[i];
                     }
                   });
  }
  if (rank != 2 || axis > 1) shape_fail("concat", parts[0].shape(), "unsupported rank/axis");
  std::size_t total = 0;
  const std::size_t fixed = parts[0].shape()[1 - axis];
  for (const auto& p : parts) {
    if (p.shape()[1 - axis] != fixed) shape_fail("concat", parts[0].shape(), p.shape());
    total += p.shape()[axis];
  }
  const std::size_t R = axis == 0 ? total : fixed;
  const std::size_t C = axis == 0 ? fixed : total;
  std::vector<double> out(R * C);
  std::vector<std::pair<std::size_t, std::size_t>> extents;  // (offset, length) along axis
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t pr = p.shape()[0];
    const std::size_t pc = p.shape()[1];
    for (std::size_t i = 0; i < pr; ++i)
      for (std::size_t j = 0; j < pc; ++j) {
        const std::size_t oi = axis == 0 ? i + off : i;
        const std::size_t oj = axis == 0 ? j : j + off;
        out[oi * C + oj] = p.data()[i * pc + j];
      }
    extents.emplace_back(off, p.shape()[axis]);
    off += p.shape()[axis];
  }
  return make_op("concat", Tensor({R, C}, std::move(out)), inputs,
                 [extents, axis, R, C](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t k = 0; k < in.size(); ++k) {
                     if (!in[k]) continue;
                     const auto [o, len] = extents[k];
                     const std::size_t pr = axis == 0 ? len : R;
                     const std::size_t pc = axis == 0 ? C : len;
                     for (std::size_t i = 0; i < pr; ++i)
                       for (std::size_t j = 0; j < pc; ++j) {
                         const std::size_t oi = axis == 0 ? i + o : i;
                         const std::size_t oj = axis == 0 ? j : j + o;
                         in[k][i * pc + j] += g[oi * C + oj];
                       }
                   }
                 });
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, std::size_t start, std::size_t len) {
  if (a.rank() != 1 || start + len > a.size()) shape_fail("slice", a.shape(), "range out of bounds");
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(start),
                          a.data().begin() + static_cast<std::ptrdiff_t>(start + len));
  return make_op("slice", Tensor({len}, std::move(out)), {&a},
                 [start](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t i = 0; i < g.size(); ++i) in[0][start + i] += g[i];
                 });
}

Tensor block(const Tensor& a, std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) {
  if (a.rank() != 2 || r0 + nr > a.shape()[0] || c0 + nc > a.shape()[1])
    shape_fail("block", a.shape(), "block out of bounds");
  const std::size_t C = a.shape()[1];
  std::vector<double> out(nr * nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out[i * nc + j] = a.data()[(r0 + i) * C + c0 + j];
  return make_op("block", Tensor({nr, nc}, std::move(out)), {&a},
                 [r0, c0, nr, nc, C](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t i = 0; i < nr; ++i)
                     for (std::size_t j = 0; j < nc; ++j) in[0][(r0 + i) * C + c0 + j] += g[i * nc + j];
                 });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t n = rows[0].size();
  std::vector<const Tensor*> inputs;
  std::vector<double> out;
  out.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != n) shape_fail("stack_rows", rows[0].shape(), r.shape());
    out.insert(out.end(), r.data().begin(), r.data().end());
    inputs.push_back(&r);
  }
  return make_op("stack_rows", Tensor({rows.size(), n}, std::move(out)), inputs,
                 [n](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t k = 0; k < in.size(); ++k) {
                     if (!in[k]) continue;
                     for (std::size_t j = 0; j < n; ++j) in[k][j] += g[k * n + j];
                   }
                 });
}

Tensor row(const Tensor& a, std::size_t r) {
  if (a.rank() != 2 || r >= a.shape()[0]) shape_fail("row", a.shape(), "row index out of bounds");
  const std::size_t C = a.shape()[1];
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(r * C),
                          a.data().begin() + static_cast<std::ptrdiff_t>(r * C + C));
  return make_op("row", Tensor({C}, std::move(out)), {&a},
                 [r, C](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t j = 0; j < C; ++j) in[0][r * C + j] += g[j];
                 });
}

Tensor diag(const Tensor& v) {
  if (v.rank() != 1) shape_fail("diag", v.shape(), "is not a vector");
  const std::size_t n = v.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i * n + i] = v.data()[i];
  return make_op("diag", Tensor({n, n}, std::move(out)), {&v},
                 [n](std::span<const double> g, std::span<double* const> in) {
                   for (std::size_t i = 0; i < n; ++i) in[0][i] += g[i * n + i];
                 });
}

// ---- validation harness ---------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step) {
  if (!(step > 0.0)) throw ValidationError("grad_check: step must be positive");
  Tape tape;
  Tensor xv = tape.variable(x);
  Tensor y = f(xv);
  if (y.size() != 1) shape_fail("grad_check", y.shape(), "function is not scalar-valued");
  if (!y.tracked()) return 0.0;  // constant in x: analytic and numeric are both 0
  tape.backward(y);
  const Tensor analytic = tape.grad(xv);

  double worst = 0.0;
  Tensor probe = x.detach();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.mutable_data()[i] = orig + step;
    const double fp = f(probe).item();
    probe.mutable_data()[i] = orig - step;
    const double fm = f(probe).item();
    probe.mutable_data()[i] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic.data()[i];
    worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a), 1e-8));
  }
  return worst;
}

}  // namespace renpol::ad
