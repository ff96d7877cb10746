#pragma once

// Reverse-mode automatic differentiation over dense double arrays.
//
// A Tensor is a value (shape + row-major data). It becomes "tracked" when it
// is produced by a Tape leaf or by an op with at least one tracked input; the
// op then appends a node to that tape. Tapes are define-by-run and are meant
// to be rebuilt for every training step.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "renpol/error.hpp"

namespace renpol::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  // Constructors that validate external input (finite values only).
  static Tensor from_values(Shape shape, std::vector<double> data);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double item() const;
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  // Same values, no tape link.
  Tensor detach() const { return Tensor(shape_, data_); }

private:
  friend class Tape;
  Shape shape_;
  std::vector<double> data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad();
};

// Backward closure for a node. `out_grad` is the gradient flowing into the
// node's output; `input_grads[i]` points at the gradient buffer of input i, or
// is null when that input is not tracked. Closures accumulate with +=.
using BackwardFn =
    std::function<void(std::span<const double> out_grad, std::span<double* const> input_grads)>;

class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to a Parameter: backward() accumulates into param.grad.
  Tensor leaf(Parameter& param);
  // Free leaf; read its gradient with grad().
  Tensor variable(const Tensor& value);

  Tensor record(std::string_view op, Tensor value, std::span<const Tensor* const> inputs,
                BackwardFn backward);

  void backward(const Tensor& loss);

  // Gradient of the last backward() w.r.t. a tracked tensor on this tape.
  Tensor grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    std::string_view op;
    Shape shape;
    std::vector<std::size_t> parents;  // SIZE_MAX for untracked input slots
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

// Generic op recording helper: attaches `value` to the tape shared by the
// tracked inputs, or returns it untracked when no input is tracked.
Tensor make_op(std::string_view op, Tensor value, std::initializer_list<const Tensor*> inputs,
               BackwardFn backward);
Tensor make_op(std::string_view op, Tensor value, std::span<const Tensor* const> inputs,
               BackwardFn backward);

// ---- op suite --------------------------------------------------------------
// Binary elementwise ops accept equal shapes, or a size-1 operand broadcast
// against the other.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);  // {m,k}x{k,n} or {m,k}x{k}
Tensor transpose(const Tensor& a);

Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor softplus(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor norm(const Tensor& a);  // Euclidean / Frobenius
Tensor logsumexp(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor inverse(const Tensor& a);

// Concatenate 1-D tensors end to end, or 2-D tensors along axis 0 / 1.
Tensor concat(std::span<const Tensor> parts, std::size_t axis = 0);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis = 0);
// Contiguous range of a 1-D tensor.
Tensor slice(const Tensor& a, std::size_t start, std::size_t len);
// Sub-block of a 2-D tensor.
Tensor block(const Tensor& a, std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc);
// Stack equal-length 1-D tensors as the rows of a matrix.
Tensor stack_rows(std::span<const Tensor> rows);
Tensor row(const Tensor& a, std::size_t r);
Tensor diag(const Tensor& v);  // vector -> diagonal matrix

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// Max over components of |analytic - central difference| / max(|analytic|, 1e-8).
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step);

}  // namespace renpol::ad
