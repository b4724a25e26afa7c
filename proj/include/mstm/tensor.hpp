#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "mstm/errors.hpp"

namespace mstm {

// Dense 64-bit real tensor. Value semantics on a shared buffer: copies alias
// the same storage, which is what ties parameters into every tape they are
// used on. The gradient buffer lives next to the values and is filled in by
// Tape::backward.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, bool requires_grad = false);

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor vector(std::vector<double> v, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v,
                       bool requires_grad = false);
  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t ndim() const;
  std::size_t rows() const;  // 2-d tensors
  std::size_t cols() const;

  double* data();
  const double* data() const;
  double operator[](std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;
  double item() const;  // size-1 tensors only

  bool requires_grad() const;
  void set_requires_grad(bool rg);

  // Gradient access is shallow-const: a const Tensor is a const handle to a
  // shared buffer, and backward closures accumulate through captured copies.
  bool has_grad() const;
  const double* grad() const;  // nullptr when absent
  double* grad_ensure() const; // allocates a zero buffer on first use
  void zero_grad() const;      // drops the buffer ("present only after backward")
  std::vector<double> grad_copy() const;  // zeros when absent

  bool same_buffer(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until needed
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

// Reverse-mode tape. Forward ops append one node each; backward replays the
// nodes once in reverse append order and accumulates gradients additively
// into every tensor that requires them. The tape is rebuilt per forward pass
// and consumed by backward(). A tape and its tensors belong to one thread;
// distinct tapes are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Elementwise / matmul / reduction suite.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor matmul(const Tensor& a, const Tensor& b);
  // w (O×F) · x (F×C) + bias (O, broadcast across columns).
  Tensor affine(const Tensor& w, const Tensor& x, const Tensor& bias);
  Tensor tanh(const Tensor& x);
  Tensor sigmoid(const Tensor& x);
  // Mean of |x_i|; subgradient at 0 is taken as 0.
  Tensor mean_abs(const Tensor& x);

  // Convolution over the feature axis: out(k, j) = bias_k + Σ_m ker(k,m)·in(m,j).
  // kernels is K1×M, bias K1; output K1×N.
  Tensor conv_feature_1d(const Tensor& input, const Tensor& kernels, const Tensor& bias);
  // Valid convolution over time with full feature extent:
  // out(k, j) = bias_k + Σ_m [ker(k,m,0)·in(m,j) + ker(k,m,1)·in(m,j+1)].
  // kernels is K2×M×2, bias K2; output K2×(N−1). A (−1, 1) kernel column pair
  // reproduces first-order differencing.
  Tensor conv_temporal_2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);
  // Rows of c1 (K1×N, K1 may be 0) over rows of c2 (K2×(N−1)) with one zero
  // column appended to c2.
  Tensor concat_time_pad(const Tensor& c1, const Tensor& c2);

  Tensor col(const Tensor& m, std::size_t j);           // column as R×1
  Tensor stack(const std::vector<Tensor>& scalars);     // n size-1 tensors -> length-n vector

  // Fused ops (e.g. the LSTM layer) append their own backward rule.
  void record(const char* kind, std::function<void()> backward_fn);

  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1, replays the tape in reverse and resets it.
  // loss must be a size-1 tensor on a non-empty tape.
  void backward(const Tensor& loss);
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    const char* kind;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace mstm
