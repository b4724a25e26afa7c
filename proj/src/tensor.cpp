#include "mstm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mstm/kernels.hpp"

namespace mstm {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

std::size_t shape_product(const std::vector<std::size_t>& s) {
  std::size_t p = 1;
  for (auto d : s) p *= d;
  return p;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::vector<std::size_t> shape, bool requires_grad) {
  require(!shape.empty(), "tensor shape must have at least one dimension");
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->value.assign(shape_product(impl_->shape), 0.0);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Tensor t({1}, requires_grad);
  t.data()[0] = v;
  return t;
}

Tensor Tensor::vector(std::vector<double> v, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = {v.size()};
  t.impl_->value = std::move(v);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v,
                      bool requires_grad) {
  require(v.size() == rows * cols, "matrix data length " + std::to_string(v.size()) +
                                       " does not match " + std::to_string(rows) + "x" +
                                       std::to_string(cols));
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = {rows, cols};
  t.impl_->value = std::move(v);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return Tensor(std::move(shape), requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::size() const { return impl_->value.size(); }
std::size_t Tensor::ndim() const { return impl_->shape.size(); }

std::size_t Tensor::rows() const {
  require(ndim() == 2, "rows(): tensor is not 2-d, shape " + shape_str(impl_->shape));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  require(ndim() == 2, "cols(): tensor is not 2-d, shape " + shape_str(impl_->shape));
  return impl_->shape[1];
}

double* Tensor::data() { return impl_->value.data(); }
const double* Tensor::data() const { return impl_->value.data(); }

double Tensor::operator[](std::size_t i) const { return impl_->value[i]; }

double Tensor::at(std::size_t r, std::size_t c) const {
  return impl_->value[r * cols() + c];
}

double Tensor::item() const {
  require(size() == 1, "item(): tensor has " + std::to_string(size()) + " entries");
  return impl_->value[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool rg) { impl_->requires_grad = rg; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const double* Tensor::grad() const { return impl_->grad.empty() ? nullptr : impl_->grad.data(); }

double* Tensor::grad_ensure() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->value.size(), 0.0);
  return impl_->grad.data();
}

void Tensor::zero_grad() const { impl_->grad.clear(); }

std::vector<double> Tensor::grad_copy() const {
  if (impl_->grad.empty()) return std::vector<double>(impl_->value.size(), 0.0);
  return impl_->grad;
}

// ---------------------------------------------------------------------------
// Tape

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

}  // namespace

void Tape::record(const char* kind, std::function<void()> backward_fn) {
  nodes_.push_back(Node{kind, std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1, "backward: loss must be a scalar tensor");
  if (nodes_.empty()) throw std::logic_error("backward: tape is empty");
  Tensor seed = loss;
  seed.grad_ensure()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  clear();
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const std::size_t n = a.size();
  Tensor out(a.shape(), a.requires_grad() || b.requires_grad());
  kernels::add(a.data(), b.data(), out.data(), n);
  if (out.requires_grad()) {
    record("add", [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (a.requires_grad()) kernels::axpy(1.0, g, a.grad_ensure(), a.size());
      if (b.requires_grad()) kernels::axpy(1.0, g, b.grad_ensure(), b.size());
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  const std::size_t n = a.size();
  Tensor out(a.shape(), a.requires_grad() || b.requires_grad());
  kernels::sub(a.data(), b.data(), out.data(), n);
  if (out.requires_grad()) {
    record("sub", [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (a.requires_grad()) kernels::axpy(1.0, g, a.grad_ensure(), a.size());
      if (b.requires_grad()) kernels::axpy(-1.0, g, b.grad_ensure(), b.size());
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  const std::size_t n = a.size();
  Tensor out(a.shape(), a.requires_grad() || b.requires_grad());
  kernels::mul(a.data(), b.data(), out.data(), n);
  if (out.requires_grad()) {
    record("mul", [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      const std::size_t n = out.size();
      if (a.requires_grad()) {
        double* ga = a.grad_ensure();
        const double* bv = b.data();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        double* gb = b.grad_ensure();
        const double* av = a.data();
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul: operands must be 2-d");
  require(a.cols() == b.rows(), "matmul: inner dimensions " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  Tensor out({p, r}, a.requires_grad() || b.requires_grad());
  double* o = out.data();
  const double* av = a.data();
  const double* bv = b.data();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) kernels::axpy(av[i * q + k], bv + k * r, o + i * r, r);
  }
  if (out.requires_grad()) {
    record("matmul", [a, b, out, p, q, r]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (a.requires_grad()) {
        double* ga = a.grad_ensure();
        const double* bv = b.data();
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t k = 0; k < q; ++k) {
            ga[i * q + k] += kernels::dot(g + i * r, bv + k * r, r);
          }
        }
      }
      if (b.requires_grad()) {
        double* gb = b.grad_ensure();
        const double* av = a.data();
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t k = 0; k < q; ++k) kernels::axpy(av[i * q + k], g + i * r, gb + k * r, r);
        }
      }
    });
  }
  return out;
}

Tensor Tape::affine(const Tensor& w, const Tensor& x, const Tensor& bias) {
  require(w.ndim() == 2 && x.ndim() == 2, "affine: w and x must be 2-d");
  require(w.cols() == x.rows(), "affine: inner dimensions " + shape_str(w.shape()) + " vs " +
                                    shape_str(x.shape()));
  require(bias.ndim() == 1 && bias.size() == w.rows(),
          "affine: bias length must equal output rows " + std::to_string(w.rows()));
  const std::size_t o = w.rows(), f = w.cols(), c = x.cols();
  Tensor out({o, c}, w.requires_grad() || x.requires_grad() || bias.requires_grad());
  double* ov = out.data();
  const double* wv = w.data();
  const double* xv = x.data();
  const double* bv = bias.data();
  for (std::size_t i = 0; i < o; ++i) {
    std::fill(ov + i * c, ov + (i + 1) * c, bv[i]);
    for (std::size_t k = 0; k < f; ++k) kernels::axpy(wv[i * f + k], xv + k * c, ov + i * c, c);
  }
  if (out.requires_grad()) {
    record("affine", [w, x, bias, out, o, f, c]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (w.requires_grad()) {
        double* gw = w.grad_ensure();
        const double* xv = x.data();
        for (std::size_t i = 0; i < o; ++i) {
          for (std::size_t k = 0; k < f; ++k) {
            gw[i * f + k] += kernels::dot(g + i * c, xv + k * c, c);
          }
        }
      }
      if (x.requires_grad()) {
        double* gx = x.grad_ensure();
        const double* wv = w.data();
        for (std::size_t i = 0; i < o; ++i) {
          for (std::size_t k = 0; k < f; ++k) kernels::axpy(wv[i * f + k], g + i * c, gx + k * c, c);
        }
      }
      if (bias.requires_grad()) {
        double* gb = bias.grad_ensure();
        for (std::size_t i = 0; i < o; ++i) gb[i] += kernels::sum(g + i * c, c);
      }
    });
  }
  return out;
}

Tensor Tape::tanh(const Tensor& x) {
  const std::size_t n = x.size();
  Tensor out(x.shape(), x.requires_grad());
  const double* xv = x.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < n; ++i) ov[i] = std::tanh(xv[i]);
  if (out.requires_grad()) {
    record("tanh", [x, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      const double* y = out.data();
      double* gx = x.grad_ensure();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  }
  return out;
}

Tensor Tape::sigmoid(const Tensor& x) {
  const std::size_t n = x.size();
  Tensor out(x.shape(), x.requires_grad());
  const double* xv = x.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < n; ++i) ov[i] = stable_sigmoid(xv[i]);
  if (out.requires_grad()) {
    record("sigmoid", [x, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      const double* y = out.data();
      double* gx = x.grad_ensure();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
    });
  }
  return out;
}

Tensor Tape::mean_abs(const Tensor& x) {
  const std::size_t n = x.size();
  require(n >= 1, "mean_abs: empty input");
  Tensor out = Tensor::scalar(kernels::abs_sum(x.data(), n) / static_cast<double>(n));
  out.set_requires_grad(x.requires_grad());
  if (out.requires_grad()) {
    record("mean_abs", [x, out, n]() mutable {
      if (!out.has_grad()) return;
      const double s = out.grad()[0] / static_cast<double>(n);
      const double* xv = x.data();
      double* gx = x.grad_ensure();
      for (std::size_t i = 0; i < n; ++i) {
        if (xv[i] > 0.0) gx[i] += s;
        else if (xv[i] < 0.0) gx[i] -= s;
        // sign(0) = 0: no contribution
      }
    });
  }
  return out;
}

Tensor Tape::conv_feature_1d(const Tensor& input, const Tensor& kernels_t, const Tensor& bias) {
  require(input.ndim() == 2, "conv_feature_1d: input must be 2-d");
  const std::size_t m = input.rows(), n = input.cols();
  require(m >= 1 && n >= 1, "conv_feature_1d: input must be at least 1x1");
  require(kernels_t.ndim() == 2, "conv_feature_1d: kernels must be K1xM");
  require(kernels_t.cols() == m, "conv_feature_1d: kernel length " +
                                     std::to_string(kernels_t.cols()) + " does not match M=" +
                                     std::to_string(m));
  const std::size_t k1 = kernels_t.rows();
  require(bias.ndim() == 1 && bias.size() == k1, "conv_feature_1d: bias length must equal K1");
  Tensor out({k1, n},
             input.requires_grad() || kernels_t.requires_grad() || bias.requires_grad());
  double* ov = out.data();
  const double* iv = input.data();
  const double* kv = kernels_t.data();
  const double* bv = bias.data();
  for (std::size_t k = 0; k < k1; ++k) {
    std::fill(ov + k * n, ov + (k + 1) * n, bv[k]);
    for (std::size_t r = 0; r < m; ++r) kernels::axpy(kv[k * m + r], iv + r * n, ov + k * n, n);
  }
  if (out.requires_grad()) {
    record("conv_feature_1d", [input, kernels_t, bias, out, m, n, k1]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (kernels_t.requires_grad()) {
        double* gk = kernels_t.grad_ensure();
        const double* iv = input.data();
        for (std::size_t k = 0; k < k1; ++k) {
          for (std::size_t r = 0; r < m; ++r) {
            gk[k * m + r] += kernels::dot(g + k * n, iv + r * n, n);
          }
        }
      }
      if (bias.requires_grad()) {
        double* gb = bias.grad_ensure();
        for (std::size_t k = 0; k < k1; ++k) gb[k] += kernels::sum(g + k * n, n);
      }
      if (input.requires_grad()) {
        double* gi = input.grad_ensure();
        const double* kv = kernels_t.data();
        for (std::size_t k = 0; k < k1; ++k) {
          for (std::size_t r = 0; r < m; ++r) kernels::axpy(kv[k * m + r], g + k * n, gi + r * n, n);
        }
      }
    });
  }
  return out;
}

Tensor Tape::conv_temporal_2d(const Tensor& input, const Tensor& kernels_t, const Tensor& bias) {
  require(input.ndim() == 2, "conv_temporal_2d: input must be 2-d");
  const std::size_t m = input.rows(), n = input.cols();
  require(m >= 1, "conv_temporal_2d: input must have at least one row");
  require(n >= 2, "conv_temporal_2d: need at least 2 time steps, got " + std::to_string(n));
  require(kernels_t.ndim() == 3 && kernels_t.shape()[1] == m && kernels_t.shape()[2] == 2,
          "conv_temporal_2d: kernels must be K2xMx2 with M=" + std::to_string(m));
  const std::size_t k2 = kernels_t.shape()[0];
  require(bias.ndim() == 1 && bias.size() == k2, "conv_temporal_2d: bias length must equal K2");
  const std::size_t c = n - 1;
  Tensor out({k2, c},
             input.requires_grad() || kernels_t.requires_grad() || bias.requires_grad());
  double* ov = out.data();
  const double* iv = input.data();
  const double* kv = kernels_t.data();
  const double* bv = bias.data();
  for (std::size_t k = 0; k < k2; ++k) {
    std::fill(ov + k * c, ov + (k + 1) * c, bv[k]);
    for (std::size_t r = 0; r < m; ++r) {
      const double w0 = kv[(k * m + r) * 2];
      const double w1 = kv[(k * m + r) * 2 + 1];
      kernels::axpy(w0, iv + r * n, ov + k * c, c);
      kernels::axpy(w1, iv + r * n + 1, ov + k * c, c);
    }
  }
  if (out.requires_grad()) {
    record("conv_temporal_2d", [input, kernels_t, bias, out, m, n, k2, c]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (kernels_t.requires_grad()) {
        double* gk = kernels_t.grad_ensure();
        const double* iv = input.data();
        for (std::size_t k = 0; k < k2; ++k) {
          for (std::size_t r = 0; r < m; ++r) {
            gk[(k * m + r) * 2] += kernels::dot(g + k * c, iv + r * n, c);
            gk[(k * m + r) * 2 + 1] += kernels::dot(g + k * c, iv + r * n + 1, c);
          }
        }
      }
      if (bias.requires_grad()) {
        double* gb = bias.grad_ensure();
        for (std::size_t k = 0; k < k2; ++k) gb[k] += kernels::sum(g + k * c, c);
      }
      if (input.requires_grad()) {
        double* gi = input.grad_ensure();
        const double* kv = kernels_t.data();
        for (std::size_t k = 0; k < k2; ++k) {
          for (std::size_t r = 0; r < m; ++r) {
            kernels::axpy(kv[(k * m + r) * 2], g + k * c, gi + r * n, c);
            kernels::axpy(kv[(k * m + r) * 2 + 1], g + k * c, gi + r * n + 1, c);
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::concat_time_pad(const Tensor& c1, const Tensor& c2) {
  require(c1.ndim() == 2 && c2.ndim() == 2, "concat_time_pad: operands must be 2-d");
  const std::size_t k1 = c1.rows(), k2 = c2.rows();
  require(k1 + k2 >= 1, "concat_time_pad: both operands empty");
  std::size_t n = 0;
  if (k1 > 0) {
    n = c1.cols();
    if (k2 > 0) {
      require(c1.cols() == c2.cols() + 1,
              "concat_time_pad: c1 must have exactly one more column than c2, got " +
                  std::to_string(c1.cols()) + " vs " + std::to_string(c2.cols()));
    }
  } else {
    n = c2.cols() + 1;
  }
  Tensor out({k1 + k2, n}, c1.requires_grad() || c2.requires_grad());
  double* ov = out.data();
  const double* v1 = c1.data();
  const double* v2 = c2.data();
  std::copy(v1, v1 + k1 * n, ov);
  for (std::size_t k = 0; k < k2; ++k) {
    std::copy(v2 + k * (n - 1), v2 + (k + 1) * (n - 1), ov + (k1 + k) * n);
    ov[(k1 + k) * n + n - 1] = 0.0;
  }
  if (out.requires_grad()) {
    record("concat_time_pad", [c1, c2, out, k1, k2, n]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      if (c1.requires_grad() && k1 > 0) kernels::axpy(1.0, g, c1.grad_ensure(), k1 * n);
      if (c2.requires_grad()) {
        double* g2 = c2.grad_ensure();
        for (std::size_t k = 0; k < k2; ++k) {
          kernels::axpy(1.0, g + (k1 + k) * n, g2 + k * (n - 1), n - 1);
        }
      }
    });
  }
  return out;
}

Tensor Tape::col(const Tensor& m, std::size_t j) {
  require(m.ndim() == 2, "col: tensor must be 2-d");
  require(j < m.cols(), "col: index " + std::to_string(j) + " out of range");
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out({r, 1}, m.requires_grad());
  const double* mv = m.data();
  double* ov = out.data();
  for (std::size_t i = 0; i < r; ++i) ov[i] = mv[i * c + j];
  if (out.requires_grad()) {
    record("col", [m, out, j, r, c]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      double* gm = m.grad_ensure();
      for (std::size_t i = 0; i < r; ++i) gm[i * c + j] += g[i];
    });
  }
  return out;
}

Tensor Tape::stack(const std::vector<Tensor>& scalars) {
  require(!scalars.empty(), "stack: need at least one element");
  bool rg = false;
  std::vector<double> v(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(scalars[i].size() == 1, "stack: element " + std::to_string(i) + " is not a scalar");
    v[i] = scalars[i].data()[0];
    rg = rg || scalars[i].requires_grad();
  }
  Tensor out = Tensor::vector(std::move(v));
  out.set_requires_grad(rg);
  if (rg) {
    record("stack", [scalars, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad();
      for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i].requires_grad()) scalars[i].grad_ensure()[0] += g[i];
      }
    });
  }
  return out;
}

}  // namespace mstm
