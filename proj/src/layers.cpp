#include "mstm/layers.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "mstm/kernels.hpp"

namespace mstm {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input, bool requires_grad) {
  LstmParams p;
  p.wx = Tensor::zeros({4 * hidden, input}, requires_grad);
  p.wh = Tensor::zeros({4 * hidden, hidden}, requires_grad);
  p.bias = Tensor::zeros({4 * hidden}, requires_grad);
  return p;
}

std::size_t FourierSpec::feature_dim() const {
  std::size_t n = 0;
  for (const auto& c : cycles) n += 2 * c.terms;
  return n;
}

void FourierSpec::validate() const {
  for (const auto& c : cycles) {
    if (c.period <= 0) throw ShapeError("fourier cycle period must be positive");
    if (c.terms < 1) throw ShapeError("fourier cycle needs at least one term");
  }
}

Tensor lstm_forward(Tape& tape, const Tensor& seq, const LstmParams& params,
                    const std::vector<double>& h0, const std::vector<double>& c0) {
  if (seq.ndim() != 2) throw ShapeError("lstm_forward: seq must be 2-d");
  const std::size_t f = seq.rows();
  const std::size_t n = seq.cols();
  if (n < 1) throw ShapeError("lstm_forward: need at least one time step");
  const std::size_t h = params.hidden();
  if (params.input() != f) {
    throw ShapeError("lstm_forward: feature size " + std::to_string(f) +
                     " does not match params F=" + std::to_string(params.input()));
  }
  if (params.wx.rows() != 4 * h || params.wh.rows() != 4 * h || params.bias.size() != 4 * h) {
    throw ShapeError("lstm_forward: weight shapes inconsistent with H");
  }
  if (!h0.empty() && h0.size() != h) throw ShapeError("lstm_forward: h0 size must be H");
  if (!c0.empty() && c0.size() != h) throw ShapeError("lstm_forward: c0 size must be H");

  const bool rg = seq.requires_grad() || params.wx.requires_grad() ||
                  params.wh.requires_grad() || params.bias.requires_grad();
  Tensor out({h, n}, rg);

  // Saved activations, laid out [gate*H + unit]*N + t with gates i,f,g,o.
  auto gates = std::make_shared<std::vector<double>>(4 * h * n);
  auto cells = std::make_shared<std::vector<double>>(h * n);
  auto tanh_cells = std::make_shared<std::vector<double>>(h * n);
  auto h_init = std::make_shared<std::vector<double>>(h0.empty() ? std::vector<double>(h, 0.0) : h0);
  auto c_init = std::make_shared<std::vector<double>>(c0.empty() ? std::vector<double>(h, 0.0) : c0);

  std::vector<double> h_prev = *h_init;
  std::vector<double> c_prev = *c_init;
  std::vector<double> xt(f), z(4 * h);
  const double* wx = params.wx.data();
  const double* wh = params.wh.data();
  const double* b = params.bias.data();
  const double* sv = seq.data();
  double* ov = out.data();
  double* gv = gates->data();
  double* cv = cells->data();
  double* tv = tanh_cells->data();

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t r = 0; r < f; ++r) xt[r] = sv[r * n + t];
    for (std::size_t r = 0; r < 4 * h; ++r) {
      z[r] = b[r] + kernels::dot(wx + r * f, xt.data(), f) +
             kernels::dot(wh + r * h, h_prev.data(), h);
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double gi = stable_sigmoid(z[u]);
      const double gf = stable_sigmoid(z[h + u]);
      const double gc = std::tanh(z[2 * h + u]);
      const double go = stable_sigmoid(z[3 * h + u]);
      const double c = gf * c_prev[u] + gi * gc;
      const double tc = std::tanh(c);
      gv[(0 * h + u) * n + t] = gi;
      gv[(1 * h + u) * n + t] = gf;
      gv[(2 * h + u) * n + t] = gc;
      gv[(3 * h + u) * n + t] = go;
      cv[u * n + t] = c;
      tv[u * n + t] = tc;
      c_prev[u] = c;
      const double hv = go * tc;
      h_prev[u] = hv;
      ov[u * n + t] = hv;
    }
  }

  if (rg) {
    tape.record("lstm", [seq, params, out, gates, cells, tanh_cells, h_init, c_init, f, h,
                         n]() mutable {
      if (!out.has_grad()) return;
      const double* g_out = out.grad();
      const double* gv = gates->data();
      const double* cv = cells->data();
      const double* tv = tanh_cells->data();
      const double* wx = params.wx.data();
      const double* wh = params.wh.data();
      const double* sv = seq.data();
      const double* ov = out.data();

      double* gwx = params.wx.requires_grad() ? params.wx.grad_ensure() : nullptr;
      double* gwh = params.wh.requires_grad() ? params.wh.grad_ensure() : nullptr;
      double* gb = params.bias.requires_grad() ? params.bias.grad_ensure() : nullptr;
      double* gseq = seq.requires_grad() ? seq.grad_ensure() : nullptr;

      std::vector<double> dh_carry(h, 0.0), dc_carry(h, 0.0);
      std::vector<double> dz(4 * h), xt(f), hprev(h), dx(f);

      for (std::size_t t = n; t-- > 0;) {
        for (std::size_t u = 0; u < h; ++u) {
          const double gi = gv[(0 * h + u) * n + t];
          const double gf = gv[(1 * h + u) * n + t];
          const double gc = gv[(2 * h + u) * n + t];
          const double go = gv[(3 * h + u) * n + t];
          const double tc = tv[u * n + t];
          const double c_prev = (t == 0) ? (*c_init)[u] : cv[u * n + t - 1];
          const double dh = g_out[u * n + t] + dh_carry[u];
          const double dc = dh * go * (1.0 - tc * tc) + dc_carry[u];
          dz[0 * h + u] = dc * gc * gi * (1.0 - gi);
          dz[1 * h + u] = dc * c_prev * gf * (1.0 - gf);
          dz[2 * h + u] = dc * gi * (1.0 - gc * gc);
          dz[3 * h + u] = dh * tc * go * (1.0 - go);
          dc_carry[u] = dc * gf;
        }
        for (std::size_t r = 0; r < f; ++r) xt[r] = sv[r * n + t];
        if (t == 0) {
          hprev = *h_init;
        } else {
          for (std::size_t u = 0; u < h; ++u) hprev[u] = ov[u * n + t - 1];
        }
        for (std::size_t r = 0; r < 4 * h; ++r) {
          const double d = dz[r];
          if (gwx) kernels::axpy(d, xt.data(), gwx + r * f, f);
          if (gwh) kernels::axpy(d, hprev.data(), gwh + r * h, h);
          if (gb) gb[r] += d;
        }
        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        for (std::size_t r = 0; r < 4 * h; ++r) kernels::axpy(dz[r], wh + r * h, dh_carry.data(), h);
        if (gseq) {
          std::fill(dx.begin(), dx.end(), 0.0);
          for (std::size_t r = 0; r < 4 * h; ++r) kernels::axpy(dz[r], wx + r * f, dx.data(), f);
          for (std::size_t r = 0; r < f; ++r) gseq[r * n + t] += dx[r];
        }
      }
    });
  }
  return out;
}

Tensor dense_forward(Tape& tape, const Tensor& x, const Tensor& weights, const Tensor& bias) {
  return tape.affine(weights, x, bias);
}

std::vector<double> fourier_features(long t, const FourierSpec& spec) {
  if (t < 0) throw ShapeError("fourier_features: day index must be non-negative");
  spec.validate();
  std::vector<double> out;
  out.reserve(spec.feature_dim());
  for (const auto& cycle : spec.cycles) {
    const long tm = t % cycle.period;
    const double base = 2.0 * std::numbers::pi / static_cast<double>(cycle.period);
    for (std::size_t g = 1; g <= cycle.terms; ++g) {
      out.push_back(std::cos(base * static_cast<double>(g) * static_cast<double>(tm)));
    }
    for (std::size_t g = 1; g <= cycle.terms; ++g) {
      out.push_back(std::sin(base * static_cast<double>(g) * static_cast<double>(tm)));
    }
  }
  return out;
}

Tensor seasonal_forward(Tape& tape, const Tensor& features, const SeasonalMlpParams& params) {
  if (features.ndim() != 2 || features.cols() != 1) {
    throw ShapeError("seasonal_forward: features must be a column vector");
  }
  if (params.w1.cols() != features.rows()) {
    throw ShapeError("seasonal_forward: feature length " + std::to_string(features.rows()) +
                     " does not match the first layer width " + std::to_string(params.w1.cols()));
  }
  Tensor hidden = tape.tanh(tape.affine(params.w1, features, params.b1));
  return tape.affine(params.w2, hidden, params.b2);
}

Tensor event_forward(Tape& tape, const Tensor& b_t, const EventParams& params) {
  if (b_t.ndim() != 2 || b_t.cols() != 1) {
    throw ShapeError("event_forward: b_t must be a column vector");
  }
  if (b_t.rows() != params.types()) {
    throw ShapeError("event_forward: indicator length " + std::to_string(b_t.rows()) +
                     " does not match L=" + std::to_string(params.types()));
  }
  for (std::size_t i = 0; i < b_t.size(); ++i) {
    const double v = b_t[i];
    if (v != 0.0 && v != 1.0) {
      throw ShapeError("event_forward: indicator entries must be 0 or 1");
    }
  }
  return tape.matmul(params.a, b_t);
}

}  // namespace mstm
