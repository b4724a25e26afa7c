#pragma once

#include <cstddef>
#include <vector>

#include "mstm/tensor.hpp"

namespace mstm {

// LSTM weights. Gate rows are ordered [input; forget; cell; output], H rows
// per gate.
struct LstmParams {
  Tensor wx;    // 4H × F
  Tensor wh;    // 4H × H
  Tensor bias;  // 4H

  std::size_t hidden() const { return wh.cols(); }
  std::size_t input() const { return wx.cols(); }
  static LstmParams zeros(std::size_t hidden, std::size_t input, bool requires_grad = true);
};

// One seasonal cycle: period in days and the number of Fourier terms g.
struct FourierCycle {
  long period = 7;
  std::size_t terms = 1;
};

struct FourierSpec {
  std::vector<FourierCycle> cycles;
  // Σ 2g over cycles.
  std::size_t feature_dim() const;
  bool empty() const { return cycles.empty(); }
  void validate() const;  // P > 0, g >= 1
};

// Seasonal head: one tanh hidden layer, linear scalar output.
struct SeasonalMlpParams {
  Tensor w1;  // hidden × feature_dim
  Tensor b1;  // hidden
  Tensor w2;  // 1 × hidden
  Tensor b2;  // 1
};

struct EventParams {
  Tensor a;  // 1 × L
  std::size_t types() const { return a.cols(); }
};

// Standard LSTM recurrence over the columns of seq (F×N): sigmoid gates, tanh
// cell candidate, h = o·tanh(c). Returns the hidden states H×N. Initial state
// is zero unless (h0, c0) are supplied (length H each). Recorded as one fused
// tape node with full backpropagation through time.
Tensor lstm_forward(Tape& tape, const Tensor& seq, const LstmParams& params,
                    const std::vector<double>& h0 = {}, const std::vector<double>& c0 = {});

// weights (O×F) · x (F×1) + bias, linear activation.
Tensor dense_forward(Tape& tape, const Tensor& x, const Tensor& weights, const Tensor& bias);

// Fourier featurization of an integer day index: per cycle
// (cos λ(1), …, cos λ(g), sin λ(1), …, sin λ(g)) with λ(g) = 2πgt/P, cycles
// concatenated in spec order. Computed from t mod P so the features are
// exactly periodic.
std::vector<double> fourier_features(long t, const FourierSpec& spec);

// s_t = f(F(t)) through the seasonal MLP; features is the Fourier column
// vector (feature_dim × 1).
Tensor seasonal_forward(Tape& tape, const Tensor& features, const SeasonalMlpParams& params);

// e_t = a · b_t for a binary indicator column b_t (L × 1).
Tensor event_forward(Tape& tape, const Tensor& b_t, const EventParams& params);

}  // namespace mstm
