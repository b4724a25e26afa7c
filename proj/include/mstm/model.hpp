#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mstm/data.hpp"
#include "mstm/layers.hpp"

namespace mstm {

// Full model shape. The ablation flags select the three variants:
//   model 1: multivariate=false, use_conv1d=false, use_conv2d=true
//   model 2: multivariate=true,  use_conv1d=true,  use_conv2d=false
//   model 3: multivariate=true,  use_conv1d=true,  use_conv2d=true
// bypass_conv feeds the raw window straight into the LSTM (the plain LSTM
// baselines).
struct ModelConfig {
  std::size_t n_series = 1;        // M
  std::size_t target = 0;          // m (0-based)
  std::size_t n_lags = 14;         // N
  std::size_t conv1d_filters = 4;  // K1
  std::size_t conv2d_filters = 4;  // K2
  std::size_t lstm_hidden = 8;     // H
  std::size_t seasonal_hidden = 8;
  FourierSpec fourier;             // empty -> no seasonal head
  std::size_t event_types = 0;     // L, 0 -> no event head
  bool use_conv1d = true;
  bool use_conv2d = true;
  bool multivariate = true;
  bool bypass_conv = false;

  std::size_t trend_series() const { return multivariate ? n_series : 1; }
  std::size_t lstm_input() const;
  bool has_seasonal() const { return !fourier.empty(); }
  bool has_event() const { return event_types > 0; }
  void validate() const;  // throws ConfigError
};

// Every learnable array of the model. Heads that are disabled by the config
// hold undefined tensors.
struct DeepMstmParams {
  Tensor conv1d_w, conv1d_b;  // K1×M_eff, K1
  Tensor conv2d_w, conv2d_b;  // K2×M_eff×2, K2
  LstmParams lstm;
  Tensor dense_w, dense_b;  // 1×H, 1
  SeasonalMlpParams seasonal;
  EventParams event;

  // (name, tensor) in a fixed order; skips undefined arrays.
  std::vector<std::pair<std::string, Tensor>> arrays() const;
};

// Uniform ±sqrt(6/(fan_in+fan_out)) weights, zero biases except the LSTM
// forget-gate biases which start at 1. Deterministic per (config, seed).
DeepMstmParams init_params(const ModelConfig& cfg, std::uint64_t seed);

struct ComponentOutput {
  Tensor forecast;  // x̂_t = (d + s) + e
  Tensor trend;
  Tensor seasonal;
  Tensor event;
};

// One-step forward. `window` holds the M×N lagged values for times t−N..t−1
// (all M series; the univariate variants slice out the target row), t is the
// forecast day index, b_t the event indicator for day t.
ComponentOutput forward(Tape& tape, const std::vector<double>& window, long t,
                        const std::vector<double>& b_t, const DeepMstmParams& params,
                        const ModelConfig& cfg);

// Per-step components over frame indices [from, to). Values are in the
// model's normalized space; forecast == (d + s) + e holds bitwise per step.
struct Decomposition {
  std::vector<Date> dates;
  std::vector<double> trend, seasonal, event, forecast;
  std::size_t size() const { return dates.size(); }
};

Decomposition decompose(const SeriesFrame& frame, std::size_t from, std::size_t to,
                        const DeepMstmParams& params, const ModelConfig& cfg,
                        const NormStats& stats, const EventCalendar& calendar);

// Versioned parameter record: model shape, normalization stats, series ids
// and every array, round-trippable bit-exactly.
void save_params(const std::string& path, const DeepMstmParams& params, const ModelConfig& cfg,
                 const NormStats& stats, const std::vector<std::string>& series_ids);

struct LoadedModel {
  ModelConfig config;
  DeepMstmParams params;
  NormStats stats;
  std::vector<std::string> series_ids;
};

LoadedModel load_params(const std::string& path);

}  // namespace mstm
