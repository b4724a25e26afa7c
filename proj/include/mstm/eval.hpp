#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mstm/model.hpp"
#include "mstm/train.hpp"

namespace mstm {

double rmse(const std::vector<double>& preds, const std::vector<double>& truth);
// RMSE / mean(truth). Throws NumericError when the mean is exactly zero; a
// negative mean yields a signed value (flagged in EvalResult).
double rrmse(const std::vector<double>& preds, const std::vector<double>& truth);

struct EvalResult {
  std::string data_label;
  std::string model_label;
  std::uint64_t seed = 0;
  double rmse_v = 0.0;
  double rrmse_v = 0.0;
  double truth_mean = 0.0;
  bool negative_mean = false;
  std::vector<Date> dates;
  std::vector<double> forecasts;  // original units
  std::vector<double> truth;
  std::vector<double> residuals;
};

// One-step forecaster over an original-units frame. Implementations must only
// read frame values at indices < t; the test suite checks causality by
// perturbation.
class OneStepModel {
 public:
  virtual ~OneStepModel() = default;
  virtual double predict(const SeriesFrame& frame, std::size_t t,
                         const std::vector<double>& event_vec) const = 0;
};

// Normalized forward pass of the full model, denormalized back to data units.
class DeepMstmForecaster : public OneStepModel {
 public:
  DeepMstmForecaster(ModelConfig cfg, DeepMstmParams params, NormStats stats);
  double predict(const SeriesFrame& frame, std::size_t t,
                 const std::vector<double>& event_vec) const override;

 private:
  ModelConfig cfg_;
  DeepMstmParams params_;
  NormStats stats_;
};

// For each t in [test_from, test_to) the input window is the actual observed
// history through t−1; metrics are computed on denormalized forecasts.
EvalResult rolling_one_step(const OneStepModel& model, const SeriesFrame& frame,
                            std::size_t test_from, std::size_t test_to,
                            const EventCalendar& calendar, std::size_t n_lags,
                            std::size_t target);

// Plain LSTM baselines: conv layers bypassed, no seasonal or event head.
ModelConfig ulstm_config(const ModelConfig& base);   // univariate input
ModelConfig mlstm_config(const ModelConfig& base);   // multivariate input

// forecast(t) = value(t − P).
std::vector<double> seasonal_naive_forecasts(const SeriesFrame& frame, std::size_t target,
                                             long period, std::size_t test_from,
                                             std::size_t test_to);

struct AblationArm {
  std::string label;
  ModelConfig config;
};
// Model 1 (univariate, 2-d conv only), Model 2 (multivariate, 1-d only),
// Model 3 (multivariate, both).
std::vector<AblationArm> ablation_arms(const ModelConfig& base);

struct AblationOptions {
  TrainOptions train;
  std::size_t test_from = 0;
  std::size_t test_to = 0;
  std::vector<std::uint64_t> seeds;
  std::string data_label;
};

// Fits and evaluates every (arm, seed) pair on the same frame; seeds drive
// parameter initialization.
std::vector<EvalResult> run_ablation(const SeriesFrame& frame, const EventCalendar& calendar,
                                     const ModelConfig& base, const AblationOptions& opts);

// CSV with columns data,label,seed,rmse,rrmse.
void write_results_csv(const std::string& path, const std::vector<EvalResult>& results);

double median(std::vector<double> v);

}  // namespace mstm
