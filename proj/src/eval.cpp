#include "mstm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mstm {

double rmse(const std::vector<double>& preds, const std::vector<double>& truth) {
  if (preds.empty() || preds.size() != truth.size()) {
    throw ShapeError("rmse: inputs must be equal-length and non-empty");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = preds[i] - truth[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double rrmse(const std::vector<double>& preds, const std::vector<double>& truth) {
  if (preds.empty() || preds.size() != truth.size()) {
    throw ShapeError("rrmse: inputs must be equal-length and non-empty");
  }
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  if (mean == 0.0) throw NumericError("rrmse: ground-truth mean is zero, metric undefined");
  return rmse(preds, truth) / mean;
}

DeepMstmForecaster::DeepMstmForecaster(ModelConfig cfg, DeepMstmParams params, NormStats stats)
    : cfg_(std::move(cfg)), params_(std::move(params)), stats_(std::move(stats)) {
  cfg_.validate();
}

double DeepMstmForecaster::predict(const SeriesFrame& frame, std::size_t t,
                                   const std::vector<double>& event_vec) const {
  const std::size_t m = cfg_.n_series;
  const std::size_t n = cfg_.n_lags;
  if (t < n || t > frame.length()) {
    throw DataError("predict: need N=" + std::to_string(n) + " observed steps before t");
  }
  std::vector<double> window(m * n);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t j = 0; j < n; ++j) {
      window[s * n + j] = (frame.values[s][t - n + j] - stats_.mean[s]) / stats_.stddev[s];
    }
  }
  Tape tape;
  const ComponentOutput out =
      forward(tape, window, static_cast<long>(t), event_vec, params_, cfg_);
  return denormalize(out.forecast.item(), stats_, cfg_.target);
}

EvalResult rolling_one_step(const OneStepModel& model, const SeriesFrame& frame,
                            std::size_t test_from, std::size_t test_to,
                            const EventCalendar& calendar, std::size_t n_lags,
                            std::size_t target) {
  if (test_from < n_lags) {
    throw DataError("rolling_one_step: history does not cover N=" + std::to_string(n_lags) +
                    " steps before the test range");
  }
  if (test_to > frame.length() || test_from > test_to) {
    throw DataError("rolling_one_step: test range outside the frame");
  }
  EvalResult res;
  for (std::size_t t = test_from; t < test_to; ++t) {
    const Date date = frame.date(t);
    const double pred = model.predict(frame, t, calendar.vector_for(date));
    const double actual = frame.values[target][t];
    res.dates.push_back(date);
    res.forecasts.push_back(pred);
    res.truth.push_back(actual);
    res.residuals.push_back(pred - actual);
  }
  if (!res.forecasts.empty()) {
    res.rmse_v = rmse(res.forecasts, res.truth);
    double mean = 0.0;
    for (double v : res.truth) mean += v;
    mean /= static_cast<double>(res.truth.size());
    res.truth_mean = mean;
    res.negative_mean = mean < 0.0;
    res.rrmse_v = rrmse(res.forecasts, res.truth);
  }
  return res;
}

namespace {

ModelConfig lstm_baseline_config(const ModelConfig& base, bool multivariate) {
  ModelConfig cfg = base;
  cfg.bypass_conv = true;
  cfg.multivariate = multivariate;
  cfg.use_conv1d = false;
  cfg.use_conv2d = false;
  cfg.fourier.cycles.clear();
  cfg.event_types = 0;
  return cfg;
}

}  // namespace

ModelConfig ulstm_config(const ModelConfig& base) { return lstm_baseline_config(base, false); }
ModelConfig mlstm_config(const ModelConfig& base) { return lstm_baseline_config(base, true); }

std::vector<double> seasonal_naive_forecasts(const SeriesFrame& frame, std::size_t target,
                                             long period, std::size_t test_from,
                                             std::size_t test_to) {
  if (period < 1) throw DataError("seasonal_naive: period must be positive");
  if (test_from < static_cast<std::size_t>(period)) {
    throw DataError("seasonal_naive: history shorter than one period");
  }
  if (test_to > frame.length() || test_from > test_to) {
    throw DataError("seasonal_naive: test range outside the frame");
  }
  std::vector<double> out;
  out.reserve(test_to - test_from);
  for (std::size_t t = test_from; t < test_to; ++t) {
    out.push_back(frame.values[target][t - static_cast<std::size_t>(period)]);
  }
  return out;
}

std::vector<AblationArm> ablation_arms(const ModelConfig& base) {
  ModelConfig m1 = base;
  m1.multivariate = false;
  m1.use_conv1d = false;
  m1.use_conv2d = true;
  ModelConfig m2 = base;
  m2.multivariate = true;
  m2.use_conv1d = true;
  m2.use_conv2d = false;
  ModelConfig m3 = base;
  m3.multivariate = true;
  m3.use_conv1d = true;
  m3.use_conv2d = true;
  return {{"model1", m1}, {"model2", m2}, {"model3", m3}};
}

std::vector<EvalResult> run_ablation(const SeriesFrame& frame, const EventCalendar& calendar,
                                     const ModelConfig& base, const AblationOptions& opts) {
  if (opts.seeds.empty()) throw ConfigError("run_ablation: need at least one seed");
  const NormStats stats = compute_stats(frame, opts.test_from);
  const SeriesFrame norm = normalize(frame, stats);
  const WindowBatch all = build_windows(norm, base.n_lags, base.target, calendar);

  WindowBatch train_batch;
  train_batch.target_series = all.target_series;
  train_batch.n_lags = all.n_lags;
  train_batch.n_series = all.n_series;
  for (const auto& w : all.windows) {
    if (w.t_index < static_cast<long>(opts.test_from)) train_batch.windows.push_back(w);
  }

  std::vector<EvalResult> results;
  for (const auto& arm : ablation_arms(base)) {
    for (const std::uint64_t seed : opts.seeds) {
      TrainOptions topts = opts.train;
      topts.seed = seed;
      const TrainReport report = fit(train_batch, arm.config, topts);
      const DeepMstmForecaster forecaster(arm.config, report.params, stats);
      EvalResult res = rolling_one_step(forecaster, frame, opts.test_from, opts.test_to, calendar,
                                        base.n_lags, base.target);
      res.data_label = opts.data_label;
      res.model_label = arm.label;
      res.seed = seed;
      results.push_back(std::move(res));
    }
  }
  return results;
}

void write_results_csv(const std::string& path, const std::vector<EvalResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "data,label,seed,rmse,rrmse\n";
  for (const auto& r : results) {
    out << r.data_label << ',' << r.model_label << ',' << r.seed << ',' << fmt17(r.rmse_v) << ','
        << fmt17(r.rrmse_v) << '\n';
  }
}

double median(std::vector<double> v) {
  if (v.empty()) throw ShapeError("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace mstm
