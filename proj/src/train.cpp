#include "mstm/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mstm/gradcheck.hpp"
#include "mstm/rng.hpp"
#include "mstm/synth.hpp"

namespace mstm {

void adam_step_array(double* theta, const double* grad, std::size_t n, AdamSlot& slot, long t,
                     const AdamConfig& cfg) {
  if (slot.m.size() != n) {
    slot.m.assign(n, 0.0);
    slot.v.assign(n, 0.0);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
    slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = slot.m[i] / bc1;
    const double vhat = slot.v[i] / bc2;
    theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Adam::Adam(AdamConfig cfg, const std::vector<std::pair<std::string, Tensor>>& params)
    : cfg_(cfg) {
  for (const auto& [name, tensor] : params) {
    (void)name;
    params_.push_back(tensor);
    slots_.emplace_back();
  }
}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const std::vector<double> grad = p.grad_copy();
    adam_step_array(p.data(), grad.data(), p.size(), slots_[i], t_, cfg_);
  }
}

Tensor mae_loss(Tape& tape, const Tensor& predictions, const Tensor& targets) {
  if (predictions.size() == 0 || predictions.size() != targets.size()) {
    throw ShapeError("mae_loss: predictions and targets must be equal-length and non-empty");
  }
  return tape.mean_abs(tape.sub(predictions, targets));
}

TrainReport fit(const WindowBatch& batch, const ModelConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (batch.windows.empty()) throw DataError("fit: empty window batch");
  if (batch.n_series != cfg.n_series || batch.n_lags != cfg.n_lags ||
      batch.target_series != cfg.target) {
    throw ConfigError("fit: window batch shape does not match the model config");
  }
  for (const auto& w : batch.windows) {
    if (w.event_vec.size() != cfg.event_types) {
      throw ConfigError("fit: window event vectors do not match event_types");
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  report.config = cfg;
  report.seed = opts.seed;
  report.epochs_requested = opts.epochs;
  report.params = init_params(cfg, opts.seed);
  auto named = report.params.arrays();

  Adam adam(AdamConfig{opts.lr, opts.beta1, opts.beta2, opts.eps}, named);

  std::vector<double> target_values(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) target_values[i] = batch.windows[i].target;

  // Patience mode keeps the parameters from the best training-MAE epoch,
  // which also averages out the terminal oscillation of Adam on the MAE kink.
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::vector<double>> best_params;
  auto snapshot = [&]() {
    best_params.clear();
    for (const auto& [name, p] : named) {
      (void)name;
      best_params.emplace_back(p.data(), p.data() + p.size());
    }
  };

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    Tape tape;
    std::vector<Tensor> preds;
    preds.reserve(batch.size());
    for (const auto& w : batch.windows) {
      preds.push_back(forward(tape, w.input, w.t_index, w.event_vec, report.params, cfg).forecast);
    }
    Tensor pred_vec = tape.stack(preds);
    Tensor targets = Tensor::vector(target_values);
    Tensor loss = mae_loss(tape, pred_vec, targets);
    const double mae = loss.item();
    if (!std::isfinite(mae)) {
      std::size_t bad = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!std::isfinite(preds[i].item())) {
          bad = i;
          break;
        }
      }
      throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch + 1) +
                         ", window " + std::to_string(bad) + " (" +
                         batch.windows[bad].date.to_string() + ")");
    }
    report.epoch_mae.push_back(mae);

    if (opts.patience > 0) {
      if (mae < best) {
        best = mae;
        since_best = 0;
        snapshot();  // the parameters that produced this loss, pre-update
      } else if (++since_best >= opts.patience) {
        break;
      }
    }

    for (auto& [name, p] : named) {
      (void)name;
      p.zero_grad();
    }
    tape.backward(loss);
    adam.step();
  }

  if (opts.patience > 0 && !best_params.empty()) {
    for (std::size_t i = 0; i < named.size(); ++i) {
      std::copy(best_params[i].begin(), best_params[i].end(), named[i].second.data());
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "epoch,mae\n";
  for (std::size_t i = 0; i < report.epoch_mae.size(); ++i) {
    out << (i + 1) << ',' << fmt17(report.epoch_mae[i]) << '\n';
  }
}

GradVerifyReport verify_gradients(const ModelConfig& cfg, std::uint64_t seed, double tol,
                                  double h) {
  cfg.validate();

  DeepMstmParams params = init_params(cfg, seed);
  auto named = params.arrays();
  std::size_t count = 0;
  for (const auto& [name, p] : named) {
    (void)name;
    count += p.size();
  }
  if (count > 500) {
    throw ConfigError("verify_gradients: config has " + std::to_string(count) +
                      " parameters; central differences are limited to 500");
  }

  // Deterministic miniature dataset: smooth trend + weekly wave + noise, an
  // event every 7 days cycling through the L types.
  const std::size_t t_len = cfg.n_lags + 24;
  SeriesFrame frame;
  frame.start = Date::parse("2024-01-01");
  Rng rng(seed ^ 0x5eedf00dULL);
  for (std::size_t s = 0; s < cfg.n_series; ++s) {
    frame.series_ids.push_back("s" + std::to_string(s));
    std::vector<double> vals(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      vals[t] = 0.08 * static_cast<double>(t) +
                std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 7.0 +
                         static_cast<double>(s)) +
                0.3 * rng.normal();
    }
    frame.values.push_back(std::move(vals));
  }
  EventCalendar calendar;
  for (std::size_t l = 0; l < cfg.event_types; ++l) {
    calendar.event_types.push_back("e" + std::to_string(l));
  }
  for (std::size_t t = 0; t < t_len; ++t) {
    if (cfg.event_types > 0 && t % 7 == 3) {
      std::vector<double> vec(cfg.event_types, 0.0);
      vec[(t / 7) % cfg.event_types] = 1.0;
      calendar.days[frame.date(t).days()] = vec;
    }
  }

  const NormStats stats = compute_stats(frame, t_len);
  const SeriesFrame norm = normalize(frame, stats);
  const WindowBatch batch = build_windows(norm, cfg.n_lags, cfg.target, calendar);

  std::vector<double> target_values(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) target_values[i] = batch.windows[i].target;

  auto loss_fn = [&](Tape& tape) {
    std::vector<Tensor> preds;
    preds.reserve(batch.size());
    for (const auto& w : batch.windows) {
      preds.push_back(forward(tape, w.input, w.t_index, w.event_vec, params, cfg).forecast);
    }
    return mae_loss(tape, tape.stack(preds), Tensor::vector(target_values));
  };

  const GradCheckResult res = finite_diff_check(loss_fn, named, h);
  GradVerifyReport report;
  report.max_rel_err = res.max_rel_err;
  report.worst_param = res.worst_param;
  report.worst_index = res.worst_index;
  report.tol = tol;
  report.pass = res.max_rel_err < tol;
  report.parameter_count = count;
  return report;
}

}  // namespace mstm
