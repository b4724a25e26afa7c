#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstm/model.hpp"

namespace mstm {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment buffers for one parameter array.
struct AdamSlot {
  std::vector<double> m, v;
};

// One bias-corrected Adam update on a single array at step t (1-based).
void adam_step_array(double* theta, const double* grad, std::size_t n, AdamSlot& slot, long t,
                     const AdamConfig& cfg);

// Adam over a fixed set of parameter arrays; one shared step counter.
class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<std::pair<std::string, Tensor>>& params);
  // Applies one update from the tensors' current gradients (absent grad = 0).
  void step();
  long step_count() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<AdamSlot> slots_;
  long t_ = 0;
};

// Mean absolute error between two equal-length vectors, on the tape.
Tensor mae_loss(Tape& tape, const Tensor& predictions, const Tensor& targets);

struct TrainOptions {
  double lr = 0.01;
  std::size_t epochs = 500;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // 0 disables early stopping; otherwise stop after `patience` epochs without
  // improvement of the training MAE.
  std::size_t patience = 0;
};

struct TrainReport {
  std::vector<double> epoch_mae;  // one entry per epoch run, loss before the update
  DeepMstmParams params;
  ModelConfig config;
  std::uint64_t seed = 0;
  std::size_t epochs_requested = 0;
  double wall_seconds = 0.0;
};

// Full-batch joint training of all heads with Adam on the MAE objective.
// Deterministic per (batch, config, options). NaN loss aborts with the epoch
// and the offending window.
TrainReport fit(const WindowBatch& batch, const ModelConfig& cfg, const TrainOptions& opts);

// One machine-readable line per epoch: `epoch,mae`.
void write_train_report_csv(const std::string& path, const TrainReport& report);

struct GradVerifyReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double tol = 0.0;
  bool pass = false;
  std::size_t parameter_count = 0;
};

// Compares analytic gradients of the full-model MAE loss on one deterministic
// synthetic batch against central differences, for every parameter.
// Restricted to tiny configs (≤ 500 parameters).
GradVerifyReport verify_gradients(const ModelConfig& cfg, std::uint64_t seed, double tol,
                                  double h = 1e-5);

}  // namespace mstm
