#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "mstm/gradcheck.hpp"
#include "mstm/rng.hpp"
#include "mstm/train.hpp"

using namespace mstm;

namespace {

// Deterministic batch over a noisy trending series with a monthly event.
struct Fixture {
  SeriesFrame frame;
  EventCalendar calendar;
  NormStats stats;
  WindowBatch batch;
  ModelConfig cfg;
};

Fixture make_fixture(std::size_t t_len = 60, bool constant_target = false) {
  Fixture fx;
  fx.cfg.n_series = 2;
  fx.cfg.target = 0;
  fx.cfg.n_lags = 5;
  fx.cfg.conv1d_filters = 2;
  fx.cfg.conv2d_filters = 2;
  fx.cfg.lstm_hidden = 3;
  fx.cfg.fourier.cycles = {{7, 2}};
  fx.cfg.seasonal_hidden = 4;
  fx.cfg.event_types = 1;

  fx.frame.start = Date::parse("2024-01-01");
  fx.frame.series_ids = {"a", "b"};
  Rng rng(1234);
  std::vector<double> v0(t_len), v1(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    if (constant_target) {
      v0[t] = 10.0 + 0.001 * rng.normal();  // nearly constant
    } else {
      v0[t] = 0.2 * static_cast<double>(t) + 2.0 * std::sin(0.9 * static_cast<double>(t)) +
              0.5 * rng.normal();
    }
    v1[t] = 0.1 * static_cast<double>(t) + rng.normal();
  }
  fx.frame.values = {v0, v1};

  fx.calendar.event_types = {"ev"};
  for (std::size_t t = 0; t < t_len; ++t) {
    if (fx.frame.date(t).day_of_month() == 1) fx.calendar.days[fx.frame.date(t).days()] = {1.0};
  }
  fx.stats = compute_stats(fx.frame, t_len);
  fx.batch = build_windows(normalize(fx.frame, fx.stats), fx.cfg.n_lags, 0, fx.calendar);
  return fx;
}

}  // namespace

TEST_CASE("mae_loss values") {
  {
    Tape tp;
    const Tensor p = Tensor::vector({1.0, 2.0, 3.0});
    CHECK(mae_loss(tp, p, p).item() == 0.0);
  }
  {
    Tape tp;
    CHECK(mae_loss(tp, Tensor::vector({0.0, 0.0}), Tensor::vector({1.0, -3.0})).item() == 2.0);
  }
  {
    // random vectors against a plain loop
    Rng rng(8);
    std::vector<double> a(13), b(13);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.uniform(-4.0, 4.0);
      b[i] = rng.uniform(-4.0, 4.0);
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) expected += std::fabs(a[i] - b[i]);
    expected /= static_cast<double>(a.size());
    Tape tp;
    CHECK(mae_loss(tp, Tensor::vector(a), Tensor::vector(b)).item() ==
          doctest::Approx(expected).epsilon(1e-15));
  }
  {
    Tape tp;
    CHECK_THROWS_AS(mae_loss(tp, Tensor::vector({1.0}), Tensor::vector({1.0, 2.0})), ShapeError);
  }
}

TEST_CASE("adam first step moves every parameter by exactly lr") {
  AdamConfig cfg;
  cfg.lr = 0.001;
  cfg.eps = 1e-12;  // eps ~ 0 makes mhat/sqrt(vhat) = sign(g) at step 1
  std::vector<double> theta = {1.0, -2.0, 3.0};
  const std::vector<double> grad = {0.4, -0.02, 7.0};
  AdamSlot slot;
  adam_step_array(theta.data(), grad.data(), 3, slot, 1, cfg);
  CHECK(theta[0] == doctest::Approx(1.0 - cfg.lr).epsilon(1e-9));
  CHECK(theta[1] == doctest::Approx(-2.0 + cfg.lr).epsilon(1e-9));
  CHECK(theta[2] == doctest::Approx(3.0 - cfg.lr).epsilon(1e-9));
}

TEST_CASE("adam with zero gradients never moves") {
  AdamConfig cfg;
  std::vector<double> theta = {1.0, -2.0};
  const std::vector<double> grad = {0.0, 0.0};
  AdamSlot slot;
  for (long t = 1; t <= 10; ++t) adam_step_array(theta.data(), grad.data(), 2, slot, t, cfg);
  CHECK(theta[0] == 1.0);
  CHECK(theta[1] == -2.0);
}

TEST_CASE("adam trajectory matches a hand-rolled scalar reference") {
  AdamConfig cfg;
  cfg.lr = 0.001;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  cfg.eps = 1e-8;
  double theta = 0.5;
  AdamSlot slot;
  // scalar reference
  double ref = 0.5, m = 0.0, v = 0.0;
  const double g = 1.0;
  for (long t = 1; t <= 3; ++t) {
    adam_step_array(&theta, &g, 1, slot, t, cfg);
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mhat = m / (1 - std::pow(cfg.beta1, t));
    const double vhat = v / (1 - std::pow(cfg.beta2, t));
    ref -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    CHECK(theta == doctest::Approx(ref).epsilon(1e-15));
  }
}

TEST_CASE("adam step-1 magnitude holds per parameter array of the full model") {
  const Fixture fx = make_fixture();
  DeepMstmParams params = init_params(fx.cfg, 3);
  auto named = params.arrays();
  const auto before = [&named]() {
    std::vector<std::vector<double>> copy;
    for (auto& [n, t] : named) copy.emplace_back(t.data(), t.data() + t.size());
    return copy;
  }();

  // synthetic nonzero gradient on every coordinate
  Rng rng(5);
  for (auto& [name, t] : named) {
    double* g = t.grad_ensure();
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = rng.uniform(0.5, 2.0) * (i % 2 ? -1 : 1);
  }
  AdamConfig acfg;
  acfg.lr = 0.01;
  acfg.eps = 1e-12;
  Adam adam(acfg, named);
  adam.step();
  for (std::size_t a = 0; a < named.size(); ++a) {
    for (std::size_t i = 0; i < named[a].second.size(); ++i) {
      const double moved = std::fabs(named[a].second[i] - before[a][i]);
      CHECK(moved == doctest::Approx(acfg.lr).epsilon(1e-8));
    }
  }
}

TEST_CASE("fit: lr = 0 leaves parameters untouched and the loss constant") {
  const Fixture fx = make_fixture();
  TrainOptions opts;
  opts.lr = 0.0;
  opts.epochs = 4;
  opts.seed = 11;
  const TrainReport report = fit(fx.batch, fx.cfg, opts);
  REQUIRE(report.epoch_mae.size() == 4);
  for (double m : report.epoch_mae) CHECK(m == report.epoch_mae[0]);
  const DeepMstmParams fresh = init_params(fx.cfg, 11);
  const auto a = report.params.arrays();
  const auto b = fresh.arrays();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].second.size(); ++j) {
      CHECK(a[i].second[j] == b[i].second[j]);
    }
  }
}

TEST_CASE("fit: same seed gives a bit-identical report") {
  const Fixture fx = make_fixture();
  TrainOptions opts;
  opts.epochs = 12;
  opts.seed = 7;
  const TrainReport r1 = fit(fx.batch, fx.cfg, opts);
  const TrainReport r2 = fit(fx.batch, fx.cfg, opts);
  REQUIRE(r1.epoch_mae.size() == r2.epoch_mae.size());
  for (std::size_t i = 0; i < r1.epoch_mae.size(); ++i) {
    CHECK(r1.epoch_mae[i] == r2.epoch_mae[i]);
  }
  const auto a = r1.params.arrays();
  const auto b = r2.params.arrays();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].second.size(); ++j) {
      CHECK(a[i].second[j] == b[i].second[j]);
    }
  }
}

TEST_CASE("fit: constant target trains to a fraction of the initial loss") {
  // constant targets, no seasonal or event head
  ModelConfig cfg;
  cfg.n_series = 1;
  cfg.target = 0;
  cfg.n_lags = 4;
  cfg.conv1d_filters = 2;
  cfg.conv2d_filters = 2;
  cfg.lstm_hidden = 3;

  WindowBatch batch;
  batch.n_series = 1;
  batch.n_lags = 4;
  batch.target_series = 0;
  Rng rng(19);
  for (int i = 0; i < 30; ++i) {
    Window w;
    w.input.resize(4);
    for (auto& v : w.input) v = 0.3 * rng.uniform(-1.0, 1.0);
    w.target = 1.0;
    w.t_index = 4 + i;
    w.date = Date::parse("2024-01-05") + i;
    batch.windows.push_back(std::move(w));
  }

  TrainOptions opts;
  opts.epochs = 400;
  opts.seed = 2;
  opts.lr = 0.002;
  const TrainReport report = fit(batch, cfg, opts);
  REQUIRE(report.epoch_mae.size() == 400);
  // monotone decrease over the first 50 epochs
  for (std::size_t i = 1; i < 50; ++i) {
    CHECK(report.epoch_mae[i] <= report.epoch_mae[i - 1]);
  }
  CHECK(report.epoch_mae.back() < report.epoch_mae.front() / 10.0);
}

TEST_CASE("fit: one step with nonzero loss updates every head") {
  const Fixture fx = make_fixture();
  // the batch spans an event date and a nonconstant target
  bool has_event = false;
  for (const auto& w : fx.batch.windows) {
    if (w.event_vec[0] != 0.0) has_event = true;
  }
  REQUIRE(has_event);

  TrainOptions opts;
  opts.epochs = 1;
  opts.seed = 5;
  const TrainReport report = fit(fx.batch, fx.cfg, opts);
  const DeepMstmParams fresh = init_params(fx.cfg, 5);
  const auto after = report.params.arrays();
  const auto before = fresh.arrays();
  for (std::size_t i = 0; i < after.size(); ++i) {
    bool changed = false;
    for (std::size_t j = 0; j < after[i].second.size(); ++j) {
      if (after[i].second[j] != before[i].second[j]) changed = true;
    }
    INFO("array ", after[i].first);
    CHECK(changed);
  }
}

TEST_CASE("fit: NaN loss aborts with epoch and window diagnostics") {
  Fixture fx = make_fixture();
  fx.batch.windows[3].target = std::numeric_limits<double>::quiet_NaN();
  TrainOptions opts;
  opts.epochs = 5;
  try {
    fit(fx.batch, fx.cfg, opts);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("window") != std::string::npos);
  }
}

TEST_CASE("fit: patience stops early") {
  const Fixture fx = make_fixture();
  TrainOptions opts;
  opts.epochs = 200;
  opts.lr = 0.0;  // loss cannot improve
  opts.patience = 3;
  const TrainReport report = fit(fx.batch, fx.cfg, opts);
  CHECK(report.epoch_mae.size() == 4);  // first epoch sets best, then 3 stale
}

TEST_CASE("verify_gradients on the reference config") {
  ModelConfig cfg;
  cfg.n_series = 2;
  cfg.target = 0;
  cfg.n_lags = 5;
  cfg.conv1d_filters = 2;
  cfg.conv2d_filters = 2;
  cfg.lstm_hidden = 3;
  cfg.fourier.cycles = {{7, 2}};
  cfg.seasonal_hidden = 8;
  cfg.event_types = 1;

  const GradVerifyReport report = verify_gradients(cfg, 1, 1e-4);
  INFO("max rel err ", report.max_rel_err, " at ", report.worst_param, "[", report.worst_index,
       "]");
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-4);
  CHECK(report.parameter_count <= 500);
}

TEST_CASE("verify_gradients rejects oversized configs") {
  ModelConfig cfg;
  cfg.n_series = 2;
  cfg.n_lags = 5;
  cfg.lstm_hidden = 64;
  CHECK_THROWS_AS(verify_gradients(cfg, 1, 1e-4), ConfigError);
}

TEST_CASE("gradient check passes trivially in a zero-loss region") {
  // constant-zero series: every prediction and target is 0 with zero params
  ModelConfig cfg;
  cfg.n_series = 1;
  cfg.target = 0;
  cfg.n_lags = 3;
  cfg.conv1d_filters = 1;
  cfg.conv2d_filters = 1;
  cfg.lstm_hidden = 1;

  DeepMstmParams params = init_params(cfg, 1);
  for (auto& [n, t] : params.arrays()) std::fill(t.data(), t.data() + t.size(), 0.0);
  WindowBatch batch;
  batch.n_series = 1;
  batch.n_lags = 3;
  batch.target_series = 0;
  for (int i = 0; i < 4; ++i) {
    Window w;
    w.input = {0.0, 0.0, 0.0};
    w.target = 0.0;
    w.t_index = 3 + i;
    w.date = Date::parse("2024-01-04") + i;
    batch.windows.push_back(w);
  }
  auto loss = [&](Tape& tp) {
    std::vector<Tensor> preds;
    for (const auto& w : batch.windows) {
      preds.push_back(forward(tp, w.input, w.t_index, w.event_vec, params, cfg).forecast);
    }
    return mae_loss(tp, tp.stack(preds), Tensor::vector(std::vector<double>(4, 0.0)));
  };
  const auto res = finite_diff_check(loss, params.arrays(), 1e-5);
  CHECK(res.max_rel_err == 0.0);
}

TEST_CASE("a corrupted backward rule is caught by the checker") {
  // custom op y = 2x recorded with a deliberately wrong pullback
  Tensor x = Tensor::scalar(0.8, true);
  auto bad_double = [&x](Tape& tp) {
    Tensor y = Tensor::scalar(2.0 * x.item());
    y.set_requires_grad(true);
    tp.record("bad_double", [x, y]() {
      if (!y.has_grad()) return;
      x.grad_ensure()[0] += 3.0 * y.grad()[0];  // should be 2.0
    });
    return y;
  };
  const auto res = finite_diff_check(bad_double, {{"x", x}}, 1e-5);
  CHECK(res.max_rel_err > 0.1);
}

TEST_CASE("train report CSV has one line per epoch") {
  const Fixture fx = make_fixture();
  TrainOptions opts;
  opts.epochs = 6;
  const TrainReport report = fit(fx.batch, fx.cfg, opts);
  const auto dir = std::filesystem::temp_directory_path() / "mstm_train_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "report.csv").string();
  write_train_report_csv(path, report);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,mae");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 6);
  std::filesystem::remove_all(dir);
}
