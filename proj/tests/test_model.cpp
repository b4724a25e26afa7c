#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "mstm/model.hpp"
#include "mstm/rng.hpp"

using namespace mstm;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.n_series = 2;
  cfg.target = 0;
  cfg.n_lags = 3;
  cfg.conv1d_filters = 1;
  cfg.conv2d_filters = 1;
  cfg.lstm_hidden = 1;
  cfg.fourier.cycles = {{7, 1}};
  cfg.seasonal_hidden = 2;
  cfg.event_types = 1;
  return cfg;
}

void zero_all(DeepMstmParams& p) {
  for (auto& [name, t] : p.arrays()) {
    (void)name;
    std::fill(t.data(), t.data() + t.size(), 0.0);
  }
}

double sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("init_params is deterministic and respects the uniform bound") {
  const ModelConfig cfg = tiny_config();
  const DeepMstmParams a = init_params(cfg, 99);
  const DeepMstmParams b = init_params(cfg, 99);
  const auto aa = a.arrays();
  const auto bb = b.arrays();
  REQUIRE(aa.size() == bb.size());
  for (std::size_t i = 0; i < aa.size(); ++i) {
    REQUIRE(aa[i].second.size() == bb[i].second.size());
    for (std::size_t j = 0; j < aa[i].second.size(); ++j) {
      CHECK(aa[i].second[j] == bb[i].second[j]);  // bit-identical
    }
  }
  const DeepMstmParams c = init_params(cfg, 100);
  bool any_different = false;
  const auto cc = c.arrays();
  for (std::size_t j = 0; j < aa[0].second.size(); ++j) {
    if (aa[0].second[j] != cc[0].second[j]) any_different = true;
  }
  CHECK(any_different);

  // fan_in = fan_out = 1 -> |w| <= sqrt(3)
  ModelConfig one = tiny_config();
  one.lstm_hidden = 1;
  const DeepMstmParams p = init_params(one, 7);
  CHECK(std::fabs(p.dense_w[0]) <= std::sqrt(3.0));

  // LSTM forget-gate bias block starts at 1, everything else at 0
  const std::size_t h = one.lstm_hidden;
  for (std::size_t u = 0; u < 4 * h; ++u) {
    CHECK(p.lstm.bias[u] == (u >= h && u < 2 * h ? 1.0 : 0.0));
  }
}

TEST_CASE("init_params sample mean is near zero") {
  // Pool every weight normalized by its own uniform limit: the pooled draws
  // are uniform on [-1, 1] with sd 1/sqrt(3).
  ModelConfig cfg;
  cfg.n_series = 4;
  cfg.n_lags = 8;
  cfg.conv1d_filters = 8;
  cfg.conv2d_filters = 8;
  cfg.lstm_hidden = 48;
  cfg.fourier.cycles = {{7, 12}};
  cfg.seasonal_hidden = 40;
  cfg.event_types = 3;

  std::vector<double> pooled;
  const DeepMstmParams p = init_params(cfg, 31);
  auto pool = [&pooled](const Tensor& t, std::size_t fan_out, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.size(); ++i) pooled.push_back(t[i] / limit);
  };
  pool(p.conv1d_w, cfg.conv1d_filters, 4);
  pool(p.conv2d_w, cfg.conv2d_filters, 8);
  pool(p.lstm.wx, 4 * cfg.lstm_hidden, cfg.lstm_input());
  pool(p.lstm.wh, 4 * cfg.lstm_hidden, cfg.lstm_hidden);
  pool(p.dense_w, 1, cfg.lstm_hidden);
  pool(p.seasonal.w1, cfg.seasonal_hidden, cfg.fourier.feature_dim());
  pool(p.seasonal.w2, 1, cfg.seasonal_hidden);
  pool(p.event.a, 1, cfg.event_types);
  REQUIRE(pooled.size() >= 10000);

  double mean = 0.0;
  for (double v : pooled) mean += v;
  mean /= static_cast<double>(pooled.size());
  const double se = (1.0 / std::sqrt(3.0)) / std::sqrt(static_cast<double>(pooled.size()));
  CHECK(std::fabs(mean) <= 3.0 * se);
}

TEST_CASE("forward with zero parameters is identically zero") {
  const ModelConfig cfg = tiny_config();
  DeepMstmParams p = init_params(cfg, 1);
  zero_all(p);
  Tape tp;
  const std::vector<double> window = {1, 2, 3, 4, 5, 6};
  const auto out = forward(tp, window, 10, {1.0}, p, cfg);
  CHECK(out.forecast.item() == 0.0);
  CHECK(out.trend.item() == 0.0);
  CHECK(out.seasonal.item() == 0.0);
  CHECK(out.event.item() == 0.0);
}

TEST_CASE("additivity isolates the event head") {
  const ModelConfig cfg = tiny_config();
  DeepMstmParams p = init_params(cfg, 1);
  zero_all(p);
  p.event.a.data()[0] = 5.0;
  Tape tp;
  const auto out = forward(tp, {1, 2, 3, 4, 5, 6}, 10, {1.0}, p, cfg);
  CHECK(out.forecast.item() == 5.0);
  CHECK(out.event.item() == 5.0);
  CHECK(out.trend.item() == 0.0);
}

TEST_CASE("tiny config matches an end-to-end hand computation") {
  // M=2, N=3, K1=1, K2=1, H=1, no seasonal or event head.
  ModelConfig cfg;
  cfg.n_series = 2;
  cfg.target = 0;
  cfg.n_lags = 3;
  cfg.conv1d_filters = 1;
  cfg.conv2d_filters = 1;
  cfg.lstm_hidden = 1;

  DeepMstmParams p = init_params(cfg, 1);
  zero_all(p);
  // conv kernels
  p.conv1d_w.data()[0] = 0.5;
  p.conv1d_w.data()[1] = -0.25;
  p.conv1d_b.data()[0] = 0.1;
  p.conv2d_w.data()[0] = -1.0;  // (m=0, col 0)
  p.conv2d_w.data()[1] = 1.0;   // (m=0, col 1)
  p.conv2d_w.data()[2] = 0.5;   // (m=1, col 0)
  p.conv2d_w.data()[3] = -0.5;  // (m=1, col 1)
  p.conv2d_b.data()[0] = 0.0;
  // LSTM: F = 2 (one 1d + one 2d feature)
  const double wx0 = 0.4, wx1 = -0.3;  // input gate
  const double fx0 = 0.2, fx1 = 0.1;   // forget gate
  const double gx0 = 0.7, gx1 = -0.6;  // cell gate
  const double ox0 = -0.2, ox1 = 0.5;  // output gate
  const double whi = 0.3, whf = -0.1, whg = 0.2, who = 0.6;
  double* wx = p.lstm.wx.data();
  wx[0] = wx0; wx[1] = wx1;
  wx[2] = fx0; wx[3] = fx1;
  wx[4] = gx0; wx[5] = gx1;
  wx[6] = ox0; wx[7] = ox1;
  double* wh = p.lstm.wh.data();
  wh[0] = whi; wh[1] = whf; wh[2] = whg; wh[3] = who;
  p.lstm.bias.data()[1] = 1.0;  // forget bias
  p.dense_w.data()[0] = 1.3;
  p.dense_b.data()[0] = -0.2;

  const std::vector<double> window = {1.0, 2.0, 4.0, 0.5, -1.0, 2.0};

  // conv features by hand
  double c1[3], c2[2];
  for (int j = 0; j < 3; ++j) c1[j] = 0.1 + 0.5 * window[j] - 0.25 * window[3 + j];
  for (int j = 0; j < 2; ++j) {
    c2[j] = -1.0 * window[j] + 1.0 * window[j + 1] + 0.5 * window[3 + j] - 0.5 * window[3 + j + 1];
  }
  // zero-padded concatenation: features per step (c1_j, c2_j or 0)
  double hprev = 0.0, cprev = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double f0 = c1[j];
    const double f1 = (j < 2) ? c2[j] : 0.0;
    const double gi = sigma(wx0 * f0 + wx1 * f1 + whi * hprev);
    const double gf = sigma(fx0 * f0 + fx1 * f1 + whf * hprev + 1.0);
    const double gg = std::tanh(gx0 * f0 + gx1 * f1 + whg * hprev);
    const double go = sigma(ox0 * f0 + ox1 * f1 + who * hprev);
    cprev = gf * cprev + gi * gg;
    hprev = go * std::tanh(cprev);
  }
  const double expected = 1.3 * hprev - 0.2;

  Tape tp;
  const auto out = forward(tp, window, 0, {}, p, cfg);
  CHECK(out.trend.item() == doctest::Approx(expected).epsilon(1e-14));
  CHECK(out.forecast.item() == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("forecast equals (d + s) + e bitwise") {
  const ModelConfig cfg = tiny_config();
  const DeepMstmParams p = init_params(cfg, 17);
  Rng rng(3);
  for (int iter = 0; iter < 25; ++iter) {
    std::vector<double> window(6);
    for (auto& v : window) v = rng.uniform(-2.0, 2.0);
    Tape tp;
    const auto out = forward(tp, window, 4 + iter, {iter % 2 ? 1.0 : 0.0}, p, cfg);
    const double manual = (out.trend.item() + out.seasonal.item()) + out.event.item();
    CHECK(out.forecast.item() == manual);
  }
}

TEST_CASE("changing only the event indicator moves the forecast by a * delta_b") {
  const ModelConfig cfg = tiny_config();
  const DeepMstmParams p = init_params(cfg, 23);
  const std::vector<double> window = {0.4, -1.2, 2.0, 1.1, 0.0, -0.7};
  Tape tp;
  const double with = forward(tp, window, 9, {1.0}, p, cfg).forecast.item();
  const double without = forward(tp, window, 9, {0.0}, p, cfg).forecast.item();
  CHECK(with - without == doctest::Approx(p.event.a[0]).epsilon(1e-12));
}

TEST_CASE("with no events the seasonal head makes the forecast P-periodic in t") {
  ModelConfig cfg = tiny_config();
  cfg.event_types = 0;
  const DeepMstmParams p = init_params(cfg, 29);
  const std::vector<double> window = {0.4, -1.2, 2.0, 1.1, 0.0, -0.7};
  for (long t = 0; t < 21; ++t) {
    Tape tpa, tpb;
    const auto a = forward(tpa, window, t, {}, p, cfg);
    const auto b = forward(tpb, window, t + 7, {}, p, cfg);
    CHECK(a.forecast.item() == b.forecast.item());
    CHECK(a.seasonal.item() == b.seasonal.item());
  }
}

TEST_CASE("model 2 output is a pure function of the window values") {
  ModelConfig cfg = tiny_config();
  cfg.use_conv2d = false;  // 1d-only variant
  cfg.event_types = 0;
  cfg.fourier.cycles.clear();
  const DeepMstmParams p = init_params(cfg, 31);
  // two identical columns; swapping them leaves the window unchanged
  std::vector<double> window = {1.5, 2.0, 1.5, -0.5, 1.0, -0.5};
  Tape tpa;
  const double base = forward(tpa, window, 0, {}, p, cfg).forecast.item();
  std::swap(window[0], window[2]);
  std::swap(window[3], window[5]);
  Tape tpb;
  CHECK(forward(tpb, window, 0, {}, p, cfg).forecast.item() == base);
}

TEST_CASE("decompose basics") {
  const ModelConfig cfg = tiny_config();

  SeriesFrame frame;
  frame.start = Date::parse("2024-01-20");
  frame.series_ids = {"a", "b"};
  frame.values = {{}, {}};
  Rng rng(41);
  for (int t = 0; t < 40; ++t) {
    frame.values[0].push_back(0.5 * t + rng.uniform(-1.0, 1.0));
    frame.values[1].push_back(-0.2 * t + rng.uniform(-1.0, 1.0));
  }
  const NormStats stats = compute_stats(frame, 40);
  EventCalendar cal;
  cal.event_types = {"month_start"};
  for (int t = 0; t < 40; ++t) {
    if (frame.date(t).day_of_month() == 1) cal.days[frame.date(t).days()] = {1.0};
  }

  DeepMstmParams zero = init_params(cfg, 1);
  zero_all(zero);
  const Decomposition d0 = decompose(frame, cfg.n_lags, 40, zero, cfg, stats, cal);
  for (std::size_t i = 0; i < d0.size(); ++i) {
    CHECK(d0.forecast[i] == 0.0);
    CHECK(d0.trend[i] == 0.0);
  }

  // event-only parameters spike exactly on the calendar days
  DeepMstmParams ev = init_params(cfg, 1);
  zero_all(ev);
  ev.event.a.data()[0] = 3.5;
  const Decomposition de = decompose(frame, cfg.n_lags, 40, ev, cfg, stats, cal);
  for (std::size_t i = 0; i < de.size(); ++i) {
    const bool is_event = de.dates[i].day_of_month() == 1;
    CHECK(de.event[i] == (is_event ? 3.5 : 0.0));
    CHECK(de.trend[i] == 0.0);
    CHECK(de.seasonal[i] == 0.0);
    CHECK(de.forecast[i] == de.event[i]);
  }

  // additivity is bitwise for arbitrary parameters
  const DeepMstmParams p = init_params(cfg, 57);
  const Decomposition dr = decompose(frame, cfg.n_lags, 40, p, cfg, stats, cal);
  for (std::size_t i = 0; i < dr.size(); ++i) {
    CHECK(dr.forecast[i] == (dr.trend[i] + dr.seasonal[i]) + dr.event[i]);
  }

  CHECK_THROWS_AS(decompose(frame, 1, 40, p, cfg, stats, cal), DataError);
  CHECK_THROWS_AS(decompose(frame, cfg.n_lags, 41, p, cfg, stats, cal), DataError);
}

TEST_CASE("parameter files round-trip bit-exactly") {
  const ModelConfig cfg = tiny_config();
  const DeepMstmParams p = init_params(cfg, 77);
  NormStats stats;
  stats.mean = {1.25, -3.5};
  stats.stddev = {2.0, 0.125};
  const auto dir = std::filesystem::temp_directory_path() / "mstm_model_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "params.json").string();

  save_params(path, p, cfg, stats, {"a", "b"});
  const LoadedModel loaded = load_params(path);
  CHECK(loaded.series_ids == std::vector<std::string>{"a", "b"});
  CHECK(loaded.stats.mean == stats.mean);
  CHECK(loaded.stats.stddev == stats.stddev);
  CHECK(loaded.config.n_lags == cfg.n_lags);
  CHECK(loaded.config.fourier.cycles.size() == 1);

  const auto original = p.arrays();
  const auto restored = loaded.params.arrays();
  REQUIRE(original.size() == restored.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i].first == restored[i].first);
    REQUIRE(original[i].second.size() == restored[i].second.size());
    for (std::size_t j = 0; j < original[i].second.size(); ++j) {
      CHECK(original[i].second[j] == restored[i].second[j]);
    }
  }

  CHECK_THROWS_AS(load_params((dir / "missing.json").string()), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config validation") {
  ModelConfig cfg = tiny_config();
  cfg.use_conv1d = false;
  cfg.use_conv2d = false;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.target = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.n_lags = 1;  // 2-d conv needs at least two steps
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.use_conv2d = false;
  cfg.n_lags = 1;
  CHECK_NOTHROW(cfg.validate());
}
