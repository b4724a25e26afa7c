#include "mstm/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mstm/rng.hpp"

namespace mstm {

using nlohmann::json;

std::size_t ModelConfig::lstm_input() const {
  if (bypass_conv) return trend_series();
  return (use_conv1d ? conv1d_filters : 0) + (use_conv2d ? conv2d_filters : 0);
}

void ModelConfig::validate() const {
  if (n_series < 1) throw ConfigError("model: n_series must be at least 1");
  if (target >= n_series) throw ConfigError("model: target index out of range");
  if (n_lags < 1) throw ConfigError("model: n_lags must be at least 1");
  if (lstm_hidden < 1) throw ConfigError("model: lstm_hidden must be at least 1");
  if (!bypass_conv) {
    if (!use_conv1d && !use_conv2d) {
      throw ConfigError("model: at least one of conv1d/conv2d must be enabled");
    }
    if (use_conv1d && conv1d_filters < 1) throw ConfigError("model: conv1d_filters must be >= 1");
    if (use_conv2d && conv2d_filters < 1) throw ConfigError("model: conv2d_filters must be >= 1");
    if (use_conv2d && n_lags < 2) {
      throw ConfigError("model: the temporal convolution needs n_lags >= 2");
    }
  }
  if (has_seasonal()) {
    fourier.validate();
    if (seasonal_hidden < 1) throw ConfigError("model: seasonal_hidden must be at least 1");
  }
}

std::vector<std::pair<std::string, Tensor>> DeepMstmParams::arrays() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto push = [&out](const char* name, const Tensor& t) {
    if (t.defined()) out.emplace_back(name, t);
  };
  push("conv1d.weight", conv1d_w);
  push("conv1d.bias", conv1d_b);
  push("conv2d.weight", conv2d_w);
  push("conv2d.bias", conv2d_b);
  push("lstm.wx", lstm.wx);
  push("lstm.wh", lstm.wh);
  push("lstm.bias", lstm.bias);
  push("dense.weight", dense_w);
  push("dense.bias", dense_b);
  push("seasonal.w1", seasonal.w1);
  push("seasonal.b1", seasonal.b1);
  push("seasonal.w2", seasonal.w2);
  push("seasonal.b2", seasonal.b2);
  push("event.weights", event.a);
  return out;
}

namespace {

std::uint64_t fnv1a64(const char* s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (; *s; ++s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform Glorot fill; fan_out = rows, fan_in = cols of the flattened 2-d
// view. Each array draws from its own (seed, name)-derived stream, so arrays
// shared between model variants initialize identically under the same seed.
void fill_xavier(Tensor& t, std::size_t fan_out, std::size_t fan_in, const char* name,
                 std::uint64_t seed) {
  Rng rng(seed ^ fnv1a64(name));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-limit, limit);
}

}  // namespace

DeepMstmParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DeepMstmParams p;
  const std::size_t me = cfg.trend_series();
  const std::size_t f = cfg.lstm_input();
  const std::size_t h = cfg.lstm_hidden;

  if (!cfg.bypass_conv && cfg.use_conv1d) {
    p.conv1d_w = Tensor::zeros({cfg.conv1d_filters, me}, true);
    fill_xavier(p.conv1d_w, cfg.conv1d_filters, me, "conv1d.weight", seed);
    p.conv1d_b = Tensor::zeros({cfg.conv1d_filters}, true);
  }
  if (!cfg.bypass_conv && cfg.use_conv2d) {
    p.conv2d_w = Tensor::zeros({cfg.conv2d_filters, me, 2}, true);
    fill_xavier(p.conv2d_w, cfg.conv2d_filters, 2 * me, "conv2d.weight", seed);
    p.conv2d_b = Tensor::zeros({cfg.conv2d_filters}, true);
  }

  p.lstm = LstmParams::zeros(h, f, true);
  fill_xavier(p.lstm.wx, 4 * h, f, "lstm.wx", seed);
  fill_xavier(p.lstm.wh, 4 * h, h, "lstm.wh", seed);
  // Forget-gate bias 1 stabilizes early training on short series.
  for (std::size_t u = 0; u < h; ++u) p.lstm.bias.data()[h + u] = 1.0;

  p.dense_w = Tensor::zeros({1, h}, true);
  fill_xavier(p.dense_w, 1, h, "dense.weight", seed);
  p.dense_b = Tensor::zeros({1}, true);

  if (cfg.has_seasonal()) {
    const std::size_t fdim = cfg.fourier.feature_dim();
    p.seasonal.w1 = Tensor::zeros({cfg.seasonal_hidden, fdim}, true);
    fill_xavier(p.seasonal.w1, cfg.seasonal_hidden, fdim, "seasonal.w1", seed);
    p.seasonal.b1 = Tensor::zeros({cfg.seasonal_hidden}, true);
    p.seasonal.w2 = Tensor::zeros({1, cfg.seasonal_hidden}, true);
    fill_xavier(p.seasonal.w2, 1, cfg.seasonal_hidden, "seasonal.w2", seed);
    p.seasonal.b2 = Tensor::zeros({1}, true);
  }
  if (cfg.has_event()) {
    p.event.a = Tensor::zeros({1, cfg.event_types}, true);
    fill_xavier(p.event.a, 1, cfg.event_types, "event.weights", seed);
  }
  return p;
}

ComponentOutput forward(Tape& tape, const std::vector<double>& window, long t,
                        const std::vector<double>& b_t, const DeepMstmParams& params,
                        const ModelConfig& cfg) {
  const std::size_t m = cfg.n_series;
  const std::size_t n = cfg.n_lags;
  if (window.size() != m * n) {
    throw ShapeError("forward: window must be MxN = " + std::to_string(m) + "x" +
                     std::to_string(n) + ", got " + std::to_string(window.size()) + " values");
  }
  if (b_t.size() != cfg.event_types) {
    throw ShapeError("forward: event vector length " + std::to_string(b_t.size()) +
                     " does not match L=" + std::to_string(cfg.event_types));
  }

  Tensor in;
  if (cfg.multivariate) {
    in = Tensor::matrix(m, n, window);
  } else {
    std::vector<double> row(window.begin() + static_cast<long>(cfg.target * n),
                            window.begin() + static_cast<long>((cfg.target + 1) * n));
    in = Tensor::matrix(1, n, std::move(row));
  }

  Tensor feats;
  if (cfg.bypass_conv) {
    feats = in;
  } else {
    Tensor c1 = cfg.use_conv1d ? tape.conv_feature_1d(in, params.conv1d_w, params.conv1d_b)
                               : Tensor::matrix(0, n, {});
    if (cfg.use_conv2d) {
      Tensor c2 = tape.conv_temporal_2d(in, params.conv2d_w, params.conv2d_b);
      feats = tape.concat_time_pad(c1, c2);
    } else {
      feats = c1;
    }
  }

  Tensor hidden = lstm_forward(tape, feats, params.lstm);
  Tensor h_last = tape.col(hidden, hidden.cols() - 1);
  Tensor d = tape.affine(params.dense_w, h_last, params.dense_b);

  Tensor s = cfg.has_seasonal()
                 ? seasonal_forward(tape,
                                    Tensor::matrix(cfg.fourier.feature_dim(), 1,
                                                   fourier_features(t, cfg.fourier)),
                                    params.seasonal)
                 : Tensor::matrix(1, 1, {0.0});
  Tensor e = cfg.has_event() ? event_forward(tape, Tensor::matrix(cfg.event_types, 1, b_t),
                                             params.event)
                             : Tensor::matrix(1, 1, {0.0});

  ComponentOutput out;
  out.trend = d;
  out.seasonal = s;
  out.event = e;
  out.forecast = tape.add(tape.add(d, s), e);
  return out;
}

Decomposition decompose(const SeriesFrame& frame, std::size_t from, std::size_t to,
                        const DeepMstmParams& params, const ModelConfig& cfg,
                        const NormStats& stats, const EventCalendar& calendar) {
  if (from < cfg.n_lags) {
    throw DataError("decompose: range start leaves fewer than N=" + std::to_string(cfg.n_lags) +
                    " lagged steps of history");
  }
  if (to > frame.length()) throw DataError("decompose: range end is outside the frame");
  if (frame.n_series() != cfg.n_series) {
    throw DataError("decompose: frame series count does not match the model");
  }
  const SeriesFrame norm = normalize(frame, stats);
  const std::size_t m = cfg.n_series;
  const std::size_t n = cfg.n_lags;

  Decomposition out;
  std::vector<double> window(m * n);
  for (std::size_t t = from; t < to; ++t) {
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t j = 0; j < n; ++j) window[s * n + j] = norm.values[s][t - n + j];
    }
    const Date date = frame.date(t);
    Tape tape;
    ComponentOutput step =
        forward(tape, window, static_cast<long>(t), calendar.vector_for(date), params, cfg);
    out.dates.push_back(date);
    out.trend.push_back(step.trend.item());
    out.seasonal.push_back(step.seasonal.item());
    out.event.push_back(step.event.item());
    out.forecast.push_back(step.forecast.item());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter serialization

namespace {

constexpr int kParamsVersion = 1;

json config_to_json(const ModelConfig& cfg) {
  json fourier = json::array();
  for (const auto& c : cfg.fourier.cycles) {
    fourier.push_back({{"period", c.period}, {"terms", c.terms}});
  }
  return json{{"n_series", cfg.n_series},
              {"target", cfg.target},
              {"n_lags", cfg.n_lags},
              {"conv1d_filters", cfg.conv1d_filters},
              {"conv2d_filters", cfg.conv2d_filters},
              {"lstm_hidden", cfg.lstm_hidden},
              {"seasonal_hidden", cfg.seasonal_hidden},
              {"fourier", fourier},
              {"event_types", cfg.event_types},
              {"use_conv1d", cfg.use_conv1d},
              {"use_conv2d", cfg.use_conv2d},
              {"multivariate", cfg.multivariate},
              {"bypass_conv", cfg.bypass_conv}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.n_series = j.at("n_series").get<std::size_t>();
  cfg.target = j.at("target").get<std::size_t>();
  cfg.n_lags = j.at("n_lags").get<std::size_t>();
  cfg.conv1d_filters = j.at("conv1d_filters").get<std::size_t>();
  cfg.conv2d_filters = j.at("conv2d_filters").get<std::size_t>();
  cfg.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  cfg.seasonal_hidden = j.at("seasonal_hidden").get<std::size_t>();
  for (const auto& c : j.at("fourier")) {
    cfg.fourier.cycles.push_back(
        {c.at("period").get<long>(), c.at("terms").get<std::size_t>()});
  }
  cfg.event_types = j.at("event_types").get<std::size_t>();
  cfg.use_conv1d = j.at("use_conv1d").get<bool>();
  cfg.use_conv2d = j.at("use_conv2d").get<bool>();
  cfg.multivariate = j.at("multivariate").get<bool>();
  cfg.bypass_conv = j.at("bypass_conv").get<bool>();
  return cfg;
}

}  // namespace

void save_params(const std::string& path, const DeepMstmParams& params, const ModelConfig& cfg,
                 const NormStats& stats, const std::vector<std::string>& series_ids) {
  json arrays = json::array();
  for (const auto& [name, tensor] : params.arrays()) {
    json shape = json::array();
    for (auto d : tensor.shape()) shape.push_back(d);
    json data = json::array();
    for (std::size_t i = 0; i < tensor.size(); ++i) data.push_back(tensor[i]);
    arrays.push_back({{"name", name}, {"shape", shape}, {"data", data}});
  }
  const json doc{{"format", "mstm-params"},
                 {"version", kParamsVersion},
                 {"model", config_to_json(cfg)},
                 {"series_ids", series_ids},
                 {"norm", {{"mean", stats.mean}, {"stddev", stats.stddev}}},
                 {"arrays", arrays}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << doc.dump(2) << '\n';
}

LoadedModel load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open parameter file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("parameter file " + path + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "mstm-params") {
      throw ConfigError("parameter file " + path + ": unrecognized format");
    }
    if (doc.at("version").get<int>() != kParamsVersion) {
      throw ConfigError("parameter file " + path + ": unsupported version " +
                        std::to_string(doc.at("version").get<int>()));
    }
    LoadedModel loaded;
    loaded.config = config_from_json(doc.at("model"));
    loaded.config.validate();
    loaded.series_ids = doc.at("series_ids").get<std::vector<std::string>>();
    loaded.stats.mean = doc.at("norm").at("mean").get<std::vector<double>>();
    loaded.stats.stddev = doc.at("norm").at("stddev").get<std::vector<double>>();

    DeepMstmParams expected = init_params(loaded.config, 0);
    auto slots = expected.arrays();
    const json& arrays = doc.at("arrays");
    if (arrays.size() != slots.size()) {
      throw ConfigError("parameter file " + path + ": expected " + std::to_string(slots.size()) +
                        " arrays, found " + std::to_string(arrays.size()));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const json& rec = arrays[i];
      if (rec.at("name").get<std::string>() != slots[i].first) {
        throw ConfigError("parameter file " + path + ": array " + std::to_string(i) +
                          " should be '" + slots[i].first + "'");
      }
      const auto shape = rec.at("shape").get<std::vector<std::size_t>>();
      if (shape != slots[i].second.shape()) {
        throw ConfigError("parameter file " + path + ": array '" + slots[i].first +
                          "' has a shape incompatible with the model config");
      }
      const auto data = rec.at("data").get<std::vector<double>>();
      if (data.size() != slots[i].second.size()) {
        throw ConfigError("parameter file " + path + ": array '" + slots[i].first +
                          "' data length mismatch");
      }
      std::copy(data.begin(), data.end(), slots[i].second.data());
    }
    loaded.params = expected;
    return loaded;
  } catch (const json::exception& e) {
    throw ConfigError("parameter file " + path + ": " + e.what());
  }
}

}  // namespace mstm
