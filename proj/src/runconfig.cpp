#include "mstm/runconfig.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mstm {

using nlohmann::json;

namespace {

std::string joined(const std::string& scope, const char* key) {
  return scope.empty() ? key : scope + "." + key;
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <typename T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + field + "' has the wrong type");
  }
}

template <typename T>
T require_field(const json& j, const char* key, const std::string& scope) {
  const json* v = find(j, key);
  if (!v) throw ConfigError("config field '" + joined(scope, key) + "' is missing");
  return get_as<T>(*v, joined(scope, key));
}

template <typename T>
T optional_field(const json& j, const char* key, const std::string& scope, T def) {
  const json* v = find(j, key);
  if (!v) return def;
  return get_as<T>(*v, joined(scope, key));
}

Date parse_date_field(const json& j, const char* key, const std::string& scope) {
  const std::string s = require_field<std::string>(j, key, scope);
  try {
    return Date::parse(s);
  } catch (const DataError& e) {
    throw ConfigError("config field '" + joined(scope, key) + "': " + e.what());
  }
}

std::vector<TrendKnot> parse_knots(const json& arr, const std::string& field) {
  if (!arr.is_array()) throw ConfigError("config field '" + field + "' must be an array");
  std::vector<TrendKnot> knots;
  for (const auto& k : arr) {
    TrendKnot knot;
    knot.day = require_field<long>(k, "day", field);
    knot.value = require_field<double>(k, "value", field);
    knots.push_back(knot);
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i].day <= knots[i - 1].day) {
      throw ConfigError("config field '" + field + "': knot days must be strictly increasing");
    }
  }
  return knots;
}

SynthSpec parse_synth(const json& j) {
  SynthSpec spec;
  const std::string scope = "synth";
  const std::string start = require_field<std::string>(j, "start_date", scope);
  try {
    spec.start = Date::parse(start);
  } catch (const DataError& e) {
    throw ConfigError(std::string("config field 'synth.start_date': ") + e.what());
  }
  spec.days = require_field<long>(j, "days", scope);
  spec.coupling_rho = optional_field<double>(j, "coupling_rho", scope, 0.0);
  if (const json* shared = find(j, "shared_trend")) {
    spec.shared_trend = parse_knots(*shared, "synth.shared_trend");
  }
  if (const json* events = find(j, "events")) {
    if (!events->is_array()) throw ConfigError("config field 'synth.events' must be an array");
    for (const auto& ev : *events) {
      EventRule rule;
      rule.type = require_field<std::string>(ev, "type", "synth.events");
      if (const json* dom = find(ev, "day_of_month")) {
        rule.day_of_month = get_as<unsigned>(*dom, "synth.events.day_of_month");
      }
      if (const json* dates = find(ev, "dates")) {
        for (const auto& d : *dates) {
          try {
            rule.dates.push_back(Date::parse(get_as<std::string>(d, "synth.events.dates")));
          } catch (const DataError& e) {
            throw ConfigError(std::string("config field 'synth.events.dates': ") + e.what());
          }
        }
      }
      spec.events.push_back(std::move(rule));
    }
  }
  const json* series = find(j, "series");
  if (!series || !series->is_array() || series->empty()) {
    throw ConfigError("config field 'synth.series' must be a non-empty array");
  }
  for (const auto& s : *series) {
    SynthSeriesSpec ss;
    const std::string sscope = "synth.series";
    ss.id = require_field<std::string>(s, "id", sscope);
    if (const json* trend = find(s, "trend")) ss.trend = parse_knots(*trend, "synth.series.trend");
    if (const json* seasonal = find(s, "seasonal")) {
      for (const auto& term : *seasonal) {
        SeasonalTerm st;
        st.period = require_field<long>(term, "period", "synth.series.seasonal");
        st.amplitude = require_field<double>(term, "amplitude", "synth.series.seasonal");
        st.phase = optional_field<double>(term, "phase", "synth.series.seasonal", 0.0);
        ss.seasonal.push_back(st);
      }
    }
    if (const json* events = find(s, "events")) {
      if (!events->is_object()) {
        throw ConfigError("config field 'synth.series.events' must map event type to amplitude");
      }
      for (const auto& [type, amp] : events->items()) {
        ss.event_amplitude[type] = get_as<double>(amp, "synth.series.events." + type);
      }
    }
    ss.noise_sigma = optional_field<double>(s, "noise_sigma", sscope, 0.0);
    spec.series.push_back(std::move(ss));
  }
  return spec;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  RunConfig cfg;
  cfg.source_path = path;
  cfg.raw_text = buf.str();

  json doc;
  try {
    doc = json::parse(cfg.raw_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file " + path + ": top level must be an object");

  if (const json* data = find(doc, "data")) {
    cfg.series_csv = require_field<std::string>(*data, "series_csv", "data");
    cfg.events_csv = optional_field<std::string>(*data, "events_csv", "data", "");
    cfg.target_id = require_field<std::string>(*data, "target", "data");
    if (find(*data, "split_date")) cfg.split_date = parse_date_field(*data, "split_date", "data");
  }

  if (const json* model = find(doc, "model")) {
    const std::string scope = "model";
    cfg.model.n_lags = optional_field<std::size_t>(*model, "n_lags", scope, cfg.model.n_lags);
    cfg.model.conv1d_filters =
        optional_field<std::size_t>(*model, "conv1d_filters", scope, cfg.model.conv1d_filters);
    cfg.model.conv2d_filters =
        optional_field<std::size_t>(*model, "conv2d_filters", scope, cfg.model.conv2d_filters);
    cfg.model.lstm_hidden =
        optional_field<std::size_t>(*model, "lstm_hidden", scope, cfg.model.lstm_hidden);
    cfg.model.seasonal_hidden =
        optional_field<std::size_t>(*model, "seasonal_hidden", scope, cfg.model.seasonal_hidden);
    cfg.model.use_conv1d = optional_field<bool>(*model, "use_conv1d", scope, true);
    cfg.model.use_conv2d = optional_field<bool>(*model, "use_conv2d", scope, true);
    cfg.model.multivariate = optional_field<bool>(*model, "multivariate", scope, true);
    cfg.model.bypass_conv = optional_field<bool>(*model, "bypass_conv", scope, false);
    if (const json* fourier = find(*model, "fourier")) {
      if (!fourier->is_array()) throw ConfigError("config field 'model.fourier' must be an array");
      for (const auto& c : *fourier) {
        FourierCycle cycle;
        cycle.period = require_field<long>(c, "period", "model.fourier");
        cycle.terms = require_field<std::size_t>(c, "terms", "model.fourier");
        cfg.model.fourier.cycles.push_back(cycle);
      }
    }
    if (find(*model, "n_series")) {
      cfg.explicit_n_series = require_field<std::size_t>(*model, "n_series", scope);
    }
    if (find(*model, "event_types")) {
      cfg.explicit_event_types = require_field<std::size_t>(*model, "event_types", scope);
    }
  }

  if (const json* train = find(doc, "train")) {
    const std::string scope = "train";
    cfg.train.lr = optional_field<double>(*train, "lr", scope, cfg.train.lr);
    cfg.train.epochs = optional_field<std::size_t>(*train, "epochs", scope, cfg.train.epochs);
    cfg.train.seed = optional_field<std::uint64_t>(*train, "seed", scope, cfg.train.seed);
    cfg.train.beta1 = optional_field<double>(*train, "beta1", scope, cfg.train.beta1);
    cfg.train.beta2 = optional_field<double>(*train, "beta2", scope, cfg.train.beta2);
    cfg.train.eps = optional_field<double>(*train, "eps", scope, cfg.train.eps);
    cfg.train.patience = optional_field<std::size_t>(*train, "patience", scope, cfg.train.patience);
    if (cfg.train.lr < 0.0) throw ConfigError("config field 'train.lr' must be non-negative");
    if (cfg.train.epochs < 1) throw ConfigError("config field 'train.epochs' must be at least 1");
  }

  if (const json* eval = find(doc, "eval")) {
    if (find(*eval, "test_start")) cfg.test_start = parse_date_field(*eval, "test_start", "eval");
    if (find(*eval, "test_end")) cfg.test_end = parse_date_field(*eval, "test_end", "eval");
    cfg.eval_seeds =
        optional_field<std::vector<std::uint64_t>>(*eval, "seeds", "eval", cfg.eval_seeds);
    cfg.data_label = optional_field<std::string>(*eval, "data_label", "eval", "");
  }

  if (const json* synth = find(doc, "synth")) cfg.synth = parse_synth(*synth);

  cfg.output_dir = optional_field<std::string>(doc, "output_dir", "", std::string("out"));
  if (cfg.output_dir.empty()) throw ConfigError("config field 'output_dir' must be non-empty");
  return cfg;
}

}  // namespace mstm
