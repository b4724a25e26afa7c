#include "mstm/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mstm/eval.hpp"
#include "mstm/kernels.hpp"

namespace mstm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedData {
  SeriesFrame frame;
  EventCalendar calendar;
  std::size_t target = 0;
};

LoadedData load_data(const RunConfig& cfg) {
  if (cfg.series_csv.empty()) throw ConfigError("config: 'data.series_csv' is required");
  if (!fs::exists(cfg.series_csv)) throw DataError("series file does not exist: " + cfg.series_csv);
  LoadedData data;
  data.frame = ingest_csv(cfg.series_csv);
  if (!cfg.events_csv.empty()) {
    if (!fs::exists(cfg.events_csv)) {
      throw DataError("events file does not exist: " + cfg.events_csv);
    }
    data.calendar = EventCalendar::load_csv(cfg.events_csv);
  }
  if (cfg.target_id.empty()) throw ConfigError("config: 'data.target' is required");
  data.target = data.frame.series_index(cfg.target_id);
  return data;
}

// Fills in the data-dependent shape fields and cross-checks any explicit ones.
ModelConfig resolve_model(const RunConfig& cfg, const LoadedData& data) {
  ModelConfig model = cfg.model;
  model.n_series = data.frame.n_series();
  model.target = data.target;
  model.event_types = data.calendar.types();
  if (cfg.explicit_n_series && *cfg.explicit_n_series != model.n_series) {
    throw ConfigError("config field 'model.n_series' (" + std::to_string(*cfg.explicit_n_series) +
                      ") does not match the data (" + std::to_string(model.n_series) + " series)");
  }
  if (cfg.explicit_event_types && *cfg.explicit_event_types != model.event_types) {
    throw ConfigError("config field 'model.event_types' does not match the events file");
  }
  model.validate();
  return model;
}

std::size_t split_index(const RunConfig& cfg, const SeriesFrame& frame) {
  if (!cfg.split_date) throw ConfigError("config: 'data.split_date' is required");
  const auto idx = frame.index_of(*cfg.split_date);
  if (!idx || *idx == 0) {
    throw ConfigError("config field 'data.split_date' (" + cfg.split_date->to_string() +
                      ") is outside the data range " + frame.start.to_string() + ".." +
                      frame.date(frame.length() - 1).to_string());
  }
  return *idx;
}

// [from, to) indices of the evaluation range; defaults to [split, end].
std::pair<std::size_t, std::size_t> test_range(const RunConfig& cfg, const SeriesFrame& frame,
                                               std::size_t split) {
  std::size_t from = split;
  std::size_t to = frame.length();
  if (cfg.test_start) {
    const auto idx = frame.index_of(*cfg.test_start);
    if (!idx) throw ConfigError("config field 'eval.test_start' is outside the data range");
    from = *idx;
  }
  if (cfg.test_end) {
    const auto idx = frame.index_of(*cfg.test_end);
    if (!idx) throw ConfigError("config field 'eval.test_end' is outside the data range");
    to = *idx + 1;
  }
  if (from >= to) throw ConfigError("config: empty evaluation range");
  return {from, to};
}

fs::path prepare_output_dir(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir.string());
  std::ofstream echo(dir / "config_echo.json", std::ios::binary);
  if (!echo) throw DataError("cannot write config echo in " + dir.string());
  echo << cfg.raw_text;
  return dir;
}

void write_meta(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                double wall_seconds, const json& extra = json::object()) {
  json meta{{"command", command},
            {"config_path", cfg.source_path},
            {"kernel_backend", kernels::name(kernels::active())},
            {"wall_seconds", wall_seconds}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  std::ofstream out(dir / "run_meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
}

WindowBatch training_windows(const SeriesFrame& norm, const ModelConfig& model,
                             const EventCalendar& calendar, std::size_t split) {
  const WindowBatch all = build_windows(norm, model.n_lags, model.target, calendar);
  WindowBatch train;
  train.target_series = all.target_series;
  train.n_lags = all.n_lags;
  train.n_series = all.n_series;
  for (const auto& w : all.windows) {
    if (w.t_index < static_cast<long>(split)) train.windows.push_back(w);
  }
  if (train.windows.empty()) {
    throw DataError("training split has no complete windows; need more than N=" +
                    std::to_string(model.n_lags) + " days before the split date");
  }
  return train;
}

}  // namespace

int cmd_fit(const RunConfig& cfg) {
  const LoadedData data = load_data(cfg);
  const ModelConfig model = resolve_model(cfg, data);
  const std::size_t split = split_index(cfg, data.frame);

  const NormStats stats = compute_stats(data.frame, split);
  const SeriesFrame norm = normalize(data.frame, stats);
  const WindowBatch train = training_windows(norm, model, data.calendar, split);

  const TrainReport report = fit(train, model, cfg.train);

  const fs::path dir = prepare_output_dir(cfg);
  save_params((dir / "params.json").string(), report.params, model, stats,
              data.frame.series_ids);
  write_train_report_csv((dir / "train_report.csv").string(), report);
  write_meta(dir, "fit", cfg, report.wall_seconds,
             json{{"seed", report.seed},
                  {"epochs_run", report.epoch_mae.size()},
                  {"final_mae", report.epoch_mae.back()},
                  {"train_windows", train.size()}});
  std::cout << "fit: " << report.epoch_mae.size() << " epochs, training MAE "
            << fmt17(report.epoch_mae.front()) << " -> " << fmt17(report.epoch_mae.back())
            << ", params written to " << (dir / "params.json").string() << "\n";
  return 0;
}

namespace {

void check_params_match(const LoadedModel& loaded, const SeriesFrame& frame) {
  if (loaded.series_ids != frame.series_ids) {
    throw ConfigError("parameter file was fitted on different series than the data file");
  }
}

}  // namespace

int cmd_forecast(const RunConfig& cfg, const std::string& params_path, const std::string& mode,
                 long horizon) {
  if (mode != "onestep" && mode != "recursive") {
    throw ConfigError("forecast mode must be 'onestep' or 'recursive', got '" + mode + "'");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel loaded = load_params(params_path);
  const LoadedData data = load_data(cfg);
  check_params_match(loaded, data.frame);
  const fs::path dir = prepare_output_dir(cfg);
  const fs::path out_path = dir / "forecast.csv";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + out_path.string());

  std::size_t rows = 0;
  if (mode == "onestep") {
    const std::size_t split = split_index(cfg, data.frame);
    const auto [from, to] = test_range(cfg, data.frame, split);
    const DeepMstmForecaster forecaster(loaded.config, loaded.params, loaded.stats);
    const EvalResult res = rolling_one_step(forecaster, data.frame, from, to, data.calendar,
                                            loaded.config.n_lags, loaded.config.target);
    out << "date,forecast,truth\n";
    for (std::size_t i = 0; i < res.dates.size(); ++i) {
      out << res.dates[i].to_string() << ',' << fmt17(res.forecasts[i]) << ','
          << fmt17(res.truth[i]) << '\n';
    }
    rows = res.dates.size();
  } else {
    if (horizon < 0) throw ConfigError("forecast horizon must be non-negative");
    const ModelConfig& model = loaded.config;
    const std::size_t m = model.n_series;
    const std::size_t n = model.n_lags;
    if (data.frame.length() < n) {
      throw DataError("recursive forecast needs at least N=" + std::to_string(n) + " days");
    }
    // Normalized history per series; the target row grows with each own
    // forecast while the other series hold their last observed value.
    SeriesFrame norm = normalize(data.frame, loaded.stats);
    out << "date,forecast\n";
    std::vector<double> window(m * n);
    for (long step = 0; step < horizon; ++step) {
      const std::size_t t = norm.length();
      for (std::size_t s = 0; s < m; ++s) {
        for (std::size_t j = 0; j < n; ++j) window[s * n + j] = norm.values[s][t - n + j];
      }
      const Date date = norm.date(t);
      Tape tape;
      const ComponentOutput step_out = forward(tape, window, static_cast<long>(t),
                                               data.calendar.vector_for(date), loaded.params,
                                               model);
      const double pred_norm = step_out.forecast.item();
      out << date.to_string() << ','
          << fmt17(denormalize(pred_norm, loaded.stats, model.target)) << '\n';
      for (std::size_t s = 0; s < m; ++s) {
        norm.values[s].push_back(s == model.target ? pred_norm : norm.values[s].back());
      }
      ++rows;
    }
  }
  out.close();
  write_meta(dir, "forecast", cfg,
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
             json{{"mode", mode}, {"rows", rows}, {"params", params_path}});
  std::cout << "forecast: " << rows << " rows written to " << out_path.string() << "\n";
  return 0;
}

int cmd_decompose(const RunConfig& cfg, const std::string& params_path, std::optional<Date> from,
                  std::optional<Date> to) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel loaded = load_params(params_path);
  const LoadedData data = load_data(cfg);
  check_params_match(loaded, data.frame);

  std::size_t from_idx = loaded.config.n_lags;
  std::size_t to_idx = data.frame.length();
  if (cfg.split_date) from_idx = std::max(from_idx, split_index(cfg, data.frame));
  if (from) {
    const auto idx = data.frame.index_of(*from);
    if (!idx) throw ConfigError("decompose range start is outside the data range");
    from_idx = *idx;
  }
  if (to) {
    const auto idx = data.frame.index_of(*to);
    if (!idx) throw ConfigError("decompose range end is outside the data range");
    to_idx = *idx + 1;
  }

  const Decomposition dec = decompose(data.frame, from_idx, to_idx, loaded.params, loaded.config,
                                      loaded.stats, data.calendar);
  const SeriesFrame norm = normalize(data.frame, loaded.stats);

  const fs::path dir = prepare_output_dir(cfg);
  const fs::path out_path = dir / "decomposition.csv";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + out_path.string());
  // Normalized model space: forecast == d + s + e holds row by row; stats for
  // mapping back to data units live in the parameter file.
  out << "date,truth,d,s,e,forecast\n";
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const std::size_t t = from_idx + i;
    out << dec.dates[i].to_string() << ',' << fmt17(norm.values[loaded.config.target][t]) << ','
        << fmt17(dec.trend[i]) << ',' << fmt17(dec.seasonal[i]) << ',' << fmt17(dec.event[i])
        << ',' << fmt17(dec.forecast[i]) << '\n';
  }
  out.close();
  write_meta(dir, "decompose", cfg,
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
             json{{"rows", dec.size()}, {"params", params_path}});
  std::cout << "decompose: " << dec.size() << " rows written to " << out_path.string() << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData data = load_data(cfg);
  const ModelConfig model = resolve_model(cfg, data);
  const std::size_t split = split_index(cfg, data.frame);
  const auto [from, to] = test_range(cfg, data.frame, split);
  if (from != split) {
    throw ConfigError("ablate: the evaluation range must start at the split date");
  }

  AblationOptions opts;
  opts.train = cfg.train;
  opts.test_from = from;
  opts.test_to = to;
  opts.seeds = cfg.eval_seeds.empty() ? std::vector<std::uint64_t>{cfg.train.seed}
                                      : cfg.eval_seeds;
  opts.data_label = cfg.data_label.empty() ? cfg.target_id : cfg.data_label;

  const std::vector<EvalResult> results = run_ablation(data.frame, data.calendar, model, opts);

  const fs::path dir = prepare_output_dir(cfg);
  write_results_csv((dir / "ablation.csv").string(), results);

  json summary = json::object();
  for (const auto& arm : ablation_arms(model)) {
    std::vector<double> rmses, rrmses;
    json per_seed = json::array();
    for (const auto& r : results) {
      if (r.model_label != arm.label) continue;
      rmses.push_back(r.rmse_v);
      rrmses.push_back(r.rrmse_v);
      per_seed.push_back({{"seed", r.seed}, {"rmse", r.rmse_v}, {"rrmse", r.rrmse_v}});
    }
    summary[arm.label] = {{"median_rmse", median(rmses)},
                          {"median_rrmse", median(rrmses)},
                          {"runs", per_seed}};
  }
  std::ofstream sum(dir / "ablation_summary.json", std::ios::binary);
  sum << summary.dump(2) << '\n';

  write_meta(dir, "ablate", cfg,
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
             json{{"rows", results.size()}, {"seeds", opts.seeds}});
  std::cout << "ablate: " << results.size() << " runs written to "
            << (dir / "ablation.csv").string() << "\n";
  for (const auto& arm : ablation_arms(model)) {
    std::cout << "  " << arm.label << " median rmse " << summary[arm.label]["median_rmse"]
              << "\n";
  }
  return 0;
}

int cmd_synth(const RunConfig& cfg, std::optional<std::uint64_t> seed_override) {
  if (!cfg.synth) throw ConfigError("config: 'synth' section is required for the synth command");
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = seed_override.value_or(cfg.train.seed);
  const SynthResult result = synth_generate(*cfg.synth, seed);

  const fs::path dir = prepare_output_dir(cfg);
  write_series_csv((dir / "series.csv").string(), result.frame);
  write_truth_csv((dir / "truth.csv").string(), result);
  if (!result.calendar.event_types.empty()) {
    write_events_csv((dir / "events.csv").string(), result.calendar);
  }
  write_meta(dir, "synth", cfg,
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
             json{{"seed", seed},
                  {"days", result.frame.length()},
                  {"series", result.frame.n_series()}});
  std::cout << "synth: " << result.frame.length() << " days x " << result.frame.n_series()
            << " series written to " << dir.string() << "\n";
  return 0;
}

int cmd_verify_grad(const RunConfig& cfg, double tol, double h) {
  ModelConfig model = cfg.model;
  if (!cfg.series_csv.empty()) {
    const LoadedData data = load_data(cfg);
    model = resolve_model(cfg, data);
  } else {
    if (!cfg.explicit_n_series) {
      throw ConfigError("verify-grad: 'model.n_series' is required when no data files are given");
    }
    model.n_series = *cfg.explicit_n_series;
    model.event_types = cfg.explicit_event_types.value_or(0);
    model.target = 0;
    model.validate();
  }

  const GradVerifyReport report = verify_gradients(model, cfg.train.seed, tol, h);
  std::cout << "verify-grad: " << report.parameter_count << " parameters, max relative error "
            << fmt17(report.max_rel_err) << " at " << report.worst_param << "["
            << report.worst_index << "], tolerance " << fmt17(tol) << " -> "
            << (report.pass ? "PASS" : "FAIL") << "\n";
  if (!report.pass) {
    throw NumericError("gradient verification failed: max relative error " +
                       fmt17(report.max_rel_err) + " exceeds " + fmt17(tol));
  }
  return 0;
}

}  // namespace mstm
