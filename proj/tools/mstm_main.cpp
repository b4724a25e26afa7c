#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mstm/commands.hpp"

namespace {

// 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
int run(int argc, char** argv) {
  CLI::App app{"mstm: multivariate structural time-series forecasting"};
  app.require_subcommand(1);

  std::string config_path;
  std::string params_path;
  std::string mode = "onestep";
  long horizon = 0;
  std::string range_from, range_to;
  std::optional<std::uint64_t> seed_override;
  double tol = 1e-4;
  double step = 1e-5;

  auto add_config = [&config_path](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config")->required();
  };

  CLI::App* fit = app.add_subcommand("fit", "train the model and write a parameter file");
  add_config(fit);

  CLI::App* forecast = app.add_subcommand("forecast", "write a forecast CSV");
  add_config(forecast);
  forecast->add_option("--params", params_path, "parameter file from fit")->required();
  forecast->add_option("--mode", mode, "onestep (default) or recursive");
  forecast->add_option("--horizon", horizon, "days past the data end (recursive mode)");

  CLI::App* decompose =
      app.add_subcommand("decompose", "write per-day trend/seasonal/event components");
  add_config(decompose);
  decompose->add_option("--params", params_path, "parameter file from fit")->required();
  decompose->add_option("--from", range_from, "range start (YYYY-MM-DD)");
  decompose->add_option("--to", range_to, "range end, inclusive (YYYY-MM-DD)");

  CLI::App* ablate = app.add_subcommand("ablate", "run the model 1/2/3 comparison");
  add_config(ablate);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  add_config(synth);
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = synth->add_option("--seed", seed_value, "override train.seed");

  CLI::App* verify = app.add_subcommand("verify-grad", "check gradients vs central differences");
  add_config(verify);
  verify->add_option("--tol", tol, "max relative error tolerance (default 1e-4)");
  verify->add_option("--h", step, "central-difference step (default 1e-5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const mstm::RunConfig cfg = mstm::RunConfig::load(config_path);
    if (fit->parsed()) return mstm::cmd_fit(cfg);
    if (forecast->parsed()) return mstm::cmd_forecast(cfg, params_path, mode, horizon);
    if (decompose->parsed()) {
      std::optional<mstm::Date> from, to;
      if (!range_from.empty()) from = mstm::Date::parse(range_from);
      if (!range_to.empty()) to = mstm::Date::parse(range_to);
      return mstm::cmd_decompose(cfg, params_path, from, to);
    }
    if (ablate->parsed()) return mstm::cmd_ablate(cfg);
    if (synth->parsed()) {
      if (seed_opt->count() > 0) seed_override = seed_value;
      return mstm::cmd_synth(cfg, seed_override);
    }
    if (verify->parsed()) return mstm::cmd_verify_grad(cfg, tol, step);
  } catch (const mstm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const mstm::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const mstm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const mstm::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
