#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mstm/runconfig.hpp"

namespace mstm {

// CLI subcommand bodies. Each writes its outputs (plus a verbatim config
// echo) under the config's output_dir and returns the process exit code;
// errors surface as the exceptions mapped in the CLI main (1 usage/config,
// 2 data, 3 numerical).

int cmd_fit(const RunConfig& cfg);

// mode: "onestep" (over the test range, with truth) or "recursive"
// (`horizon` days past the end of the data, feeding its own forecasts back).
int cmd_forecast(const RunConfig& cfg, const std::string& params_path, const std::string& mode,
                 long horizon);

int cmd_decompose(const RunConfig& cfg, const std::string& params_path,
                  std::optional<Date> from, std::optional<Date> to);

int cmd_ablate(const RunConfig& cfg);

int cmd_synth(const RunConfig& cfg, std::optional<std::uint64_t> seed_override);

int cmd_verify_grad(const RunConfig& cfg, double tol, double h);

}  // namespace mstm
