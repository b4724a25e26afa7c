#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mstm/model.hpp"
#include "mstm/synth.hpp"
#include "mstm/train.hpp"

namespace mstm {

// One JSON config file drives every command; the raw bytes are echoed into
// the output directory for provenance.
struct RunConfig {
  // data section
  std::string series_csv;
  std::string events_csv;  // empty -> no event calendar
  std::string target_id;
  std::optional<Date> split_date;  // first test day; training covers [start, split)

  // model section; n_series / target / event_types are resolved against the
  // data unless given explicitly (verify-grad runs without data files).
  ModelConfig model;
  std::optional<std::size_t> explicit_n_series;
  std::optional<std::size_t> explicit_event_types;

  TrainOptions train;

  // eval section
  std::optional<Date> test_start;
  std::optional<Date> test_end;  // inclusive
  std::vector<std::uint64_t> eval_seeds;
  std::string data_label;

  std::optional<SynthSpec> synth;

  std::string output_dir = "out";
  std::string source_path;
  std::string raw_text;

  static RunConfig load(const std::string& path);  // throws ConfigError
};

}  // namespace mstm
