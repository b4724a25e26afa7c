#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mstm/data.hpp"

namespace mstm {

struct TrendKnot {
  long day = 0;  // day offset from the frame start
  double value = 0.0;
};

struct SeasonalTerm {
  long period = 7;
  double amplitude = 0.0;
  double phase = 0.0;
};

// An event type either fires on a fixed day of every month or on an explicit
// date list.
struct EventRule {
  std::string type;
  std::optional<unsigned> day_of_month;
  std::vector<Date> dates;
};

struct SynthSeriesSpec {
  std::string id;
  std::vector<TrendKnot> trend;                     // own piecewise-linear trend
  std::vector<SeasonalTerm> seasonal;
  std::map<std::string, double> event_amplitude;    // per event type
  double noise_sigma = 0.0;
};

// value(m, t) = d + s + e + noise with
//   d = rho·shared(t) + (1−rho)·own_m(t), both piecewise linear in t,
//   s = Σ amplitude·sin(2π(t mod P)/P + phase)  (exactly P-periodic),
//   e = Σ amplitude_m[type]·1[event type fires at t].
struct SynthSpec {
  Date start;
  long days = 0;
  double coupling_rho = 0.0;
  std::vector<TrendKnot> shared_trend;
  std::vector<EventRule> events;
  std::vector<SynthSeriesSpec> series;

  void validate() const;  // throws ConfigError
};

struct SynthTruth {
  // per-series component paths; value == ((d + s) + e) + noise exactly
  std::vector<std::vector<double>> trend, seasonal, event, noise;
};

struct SynthResult {
  SeriesFrame frame;
  SynthTruth truth;
  EventCalendar calendar;
};

SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed);

// Columns: date,series,value,trend,seasonal,event,noise — one row per
// (series, day).
void write_truth_csv(const std::string& path, const SynthResult& result);

// Piecewise-linear interpolation through the knots, extrapolating the
// boundary segments. A single knot is a constant.
double piecewise_linear(const std::vector<TrendKnot>& knots, long day);

}  // namespace mstm
