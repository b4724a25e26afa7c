#include "mstm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "mstm/rng.hpp"

namespace mstm {

void SynthSpec::validate() const {
  if (days < 2) throw ConfigError("synth: need at least 2 days");
  if (series.empty()) throw ConfigError("synth: need at least one series");
  if (coupling_rho < 0.0 || coupling_rho > 1.0) {
    throw ConfigError("synth: coupling_rho must be in [0, 1]");
  }
  std::set<std::string> ids;
  for (const auto& s : series) {
    if (s.id.empty()) throw ConfigError("synth: series id must be non-empty");
    if (!ids.insert(s.id).second) throw ConfigError("synth: duplicate series id '" + s.id + "'");
    if (s.noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be non-negative");
    for (const auto& term : s.seasonal) {
      if (term.period <= 0) throw ConfigError("synth: seasonal period must be positive");
    }
  }
  std::set<std::string> types;
  for (const auto& ev : events) {
    if (ev.type.empty()) throw ConfigError("synth: event type must be non-empty");
    if (!types.insert(ev.type).second) {
      throw ConfigError("synth: duplicate event type '" + ev.type + "'");
    }
    if (!ev.day_of_month.has_value() && ev.dates.empty()) {
      throw ConfigError("synth: event '" + ev.type + "' needs a day_of_month or a date list");
    }
    if (ev.day_of_month.has_value() && (*ev.day_of_month < 1 || *ev.day_of_month > 31)) {
      throw ConfigError("synth: event day_of_month must be in 1..31");
    }
  }
  for (const auto& s : series) {
    for (const auto& [type, amp] : s.event_amplitude) {
      (void)amp;
      if (!types.count(type)) {
        throw ConfigError("synth: series '" + s.id + "' references unknown event '" + type + "'");
      }
    }
  }
}

double piecewise_linear(const std::vector<TrendKnot>& knots, long day) {
  if (knots.empty()) return 0.0;
  if (knots.size() == 1) return knots[0].value;
  std::size_t hi = 1;
  while (hi + 1 < knots.size() && knots[hi].day < day) ++hi;
  const TrendKnot& a = knots[hi - 1];
  const TrendKnot& b = knots[hi];
  const double span = static_cast<double>(b.day - a.day);
  if (span == 0.0) return b.value;
  return a.value + (b.value - a.value) * (static_cast<double>(day - a.day) / span);
}

SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t m = spec.series.size();
  const std::size_t t_len = static_cast<std::size_t>(spec.days);

  SynthResult out;
  out.frame.start = spec.start;
  for (const auto& s : spec.series) out.frame.series_ids.push_back(s.id);
  out.frame.values.assign(m, std::vector<double>(t_len, 0.0));
  out.truth.trend.assign(m, std::vector<double>(t_len, 0.0));
  out.truth.seasonal.assign(m, std::vector<double>(t_len, 0.0));
  out.truth.event.assign(m, std::vector<double>(t_len, 0.0));
  out.truth.noise.assign(m, std::vector<double>(t_len, 0.0));

  // Calendar: event types sorted, a binary vector per firing date.
  std::vector<std::string> sorted_types;
  for (const auto& ev : spec.events) sorted_types.push_back(ev.type);
  std::sort(sorted_types.begin(), sorted_types.end());
  out.calendar.event_types = sorted_types;
  auto type_slot = [&sorted_types](const std::string& type) {
    return static_cast<std::size_t>(
        std::lower_bound(sorted_types.begin(), sorted_types.end(), type) - sorted_types.begin());
  };
  for (const auto& ev : spec.events) {
    for (std::size_t t = 0; t < t_len; ++t) {
      const Date d = spec.start + static_cast<int>(t);
      bool fires = false;
      if (ev.day_of_month.has_value() && d.day_of_month() == *ev.day_of_month) fires = true;
      for (const auto& ed : ev.dates) {
        if (ed == d) fires = true;
      }
      if (fires) {
        auto& vec = out.calendar.days[d.days()];
        if (vec.empty()) vec.assign(sorted_types.size(), 0.0);
        vec[type_slot(ev.type)] = 1.0;
      }
    }
  }

  const double rho = spec.coupling_rho;
  Rng rng(seed);
  for (std::size_t s = 0; s < m; ++s) {
    const SynthSeriesSpec& ss = spec.series[s];
    for (std::size_t t = 0; t < t_len; ++t) {
      const long day = static_cast<long>(t);
      const double shared = piecewise_linear(spec.shared_trend, day);
      const double own = piecewise_linear(ss.trend, day);
      const double d = rho * shared + (1.0 - rho) * own;

      double season = 0.0;
      for (const auto& term : ss.seasonal) {
        const long tm = day % term.period;
        season += term.amplitude *
                  std::sin(2.0 * std::numbers::pi * static_cast<double>(tm) /
                               static_cast<double>(term.period) +
                           term.phase);
      }

      double event = 0.0;
      const Date date = spec.start + static_cast<int>(t);
      const auto it = out.calendar.days.find(date.days());
      if (it != out.calendar.days.end()) {
        for (std::size_t k = 0; k < sorted_types.size(); ++k) {
          if (it->second[k] != 0.0) {
            const auto amp = ss.event_amplitude.find(sorted_types[k]);
            if (amp != ss.event_amplitude.end()) event += amp->second;
          }
        }
      }

      const double noise = ss.noise_sigma > 0.0 ? ss.noise_sigma * rng.normal() : 0.0;
      out.truth.trend[s][t] = d;
      out.truth.seasonal[s][t] = season;
      out.truth.event[s][t] = event;
      out.truth.noise[s][t] = noise;
      out.frame.values[s][t] = ((d + season) + event) + noise;
    }
  }
  return out;
}

void write_truth_csv(const std::string& path, const SynthResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "date,series,value,trend,seasonal,event,noise\n";
  for (std::size_t s = 0; s < result.frame.n_series(); ++s) {
    for (std::size_t t = 0; t < result.frame.length(); ++t) {
      out << result.frame.date(t).to_string() << ',' << result.frame.series_ids[s] << ','
          << fmt17(result.frame.values[s][t]) << ',' << fmt17(result.truth.trend[s][t]) << ','
          << fmt17(result.truth.seasonal[s][t]) << ',' << fmt17(result.truth.event[s][t]) << ','
          << fmt17(result.truth.noise[s][t]) << '\n';
    }
  }
}

}  // namespace mstm
