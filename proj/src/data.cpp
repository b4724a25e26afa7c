#include "mstm/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mstm {

namespace {

namespace chr = std::chrono;

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

double parse_cell(std::string_view cell, std::size_t line_no, std::size_t col_no,
                  const std::string& path) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw DataError(path + ": cannot parse numeric cell '" + std::string(cell) + "' at row " +
                    std::to_string(line_no) + ", column " + std::to_string(col_no));
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Date

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' || !all_digits(iso.substr(0, 4)) ||
      !all_digits(iso.substr(5, 2)) || !all_digits(iso.substr(8, 2))) {
    throw DataError("invalid date '" + std::string(iso) + "', expected YYYY-MM-DD");
  }
  const int y = std::stoi(std::string(iso.substr(0, 4)));
  const unsigned m = static_cast<unsigned>(std::stoi(std::string(iso.substr(5, 2))));
  const unsigned d = static_cast<unsigned>(std::stoi(std::string(iso.substr(8, 2))));
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(iso) + "'");
  return Date(static_cast<int>(chr::sys_days{ymd}.time_since_epoch().count()));
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok()) throw DataError("invalid calendar date");
  return Date(static_cast<int>(chr::sys_days{ymd}.time_since_epoch().count()));
}

std::string Date::to_string() const {
  const chr::year_month_day ymd{chr::sys_days{chr::days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::year() const {
  return static_cast<int>(chr::year_month_day{chr::sys_days{chr::days{days_}}}.year());
}
unsigned Date::month() const {
  return static_cast<unsigned>(chr::year_month_day{chr::sys_days{chr::days{days_}}}.month());
}
unsigned Date::day_of_month() const {
  return static_cast<unsigned>(chr::year_month_day{chr::sys_days{chr::days{days_}}}.day());
}

// ---------------------------------------------------------------------------
// SeriesFrame

std::optional<std::size_t> SeriesFrame::index_of(Date d) const {
  const int off = d - start;
  if (off < 0 || static_cast<std::size_t>(off) >= length()) return std::nullopt;
  return static_cast<std::size_t>(off);
}

std::size_t SeriesFrame::series_index(const std::string& id) const {
  for (std::size_t i = 0; i < series_ids.size(); ++i) {
    if (series_ids[i] == id) return i;
  }
  throw DataError("series '" + id + "' not found in frame");
}

SeriesFrame ingest_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "date") {
    throw DataError(path + ": header must be 'date,<id1>,...'");
  }
  const std::size_t m = header.size() - 1;

  struct Row {
    Date date;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    if (fields.size() != m + 1) {
      throw DataError(path + ": row " + std::to_string(li + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(m + 1));
    }
    Row row;
    try {
      row.date = Date::parse(fields[0]);
    } catch (const DataError& e) {
      throw DataError(path + ": row " + std::to_string(li + 1) + ": " + e.what());
    }
    row.vals.reserve(m);
    for (std::size_t c = 1; c <= m; ++c) row.vals.push_back(parse_cell(fields[c], li + 1, c + 1, path));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const int gap = rows[i].date - rows[i - 1].date;
    if (gap == 0) {
      throw DataError(path + ": duplicate date " + rows[i].date.to_string());
    }
    if (gap != 1) {
      throw DataError(path + ": date gap, missing " + (rows[i - 1].date + 1).to_string());
    }
  }

  SeriesFrame frame;
  frame.start = rows[0].date;
  for (std::size_t c = 0; c < m; ++c) frame.series_ids.emplace_back(header[c + 1]);
  frame.values.assign(m, std::vector<double>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < m; ++c) frame.values[c][i] = rows[i].vals[c];
  }
  return frame;
}

void write_series_csv(const std::string& path, const SeriesFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "date";
  for (const auto& id : frame.series_ids) out << ',' << id;
  out << '\n';
  for (std::size_t t = 0; t < frame.length(); ++t) {
    out << frame.date(t).to_string();
    for (std::size_t s = 0; s < frame.n_series(); ++s) out << ',' << fmt17(frame.values[s][t]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// EventCalendar

std::vector<double> EventCalendar::vector_for(Date d) const {
  const auto it = days.find(d.days());
  if (it != days.end()) return it->second;
  return std::vector<double>(event_types.size(), 0.0);
}

EventCalendar EventCalendar::load_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 2 || header[0] != "date" || header[1] != "event_type") {
    throw DataError(path + ": header must be 'date,event_type'");
  }
  std::vector<std::pair<Date, std::string>> entries;
  std::set<std::string> type_set;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    if (fields.size() != 2) {
      throw DataError(path + ": row " + std::to_string(li + 1) + " must have 2 fields");
    }
    Date d;
    try {
      d = Date::parse(fields[0]);
    } catch (const DataError& e) {
      throw DataError(path + ": row " + std::to_string(li + 1) + ": " + e.what());
    }
    if (fields[1].empty()) {
      throw DataError(path + ": row " + std::to_string(li + 1) + ": empty event type");
    }
    entries.emplace_back(d, std::string(fields[1]));
    type_set.insert(std::string(fields[1]));
  }
  EventCalendar cal;
  cal.event_types.assign(type_set.begin(), type_set.end());
  for (const auto& [d, type] : entries) {
    auto& vec = cal.days[d.days()];
    if (vec.empty()) vec.assign(cal.event_types.size(), 0.0);
    const auto it = std::lower_bound(cal.event_types.begin(), cal.event_types.end(), type);
    vec[static_cast<std::size_t>(it - cal.event_types.begin())] = 1.0;
  }
  return cal;
}

void write_events_csv(const std::string& path, const EventCalendar& calendar) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "date,event_type\n";
  for (const auto& [day, vec] : calendar.days) {
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (vec[i] != 0.0) out << Date(day).to_string() << ',' << calendar.event_types[i] << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Normalization

NormStats compute_stats(const SeriesFrame& frame, std::size_t train_end) {
  if (train_end < 2 || train_end > frame.length()) {
    throw DataError("training split must cover at least 2 observations");
  }
  NormStats stats;
  const double n = static_cast<double>(train_end);
  for (std::size_t s = 0; s < frame.n_series(); ++s) {
    double mean = 0.0;
    for (std::size_t t = 0; t < train_end; ++t) mean += frame.values[s][t];
    mean /= n;
    double var = 0.0;
    for (std::size_t t = 0; t < train_end; ++t) {
      const double d = frame.values[s][t] - mean;
      var += d * d;
    }
    var /= n;
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
      throw DataError("series '" + frame.series_ids[s] +
                      "' is constant over the training split; cannot normalize");
    }
    stats.mean.push_back(mean);
    stats.stddev.push_back(sd);
  }
  return stats;
}

SeriesFrame normalize(const SeriesFrame& frame, const NormStats& stats) {
  if (stats.mean.size() != frame.n_series()) {
    throw DataError("normalization stats do not match frame series count");
  }
  SeriesFrame out = frame;
  for (std::size_t s = 0; s < frame.n_series(); ++s) {
    const double mu = stats.mean[s];
    const double sd = stats.stddev[s];
    for (auto& v : out.values[s]) v = (v - mu) / sd;
  }
  return out;
}

double denormalize(double v, const NormStats& stats, std::size_t series) {
  return stats.mean[series] + stats.stddev[series] * v;
}

std::vector<double> denormalize(const std::vector<double>& v, const NormStats& stats,
                                std::size_t series) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = denormalize(v[i], stats, series);
  return out;
}

// ---------------------------------------------------------------------------
// Windows

WindowBatch build_windows(const SeriesFrame& frame, std::size_t n_lags, std::size_t target,
                          const EventCalendar& calendar) {
  const std::size_t t_len = frame.length();
  const std::size_t m = frame.n_series();
  if (target >= m) throw DataError("target series index out of range");
  if (n_lags < 1) throw DataError("window length N must be at least 1");
  if (t_len < n_lags + 1) {
    throw DataError("insufficient data: need at least N+1=" + std::to_string(n_lags + 1) +
                    " observations, have " + std::to_string(t_len));
  }
  WindowBatch batch;
  batch.target_series = target;
  batch.n_lags = n_lags;
  batch.n_series = m;
  batch.windows.reserve(t_len - n_lags);
  for (std::size_t t = n_lags; t < t_len; ++t) {
    Window w;
    w.input.resize(m * n_lags);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t j = 0; j < n_lags; ++j) w.input[s * n_lags + j] = frame.values[s][t - n_lags + j];
    }
    w.target = frame.values[target][t];
    w.t_index = static_cast<long>(t);
    w.date = frame.date(t);
    w.event_vec = calendar.vector_for(w.date);
    batch.windows.push_back(std::move(w));
  }
  return batch;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mstm
