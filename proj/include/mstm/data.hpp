#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mstm/errors.hpp"

namespace mstm {

// Calendar day stored as days since 1970-01-01.
class Date {
 public:
  Date() = default;
  explicit Date(int days_since_epoch) : days_(days_since_epoch) {}

  // Strict ISO-8601 day, "YYYY-MM-DD". Throws DataError otherwise.
  static Date parse(std::string_view iso);
  static Date from_ymd(int year, unsigned month, unsigned day);

  std::string to_string() const;
  int days() const { return days_; }
  int year() const;
  unsigned month() const;
  unsigned day_of_month() const;

  Date operator+(int d) const { return Date(days_ + d); }
  int operator-(const Date& other) const { return days_ - other.days_; }
  auto operator<=>(const Date&) const = default;

 private:
  int days_ = 0;
};

// Aligned multivariate daily series. Timestamps are start + i for
// i in [0, length): ingestion rejects gaps and duplicates, so the frame only
// ever stores a contiguous daily range.
struct SeriesFrame {
  std::vector<std::string> series_ids;       // M names
  Date start;                                // date of column 0
  std::vector<std::vector<double>> values;   // M rows, each of length T

  std::size_t n_series() const { return series_ids.size(); }
  std::size_t length() const { return values.empty() ? 0 : values[0].size(); }
  Date date(std::size_t i) const { return start + static_cast<int>(i); }
  double value(std::size_t series, std::size_t t) const { return values[series][t]; }
  std::optional<std::size_t> index_of(Date d) const;
  std::size_t series_index(const std::string& id) const;  // throws DataError
};

// CSV with header `date,<id1>,…,<idM>`, ISO dates, decimal-point reals.
// Rows are sorted by date; duplicate dates, date gaps, and unparseable cells
// are distinct errors.
SeriesFrame ingest_csv(const std::string& path);
void write_series_csv(const std::string& path, const SeriesFrame& frame);

// Event calendar from CSV `date,event_type`. Types are sorted and
// deduplicated; unknown dates map to the all-zero vector.
struct EventCalendar {
  std::vector<std::string> event_types;      // sorted, unique
  std::map<int, std::vector<double>> days;   // date.days() -> binary L-vector

  std::size_t types() const { return event_types.size(); }
  std::vector<double> vector_for(Date d) const;

  static EventCalendar load_csv(const std::string& path);
};
void write_events_csv(const std::string& path, const EventCalendar& calendar);

// Per-series z-score statistics from the training split.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Stats over timestamps [0, train_end). Rejects constant series (zero std).
NormStats compute_stats(const SeriesFrame& frame, std::size_t train_end);
SeriesFrame normalize(const SeriesFrame& frame, const NormStats& stats);
double denormalize(double v, const NormStats& stats, std::size_t series);
std::vector<double> denormalize(const std::vector<double>& v, const NormStats& stats,
                                std::size_t series);

// One training example: the lagged input covers times t−N..t−1 and the target
// is series m at time t. t_index counts days from the frame start.
struct Window {
  std::vector<double> input;  // M×N row-major
  double target = 0.0;
  long t_index = 0;
  Date date;
  std::vector<double> event_vec;  // length L
};

struct WindowBatch {
  std::size_t target_series = 0;
  std::size_t n_lags = 0;
  std::size_t n_series = 0;
  std::vector<Window> windows;  // exactly T − N of them

  std::size_t size() const { return windows.size(); }
};

WindowBatch build_windows(const SeriesFrame& frame, std::size_t n_lags, std::size_t target,
                          const EventCalendar& calendar);

// Shortest decimal form that parses back to the identical double.
std::string fmt17(double v);

}  // namespace mstm
