#pragma once

#include "ionbench/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ionbench {

/// Sampled record: a strictly increasing time axis plus named columns.
///
/// Column storage is a dense (samples x columns) matrix so whole signals can
/// be pulled out as Eigen expressions.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(Vector time) : time_(std::move(time)), values_(time_.size(), 0) {}

  Eigen::Index size() const { return time_.size(); }
  bool empty() const { return time_.size() == 0; }

  const Vector& time() const { return time_; }
  const std::vector<std::string>& names() const { return names_; }
  const Matrix& values() const { return values_; }

  bool has(const std::string& name) const { return index_of(name).has_value(); }
  std::optional<Eigen::Index> index_of(const std::string& name) const;

  /// Throws Errc::schema_mismatch when the column does not exist.
  Vector column(const std::string& name) const;
  double at(const std::string& name, Eigen::Index row) const;

  /// Adds or replaces a column; the length must match the time axis.
  void set_column(const std::string& name, const Vector& data);

  /// Rows [first, first + count).
  TimeSeries slice(Eigen::Index first, Eigen::Index count) const;
  TimeSeries select_rows(const std::vector<Eigen::Index>& rows) const;

 private:
  Vector time_;
  std::vector<std::string> names_;
  Matrix values_;
};

/// Piecewise-constant profile lookup: value of the sample at or before t.
double sample_and_hold(const Vector& time, const Vector& values, double t);

// ---------------------------------------------------------------------------
// CSV exchange

/// Reads a header-ful CSV. The column named `time_column` becomes the time
/// axis (no monotonicity checks; see ingest_timeseries for validated input).
TimeSeries read_csv(const std::filesystem::path& path, const std::string& time_column = "t");

/// Writes `time_column` followed by the requested columns (all when empty),
/// using round-trip precision so repeated runs are byte-identical.
void write_csv(const std::filesystem::path& path, const TimeSeries& series,
               const std::vector<std::string>& columns = {},
               const std::string& time_column = "t");

/// Plain numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv_table(const std::filesystem::path& path);
void write_csv_table(const std::filesystem::path& path, const CsvTable& table);

// ---------------------------------------------------------------------------
// Validated ingestion

struct IngestSchema {
  std::string time_column = "t";
  std::vector<std::string> required;  ///< must be present in the header
  std::vector<std::string> optional;  ///< kept when present
  std::optional<double> resample_period;  ///< linear interpolation onto a uniform grid
};

struct IngestReport {
  TimeSeries series;
  std::size_t rows_read = 0;
  std::size_t dropped_duplicates = 0;
  std::size_t dropped_nan = 0;
};

/// Cleans a cycling/identification record: drops duplicate timestamps and
/// rows with non-finite values in the kept columns, rejects decreasing time.
IngestReport ingest_timeseries(const std::filesystem::path& path, const IngestSchema& schema);

/// Same cleaning applied to an in-memory table.
IngestReport ingest_table(const CsvTable& table, const IngestSchema& schema);

}  // namespace ionbench
