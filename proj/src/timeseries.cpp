#include "ionbench/timeseries.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ionbench {

std::optional<Eigen::Index> TimeSeries::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - names_.begin());
}

Vector TimeSeries::column(const std::string& name) const {
  auto idx = index_of(name);
  if (!idx) throw Error(Errc::schema_mismatch, "missing column '" + name + "'");
  return values_.col(*idx);
}

double TimeSeries::at(const std::string& name, Eigen::Index row) const {
  auto idx = index_of(name);
  if (!idx) throw Error(Errc::schema_mismatch, "missing column '" + name + "'");
  return values_(row, *idx);
}

void TimeSeries::set_column(const std::string& name, const Vector& data) {
  if (data.size() != time_.size()) {
    throw Error(Errc::schema_mismatch, "column '" + name + "' length does not match time axis");
  }
  if (auto idx = index_of(name)) {
    values_.col(*idx) = data;
    return;
  }
  names_.push_back(name);
  values_.conservativeResize(time_.size(), static_cast<Eigen::Index>(names_.size()));
  values_.col(values_.cols() - 1) = data;
}

TimeSeries TimeSeries::slice(Eigen::Index first, Eigen::Index count) const {
  TimeSeries out(time_.segment(first, count));
  out.names_ = names_;
  out.values_ = values_.middleRows(first, count);
  return out;
}

TimeSeries TimeSeries::select_rows(const std::vector<Eigen::Index>& rows) const {
  Vector t(static_cast<Eigen::Index>(rows.size()));
  Matrix v(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = time_[rows[i]];
    v.row(static_cast<Eigen::Index>(i)) = values_.row(rows[i]);
  }
  TimeSeries out(std::move(t));
  out.names_ = names_;
  out.values_ = std::move(v);
  return out;
}

double sample_and_hold(const Vector& time, const Vector& values, double t) {
  const double* begin = time.data();
  const double* end = begin + time.size();
  auto it = std::upper_bound(begin, end, t);
  if (it == begin) return values[0];
  return values[(it - begin) - 1];
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    // nan/inf spellings and anything unparsable count as missing data
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (table.header.empty()) {
      table.header = split_line(line);
      continue;
    }
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw Error(Errc::schema_mismatch, path.string() + ": row has " + std::to_string(cells.size()) +
                                             " cells, header has " + std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw Error(Errc::empty_file, path.string() + " is empty");
  return table;
}

void write_csv_table(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    out << (j ? "," : "") << table.header[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_number(row[j]);
    out << '\n';
  }
}

TimeSeries read_csv(const std::filesystem::path& path, const std::string& time_column) {
  CsvTable table = read_csv_table(path);
  auto it = std::find(table.header.begin(), table.header.end(), time_column);
  if (it == table.header.end()) {
    throw Error(Errc::schema_mismatch, path.string() + ": no '" + time_column + "' column");
  }
  const auto tcol = static_cast<std::size_t>(it - table.header.begin());
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = table.rows[static_cast<std::size_t>(i)][tcol];
  TimeSeries ts(t);
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == tcol) continue;
    Vector col(n);
    for (Eigen::Index i = 0; i < n; ++i) col[i] = table.rows[static_cast<std::size_t>(i)][j];
    ts.set_column(table.header[j], col);
  }
  return ts;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series,
               const std::vector<std::string>& columns, const std::string& time_column) {
  const std::vector<std::string>& cols = columns.empty() ? series.names() : columns;
  std::vector<Eigen::Index> idx;
  for (const auto& c : cols) {
    auto i = series.index_of(c);
    if (!i) throw Error(Errc::schema_mismatch, "cannot export missing column '" + c + "'");
    idx.push_back(*i);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << time_column;
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < series.size(); ++r) {
    out << format_number(series.time()[r]);
    for (auto i : idx) out << ',' << format_number(series.values()(r, i));
    out << '\n';
  }
}

IngestReport ingest_table(const CsvTable& table, const IngestSchema& schema) {
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - table.header.begin());
  };
  auto tcol = find(schema.time_column);
  if (!tcol) throw Error(Errc::schema_mismatch, "missing time column '" + schema.time_column + "'");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& name : schema.required) {
    auto c = find(name);
    if (!c) throw Error(Errc::schema_mismatch, "missing required column '" + name + "'");
    kept.emplace_back(name, *c);
  }
  for (const auto& name : schema.optional) {
    if (auto c = find(name)) kept.emplace_back(name, *c);
  }
  if (table.rows.empty()) throw Error(Errc::empty_file, "no data rows");

  IngestReport report;
  report.rows_read = table.rows.size();
  std::vector<const std::vector<double>*> rows;
  double last_t = -std::numeric_limits<double>::infinity();
  for (const auto& row : table.rows) {
    bool finite = std::isfinite(row[*tcol]);
    for (const auto& [name, c] : kept) finite = finite && std::isfinite(row[c]);
    if (!finite) {
      ++report.dropped_nan;
      continue;
    }
    const double t = row[*tcol];
    if (t == last_t) {
      ++report.dropped_duplicates;
      continue;
    }
    if (t < last_t) {
      throw Error(Errc::non_monotone_time, "time decreases at t = " + std::to_string(t));
    }
    last_t = t;
    rows.push_back(&row);
  }
  if (rows.empty()) throw Error(Errc::empty_file, "no valid rows after cleaning");
  if (report.dropped_nan > 0) {
    spdlog::warn("ingest: dropped {} row(s) with missing or non-finite values", report.dropped_nan);
  }
  if (report.dropped_duplicates > 0) {
    spdlog::warn("ingest: dropped {} duplicated timestamp row(s)", report.dropped_duplicates);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = (*rows[static_cast<std::size_t>(i)])[*tcol];

  if (!schema.resample_period) {
    TimeSeries ts(t);
    for (const auto& [name, c] : kept) {
      Vector col(n);
      for (Eigen::Index i = 0; i < n; ++i) col[i] = (*rows[static_cast<std::size_t>(i)])[c];
      ts.set_column(name, col);
    }
    report.series = std::move(ts);
    return report;
  }

  const double period = *schema.resample_period;
  if (!(period > 0)) throw Error(Errc::domain, "resample period must be positive");
  const auto m = static_cast<Eigen::Index>(std::floor((t[n - 1] - t[0]) / period + 1e-9)) + 1;
  Vector tr(m);
  for (Eigen::Index i = 0; i < m; ++i) tr[i] = t[0] + period * static_cast<double>(i);
  TimeSeries ts(tr);
  for (const auto& [name, c] : kept) {
    Vector col(m);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      while (k + 1 < n - 1 && t[k + 1] <= tr[i]) ++k;
      const auto& r0 = *rows[static_cast<std::size_t>(k)];
      if (n == 1) {
        col[i] = r0[c];
        continue;
      }
      const auto& r1 = *rows[static_cast<std::size_t>(k + 1)];
      const double w = std::clamp((tr[i] - t[k]) / (t[k + 1] - t[k]), 0.0, 1.0);
      col[i] = (1 - w) * r0[c] + w * r1[c];
    }
    ts.set_column(name, col);
  }
  report.series = std::move(ts);
  return report;
}

IngestReport ingest_timeseries(const std::filesystem::path& path, const IngestSchema& schema) {
  return ingest_table(read_csv_table(path), schema);
}

}  // namespace ionbench
