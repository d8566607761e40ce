#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "efhmm/error.hpp"
#include "efhmm/model.hpp"
#include "efhmm/model_io.hpp"

namespace efhmm {

/// Header-plus-numbers CSV held column-wise.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    fail(ErrorCode::parse, "missing column '" + std::string(name) + "'");
  }
};

namespace csv_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline double parse_number(std::string_view field, const std::string& where) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(ErrorCode::parse, where + ": '" + std::string(field) + "' is not a number");
  }
  if (!std::isfinite(v)) fail(ErrorCode::non_finite, where + ": non-finite value");
  return v;
}

inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace csv_detail

inline CsvTable parse_csv_table(std::string_view text, const std::string& name = "csv") {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = csv_detail::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv_detail::split(line);
    if (table.header.empty()) {
      for (auto f : fields) {
        require(!f.empty(), ErrorCode::parse, name + ": empty column name in header");
        table.header.emplace_back(f);
      }
      table.columns.resize(table.header.size());
      continue;
    }
    const std::string where = name + " line " + std::to_string(line_no);
    require(fields.size() == table.header.size(), ErrorCode::parse,
            where + ": expected " + std::to_string(table.header.size()) + " fields, got " +
                std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      table.columns[c].push_back(csv_detail::parse_number(fields[c], where));
    }
  }
  require(!table.header.empty(), ErrorCode::parse, name + ": missing header");
  return table;
}

inline CsvTable read_csv_table(const std::filesystem::path& path) {
  return parse_csv_table(read_text_file(path), path.string());
}

inline std::string format_csv_table(const CsvTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out += ',';
    out += table.header[c];
  }
  out += '\n';
  const std::size_t rows = table.rows();
  for (const auto& col : table.columns) {
    require(col.size() == rows, ErrorCode::invalid_argument, "csv columns differ in length");
  }
  out.reserve(out.size() + rows * table.columns.size() * 12);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      csv_detail::append_number(out, table.columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

inline void write_csv_table(const CsvTable& table, const std::filesystem::path& path) {
  write_text_file(path, format_csv_table(table));
}

/// Sample rate implied by a timestamp column. Timestamps must increase with
/// every step within 10% of the median period; a longer step is a gap.
inline double infer_sample_rate(const std::vector<double>& t, const std::string& name = "csv") {
  require(t.size() >= 2, ErrorCode::too_short, name + ": need at least 2 rows to infer the sample rate");
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    d[i] = t[i + 1] - t[i];
    if (!(d[i] > 0.0)) {
      fail(ErrorCode::validation, name + ": timestamps not strictly increasing at row " + std::to_string(i + 1));
    }
  }
  std::vector<double> sorted = d;
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double period = *mid;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 1.5 * period) {
      fail(ErrorCode::validation, name + ": gap of " + std::to_string(d[i] / period) + " periods before row " +
                                      std::to_string(i + 1));
    }
    if (std::abs(d[i] - period) > 0.1 * period) {
      fail(ErrorCode::validation, name + ": sampling jitter above 10% of the period at row " + std::to_string(i + 1));
    }
  }
  // Timestamps printed at finite precision; snap to an integer rate when it is one.
  const double span_rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
  const double rounded = std::round(span_rate);
  return rounded > 0.0 && std::abs(span_rate - rounded) <= 1e-6 * rounded ? rounded : span_rate;
}

/// Reads a `timestamp_s,power_w` file.
inline PowerSeries load_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv_table(path);
  const std::string name = path.string();
  const std::size_t ti = table.column_index("timestamp_s");
  const std::size_t pi = table.column_index("power_w");
  PowerSeries s;
  s.sample_rate_hz = infer_sample_rate(table.columns[ti], name);
  s.start_time = table.columns[ti].front();
  s.samples = table.columns[pi];
  s.validate();
  return s;
}

inline CsvTable series_table(const PowerSeries& series) {
  CsvTable t;
  t.header = {"timestamp_s", "power_w"};
  t.columns.resize(2);
  t.columns[0].reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) t.columns[0].push_back(series.time_at(i));
  t.columns[1] = series.samples;
  return t;
}

inline void save_csv(const PowerSeries& series, const std::filesystem::path& path) {
  series.validate();
  write_csv_table(series_table(series), path);
}

}  // namespace efhmm
