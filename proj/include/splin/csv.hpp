// Copyright 2026 The splin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPLIN_CSV_HPP
#define SPLIN_CSV_HPP

#include <splin/core.hpp>

#include <charconv>
#include <limits>
#include <cmath>
#include <string>
#include <system_error>
#include <vector>

namespace splin {

/// Locale-independent, 17 significant digits; round-trips exactly.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("not a number: '" + s + "'");
  return v;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells) {
    require(cells.size() == header_.size(), "CSV row width does not match the header");
    rows_.push_back(std::move(cells));
  }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Header `c0..c{n-1}`, one row per matrix row.
inline std::string matrix_csv(const Matrix& m, const std::string& prefix = "c") {
  std::vector<std::string> header;
  for (Index c = 0; c < m.cols(); ++c) header.push_back(prefix + std::to_string(c));
  CsvTable t(header);
  for (Index r = 0; r < m.rows(); ++r) {
    std::vector<std::string> row;
    for (Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m(r, c)));
    t.add_row(std::move(row));
  }
  return t.str();
}

/// Inverse of matrix_csv (numeric cells, header skipped).
inline Matrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(parse_double(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && cells.size() != rows.front().size()) throw IoError("ragged CSV rows");
    rows.push_back(std::move(cells));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

}  // namespace splin

#endif  // SPLIN_CSV_HPP
