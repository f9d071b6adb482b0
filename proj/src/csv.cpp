// Copyright 2026 The data2ld Authors
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

#include "data2ld/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "data2ld/errors.hpp"

namespace data2ld {
namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trimmed(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& field, const std::string& path,
                    int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (field.empty() || end != begin + field.size())
    throw DataError(path + ":" + std::to_string(line_no) +
                    ": expected a number, got \"" + field + "\"");
  return value;
}

}  // namespace

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::string line;
  int line_no = 0;
  CsvTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    table.columns = split_fields(line);
    break;
  }
  if (table.columns.empty()) throw DataError(path + ": empty file");

  const std::size_t width = table.columns.size();
  std::vector<double> values;
  int n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != width)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " fields, got " +
                      std::to_string(fields.size()));
    for (const std::string& f : fields)
      values.push_back(parse_number(f, path, line_no));
    ++n_rows;
  }

  table.rows.resize(n_rows, static_cast<int>(width));
  for (int i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < width; ++j)
      table.rows(i, static_cast<int>(j)) = values[i * width + j];
  return table;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (j) out << ',';
    out << columns[j];
  }
  out << '\n';
  for (int i = 0; i < rows.rows(); ++i) {
    for (int j = 0; j < rows.cols(); ++j) {
      if (j) out << ',';
      out << format_full(rows(i, j));
    }
    out << '\n';
  }
  if (!out) throw DataError("write to " + path + " failed");
}

TimeSeries read_time_series(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.columns != std::vector<std::string>{"t", "y"})
    throw DataError(path + ": expected header \"t,y\"");
  if (table.rows.rows() == 0) throw DataError(path + ": no data rows");
  for (int i = 1; i < table.rows.rows(); ++i)
    if (table.rows(i, 0) < table.rows(i - 1, 0))
      throw DataError(path + ":" + std::to_string(i + 2) +
                      ": times are not sorted");
  TimeSeries series;
  series.times = table.rows.col(0);
  series.values = table.rows.col(1);
  return series;
}

}  // namespace data2ld
