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

#ifndef DATA2LD_CSV_HPP_
#define DATA2LD_CSV_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace data2ld {

// One observed trajectory: times and matching scalar observations.
struct TimeSeries {
  Eigen::VectorXd times;
  Eigen::VectorXd values;
};

// Formats a double with 17 significant digits, enough for the decimal text
// to reproduce the binary value bit-exactly on reparse.
std::string format_full(double value);

// A rectangular numeric table with named columns.
struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd rows;
};

// Reads a CSV file with a header line naming the columns and numeric body
// rows. Throws DataError naming the offending line for a missing file, an
// empty file, a non-numeric field, or a row of the wrong width.
CsvTable read_csv(const std::string& path);

// Writes a CSV table, header first, every numeric with 17 significant
// digits. Throws DataError when the path cannot be opened for writing.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows);

// Reads an observation file with header `t,y`. Beyond the generic CSV
// checks, requires at least one row and times sorted in non-decreasing
// order; the error message names the first out-of-order line.
TimeSeries read_time_series(const std::string& path);

}  // namespace data2ld

#endif  // DATA2LD_CSV_HPP_
