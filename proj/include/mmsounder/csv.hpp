// SPDX-License-Identifier: Apache-2.0
//
// mmsounder: sliding correlator channel sounder simulation and analysis
// Copyright (C) 2026 The mmsounder authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmsounder {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// RFC-4180 quoting: fields holding a comma, quote, CR or LF are quoted and
/// embedded quotes doubled.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

/// Leading "# key=value" lines, a header row and data rows.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws AnalysisError when absent.
    std::size_t column(std::string_view name) const;
};

void write_csv(std::ostream& os, const CsvTable& table);

/// Parses RFC-4180 text. Throws AnalysisError on an unterminated quote or a
/// row whose width differs from the header.
CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::filesystem::path& path);

} // namespace mmsounder
