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

#include "mmsounder/csv.hpp"
#include "mmsounder/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mmsounder {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            os << ',';
        os << csv_escape(fields[i]);
    }
    os << "\r\n";
}

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw AnalysisError("CSV has no column '" + std::string(name) + "'");
}

void write_csv(std::ostream& os, const CsvTable& table)
{
    for (const auto& [k, v] : table.meta)
        os << "# " << k << '=' << v << "\r\n";
    write_csv_row(os, table.header);
    for (const auto& r : table.rows)
        write_csv_row(os, r);
}

namespace {

// One record; returns false at end of input.
bool read_record(std::istream& is, std::vector<std::string>& fields, std::size_t& line)
{
    fields.clear();
    if (is.peek() == std::char_traits<char>::eof())
        return false;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    const std::size_t start_line = line;
    for (;;) {
        const int ci = is.get();
        if (ci == std::char_traits<char>::eof()) {
            if (quoted)
                throw AnalysisError("CSV line " + std::to_string(start_line) + ": unterminated quote");
            fields.push_back(std::move(cur));
            return true;
        }
        const char c = static_cast<char>(ci);
        if (quoted) {
            if (c == '"') {
                if (is.peek() == '"') {
                    cur += '"';
                    is.get();
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                cur += c;
            }
            continue;
        }
        if (c == '"' && cur.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else if (c == '\r' && is.peek() == '\n') {
            continue;
        } else if (c == '\n') {
            ++line;
            fields.push_back(std::move(cur));
            return true;
        } else {
            cur += c;
        }
    }
}

} // namespace

CsvTable read_csv(std::istream& is)
{
    CsvTable t;
    std::size_t line = 1;
    while (is.peek() == '#') {
        std::string text;
        std::getline(is, text);
        ++line;
        if (!text.empty() && text.back() == '\r')
            text.pop_back();
        text.erase(0, text.find_first_not_of("# "));
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            t.meta.emplace_back(text, "");
        else
            t.meta.emplace_back(text.substr(0, eq), text.substr(eq + 1));
    }
    std::vector<std::string> rec;
    if (!read_record(is, rec, line))
        throw AnalysisError("CSV has no header row");
    t.header = rec;
    while (read_record(is, rec, line)) {
        if (rec.size() == 1 && rec[0].empty())
            continue; // blank line
        if (rec.size() != t.header.size())
            throw AnalysisError("CSV line " + std::to_string(line - 1) + ": " + std::to_string(rec.size()) +
                                " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(rec);
    }
    return t;
}

CsvTable read_csv_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw AnalysisError("cannot open " + path.string());
    return read_csv(in);
}

} // namespace mmsounder
