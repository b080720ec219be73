/*
 * This file is part of mlho
 *
 * Copyright 2026 mlho developers
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mlho/csv.hpp"

namespace mlho {

DelimitedReader::DelimitedReader(std::istream& in, std::string name,
                                 const std::vector<std::string>& expected_columns)
    : in_(in), name_(std::move(name)), n_columns_(expected_columns.size()) {
    std::string header;
    if (!std::getline(in_, header))
        throw DataError(name_ + ": empty input, expected a header row");
    ++line_;
    auto cols = split(trim(header), ',');
    std::vector<std::string> unknown;
    for (const auto& c : cols) {
        bool known = false;
        for (const auto& e : expected_columns)
            if (c == e) known = true;
        if (!known) unknown.push_back(c);
    }
    if (!unknown.empty()) {
        std::string msg = name_ + ": unknown columns:";
        for (const auto& u : unknown) msg += " " + u;
        throw DataError(msg);
    }
    if (cols != expected_columns) {
        std::string msg = name_ + ": header must be exactly";
        for (const auto& e : expected_columns) msg += " " + e;
        throw DataError(msg);
    }
}

bool DelimitedReader::next_row(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        std::string t = trim(line);
        if (t.empty()) continue;
        auto raw = split(t, ',');
        if (raw.size() != n_columns_)
            fail("expected " + std::to_string(n_columns_) + " fields, got " + std::to_string(raw.size()));
        fields.clear();
        for (auto& f : raw) fields.push_back(trim(f));
        return true;
    }
    return false;
}

void DelimitedReader::fail(const std::string& message) const {
    throw DataError(name_ + " line " + std::to_string(line_) + ": " + message);
}

}  // namespace mlho
