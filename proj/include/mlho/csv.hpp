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

#pragma once

#include <istream>
#include <string>
#include <vector>

#include "mlho/common.hpp"

namespace mlho {

// Minimal comma-delimited reader for the cohort input files. Field values
// are plain identifiers/numbers/dates; quoting is not supported. The header
// must match the expected column list exactly -- unknown columns are a
// DataError that names them.
class DelimitedReader {
public:
    DelimitedReader(std::istream& in, std::string name, const std::vector<std::string>& expected_columns);

    // Returns false at end of input. Skips blank lines. Throws DataError
    // (with 1-based line number) when the field count is wrong.
    bool next_row(std::vector<std::string>& fields);

    std::size_t line_number() const { return line_; }
    const std::string& name() const { return name_; }

    [[noreturn]] void fail(const std::string& message) const;

private:
    std::istream& in_;
    std::string name_;
    std::size_t n_columns_;
    std::size_t line_ = 0;
};

}  // namespace mlho
