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

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlho {

// Error taxonomy maps 1:1 onto CLI exit codes / C API status codes:
// ConfigError -> 2, DataError -> 3, anything else -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Calendar day, stored as days since 1970-01-01. Day granularity only;
// same-day ordering is the caller's concern.
struct Date {
    std::int32_t days = 0;

    auto operator<=>(const Date&) const = default;

    static Date from_civil(int year, int month, int day);
    void to_civil(int& year, int& month, int& day) const;

    // Strict YYYY-MM-DD; rejects impossible calendar days such as 2020-02-30.
    static std::optional<Date> parse(std::string_view text);
    std::string format() const;

    Date plus_days(std::int32_t n) const { return Date{days + n}; }
};

// --- deterministic randomness -------------------------------------------
//
// All stochastic steps in the project draw from this generator so results
// are reproducible bit-for-bit across platforms and thread counts.

std::uint64_t splitmix64_next(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view text);

// Expands one master seed into independent per-purpose streams. The same
// (master, tag, index) always yields the same seed, so pipeline cells can
// run in any order or in parallel.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    // Uniform in [0, 1) with 53 bits of precision.
    double real01();
    double normal(double mean = 0.0, double sd = 1.0);
    int poisson(double mean);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
};

// --- small shared helpers -------------------------------------------------

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

// Shortest round-trip decimal rendering; used by every text export so that
// rerunning with the same seed produces byte-identical files.
std::string format_double(double v);

// Runs fn(i) for i in [0, n). Output slots must be preallocated by index;
// worker count never changes the result.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace mlho
