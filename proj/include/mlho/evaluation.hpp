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
#include <optional>
#include <string>
#include <vector>

#include "mlho/common.hpp"

namespace mlho {

struct RocCurve {
    // (false positive rate, true positive rate), from (0,0) to (1,1),
    // monotone non-decreasing in both coordinates.
    std::vector<std::pair<double, double>> points;
    double auc = 0.0;
};

// Rank-statistic AUC with half credit for ties (Mann-Whitney normalization);
// curve points from sorted unique thresholds. Throws DataError unless both
// classes are present.
RocCurve auc_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

double trapezoid_area(const std::vector<std::pair<double, double>>& points);

struct CiSummary {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// mean ± t_{n-1, (1+level)/2} * sd / sqrt(n); requires >= 2 values.
CiSummary mean_ci(const std::vector<double>& values, double level = 0.95);

// Student-t inverse CDF, exposed because the CI width is part of the
// reported numbers and deserves its own tests.
double student_t_quantile(double p, double df);

enum class BinScheme { EqualWidth, Quantile };
const char* bin_scheme_name(BinScheme s);

struct CalibrationBin {
    double lo = 0.0;  // nominal bin edges (equal-width) or score-rank edges
    double hi = 0.0;
    std::optional<double> mean_pred;  // absent when the bin is empty
    std::optional<double> observed;   // fraction of positives, absent when empty
    std::size_t count = 0;
};

struct CalibrationCurve {
    std::vector<CalibrationBin> bins;
    BinScheme scheme = BinScheme::EqualWidth;

    // mean |observed - mean_pred| over populated bins: how far the curve
    // sits from the diagonal
    double mean_abs_gap() const;
};

// Equal-width bins partition [0,1]; quantile bins are assigned by score rank
// so counts differ by at most one when scores are distinct. Empty bins are
// emitted with count 0.
CalibrationCurve calibration_bins(const std::vector<double>& scores,
                                  const std::vector<std::uint8_t>& labels, std::size_t n_bins,
                                  BinScheme scheme);

struct MetricSummary {
    double mean_auc = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    std::vector<double> per_iteration_auc;
};

MetricSummary summarize_aucs(const std::vector<double>& aucs, double level = 0.95);

}  // namespace mlho
