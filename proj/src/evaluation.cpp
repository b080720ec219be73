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

#include "mlho/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlho {

RocCurve auc_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw Error("auc_roc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto v : labels) n_pos += v ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("auc_roc: both classes must be present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mann-Whitney via average ranks over tie groups.
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    const double auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));

    // Curve: sweep thresholds from high score to low; one point per distinct
    // score. With half-credit ties this trapezoid area equals the rank AUC.
    RocCurve curve;
    curve.auc = auc;
    curve.points.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = n; i > 0;) {
        std::size_t j = i;
        while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) --j;
        for (std::size_t k = j; k < i; ++k) {
            if (labels[order[k]]) ++tp;
            else ++fp;
        }
        curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                                  static_cast<double>(tp) / static_cast<double>(n_pos));
        i = j;
    }
    return curve;
}

double trapezoid_area(const std::vector<std::pair<double, double>>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].first - points[i - 1].first) * 0.5 * (points[i].second + points[i - 1].second);
    return area;
}

namespace {

// Regularized incomplete beta by Lentz continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("t quantile: p must be in (0,1)");
    if (df <= 0.0) throw ConfigError("t quantile: df must be positive");
    if (p == 0.5) return 0.0;
    const double tail = p > 0.5 ? 1.0 - p : p;  // one-sided tail mass
    // Solve I_{df/(df+t^2)}(df/2, 1/2) = 2*tail for t >= 0 by bisection.
    auto tail_of = [&](double t) { return 0.5 * ibeta(df / 2.0, 0.5, df / (df + t * t)); };
    double lo = 0.0, hi = 1.0;
    while (tail_of(hi) > tail && hi < 1e12) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (tail_of(mid) > tail) lo = mid;
        else hi = mid;
    }
    const double t = 0.5 * (lo + hi);
    return p > 0.5 ? t : -t;
}

CiSummary mean_ci(const std::vector<double>& values, double level) {
    if (values.size() < 2) throw DataError("mean_ci requires at least 2 values");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("mean_ci: level must be in (0,1)");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double t = student_t_quantile(0.5 + level / 2.0, n - 1.0);
    const double half = t * sd / std::sqrt(n);
    return {mean, mean - half, mean + half};
}

const char* bin_scheme_name(BinScheme s) {
    return s == BinScheme::EqualWidth ? "equal-width" : "quantile";
}

double CalibrationCurve::mean_abs_gap() const {
    double total = 0.0;
    std::size_t populated = 0;
    for (const auto& b : bins) {
        if (b.count == 0 || !b.observed || !b.mean_pred) continue;
        total += std::fabs(*b.observed - *b.mean_pred);
        ++populated;
    }
    return populated > 0 ? total / static_cast<double>(populated) : 0.0;
}

CalibrationCurve calibration_bins(const std::vector<double>& scores,
                                  const std::vector<std::uint8_t>& labels, std::size_t n_bins,
                                  BinScheme scheme) {
    if (n_bins < 2) throw ConfigError("calibration_bins: n_bins must be >= 2");
    if (scores.size() != labels.size()) throw Error("calibration_bins: length mismatch");
    const std::size_t n = scores.size();

    CalibrationCurve curve;
    curve.scheme = scheme;
    curve.bins.resize(n_bins);
    std::vector<double> pred_sum(n_bins, 0.0);
    std::vector<std::size_t> pos(n_bins, 0);

    if (scheme == BinScheme::EqualWidth) {
        for (std::size_t b = 0; b < n_bins; ++b) {
            curve.bins[b].lo = static_cast<double>(b) / static_cast<double>(n_bins);
            curve.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = std::min(std::max(scores[i], 0.0), 1.0);
            std::size_t b = std::min(static_cast<std::size_t>(s * static_cast<double>(n_bins)), n_bins - 1);
            ++curve.bins[b].count;
            pred_sum[b] += scores[i];
            pos[b] += labels[i] ? 1 : 0;
        }
    } else {
        // Rank-based assignment: bin k receives ranks [k*n/n_bins, (k+1)*n/n_bins).
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        for (std::size_t rank = 0; rank < n; ++rank) {
            std::size_t b = rank * n_bins / n;
            std::size_t i = order[rank];
            ++curve.bins[b].count;
            pred_sum[b] += scores[i];
            pos[b] += labels[i] ? 1 : 0;
        }
        for (std::size_t b = 0; b < n_bins; ++b) {
            curve.bins[b].lo = static_cast<double>(b) / static_cast<double>(n_bins);
            curve.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
        }
    }

    for (std::size_t b = 0; b < n_bins; ++b) {
        if (curve.bins[b].count > 0) {
            curve.bins[b].mean_pred = pred_sum[b] / static_cast<double>(curve.bins[b].count);
            curve.bins[b].observed = static_cast<double>(pos[b]) / static_cast<double>(curve.bins[b].count);
        }
    }
    return curve;
}

MetricSummary summarize_aucs(const std::vector<double>& aucs, double level) {
    MetricSummary s;
    s.per_iteration_auc = aucs;
    if (aucs.size() >= 2) {
        CiSummary ci = mean_ci(aucs, level);
        s.mean_auc = ci.mean;
        s.ci_lower = ci.lower;
        s.ci_upper = ci.upper;
    } else if (aucs.size() == 1) {
        s.mean_auc = s.ci_lower = s.ci_upper = aucs[0];
    }
    return s;
}

}  // namespace mlho
