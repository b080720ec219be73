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

#include "mlho/msmr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace mlho {

namespace {

inline double xlogx_ratio(double joint, double margin_product) {
    // joint * ln(joint / margin_product) with 0 * ln 0 := 0
    if (joint <= 0.0) return 0.0;
    return joint * std::log(joint / margin_product);
}

std::size_t count_positives(const std::vector<std::uint8_t>& labels) {
    std::size_t c = 0;
    for (auto v : labels) c += v ? 1 : 0;
    return c;
}

}  // namespace

double mi_binary(std::size_t n, std::size_t n_x1, std::size_t n_y1, std::size_t n_x1y1) {
    if (n == 0) return 0.0;
    const double dn = static_cast<double>(n);
    const double p11 = static_cast<double>(n_x1y1) / dn;
    const double p10 = static_cast<double>(n_x1 - n_x1y1) / dn;
    const double p01 = static_cast<double>(n_y1 - n_x1y1) / dn;
    const double p00 = static_cast<double>(n - n_x1 - n_y1 + n_x1y1) / dn;
    const double px1 = static_cast<double>(n_x1) / dn;
    const double px0 = 1.0 - px1;
    const double py1 = static_cast<double>(n_y1) / dn;
    const double py0 = 1.0 - py1;
    double mi = 0.0;
    mi += xlogx_ratio(p00, px0 * py0);
    mi += xlogx_ratio(p01, px0 * py1);
    mi += xlogx_ratio(p10, px1 * py0);
    mi += xlogx_ratio(p11, px1 * py1);
    return mi < 0.0 ? 0.0 : mi;  // clip fp noise
}

double mutual_information(const SparseFeatureMatrix& m, std::uint32_t column,
                          const std::vector<std::uint8_t>& labels) {
    if (labels.size() != m.n_rows()) throw Error("mutual_information: label length mismatch");
    std::size_t n_x1 = 0, n_x1y1 = 0;
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        if (m.at(r, column) != 0.0) {
            ++n_x1;
            if (labels[r]) ++n_x1y1;
        }
    return mi_binary(m.n_rows(), n_x1, count_positives(labels), n_x1y1);
}

std::vector<MiScore> mi_scores(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& labels,
                               int jobs) {
    if (labels.size() != m.n_rows()) throw Error("mi_scores: label length mismatch");
    const std::size_t n_pos = count_positives(labels);
    std::vector<std::size_t> nnz(m.n_cols(), 0), nnz_pos(m.n_cols(), 0);
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            ++nnz[m.col_idx[k]];
            if (labels[r]) ++nnz_pos[m.col_idx[k]];
        }
    std::vector<MiScore> scores(m.n_cols());
    parallel_for(m.n_cols(), jobs, [&](std::size_t c) {
        scores[c] = {static_cast<std::uint32_t>(c), mi_binary(m.n_rows(), nnz[c], n_pos, nnz_pos[c])};
    });
    return scores;
}

SparseFeatureMatrix prevalence_filter(const SparseFeatureMatrix& m, double min_prevalence) {
    if (min_prevalence < 0.0 || min_prevalence >= 1.0)
        throw ConfigError("min_prevalence must be in [0,1)");
    auto prevalence = m.column_prevalence();
    std::vector<std::uint32_t> keep;
    for (std::uint32_t c = 0; c < m.n_cols(); ++c)
        if (prevalence[c] >= min_prevalence) keep.push_back(c);
    if (keep.empty())
        throw DataError("prevalence_filter removed every feature (threshold " +
                        format_double(min_prevalence) + ")");
    if (keep.size() == m.n_cols()) return m;
    return m.select_columns(keep);
}

SparseFeatureMatrix mi_rank_filter(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& labels,
                                   std::size_t keep_count, int jobs) {
    if (keep_count < 1) throw ConfigError("mi keep_count must be >= 1");
    if (m.n_cols() <= keep_count) return m;
    auto scores = mi_scores(m, labels, jobs);
    std::vector<std::uint32_t> order(m.n_cols());
    std::iota(order.begin(), order.end(), 0);
    // ties by dictionary order: stable sort on descending mi
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return scores[a].mi > scores[b].mi; });
    std::vector<std::uint32_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep_count));
    std::sort(keep.begin(), keep.end());  // preserve dictionary order among survivors
    return m.select_columns(keep);
}

namespace {

// MI between the 4-level joint (X_c, X_s) and binary Y, from sparse columns.
// All eight cell counts derive from |c|, |s|, |c∩s| and their label-1 parts.
// The selected column s is held as a row bitmap so each candidate costs only
// a pass over its own nonzeros.
struct PairMiScorer {
    const ColumnIndex& cols;
    const std::vector<std::uint8_t>& labels;
    std::size_t n;
    std::size_t n_pos;
    const std::vector<std::size_t>& nnz;
    const std::vector<std::size_t>& nnz_pos;
    std::vector<std::uint64_t> selected_bits;

    void set_selected(std::uint32_t s) {
        selected_bits.assign((n + 63) / 64, 0);
        for (std::size_t k = cols.col_ptr[s]; k < cols.col_ptr[s + 1]; ++k) {
            const std::uint32_t r = cols.row_idx[k];
            selected_bits[r >> 6] |= std::uint64_t(1) << (r & 63);
        }
    }

    double operator()(std::uint32_t c, std::uint32_t s) const {
        std::size_t both = 0, both_pos = 0;
        for (std::size_t k = cols.col_ptr[c]; k < cols.col_ptr[c + 1]; ++k) {
            const std::uint32_t r = cols.row_idx[k];
            if (selected_bits[r >> 6] & (std::uint64_t(1) << (r & 63))) {
                ++both;
                if (labels[r]) ++both_pos;
            }
        }
        const double dn = static_cast<double>(n);
        const std::size_t c1 = nnz[c], s1 = nnz[s];
        const std::size_t c1p = nnz_pos[c], s1p = nnz_pos[s];
        // cell counts for z = (x_c, x_s), split by y
        const std::size_t z11 = both, z11p = both_pos;
        const std::size_t z10 = c1 - both, z10p = c1p - both_pos;
        const std::size_t z01 = s1 - both, z01p = s1p - both_pos;
        const std::size_t z00 = n - c1 - s1 + both;
        const std::size_t z00p = n_pos - c1p - s1p + both_pos;
        const double py1 = static_cast<double>(n_pos) / dn;
        const double py0 = 1.0 - py1;
        double mi = 0.0;
        auto add = [&](std::size_t z, std::size_t zp) {
            const double pz = static_cast<double>(z) / dn;
            mi += xlogx_ratio(static_cast<double>(zp) / dn, pz * py1);
            mi += xlogx_ratio(static_cast<double>(z - zp) / dn, pz * py0);
        };
        add(z00, z00p);
        add(z01, z01p);
        add(z10, z10p);
        add(z11, z11p);
        return mi < 0.0 ? 0.0 : mi;
    }
};

}  // namespace

JmiSelection jmi_greedy_select(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& labels,
                               std::size_t budget, int jobs) {
    if (budget < 1) throw ConfigError("jmi budget must be >= 1");
    if (m.n_cols() == 0) throw DataError("jmi_greedy_select: empty matrix");
    if (labels.size() != m.n_rows()) throw Error("jmi_greedy_select: label length mismatch");

    const std::size_t p = m.n_cols();
    const std::size_t n = m.n_rows();
    const std::size_t n_pos = count_positives(labels);

    ColumnIndex cols = ColumnIndex::build(m);
    std::vector<std::size_t> nnz(p, 0), nnz_pos(p, 0);
    for (std::uint32_t c = 0; c < p; ++c) {
        nnz[c] = cols.col_ptr[c + 1] - cols.col_ptr[c];
        for (std::size_t k = cols.col_ptr[c]; k < cols.col_ptr[c + 1]; ++k)
            if (labels[cols.row_idx[k]]) ++nnz_pos[c];
    }

    JmiSelection result;
    std::vector<bool> taken(p, false);

    // Scores within kTieEpsilon are treated as tied and break toward the
    // dictionary-earlier feature, which keeps the argmax stable against
    // floating-point accumulation order.
    constexpr double kTieEpsilon = 1e-9;

    // Seed with the top marginal-MI feature.
    std::uint32_t best = 0;
    double best_mi = -1.0;
    for (std::uint32_t c = 0; c < p; ++c) {
        double mi = mi_binary(n, nnz[c], n_pos, nnz_pos[c]);
        if (mi > best_mi + kTieEpsilon) {
            best_mi = mi;
            best = c;
        }
    }
    result.selected.push_back(best);
    taken[best] = true;

    PairMiScorer scorer{cols, labels, n, n_pos, nnz, nnz_pos, {}};
    // J accumulators grow by one pairwise term per step.
    std::vector<double> accum(p, 0.0);
    const std::size_t target = std::min(budget, p);
    while (result.selected.size() < target) {
        const std::uint32_t last = result.selected.back();
        scorer.set_selected(last);
        parallel_for(p, jobs, [&](std::size_t c) {
            if (!taken[c]) accum[c] += scorer(static_cast<std::uint32_t>(c), last);
        });
        std::uint32_t winner = UINT32_MAX;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::uint32_t c = 0; c < p; ++c) {
            if (taken[c]) continue;
            if (accum[c] > best_score + kTieEpsilon) {
                best_score = accum[c];
                winner = c;
            }
        }
        if (winner == UINT32_MAX) break;
        result.selected.push_back(winner);
        result.step_scores.push_back(best_score);
        taken[winner] = true;
    }
    return result;
}

void write_selection_report(const std::string& path, const SparseFeatureMatrix& m,
                            const JmiSelection& selection, const std::vector<MiScore>& scores) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write selection report: " + path);
    out << "rank,kind,code_a,code_b,mi,jmi_gain\n";
    for (std::size_t i = 0; i < selection.selected.size(); ++i) {
        std::uint32_t c = selection.selected[i];
        const FeatureDescriptor& f = m.dictionary[c];
        const char* kind = f.kind == FeatureKind::Raw        ? "raw"
                           : f.kind == FeatureKind::Sequence ? "sequence"
                                                             : "demographic";
        out << (i + 1) << ',' << kind << ',' << f.code_a << ',' << f.code_b << ','
            << format_double(scores[c].mi) << ',';
        if (i > 0) out << format_double(selection.step_scores[i - 1]);
        out << "\n";
    }
}

}  // namespace mlho
