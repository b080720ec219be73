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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "mlho/learners.hpp"

namespace mlho {

namespace {

inline double sigmoid(double f) {
    if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
    const double e = std::exp(f);
    return e / (1.0 + e);
}

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

// Dense column-major design matrix with training standardization.
struct Design {
    std::size_t n = 0, p = 0;
    std::vector<double> x;  // standardized, column-major
    std::vector<double> mean, scale;
    std::vector<bool> constant;  // zero-variance columns are frozen at 0

    const double* col(std::size_t j) const { return x.data() + j * n; }

    static Design build(const SparseFeatureMatrix& m) {
        Design d;
        d.n = m.n_rows();
        d.p = m.n_cols();
        d.x.assign(d.n * d.p, 0.0);
        for (std::size_t r = 0; r < d.n; ++r)
            for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
                d.x[static_cast<std::size_t>(m.col_idx[k]) * d.n + r] = m.values[k];
        d.mean.assign(d.p, 0.0);
        d.scale.assign(d.p, 1.0);
        d.constant.assign(d.p, false);
        for (std::size_t j = 0; j < d.p; ++j) {
            double* c = d.x.data() + j * d.n;
            double mu = 0.0;
            for (std::size_t i = 0; i < d.n; ++i) mu += c[i];
            mu /= static_cast<double>(d.n);
            double ss = 0.0;
            for (std::size_t i = 0; i < d.n; ++i) ss += (c[i] - mu) * (c[i] - mu);
            const double sd = std::sqrt(ss / static_cast<double>(d.n));
            d.mean[j] = mu;
            if (sd > 1e-12) {
                d.scale[j] = sd;
                for (std::size_t i = 0; i < d.n; ++i) c[i] = (c[i] - mu) / sd;
            } else {
                d.constant[j] = true;
                for (std::size_t i = 0; i < d.n; ++i) c[i] = 0.0;
            }
        }
        return d;
    }
};

struct PathPoint {
    std::vector<double> beta;  // standardized scale
    double beta0 = 0.0;
};

// Proximal-Newton fit at one lambda, warm-started from state. Re-linearizes
// until a coordinate-descent pass on fresh weights no longer moves the
// coefficients; at that fixpoint the quadratic stationarity conditions
// coincide with the exact KKT conditions of the penalized logistic objective.
void fit_at_lambda(const Design& d, const std::vector<std::uint8_t>& y, double alpha, double lambda,
                   PathPoint& state, double tol, int max_outer) {
    const std::size_t n = d.n, p = d.p;
    const double dn = static_cast<double>(n);
    std::vector<double> eta(n), w(n), r(n), wxx(p);

    for (int outer = 0; outer < max_outer; ++outer) {
        // quadratic approximation at the current coefficients
        for (std::size_t i = 0; i < n; ++i) eta[i] = state.beta0;
        for (std::size_t j = 0; j < p; ++j) {
            if (state.beta[j] == 0.0) continue;
            const double* c = d.col(j);
            const double b = state.beta[j];
            for (std::size_t i = 0; i < n; ++i) eta[i] += c[i] * b;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double prob = sigmoid(eta[i]);
            double wi = prob * (1.0 - prob);
            if (wi < 1e-8) wi = 1e-8;
            w[i] = wi;
            // working residual relative to the current eta; w cancels at the
            // fixpoint so the floor above does not disturb the KKT residuals
            r[i] = (static_cast<double>(y[i]) - prob) / wi;
        }
        for (std::size_t j = 0; j < p; ++j) {
            wxx[j] = 0.0;
            if (d.constant[j]) continue;
            const double* c = d.col(j);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += w[i] * c[i] * c[i];
            wxx[j] = acc / dn;
        }
        double sum_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum_w += w[i];

        // cyclic coordinate descent on the quadratic: full passes detect new
        // active coordinates, then the active set is iterated to convergence
        auto update_coordinate = [&](std::size_t j) {
            const double* c = d.col(j);
            double wxr = 0.0;
            for (std::size_t i = 0; i < n; ++i) wxr += w[i] * c[i] * r[i];
            const double u = wxr / dn + wxx[j] * state.beta[j];
            const double updated = soft_threshold(u, lambda * alpha) / (wxx[j] + lambda * (1.0 - alpha));
            const double delta = updated - state.beta[j];
            if (delta != 0.0) {
                state.beta[j] = updated;
                for (std::size_t i = 0; i < n; ++i) r[i] -= c[i] * delta;
            }
            return std::fabs(delta);
        };
        auto update_intercept = [&] {
            double wr = 0.0;
            for (std::size_t i = 0; i < n; ++i) wr += w[i] * r[i];
            const double delta0 = wr / sum_w;
            if (delta0 != 0.0) {
                state.beta0 += delta0;
                for (std::size_t i = 0; i < n; ++i) r[i] -= delta0;
            }
            return std::fabs(delta0);
        };

        double outer_movement = 0.0;
        std::vector<std::size_t> active;
        for (int cycle = 0; cycle < 100; ++cycle) {
            // full pass
            double full_change = 0.0;
            active.clear();
            for (std::size_t j = 0; j < p; ++j) {
                if (d.constant[j]) continue;
                full_change = std::max(full_change, update_coordinate(j));
                if (state.beta[j] != 0.0) active.push_back(j);
            }
            full_change = std::max(full_change, update_intercept());
            outer_movement = std::max(outer_movement, full_change);
            if (full_change < tol) break;
            // active-set passes
            for (int sweep = 0; sweep < 1000; ++sweep) {
                double max_change = 0.0;
                for (std::size_t j : active) max_change = std::max(max_change, update_coordinate(j));
                max_change = std::max(max_change, update_intercept());
                if (max_change < tol) break;
            }
        }
        if (outer_movement < tol) break;  // fixpoint on fresh weights
    }
    // boundary coordinates can pick up rounding dust; they are exact zeros
    for (double& b : state.beta)
        if (std::fabs(b) < 1e-10) b = 0.0;
}

}  // namespace

double ElasticNetModel::predict_score(const SparseFeatureMatrix& m, std::size_t row) const {
    double eta = intercept;
    for (std::size_t k = m.row_ptr[row]; k < m.row_ptr[row + 1]; ++k)
        eta += coefficients[m.col_idx[k]] * m.values[k];
    return eta;
}

ElasticNetModel fit_elastic_net(const SparseFeatureMatrix& train, const std::vector<std::uint8_t>& labels,
                                const EnetOptions& options, std::uint64_t seed) {
    const std::size_t n = train.n_rows();
    const std::size_t p = train.n_cols();
    if (n == 0 || labels.size() != n) throw Error("fit_elastic_net: empty data or label mismatch");
    if (options.alpha < 0.0 || options.alpha > 1.0) throw ConfigError("alpha must be in [0,1]");

    std::size_t n_pos = 0;
    for (auto v : labels) n_pos += v ? 1 : 0;
    if (n_pos == 0 || n_pos == n)
        throw DataError("fit_elastic_net: labels are single-class, log-odds undefined");
    const double prevalence = static_cast<double>(n_pos) / static_cast<double>(n);

    Design design = Design::build(train);

    // lambda path from the smallest lambda that zeroes every coefficient
    std::vector<double> path = options.lambda_path;
    if (path.empty()) {
        double lambda_max = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (design.constant[j]) continue;
            const double* c = design.col(j);
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                dot += c[i] * (static_cast<double>(labels[i]) - prevalence);
            lambda_max = std::max(lambda_max, std::fabs(dot) / static_cast<double>(n));
        }
        lambda_max /= std::max(options.alpha, 1e-3);
        if (lambda_max <= 0.0) lambda_max = 1e-3;
        const int k = std::max(2, options.n_lambda);
        path.resize(static_cast<std::size_t>(k));
        const double log_max = std::log(lambda_max);
        const double log_min = std::log(lambda_max * options.lambda_min_ratio);
        for (int i = 0; i < k; ++i)
            path[static_cast<std::size_t>(i)] =
                std::exp(log_max + (log_min - log_max) * static_cast<double>(i) / static_cast<double>(k - 1));
    }

    // full-data path with warm starts
    std::vector<PathPoint> full_path(path.size());
    {
        PathPoint state;
        state.beta.assign(p, 0.0);
        state.beta0 = std::log(prevalence / (1.0 - prevalence));
        for (std::size_t k = 0; k < path.size(); ++k) {
            fit_at_lambda(design, labels, options.alpha, path[k], state, options.tol, options.max_outer);
            full_path[k] = state;
        }
    }

    // choose lambda by cross-validated deviance (ties favor the larger lambda)
    std::size_t chosen = 0;
    if (path.size() > 1 && options.cv_folds >= 2) {
        std::vector<int> fold = stratified_folds(labels, options.cv_folds, derive_seed(seed, "enet-cv"));
        std::vector<double> cv_dev(path.size(), 0.0);
        std::vector<int> cv_n(path.size(), 0);
        for (int f = 0; f < options.cv_folds; ++f) {
            std::vector<std::size_t> train_rows, valid_rows;
            for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? valid_rows : train_rows).push_back(i);
            if (valid_rows.empty() || train_rows.empty()) continue;
            std::size_t tr_pos = 0;
            for (std::size_t i : train_rows) tr_pos += labels[i] ? 1 : 0;
            if (tr_pos == 0 || tr_pos == train_rows.size()) continue;

            // fold-local design (restandardized on the fold's training rows)
            SparseFeatureMatrix sub = train.select_rows(train_rows);
            std::vector<std::uint8_t> sub_y(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i) sub_y[i] = labels[train_rows[i]];
            Design sub_design = Design::build(sub);
            const double sub_prev = static_cast<double>(tr_pos) / static_cast<double>(train_rows.size());
            PathPoint state;
            state.beta.assign(p, 0.0);
            state.beta0 = std::log(sub_prev / (1.0 - sub_prev));
            // fold fits only rank lambdas, a looser tolerance suffices
            const double fold_tol = std::max(options.tol, 1e-7);
            for (std::size_t k = 0; k < path.size(); ++k) {
                fit_at_lambda(sub_design, sub_y, options.alpha, path[k], state, fold_tol, options.max_outer);
                // evaluate on held-out rows in the fold-local standardization
                double dev = 0.0;
                for (std::size_t i : valid_rows) {
                    double eta = state.beta0;
                    for (std::size_t j = 0; j < p; ++j) {
                        if (state.beta[j] == 0.0 || sub_design.constant[j]) continue;
                        const double raw = train.at(i, static_cast<std::uint32_t>(j));
                        eta += state.beta[j] * (raw - sub_design.mean[j]) / sub_design.scale[j];
                    }
                    const double log1pexp = std::max(eta, 0.0) + std::log1p(std::exp(-std::fabs(eta)));
                    dev += log1pexp - (labels[i] ? eta : 0.0);
                }
                cv_dev[k] += 2.0 * dev;
                cv_n[k] += static_cast<int>(valid_rows.size());
            }
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < path.size(); ++k) {
            if (cv_n[k] == 0) continue;
            const double mean_dev = cv_dev[k] / static_cast<double>(cv_n[k]);
            if (mean_dev < best - 1e-12) {
                best = mean_dev;
                chosen = k;
            }
        }
    }

    ElasticNetModel model;
    model.alpha = options.alpha;
    model.lambda = path[chosen];
    model.lambda_path = path;
    model.n_features = p;
    model.feature_mean = design.mean;
    model.feature_scale = design.scale;
    model.path_l1_norm.resize(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        double l1 = 0.0;
        for (double b : full_path[k].beta) l1 += std::fabs(b);
        model.path_l1_norm[k] = l1;
    }
    // map the chosen point back to the original feature scale
    const PathPoint& sol = full_path[chosen];
    model.coefficients.assign(p, 0.0);
    double intercept = sol.beta0;
    for (std::size_t j = 0; j < p; ++j) {
        if (design.constant[j] || sol.beta[j] == 0.0) continue;
        model.coefficients[j] = sol.beta[j] / design.scale[j];
        intercept -= sol.beta[j] * design.mean[j] / design.scale[j];
    }
    model.intercept = intercept;
    return model;
}

std::vector<double> predict_elastic_net(const ElasticNetModel& model, const SparseFeatureMatrix& rows) {
    if (rows.n_cols() != model.n_features)
        throw Error("predict_elastic_net: rows are indexed by a different feature dictionary");
    std::vector<double> probs(rows.n_rows());
    for (std::size_t r = 0; r < rows.n_rows(); ++r) probs[r] = sigmoid(model.predict_score(rows, r));
    return probs;
}

std::vector<std::uint32_t> embedded_feature_screen(const ElasticNetModel& model) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t j = 0; j < model.coefficients.size(); ++j)
        if (model.coefficients[j] != 0.0) out.push_back(j);
    return out;
}

namespace {
constexpr char kEnetMagic[4] = {'M', 'L', 'H', 'E'};
constexpr std::uint32_t kEnetVersion = 1;

void write_dvec(std::ostream& out, const std::vector<double>& v) {
    std::uint64_t size = v.size();
    out.write(reinterpret_cast<const char*>(&size), 8);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
std::vector<double> read_dvec(std::istream& in) {
    std::uint64_t size = 0;
    in.read(reinterpret_cast<char*>(&size), 8);
    std::vector<double> v(size);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size * sizeof(double)));
    return v;
}
}  // namespace

void save_elastic_net(const ElasticNetModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out.write(kEnetMagic, 4);
    out.write(reinterpret_cast<const char*>(&kEnetVersion), 4);
    out.write(reinterpret_cast<const char*>(&model.intercept), 8);
    out.write(reinterpret_cast<const char*>(&model.alpha), 8);
    out.write(reinterpret_cast<const char*>(&model.lambda), 8);
    std::uint64_t nf = model.n_features;
    out.write(reinterpret_cast<const char*>(&nf), 8);
    write_dvec(out, model.coefficients);
    write_dvec(out, model.feature_mean);
    write_dvec(out, model.feature_scale);
    write_dvec(out, model.lambda_path);
    write_dvec(out, model.path_l1_norm);
    if (!out) throw Error("failed writing model file: " + path);
}

ElasticNetModel load_elastic_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != std::string_view(kEnetMagic, 4))
        throw DataError("not an elastic-net model file: " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != kEnetVersion) throw DataError("unsupported model version");
    ElasticNetModel model;
    in.read(reinterpret_cast<char*>(&model.intercept), 8);
    in.read(reinterpret_cast<char*>(&model.alpha), 8);
    in.read(reinterpret_cast<char*>(&model.lambda), 8);
    std::uint64_t nf = 0;
    in.read(reinterpret_cast<char*>(&nf), 8);
    model.n_features = nf;
    model.coefficients = read_dvec(in);
    model.feature_mean = read_dvec(in);
    model.feature_scale = read_dvec(in);
    model.lambda_path = read_dvec(in);
    model.path_l1_norm = read_dvec(in);
    if (!in) throw DataError("model file truncated: " + path);
    return model;
}

void export_coefficients_text(const ElasticNetModel& model, const std::vector<FeatureDescriptor>& dict,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write coefficient export: " + path);
    out << "feature,coefficient\n";
    out << "(intercept)," << format_double(model.intercept) << "\n";
    for (std::uint32_t j = 0; j < model.coefficients.size(); ++j)
        if (model.coefficients[j] != 0.0)
            out << dict[j].label() << ',' << format_double(model.coefficients[j]) << "\n";
}

}  // namespace mlho
