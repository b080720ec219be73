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
#include <numeric>

#include "mlho/learners.hpp"

namespace mlho {

namespace {

inline double sigmoid(double f) {
    if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
    const double e = std::exp(f);
    return e / (1.0 + e);
}

// Attenuates runaway Newton steps on separable leaves; never binds in the
// shrinkage regimes used here.
constexpr double kMaxLeafValue = 15.0;

// Column entries sorted by value (ascending) for split enumeration.
struct ValueSortedColumns {
    std::vector<std::size_t> col_ptr;
    std::vector<std::uint32_t> rows;
    std::vector<double> values;

    static ValueSortedColumns build(const SparseFeatureMatrix& m) {
        ColumnIndex byrow = ColumnIndex::build(m);
        ValueSortedColumns out;
        out.col_ptr = byrow.col_ptr;
        out.rows = byrow.row_idx;
        out.values = byrow.values;
        for (std::size_t c = 0; c + 1 < out.col_ptr.size(); ++c) {
            const std::size_t lo = out.col_ptr[c], hi = out.col_ptr[c + 1];
            std::vector<std::size_t> order(hi - lo);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return out.values[lo + a] < out.values[lo + b];
            });
            std::vector<std::uint32_t> r(hi - lo);
            std::vector<double> v(hi - lo);
            for (std::size_t k = 0; k < order.size(); ++k) {
                r[k] = out.rows[lo + order[k]];
                v[k] = out.values[lo + order[k]];
            }
            std::copy(r.begin(), r.end(), out.rows.begin() + static_cast<std::ptrdiff_t>(lo));
            std::copy(v.begin(), v.end(), out.values.begin() + static_cast<std::ptrdiff_t>(lo));
        }
        return out;
    }
};

struct ValueGroup {
    double value;
    std::size_t count;
    double sum;
};

struct SplitChoice {
    bool valid = false;
    std::int32_t feature = -1;
    double threshold = 0.0;
    double improvement = 0.0;
};

struct ActiveNode {
    std::int32_t node_id;
    std::vector<std::uint32_t> rows;  // bag rows, sorted
    std::size_t count = 0;
    double sum = 0.0;  // sum of residuals
    SplitChoice best;
};

}  // namespace

double RegressionTree::predict(const SparseFeatureMatrix& m, std::size_t row) const {
    std::int32_t cur = 0;
    for (;;) {
        const TreeNode& node = nodes[static_cast<std::size_t>(cur)];
        if (node.feature < 0) return node.leaf_value;
        const double v = m.at(row, static_cast<std::uint32_t>(node.feature));
        cur = v <= node.threshold ? node.left : node.right;
    }
}

double GbmModel::predict_score(const SparseFeatureMatrix& m, std::size_t row) const {
    double acc = 0.0;
    for (const auto& tree : trees) acc += tree.predict(m, row);
    return f0 + shrinkage * acc;
}

double bernoulli_deviance(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw Error("bernoulli_deviance: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double f = scores[i];
        // log(1 + e^f) computed stably
        const double log1pexp = std::max(f, 0.0) + std::log1p(std::exp(-std::fabs(f)));
        total += log1pexp - (labels[i] ? f : 0.0);
    }
    return 2.0 * total / static_cast<double>(scores.size());
}

GbmModel fit_gbm(const SparseFeatureMatrix& train, const std::vector<std::uint8_t>& labels,
                 const GbmHyper& hyper, std::uint64_t seed) {
    const std::size_t n = train.n_rows();
    const std::size_t p = train.n_cols();
    if (n == 0 || labels.size() != n) throw Error("fit_gbm: empty training data or label mismatch");
    if (!(hyper.bag_fraction > 0.0 && hyper.bag_fraction <= 1.0))
        throw ConfigError("bag_fraction must be in (0,1]");
    if (hyper.max_depth < 1 || hyper.n_trees < 0 || hyper.min_leaf < 1)
        throw ConfigError("invalid gbm hyperparameters");

    std::size_t n_pos = 0;
    for (auto v : labels) n_pos += v ? 1 : 0;
    if (n_pos == 0 || n_pos == n)
        throw DataError("fit_gbm: labels are single-class, log-odds undefined");

    GbmModel model;
    model.hyper = hyper;
    model.shrinkage = hyper.shrinkage;
    model.n_features = p;
    model.influence_accumulator.assign(p, 0.0);
    const double prevalence = static_cast<double>(n_pos) / static_cast<double>(n);
    model.f0 = std::log(prevalence / (1.0 - prevalence));

    ValueSortedColumns columns = ValueSortedColumns::build(train);

    std::vector<double> score(n, model.f0);
    std::vector<double> prob(n, prevalence);
    std::vector<double> residual(n), weight(n);
    double deviance = bernoulli_deviance(score, labels);

    const std::size_t bag_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(hyper.bag_fraction * static_cast<double>(n)));

    std::vector<std::uint32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::vector<std::int32_t> node_of(n);
    // scratch for per-node feature values during partitioning
    std::vector<double> feature_value(n, 0.0);

    for (int m_iter = 0; m_iter < hyper.n_trees; ++m_iter) {
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = static_cast<double>(labels[i]) - prob[i];
            weight[i] = prob[i] * (1.0 - prob[i]);
        }

        std::vector<std::uint32_t> bag;
        if (bag_size >= n) {
            bag = all_rows;
        } else {
            Rng rng(derive_seed(seed, "gbm-bag", static_cast<std::uint64_t>(m_iter)));
            std::vector<std::uint32_t> perm = all_rows;
            // partial Fisher-Yates: first bag_size entries are the sample
            for (std::size_t i = 0; i < bag_size; ++i) {
                std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
                std::swap(perm[i], perm[j]);
            }
            bag.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(bag_size));
            std::sort(bag.begin(), bag.end());
        }

        RegressionTree tree;
        std::fill(node_of.begin(), node_of.end(), -1);
        tree.nodes.emplace_back();  // root

        std::vector<ActiveNode> level(1);
        level[0].node_id = 0;
        level[0].rows = bag;
        level[0].count = bag.size();
        for (std::uint32_t r : bag) {
            level[0].sum += residual[r];
            node_of[r] = 0;
        }

        for (int depth = 0; depth < hyper.max_depth && !level.empty(); ++depth) {
            // slot lookup for the sweep
            std::vector<std::int32_t> slot_of_node(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < level.size(); ++s) slot_of_node[static_cast<std::size_t>(level[s].node_id)] = static_cast<std::int32_t>(s);

            std::vector<std::vector<ValueGroup>> groups(level.size());
            for (std::uint32_t j = 0; j < p; ++j) {
                for (auto& g : groups) g.clear();
                for (std::size_t k = columns.col_ptr[j]; k < columns.col_ptr[j + 1]; ++k) {
                    const std::uint32_t row = columns.rows[k];
                    const std::int32_t node = node_of[row];
                    if (node < 0) continue;
                    const std::int32_t s = slot_of_node[static_cast<std::size_t>(node)];
                    if (s < 0) continue;
                    const double v = columns.values[k];
                    auto& g = groups[static_cast<std::size_t>(s)];
                    if (g.empty() || g.back().value != v) g.push_back({v, 0, 0.0});
                    ++g.back().count;
                    g.back().sum += residual[row];
                }
                for (std::size_t s = 0; s < level.size(); ++s) {
                    ActiveNode& node = level[s];
                    auto& g = groups[s];
                    std::size_t nonzero_count = 0;
                    double nonzero_sum = 0.0;
                    for (const auto& grp : g) {
                        nonzero_count += grp.count;
                        nonzero_sum += grp.sum;
                    }
                    const std::size_t zero_count = node.count - nonzero_count;
                    if (zero_count > 0) {
                        const ValueGroup zero{0.0, zero_count, node.sum - nonzero_sum};
                        auto pos = std::lower_bound(g.begin(), g.end(), 0.0,
                                                    [](const ValueGroup& a, double v) { return a.value < v; });
                        g.insert(pos, zero);
                    }
                    if (g.size() < 2) continue;
                    const double parent_score = node.sum * node.sum / static_cast<double>(node.count);
                    std::size_t left_count = 0;
                    double left_sum = 0.0;
                    for (std::size_t gi = 0; gi + 1 < g.size(); ++gi) {
                        left_count += g[gi].count;
                        left_sum += g[gi].sum;
                        const std::size_t right_count = node.count - left_count;
                        if (left_count < static_cast<std::size_t>(hyper.min_leaf) ||
                            right_count < static_cast<std::size_t>(hyper.min_leaf))
                            continue;
                        const double right_sum = node.sum - left_sum;
                        const double improvement = left_sum * left_sum / static_cast<double>(left_count) +
                                                   right_sum * right_sum / static_cast<double>(right_count) -
                                                   parent_score;
                        // ties keep the earlier feature / lower threshold
                        if (improvement > node.best.improvement + 1e-12) {
                            node.best.valid = true;
                            node.best.feature = static_cast<std::int32_t>(j);
                            node.best.threshold = 0.5 * (g[gi].value + g[gi + 1].value);
                            node.best.improvement = improvement;
                        }
                    }
                }
            }

            // realize splits and build the next level
            std::vector<ActiveNode> next;
            for (auto& node : level) {
                if (!node.best.valid) {
                    TreeNode& tn = tree.nodes[static_cast<std::size_t>(node.node_id)];
                    tn.feature = -1;
                    continue;
                }
                const std::uint32_t j = static_cast<std::uint32_t>(node.best.feature);
                // look up this node's values of the split feature
                for (std::size_t k = columns.col_ptr[j]; k < columns.col_ptr[j + 1]; ++k) {
                    const std::uint32_t row = columns.rows[k];
                    if (node_of[row] == node.node_id) feature_value[row] = columns.values[k];
                }
                ActiveNode left_node, right_node;
                left_node.node_id = static_cast<std::int32_t>(tree.nodes.size());
                right_node.node_id = left_node.node_id + 1;
                for (std::uint32_t r : node.rows) {
                    const double v = feature_value[r];
                    if (v <= node.best.threshold) {
                        left_node.rows.push_back(r);
                        left_node.sum += residual[r];
                        node_of[r] = left_node.node_id;
                    } else {
                        right_node.rows.push_back(r);
                        right_node.sum += residual[r];
                        node_of[r] = right_node.node_id;
                    }
                    feature_value[r] = 0.0;  // reset scratch
                }
                left_node.count = left_node.rows.size();
                right_node.count = right_node.rows.size();
                TreeNode& tn = tree.nodes[static_cast<std::size_t>(node.node_id)];
                tn.feature = node.best.feature;
                tn.threshold = node.best.threshold;
                tn.improvement = node.best.improvement;
                tn.left = left_node.node_id;
                tn.right = right_node.node_id;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                next.push_back(std::move(left_node));
                next.push_back(std::move(right_node));
            }
            level = std::move(next);
        }

        // Newton leaf values for whatever remains active plus already-closed
        // leaves: recompute from node assignment of bag rows.
        {
            std::vector<double> leaf_sum_z(tree.nodes.size(), 0.0), leaf_sum_w(tree.nodes.size(), 0.0);
            for (std::uint32_t r : bag) {
                const std::int32_t leaf = node_of[r];
                leaf_sum_z[static_cast<std::size_t>(leaf)] += residual[r];
                leaf_sum_w[static_cast<std::size_t>(leaf)] += weight[r];
            }
            for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
                TreeNode& tn = tree.nodes[k];
                if (tn.feature >= 0) continue;
                double gamma = 0.0;
                if (leaf_sum_w[k] > 1e-12) gamma = leaf_sum_z[k] / leaf_sum_w[k];
                tn.leaf_value = std::clamp(gamma, -kMaxLeafValue, kMaxLeafValue);
            }
        }

        // accept only if full-training-set deviance does not increase
        std::vector<double> new_score(n);
        for (std::size_t i = 0; i < n; ++i)
            new_score[i] = score[i] + hyper.shrinkage * tree.predict(train, i);
        const double new_deviance = bernoulli_deviance(new_score, labels);
        if (new_deviance <= deviance + 1e-12) {
            score.swap(new_score);
            for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(score[i]);
            for (const auto& tn : tree.nodes)
                if (tn.feature >= 0)
                    model.influence_accumulator[static_cast<std::size_t>(tn.feature)] += tn.improvement;
            model.trees.push_back(std::move(tree));
            model.deviance_path.push_back(new_deviance);
            deviance = new_deviance;
        } else {
            ++model.rejected_iterations;
        }
    }
    return model;
}

std::vector<double> predict_gbm(const GbmModel& model, const SparseFeatureMatrix& rows) {
    if (rows.n_cols() != model.n_features)
        throw Error("predict_gbm: rows are indexed by a different feature dictionary (" +
                    std::to_string(rows.n_cols()) + " features, model has " +
                    std::to_string(model.n_features) + ")");
    std::vector<double> probs(rows.n_rows());
    for (std::size_t r = 0; r < rows.n_rows(); ++r) probs[r] = sigmoid(model.predict_score(rows, r));
    return probs;
}

InfluenceReport relative_influence(const GbmModel& model) {
    InfluenceReport report;
    if (model.trees.empty()) return report;
    const double m = static_cast<double>(model.trees.size());
    double max_value = 0.0;
    for (double v : model.influence_accumulator) max_value = std::max(max_value, v / m);
    if (max_value <= 0.0) return report;
    for (std::uint32_t j = 0; j < model.influence_accumulator.size(); ++j) {
        const double v = model.influence_accumulator[j] / m;
        if (v > 0.0) report.entries.push_back({j, 100.0 * v / max_value});
    }
    std::sort(report.entries.begin(), report.entries.end(), [](const InfluenceEntry& a, const InfluenceEntry& b) {
        return a.influence != b.influence ? a.influence > b.influence : a.feature < b.feature;
    });
    return report;
}

std::vector<std::uint32_t> embedded_feature_screen(const GbmModel& model) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t j = 0; j < model.influence_accumulator.size(); ++j)
        if (model.influence_accumulator[j] > 0.0) out.push_back(j);
    return out;
}

std::vector<int> stratified_folds(const std::vector<std::uint8_t>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_folds: k must be >= 2");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> fold(labels.size(), 0);
    for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return fold;
}

namespace {

constexpr char kGbmMagic[4] = {'M', 'L', 'H', 'G'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
void write_vec(std::ostream& out, const std::vector<double>& v) {
    write_pod<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
std::vector<double> read_vec(std::istream& in) {
    auto size = read_pod<std::uint64_t>(in);
    std::vector<double> v(size);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size * sizeof(double)));
    return v;
}

}  // namespace

void save_gbm(const GbmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out.write(kGbmMagic, 4);
    write_pod(out, kModelVersion);
    write_pod(out, model.f0);
    write_pod(out, model.shrinkage);
    write_pod<std::int32_t>(out, model.hyper.n_trees);
    write_pod(out, model.hyper.shrinkage);
    write_pod<std::int32_t>(out, model.hyper.max_depth);
    write_pod(out, model.hyper.bag_fraction);
    write_pod<std::int32_t>(out, model.hyper.min_leaf);
    write_pod<std::uint64_t>(out, model.n_features);
    write_pod<std::int32_t>(out, model.rejected_iterations);
    write_vec(out, model.influence_accumulator);
    write_vec(out, model.deviance_path);
    write_pod<std::uint64_t>(out, model.trees.size());
    for (const auto& tree : model.trees) {
        write_pod<std::uint64_t>(out, tree.nodes.size());
        for (const auto& node : tree.nodes) {
            write_pod(out, node.feature);
            write_pod(out, node.threshold);
            write_pod(out, node.left);
            write_pod(out, node.right);
            write_pod(out, node.leaf_value);
            write_pod(out, node.improvement);
        }
    }
    if (!out) throw Error("failed writing model file: " + path);
}

GbmModel load_gbm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != std::string_view(kGbmMagic, 4))
        throw DataError("not a gbm model file: " + path);
    if (read_pod<std::uint32_t>(in) != kModelVersion) throw DataError("unsupported model version");
    GbmModel model;
    model.f0 = read_pod<double>(in);
    model.shrinkage = read_pod<double>(in);
    model.hyper.n_trees = read_pod<std::int32_t>(in);
    model.hyper.shrinkage = read_pod<double>(in);
    model.hyper.max_depth = read_pod<std::int32_t>(in);
    model.hyper.bag_fraction = read_pod<double>(in);
    model.hyper.min_leaf = read_pod<std::int32_t>(in);
    model.n_features = read_pod<std::uint64_t>(in);
    model.rejected_iterations = read_pod<std::int32_t>(in);
    model.influence_accumulator = read_vec(in);
    model.deviance_path = read_vec(in);
    auto n_trees = read_pod<std::uint64_t>(in);
    model.trees.resize(n_trees);
    for (auto& tree : model.trees) {
        auto n_nodes = read_pod<std::uint64_t>(in);
        tree.nodes.resize(n_nodes);
        for (auto& node : tree.nodes) {
            node.feature = read_pod<std::int32_t>(in);
            node.threshold = read_pod<double>(in);
            node.left = read_pod<std::int32_t>(in);
            node.right = read_pod<std::int32_t>(in);
            node.leaf_value = read_pod<double>(in);
            node.improvement = read_pod<double>(in);
        }
    }
    if (!in) throw DataError("model file truncated: " + path);
    return model;
}

void export_influence_text(const InfluenceReport& report, const std::vector<FeatureDescriptor>& dict,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write influence export: " + path);
    out << "feature,influence\n";
    for (const auto& e : report.entries)
        out << dict[e.feature].label() << ',' << format_double(e.influence) << "\n";
}

}  // namespace mlho
