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
#include <memory>
#include <string>
#include <vector>

#include "mlho/tspm.hpp"

namespace mlho {

// --- stochastic gradient boosting ----------------------------------------

struct GbmHyper {
    int n_trees = 100;
    double shrinkage = 0.1;
    int max_depth = 2;
    double bag_fraction = 0.5;  // rows sampled without replacement per iteration
    int min_leaf = 10;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x <= threshold goes left; zeros are implicit
    std::int32_t left = -1;
    std::int32_t right = -1;
    double leaf_value = 0.0;
    double improvement = 0.0;  // squared-error improvement of this split
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const SparseFeatureMatrix& m, std::size_t row) const;
    bool is_stump_leaf() const { return nodes.size() == 1; }
};

// Additive logistic ensemble: prob = sigmoid(f0 + shrinkage * sum_m tree_m(x)).
// Bernoulli-deviance boosting with one Newton step per leaf; an iteration is
// accepted only if full-training-set deviance does not increase, so the
// recorded deviance path is non-increasing by construction of the check, not
// by fiat.
struct GbmModel {
    double f0 = 0.0;  // log-odds of training prevalence
    double shrinkage = 0.1;
    GbmHyper hyper;
    std::size_t n_features = 0;
    std::vector<RegressionTree> trees;             // accepted trees only
    std::vector<double> influence_accumulator;     // per-feature summed improvements
    std::vector<double> deviance_path;             // mean deviance after each accepted tree
    int rejected_iterations = 0;

    double predict_score(const SparseFeatureMatrix& m, std::size_t row) const;
};

// Throws DataError on single-class labels.
GbmModel fit_gbm(const SparseFeatureMatrix& train, const std::vector<std::uint8_t>& labels,
                 const GbmHyper& hyper, std::uint64_t seed);

// Probabilities in (0,1); rows must be indexed by the training dictionary.
std::vector<double> predict_gbm(const GbmModel& model, const SparseFeatureMatrix& rows);

struct InfluenceEntry {
    std::uint32_t feature = 0;
    double influence = 0.0;  // (0, 100], max scaled to 100
};

struct InfluenceReport {
    std::vector<InfluenceEntry> entries;  // descending influence; zeros omitted
};

// Friedman relative influence: per feature, mean over trees of the summed
// squared-error improvements of its splits, rescaled so the maximum is 100.
InfluenceReport relative_influence(const GbmModel& model);

// Mean Bernoulli deviance (-2/n * log-likelihood) of raw scores F.
double bernoulli_deviance(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// --- elastic-net logistic regression --------------------------------------

struct EnetOptions {
    double alpha = 0.5;  // 1 = lasso, 0 = ridge
    int n_lambda = 50;
    double lambda_min_ratio = 0.05;
    std::vector<double> lambda_path;  // optional explicit path (descending)
    int cv_folds = 5;
    double tol = 1e-10;
    int max_outer = 100;
};

struct ElasticNetModel {
    std::vector<double> coefficients;  // original feature scale
    double intercept = 0.0;
    double alpha = 0.5;
    double lambda = 0.0;  // chosen by cross-validated deviance
    std::vector<double> feature_mean;   // training standardization
    std::vector<double> feature_scale;
    std::vector<double> lambda_path;    // the full-data path actually fitted
    std::vector<double> path_l1_norm;   // standardized-scale L1 per path point
    std::size_t n_features = 0;

    double predict_score(const SparseFeatureMatrix& m, std::size_t row) const;
};

// Cyclic coordinate descent on the penalized logistic likelihood over a
// decreasing lambda path with warm starts; lambda picked by CV deviance.
ElasticNetModel fit_elastic_net(const SparseFeatureMatrix& train, const std::vector<std::uint8_t>& labels,
                                const EnetOptions& options, std::uint64_t seed);

std::vector<double> predict_elastic_net(const ElasticNetModel& model, const SparseFeatureMatrix& rows);

// --- embedded feature screening -------------------------------------------

// GBM: features with nonzero influence. Elastic net: nonzero coefficients.
std::vector<std::uint32_t> embedded_feature_screen(const GbmModel& model);
std::vector<std::uint32_t> embedded_feature_screen(const ElasticNetModel& model);

// --- fold utilities ---------------------------------------------------------

// Per-row fold ids in [0, k); positives and negatives are distributed
// round-robin after a seeded shuffle, so folds stay evaluable.
std::vector<int> stratified_folds(const std::vector<std::uint8_t>& labels, int k, std::uint64_t seed);

// --- persistence ------------------------------------------------------------

void save_gbm(const GbmModel& model, const std::string& path);
GbmModel load_gbm(const std::string& path);
void save_elastic_net(const ElasticNetModel& model, const std::string& path);
ElasticNetModel load_elastic_net(const std::string& path);

// feature,influence / feature,coefficient text exports
void export_influence_text(const InfluenceReport& report, const std::vector<FeatureDescriptor>& dict,
                           const std::string& path);
void export_coefficients_text(const ElasticNetModel& model, const std::vector<FeatureDescriptor>& dict,
                              const std::string& path);

}  // namespace mlho
