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

#include "mlho/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mlho/csv.hpp"
#include "mlho/msmr.hpp"
#include "mlho/sha256.hpp"

namespace mlho {

namespace {

const char* kGbmName = "gbm";
const char* kEnetName = "glmnet";

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<GbmHyper> expand_gbm_grid(const GbmGridConfig& grid) {
    std::vector<GbmHyper> out;
    for (int trees : grid.trees)
        for (double shrinkage : grid.shrinkage)
            for (int depth : grid.depth) {
                GbmHyper h;
                h.n_trees = trees;
                h.shrinkage = shrinkage;
                h.max_depth = depth;
                h.bag_fraction = grid.bag_fraction;
                h.min_leaf = grid.min_leaf;
                out.push_back(h);
            }
    if (out.empty()) throw ConfigError("gbm grid is empty");
    return out;
}

// Mean held-out AUC over evaluable folds; used for grid selection.
template <typename FitFn, typename PredictFn>
double cv_auc(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& y, int folds,
              std::uint64_t seed, const FitFn& fit, const PredictFn& predict) {
    auto fold_of = stratified_folds(y, folds, seed);
    double total = 0.0;
    int evaluated = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_rows, valid_rows;
        for (std::size_t i = 0; i < y.size(); ++i)
            (fold_of[i] == f ? valid_rows : train_rows).push_back(i);
        std::vector<std::uint8_t> y_train(train_rows.size()), y_valid(valid_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) y_train[i] = y[train_rows[i]];
        for (std::size_t i = 0; i < valid_rows.size(); ++i) y_valid[i] = y[valid_rows[i]];
        auto has_both = [](const std::vector<std::uint8_t>& labels) {
            bool pos = false, neg = false;
            for (auto v : labels) (v ? pos : neg) = true;
            return pos && neg;
        };
        if (!has_both(y_train) || !has_both(y_valid)) continue;
        SparseFeatureMatrix m_train = m.select_rows(train_rows);
        SparseFeatureMatrix m_valid = m.select_rows(valid_rows);
        auto model = fit(m_train, y_train, derive_seed(seed, "cv-fit", static_cast<std::uint64_t>(f)));
        auto scores = predict(model, m_valid);
        total += auc_roc(scores, y_valid).auc;
        ++evaluated;
    }
    if (evaluated == 0) throw DataError("cross-validation: no evaluable folds");
    return total / static_cast<double>(evaluated);
}

GbmModel fit_gbm_best(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& y,
                      const GbmGridConfig& grid, int folds, std::uint64_t seed) {
    auto candidates = expand_gbm_grid(grid);
    std::size_t chosen = 0;
    if (candidates.size() > 1 && folds >= 2) {
        // every grid point is scored on the same folds
        const std::uint64_t fold_seed = derive_seed(seed, "gbm-grid-cv");
        double best = -1.0;
        for (std::size_t g = 0; g < candidates.size(); ++g) {
            double auc = cv_auc(
                m, y, folds, fold_seed,
                [&](const SparseFeatureMatrix& mt, const std::vector<std::uint8_t>& yt, std::uint64_t s) {
                    return fit_gbm(mt, yt, candidates[g], s);
                },
                [](const GbmModel& model, const SparseFeatureMatrix& mv) { return predict_gbm(model, mv); });
            if (auc > best + 1e-12) {
                best = auc;
                chosen = g;
            }
        }
    }
    return fit_gbm(m, y, candidates[chosen], derive_seed(seed, "gbm-final"));
}

ElasticNetModel fit_enet_best(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& y,
                              const EnetGridConfig& grid, int folds, std::uint64_t seed) {
    if (grid.alpha.empty()) throw ConfigError("enet alpha grid is empty");
    auto make_options = [&](double alpha) {
        EnetOptions options;
        options.alpha = alpha;
        options.n_lambda = grid.n_lambda;
        options.lambda_min_ratio = grid.lambda_min_ratio;
        options.cv_folds = folds;
        return options;
    };
    std::size_t chosen = 0;
    if (grid.alpha.size() > 1 && folds >= 2) {
        const std::uint64_t fold_seed = derive_seed(seed, "enet-grid-cv");
        double best = -1.0;
        for (std::size_t g = 0; g < grid.alpha.size(); ++g) {
            double auc = cv_auc(
                m, y, folds, fold_seed,
                [&](const SparseFeatureMatrix& mt, const std::vector<std::uint8_t>& yt, std::uint64_t s) {
                    return fit_elastic_net(mt, yt, make_options(grid.alpha[g]), s);
                },
                [](const ElasticNetModel& model, const SparseFeatureMatrix& mv) {
                    return predict_elastic_net(model, mv);
                });
            if (auc > best + 1e-12) {
                best = auc;
                chosen = g;
            }
        }
    }
    return fit_elastic_net(m, y, make_options(grid.alpha[chosen]), derive_seed(seed, "enet-final"));
}

void require_evaluable(const Cohort& cohort, const std::vector<Outcome>& outcomes) {
    for (Outcome o : outcomes) {
        std::size_t pos = 0;
        for (const auto& labels : cohort.outcomes)
            pos += labels.flag(o).positive ? 1 : 0;
        if (pos < 2 || pos > cohort.size() - 2)
            throw DataError(std::string("outcome '") + outcome_name(o) +
                            "' lacks both classes (needs >= 2 positives and >= 2 negatives)");
    }
}

SparseFeatureMatrix hcat(const SparseFeatureMatrix& a, const SparseFeatureMatrix& b) {
    AssembleInclude include;
    include.raw = true;
    include.demographic = true;
    return assemble_matrix(&a, nullptr, &b, include);
}

}  // namespace

std::string phase2_group_key(Outcome outcome, FeatureClass fclass) {
    return std::string(outcome_name(outcome)) + "/" + feature_class_name(fclass);
}

Phase1Report run_phase1(const Cohort& cohort, const PipelineConfig& config) {
    require_evaluable(cohort, config.outcomes);

    struct IterationOutput {
        std::vector<Phase1Cell> cells;
        std::map<std::string, std::set<FeatureDescriptor>> screened;
        std::map<std::string, std::vector<SelectionRow>> selection;
    };
    std::vector<IterationOutput> per_iter(static_cast<std::size_t>(config.n_resamples));

    parallel_for(static_cast<std::size_t>(config.n_resamples), config.jobs, [&](std::size_t iter) {
        IterationOutput& out = per_iter[iter];
        const std::uint64_t split_seed = derive_seed(config.seed, "split", iter);
        auto [train, test] = split_train_test(cohort, config.test_fraction, split_seed, config.split_mode);

        SparseFeatureMatrix raw = mine_raw(train);
        TransitiveOptions topt;
        topt.min_prevalence = config.msmr.min_prevalence;
        topt.max_entries = config.tspm_max_pair_entries;
        SparseFeatureMatrix seq = mine_transitive(train, topt);
        AssembleInclude clinical_include;
        clinical_include.raw = true;
        clinical_include.sequence = true;
        SparseFeatureMatrix clinical = assemble_matrix(&raw, &seq, nullptr, clinical_include);
        // MSMR step 1 is label-independent, shared across outcomes
        SparseFeatureMatrix m1 = prevalence_filter(clinical, config.msmr.min_prevalence);

        for (Outcome outcome : config.outcomes) {
            const std::string oname = outcome_name(outcome);
            try {
                std::vector<std::uint8_t> y_train = train.labels(outcome);
                std::vector<std::uint8_t> y_test = test.labels(outcome);

                SparseFeatureMatrix m2 =
                    mi_rank_filter(m1, y_train, static_cast<std::size_t>(config.msmr.mi_keep));
                JmiSelection sel =
                    jmi_greedy_select(m2, y_train, static_cast<std::size_t>(config.msmr.jmi_budget));

                if (iter == 0) {
                    auto scores = mi_scores(m2, y_train);
                    std::vector<SelectionRow>& rows = out.selection[oname];
                    for (std::size_t i = 0; i < sel.selected.size(); ++i) {
                        SelectionRow row;
                        row.rank = static_cast<int>(i + 1);
                        row.feature = m2.dictionary[sel.selected[i]];
                        row.mi = scores[sel.selected[i]].mi;
                        row.jmi_gain = i > 0 ? sel.step_scores[i - 1] : 0.0;
                        rows.push_back(std::move(row));
                    }
                }

                std::vector<std::uint32_t> keep = sel.selected;
                std::sort(keep.begin(), keep.end());
                SparseFeatureMatrix train_m = m2.select_columns(keep);
                SparseFeatureMatrix test_m = project_cohort(test, train_m.dictionary);

                {
                    GbmModel model = fit_gbm_best(
                        train_m, y_train, config.gbm, config.cv_folds_phase1,
                        derive_seed(config.seed, "phase1-gbm-" + oname, iter));
                    double auc = auc_roc(predict_gbm(model, test_m), y_test).auc;
                    out.cells.push_back({outcome, static_cast<int>(iter), kGbmName, auc});
                    for (std::uint32_t c : embedded_feature_screen(model))
                        out.screened[oname].insert(train_m.dictionary[c]);
                }
                {
                    ElasticNetModel model = fit_enet_best(
                        train_m, y_train, config.enet, config.cv_folds_phase1,
                        derive_seed(config.seed, "phase1-glmnet-" + oname, iter));
                    double auc = auc_roc(predict_elastic_net(model, test_m), y_test).auc;
                    out.cells.push_back({outcome, static_cast<int>(iter), kEnetName, auc});
                    for (std::uint32_t c : embedded_feature_screen(model))
                        out.screened[oname].insert(train_m.dictionary[c]);
                }
            } catch (const std::exception& e) {
                throw Error("phase1 (outcome " + oname + ", iteration " + std::to_string(iter) +
                            "): " + e.what());
            }
        }
    });

    Phase1Report report;
    std::map<std::string, std::set<FeatureDescriptor>> unions;
    for (auto& out : per_iter) {
        report.cells.insert(report.cells.end(), out.cells.begin(), out.cells.end());
        for (auto& [oname, features] : out.screened) unions[oname].insert(features.begin(), features.end());
        for (auto& [oname, rows] : out.selection) report.selection_example[oname] = std::move(rows);
    }
    std::set<FeatureDescriptor> combined;
    for (auto& [oname, features] : unions) {
        report.union_features[oname].assign(features.begin(), features.end());
        combined.insert(features.begin(), features.end());
    }
    report.combined_union.assign(combined.begin(), combined.end());

    std::map<std::string, std::vector<double>> by_algorithm;
    for (const auto& cell : report.cells) by_algorithm[cell.algorithm].push_back(cell.auc);
    for (auto& [name, aucs] : by_algorithm) report.ranking.emplace_back(name, median(aucs));
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < report.ranking.size() && i < 2; ++i)
        report.top_algorithms.push_back(report.ranking[i].first);
    return report;
}

Phase2Report run_phase2(const Cohort& cohort, const PipelineConfig& config, const Phase1Report& phase1) {
    require_evaluable(cohort, config.outcomes);
    if (phase1.top_algorithms.empty()) throw DataError("phase2: phase-1 ranking is empty");

    const bool needs_clinical =
        std::any_of(config.feature_classes.begin(), config.feature_classes.end(), [](FeatureClass c) {
            return c == FeatureClass::Clinical || c == FeatureClass::Combined;
        });
    std::map<std::string, std::vector<FeatureDescriptor>> clinical_union;
    for (Outcome outcome : config.outcomes) {
        const std::string oname = outcome_name(outcome);
        if (config.union_mode == UnionMode::Pooled) {
            clinical_union[oname] = phase1.combined_union;
        } else {
            auto it = phase1.union_features.find(oname);
            clinical_union[oname] =
                it != phase1.union_features.end() ? it->second : std::vector<FeatureDescriptor>{};
        }
        if (needs_clinical && clinical_union[oname].empty())
            throw DataError("phase2: empty clinical feature union for outcome '" + oname +
                            "'; loosen the MSMR thresholds (msmr.min_prevalence, msmr.mi_keep, "
                            "msmr.jmi_budget) or rerun phase 1");
    }

    struct ModelOutput {
        Phase2Cell cell;
        std::vector<double> test_scores;
        std::vector<std::uint8_t> test_labels;
        CalibrationCurve curve;
        // gbm relative influence contributions by descriptor (I_j^2 per model)
        std::vector<std::pair<FeatureDescriptor, double>> influence;
        bool from_gbm = false;
    };
    struct IterationOutput {
        std::vector<ModelOutput> models;  // deterministic order
    };
    std::vector<IterationOutput> per_iter(static_cast<std::size_t>(config.n_resamples));

    parallel_for(static_cast<std::size_t>(config.n_resamples), config.jobs, [&](std::size_t iter) {
        IterationOutput& out = per_iter[iter];
        // Splits share the phase-1 seed stream: the same resamples drive both
        // phases, so a feature seen only in test rows stays out of training
        // end to end.
        const std::uint64_t split_seed = derive_seed(config.seed, "split", iter);
        auto [train, test] = split_train_test(cohort, config.test_fraction, split_seed, config.split_mode);

        DemographicLevels levels = DemographicLevels::from_cohort(train);
        SparseFeatureMatrix demo_full_train =
            encode_demographics(train, levels, DemographicEncoding::OneHotFull);
        SparseFeatureMatrix demo_full_test =
            encode_demographics(test, levels, DemographicEncoding::OneHotFull);
        SparseFeatureMatrix demo_drop_train =
            encode_demographics(train, levels, DemographicEncoding::OneHotDropFirst);
        SparseFeatureMatrix demo_drop_test =
            encode_demographics(test, levels, DemographicEncoding::OneHotDropFirst);

        for (Outcome outcome : config.outcomes) {
            const std::string oname = outcome_name(outcome);
            try {
                std::vector<std::uint8_t> y_train = train.labels(outcome);
                std::vector<std::uint8_t> y_test = test.labels(outcome);

                SparseFeatureMatrix clinical_train, clinical_test;
                if (needs_clinical) {
                    clinical_train = project_cohort(train, clinical_union[oname]);
                    clinical_test = project_cohort(test, clinical_union[oname]);
                }

                for (FeatureClass fclass : config.feature_classes) {
                    for (const std::string& algorithm : phase1.top_algorithms) {
                        const bool is_gbm = algorithm == kGbmName;
                        const SparseFeatureMatrix* train_m = nullptr;
                        const SparseFeatureMatrix* test_m = nullptr;
                        SparseFeatureMatrix combined_train, combined_test;
                        switch (fclass) {
                            case FeatureClass::Demographic:
                                train_m = is_gbm ? &demo_full_train : &demo_drop_train;
                                test_m = is_gbm ? &demo_full_test : &demo_drop_test;
                                break;
                            case FeatureClass::Clinical:
                                train_m = &clinical_train;
                                test_m = &clinical_test;
                                break;
                            case FeatureClass::Combined:
                                combined_train =
                                    hcat(clinical_train, is_gbm ? demo_full_train : demo_drop_train);
                                combined_test =
                                    hcat(clinical_test, is_gbm ? demo_full_test : demo_drop_test);
                                train_m = &combined_train;
                                test_m = &combined_test;
                                break;
                        }

                        ModelOutput model_out;
                        model_out.cell.outcome = outcome;
                        model_out.cell.feature_class = fclass;
                        model_out.cell.iteration = static_cast<int>(iter);
                        model_out.cell.algorithm = algorithm;
                        const std::uint64_t fit_seed = derive_seed(
                            config.seed,
                            "phase2-" + algorithm + "-" + oname + "-" + feature_class_name(fclass), iter);

                        std::vector<double> scores;
                        if (is_gbm) {
                            GbmModel model =
                                fit_gbm_best(*train_m, y_train, config.gbm, config.cv_folds_phase2, fit_seed);
                            scores = predict_gbm(model, *test_m);
                            if (!model.trees.empty()) {
                                const double m_trees = static_cast<double>(model.trees.size());
                                for (std::uint32_t j = 0; j < model.influence_accumulator.size(); ++j)
                                    if (model.influence_accumulator[j] > 0.0)
                                        model_out.influence.emplace_back(
                                            train_m->dictionary[j], model.influence_accumulator[j] / m_trees);
                            }
                            model_out.from_gbm = true;
                        } else if (algorithm == kEnetName) {
                            ElasticNetModel model = fit_enet_best(*train_m, y_train, config.enet,
                                                                  config.cv_folds_phase2, fit_seed);
                            scores = predict_elastic_net(model, *test_m);
                        } else {
                            throw ConfigError("unknown algorithm in phase-1 ranking: " + algorithm);
                        }

                        model_out.cell.auc = auc_roc(scores, y_test).auc;
                        model_out.curve = calibration_bins(
                            scores, y_test, static_cast<std::size_t>(config.calibration_bins),
                            config.calibration_scheme);
                        model_out.test_scores = std::move(scores);
                        model_out.test_labels = y_test;
                        out.models.push_back(std::move(model_out));
                    }
                }
            } catch (const std::exception& e) {
                throw Error("phase2 (outcome " + oname + ", iteration " + std::to_string(iter) +
                            "): " + e.what());
            }
        }
    });

    Phase2Report report;
    report.scenarios = scenario_probabilities(cohort);
    report.summary = cohort_summary(cohort);

    struct GroupAccumulator {
        std::vector<double> aucs;
        std::vector<double> pooled_scores;
        std::vector<std::uint8_t> pooled_labels;
        std::vector<CalibrationCurve> curves;
        std::map<FeatureDescriptor, double> influence_sum;
        int gbm_models = 0;
        int model_count = 0;
    };
    std::map<std::string, GroupAccumulator> groups;

    for (auto& iter_out : per_iter) {
        for (auto& model_out : iter_out.models) {
            report.cells.push_back(model_out.cell);
            GroupAccumulator& acc =
                groups[phase2_group_key(model_out.cell.outcome, model_out.cell.feature_class)];
            acc.aucs.push_back(model_out.cell.auc);
            acc.pooled_scores.insert(acc.pooled_scores.end(), model_out.test_scores.begin(),
                                     model_out.test_scores.end());
            acc.pooled_labels.insert(acc.pooled_labels.end(), model_out.test_labels.begin(),
                                     model_out.test_labels.end());
            acc.curves.push_back(std::move(model_out.curve));
            ++acc.model_count;
            if (model_out.from_gbm) {
                ++acc.gbm_models;
                for (auto& [feature, value] : model_out.influence) acc.influence_sum[feature] += value;
            }
        }
    }

    const int expected_models =
        config.n_resamples * static_cast<int>(phase1.top_algorithms.size());
    for (auto& [key, acc] : groups) {
        Phase2Group group;
        group.metrics = summarize_aucs(acc.aucs);
        group.pooled_calibration =
            calibration_bins(acc.pooled_scores, acc.pooled_labels,
                             static_cast<std::size_t>(config.calibration_bins), config.calibration_scheme);
        group.per_model_curves = std::move(acc.curves);
        group.model_count = acc.model_count;
        if (group.model_count != expected_models)
            throw Error("phase2 group " + key + ": model count " + std::to_string(group.model_count) +
                        " != n_resamples x top algorithms = " + std::to_string(expected_models));
        if (acc.gbm_models > 0) {
            double max_value = 0.0;
            for (auto& [feature, sum] : acc.influence_sum)
                max_value = std::max(max_value, sum / acc.gbm_models);
            if (max_value > 0.0) {
                for (auto& [feature, sum] : acc.influence_sum) {
                    const double mean_influence = sum / acc.gbm_models;
                    if (mean_influence > 0.0)
                        group.influence.push_back({feature, 100.0 * mean_influence / max_value});
                }
                std::sort(group.influence.begin(), group.influence.end(),
                          [](const InfluenceRow& a, const InfluenceRow& b) {
                              return a.influence != b.influence ? a.influence > b.influence
                                                                : a.feature < b.feature;
                          });
            }
        }
        report.groups[key] = std::move(group);
    }
    return report;
}

}  // namespace mlho
