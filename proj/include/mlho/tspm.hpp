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
#include <set>
#include <string>
#include <vector>

#include "mlho/cohort.hpp"
#include "mlho/common.hpp"

namespace mlho {

enum class FeatureKind : std::uint8_t { Raw = 0, Sequence = 1, Demographic = 2 };

// Identity is (kind, code_a, code_b). Sequence features read "code_a then
// code_b" (first occurrence of a not later than first occurrence of b).
// Demographic descriptors carry the encoded column name in code_a, e.g.
// "age" or "gender=M".
struct FeatureDescriptor {
    FeatureKind kind = FeatureKind::Raw;
    std::string code_a;
    std::string code_b;

    auto operator<=>(const FeatureDescriptor&) const = default;

    std::string label() const;  // "raw:A", "seq:A->B", "demo:age"
};

// Patient rows over a shared feature dictionary, CSR layout. Stored values
// are never zero; column indices are strictly increasing within a row.
// Raw features hold occurrence counts, sequence features are binary 1,
// demographic features are numeric or one-hot.
struct SparseFeatureMatrix {
    std::vector<FeatureDescriptor> dictionary;
    std::vector<std::string> patient_order;
    std::vector<std::size_t> row_ptr;  // size n_rows + 1
    std::vector<std::uint32_t> col_idx;
    std::vector<double> values;

    std::size_t n_rows() const { return patient_order.size(); }
    std::size_t n_cols() const { return dictionary.size(); }
    std::size_t nnz() const { return values.size(); }

    // (col index, value) pairs of one row.
    std::pair<const std::uint32_t*, const double*> row(std::size_t r, std::size_t& len) const;
    double at(std::size_t r, std::uint32_t c) const;

    // Fraction of patients with a nonzero value, per column.
    std::vector<double> column_prevalence() const;
    std::vector<std::size_t> column_nnz() const;

    SparseFeatureMatrix select_columns(const std::vector<std::uint32_t>& cols) const;
    // Rows subset in the given order (indices into patient_order).
    SparseFeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;
};

// Column-compressed view used by split search and JMI scoring.
struct ColumnIndex {
    std::vector<std::size_t> col_ptr;
    std::vector<std::uint32_t> row_idx;  // sorted within each column
    std::vector<double> values;

    static ColumnIndex build(const SparseFeatureMatrix& m);
};

// One raw feature per distinct code in the cohort; value = occurrence count.
SparseFeatureMatrix mine_raw(const Cohort& cohort);

struct TransitiveOptions {
    // Pairs present in fewer than min_prevalence * n patients are dropped
    // during mining; identical to mine-then-filter but bounds memory.
    double min_prevalence = 0.0;
    // Materialized (pair, patient) budget; exceeding it raises an Error that
    // reports the pair count and suggests the prevalence pre-filter.
    std::size_t max_entries = 200'000'000;
    int jobs = 1;
};

// Ordered pairs of distinct codes (a, b) with first(a) <= first(b); binary.
// Ties produce both directions. Only pairs observed in >= 1 patient (and
// passing the optional prevalence pre-filter) enter the dictionary.
SparseFeatureMatrix mine_transitive(const Cohort& cohort, const TransitiveOptions& options = {});

// Categorical levels observed in a training cohort; defines the one-hot
// columns. Levels are sorted so dictionaries are reproducible.
struct DemographicLevels {
    std::vector<std::string> gender;
    std::vector<std::string> race;
    std::vector<std::string> ethnicity;

    static DemographicLevels from_cohort(const Cohort& cohort);
};

enum class DemographicEncoding {
    OneHotFull,      // every level gets a column (tree learners)
    OneHotDropFirst  // lexicographically first level dropped (linear learners)
};

// Age as one numeric column plus one-hot categoricals.
SparseFeatureMatrix encode_demographics(const Cohort& cohort, const DemographicLevels& levels,
                                        DemographicEncoding encoding);

enum class FeatureClass { Demographic = 0, Clinical = 1, Combined = 2 };
const char* feature_class_name(FeatureClass c);
std::optional<FeatureClass> feature_class_from_name(std::string_view name);

struct AssembleInclude {
    bool raw = false;
    bool sequence = false;
    bool demographic = false;
};

// Horizontal concatenation in block order raw | sequence | demographic.
// All inputs must share patient_order; include must select at least one block.
SparseFeatureMatrix assemble_matrix(const SparseFeatureMatrix* raw, const SparseFeatureMatrix* seq,
                                    const SparseFeatureMatrix* demo, const AssembleInclude& include);

// Builds rows for `cohort` against a dictionary mined elsewhere (typically
// the training dictionary). Handles all three feature kinds; demographic
// descriptors carry their own level encoding.
SparseFeatureMatrix project_cohort(const Cohort& cohort, const std::vector<FeatureDescriptor>& dictionary);

// Binary container: magic "MLHO", version, dictionary block, row blocks with
// delta-encoded column indices.
void save_matrix(const SparseFeatureMatrix& m, const std::string& path);
SparseFeatureMatrix load_matrix(const std::string& path);

// Debug export: patient_id,feature,value
void export_matrix_text(const SparseFeatureMatrix& m, const std::string& path);

}  // namespace mlho
