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

#include "mlho/tspm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace mlho {

std::string FeatureDescriptor::label() const {
    switch (kind) {
        case FeatureKind::Raw: return "raw:" + code_a;
        case FeatureKind::Sequence: return "seq:" + code_a + "->" + code_b;
        case FeatureKind::Demographic: return "demo:" + code_a;
    }
    return "?";
}

std::pair<const std::uint32_t*, const double*> SparseFeatureMatrix::row(std::size_t r, std::size_t& len) const {
    len = row_ptr[r + 1] - row_ptr[r];
    return {col_idx.data() + row_ptr[r], values.data() + row_ptr[r]};
}

double SparseFeatureMatrix::at(std::size_t r, std::uint32_t c) const {
    const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    auto it = std::lower_bound(begin, end, c);
    if (it == end || *it != c) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

std::vector<std::size_t> SparseFeatureMatrix::column_nnz() const {
    std::vector<std::size_t> nnz(n_cols(), 0);
    for (std::uint32_t c : col_idx) ++nnz[c];
    return nnz;
}

std::vector<double> SparseFeatureMatrix::column_prevalence() const {
    auto nnz = column_nnz();
    std::vector<double> prev(nnz.size());
    const double n = static_cast<double>(n_rows());
    for (std::size_t c = 0; c < nnz.size(); ++c) prev[c] = n > 0 ? static_cast<double>(nnz[c]) / n : 0.0;
    return prev;
}

SparseFeatureMatrix SparseFeatureMatrix::select_columns(const std::vector<std::uint32_t>& cols) const {
    std::vector<std::uint32_t> remap(n_cols(), UINT32_MAX);
    SparseFeatureMatrix out;
    out.dictionary.reserve(cols.size());
    for (std::size_t new_idx = 0; new_idx < cols.size(); ++new_idx) {
        std::uint32_t old_idx = cols[new_idx];
        if (old_idx >= n_cols()) throw Error("select_columns: column index out of range");
        if (remap[old_idx] != UINT32_MAX) throw Error("select_columns: duplicate column");
        remap[old_idx] = static_cast<std::uint32_t>(new_idx);
        out.dictionary.push_back(dictionary[old_idx]);
    }
    out.patient_order = patient_order;
    out.row_ptr.resize(n_rows() + 1, 0);
    for (std::size_t r = 0; r < n_rows(); ++r) {
        std::vector<std::pair<std::uint32_t, double>> kept;
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (remap[col_idx[k]] != UINT32_MAX) kept.emplace_back(remap[col_idx[k]], values[k]);
        std::sort(kept.begin(), kept.end());
        for (const auto& [c, v] : kept) {
            out.col_idx.push_back(c);
            out.values.push_back(v);
        }
        out.row_ptr[r + 1] = out.col_idx.size();
    }
    return out;
}

SparseFeatureMatrix SparseFeatureMatrix::select_rows(const std::vector<std::size_t>& rows) const {
    SparseFeatureMatrix out;
    out.dictionary = dictionary;
    out.row_ptr.resize(rows.size() + 1, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        if (r >= n_rows()) throw Error("select_rows: row index out of range");
        out.patient_order.push_back(patient_order[r]);
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            out.col_idx.push_back(col_idx[k]);
            out.values.push_back(values[k]);
        }
        out.row_ptr[i + 1] = out.col_idx.size();
    }
    return out;
}

ColumnIndex ColumnIndex::build(const SparseFeatureMatrix& m) {
    ColumnIndex idx;
    auto nnz = m.column_nnz();
    idx.col_ptr.assign(m.n_cols() + 1, 0);
    for (std::size_t c = 0; c < m.n_cols(); ++c) idx.col_ptr[c + 1] = idx.col_ptr[c] + nnz[c];
    idx.row_idx.resize(m.nnz());
    idx.values.resize(m.nnz());
    std::vector<std::size_t> cursor(idx.col_ptr.begin(), idx.col_ptr.end() - 1);
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            std::size_t pos = cursor[m.col_idx[k]]++;
            idx.row_idx[pos] = static_cast<std::uint32_t>(r);
            idx.values[pos] = m.values[k];
        }
    }
    return idx;
}

SparseFeatureMatrix mine_raw(const Cohort& cohort) {
    std::set<std::string> codes;
    for (const auto& tl : cohort.timelines)
        for (const auto& [code, _] : tl.occurrence_count) codes.insert(code);

    SparseFeatureMatrix m;
    m.patient_order = cohort.patient_ids;
    std::unordered_map<std::string, std::uint32_t> code_to_col;
    m.dictionary.reserve(codes.size());
    for (const auto& code : codes) {
        code_to_col.emplace(code, static_cast<std::uint32_t>(m.dictionary.size()));
        m.dictionary.push_back({FeatureKind::Raw, code, ""});
    }
    m.row_ptr.resize(cohort.size() + 1, 0);
    for (std::size_t r = 0; r < cohort.size(); ++r) {
        // occurrence_count iterates in code order == dictionary order
        for (const auto& [code, count] : cohort.timelines[r].occurrence_count) {
            m.col_idx.push_back(code_to_col.at(code));
            m.values.push_back(static_cast<double>(count));
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    return m;
}

namespace {

// (code index a, code index b) packed for hashing; indexes into the sorted
// cohort code list, so numeric order equals lexicographic order.
inline std::uint64_t pack_pair(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct PatientCodes {
    std::vector<std::uint32_t> code;  // sorted ascending
    std::vector<std::int32_t> day;
};

// Emits every ordered pair (a, b), a != b, with first(a) <= first(b).
template <typename Fn>
void for_each_transitive_pair(const PatientCodes& pc, Fn&& fn) {
    const std::size_t d = pc.code.size();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (i == j) continue;
            if (pc.day[i] <= pc.day[j]) fn(pc.code[i], pc.code[j]);
        }
}

}  // namespace

SparseFeatureMatrix mine_transitive(const Cohort& cohort, const TransitiveOptions& options) {
    const std::size_t n = cohort.size();

    std::set<std::string> code_set;
    for (const auto& tl : cohort.timelines)
        for (const auto& [code, _] : tl.first_occurrence) code_set.insert(code);
    std::vector<std::string> codes(code_set.begin(), code_set.end());
    std::unordered_map<std::string, std::uint32_t> code_id;
    code_id.reserve(codes.size());
    for (std::uint32_t i = 0; i < codes.size(); ++i) code_id.emplace(codes[i], i);

    std::vector<PatientCodes> patients(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& fo = cohort.timelines[r].first_occurrence;
        patients[r].code.reserve(fo.size());
        patients[r].day.reserve(fo.size());
        for (const auto& [code, date] : fo) {
            patients[r].code.push_back(code_id.at(code));
            patients[r].day.push_back(date.days);
        }
    }

    // Pass 1: per-pair patient counts (a patient contributes at most one unit
    // per direction, since r_ij is binary).
    std::unordered_map<std::uint64_t, std::uint32_t> pair_count;
    for (std::size_t r = 0; r < n; ++r)
        for_each_transitive_pair(patients[r], [&](std::uint32_t a, std::uint32_t b) {
            ++pair_count[pack_pair(a, b)];
        });

    const std::uint32_t min_count =
        options.min_prevalence > 0.0
            ? static_cast<std::uint32_t>(std::ceil(options.min_prevalence * static_cast<double>(n) - 1e-9))
            : 0;

    std::vector<std::uint64_t> surviving;
    std::size_t surviving_entries = 0;
    surviving.reserve(pair_count.size());
    for (const auto& [key, count] : pair_count) {
        if (count >= min_count && count > 0) {
            surviving.push_back(key);
            surviving_entries += count;
        }
    }
    if (surviving_entries > options.max_entries)
        throw Error("mine_transitive: " + std::to_string(surviving.size()) + " pairs with " +
                    std::to_string(surviving_entries) +
                    " stored entries exceed the memory budget; raise the budget or apply the "
                    "prevalence pre-filter (TransitiveOptions::min_prevalence)");
    std::sort(surviving.begin(), surviving.end());  // numeric == (code_a, code_b) lexicographic

    SparseFeatureMatrix m;
    m.patient_order = cohort.patient_ids;
    m.dictionary.reserve(surviving.size());
    std::unordered_map<std::uint64_t, std::uint32_t> pair_col;
    pair_col.reserve(surviving.size());
    for (std::uint64_t key : surviving) {
        pair_col.emplace(key, static_cast<std::uint32_t>(m.dictionary.size()));
        m.dictionary.push_back({FeatureKind::Sequence, codes[key >> 32], codes[key & 0xFFFFFFFFu]});
    }

    // Pass 2: materialize rows. Parallel over patients; each row is built
    // independently and concatenated in patient order.
    std::vector<std::vector<std::uint32_t>> rows(n);
    parallel_for(n, options.jobs, [&](std::size_t r) {
        std::vector<std::uint32_t>& out = rows[r];
        for_each_transitive_pair(patients[r], [&](std::uint32_t a, std::uint32_t b) {
            auto it = pair_col.find(pack_pair(a, b));
            if (it != pair_col.end()) out.push_back(it->second);
        });
        std::sort(out.begin(), out.end());
    });

    m.row_ptr.resize(n + 1, 0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::uint32_t c : rows[r]) {
            m.col_idx.push_back(c);
            m.values.push_back(1.0);
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    return m;
}

DemographicLevels DemographicLevels::from_cohort(const Cohort& cohort) {
    std::set<std::string> g, r, e;
    for (const auto& d : cohort.demographics) {
        g.insert(d.gender);
        r.insert(d.race);
        e.insert(d.ethnicity);
    }
    DemographicLevels out;
    out.gender.assign(g.begin(), g.end());
    out.race.assign(r.begin(), r.end());
    out.ethnicity.assign(e.begin(), e.end());
    return out;
}

SparseFeatureMatrix encode_demographics(const Cohort& cohort, const DemographicLevels& levels,
                                        DemographicEncoding encoding) {
    SparseFeatureMatrix m;
    m.patient_order = cohort.patient_ids;
    m.dictionary.push_back({FeatureKind::Demographic, "age", ""});
    const std::size_t drop = encoding == DemographicEncoding::OneHotDropFirst ? 1 : 0;
    struct Cat {
        const char* name;
        const std::vector<std::string>* levels;
    };
    const Cat cats[3] = {{"gender", &levels.gender}, {"race", &levels.race}, {"ethnicity", &levels.ethnicity}};
    std::unordered_map<std::string, std::uint32_t> col_of;
    for (const auto& cat : cats)
        for (std::size_t i = drop; i < cat.levels->size(); ++i) {
            std::string name = std::string(cat.name) + "=" + (*cat.levels)[i];
            col_of.emplace(name, static_cast<std::uint32_t>(m.dictionary.size()));
            m.dictionary.push_back({FeatureKind::Demographic, name, ""});
        }
    m.row_ptr.resize(cohort.size() + 1, 0);
    for (std::size_t r = 0; r < cohort.size(); ++r) {
        const Demographics& d = cohort.demographics[r];
        std::vector<std::pair<std::uint32_t, double>> entries;
        if (d.age != 0) entries.emplace_back(0, static_cast<double>(d.age));
        const std::string* vals[3] = {&d.gender, &d.race, &d.ethnicity};
        for (int c = 0; c < 3; ++c) {
            auto it = col_of.find(std::string(cats[c].name) + "=" + *vals[c]);
            if (it != col_of.end()) entries.emplace_back(it->second, 1.0);
        }
        std::sort(entries.begin(), entries.end());
        for (const auto& [c, v] : entries) {
            m.col_idx.push_back(c);
            m.values.push_back(v);
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    return m;
}

const char* feature_class_name(FeatureClass c) {
    switch (c) {
        case FeatureClass::Demographic: return "demographic";
        case FeatureClass::Clinical: return "clinical";
        case FeatureClass::Combined: return "combined";
    }
    return "?";
}

std::optional<FeatureClass> feature_class_from_name(std::string_view name) {
    if (name == "demographic") return FeatureClass::Demographic;
    if (name == "clinical") return FeatureClass::Clinical;
    if (name == "combined") return FeatureClass::Combined;
    return std::nullopt;
}

SparseFeatureMatrix assemble_matrix(const SparseFeatureMatrix* raw, const SparseFeatureMatrix* seq,
                                    const SparseFeatureMatrix* demo, const AssembleInclude& include) {
    std::vector<const SparseFeatureMatrix*> blocks;
    if (include.raw) {
        if (!raw) throw Error("assemble_matrix: raw block requested but absent");
        blocks.push_back(raw);
    }
    if (include.sequence) {
        if (!seq) throw Error("assemble_matrix: sequence block requested but absent");
        blocks.push_back(seq);
    }
    if (include.demographic) {
        if (!demo) throw Error("assemble_matrix: demographic block requested but absent");
        blocks.push_back(demo);
    }
    if (blocks.empty()) throw ConfigError("assemble_matrix: empty include set, nothing to model");

    const auto& order = blocks.front()->patient_order;
    for (const auto* b : blocks)
        if (b->patient_order != order) throw DataError("assemble_matrix: patient_order mismatch");

    SparseFeatureMatrix m;
    m.patient_order = order;
    std::vector<std::uint32_t> offsets;
    for (const auto* b : blocks) {
        offsets.push_back(static_cast<std::uint32_t>(m.dictionary.size()));
        m.dictionary.insert(m.dictionary.end(), b->dictionary.begin(), b->dictionary.end());
    }
    m.row_ptr.resize(order.size() + 1, 0);
    for (std::size_t r = 0; r < order.size(); ++r) {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const auto* b = blocks[bi];
            for (std::size_t k = b->row_ptr[r]; k < b->row_ptr[r + 1]; ++k) {
                m.col_idx.push_back(b->col_idx[k] + offsets[bi]);
                m.values.push_back(b->values[k]);
            }
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    return m;
}

SparseFeatureMatrix project_cohort(const Cohort& cohort, const std::vector<FeatureDescriptor>& dictionary) {
    SparseFeatureMatrix m;
    m.dictionary = dictionary;
    m.patient_order = cohort.patient_ids;
    m.row_ptr.resize(cohort.size() + 1, 0);
    for (std::size_t r = 0; r < cohort.size(); ++r) {
        const PatientTimeline& tl = cohort.timelines[r];
        const Demographics& demo = cohort.demographics[r];
        std::vector<std::pair<std::uint32_t, double>> entries;
        for (std::uint32_t c = 0; c < dictionary.size(); ++c) {
            const FeatureDescriptor& f = dictionary[c];
            double v = 0.0;
            switch (f.kind) {
                case FeatureKind::Raw: {
                    auto it = tl.occurrence_count.find(f.code_a);
                    if (it != tl.occurrence_count.end()) v = static_cast<double>(it->second);
                    break;
                }
                case FeatureKind::Sequence: {
                    auto a = tl.first_occurrence.find(f.code_a);
                    auto b = tl.first_occurrence.find(f.code_b);
                    if (a != tl.first_occurrence.end() && b != tl.first_occurrence.end() &&
                        a->second <= b->second)
                        v = 1.0;
                    break;
                }
                case FeatureKind::Demographic: {
                    if (f.code_a == "age") {
                        v = static_cast<double>(demo.age);
                    } else {
                        auto eq = f.code_a.find('=');
                        if (eq != std::string::npos) {
                            std::string_view column(f.code_a.data(), eq);
                            std::string_view level(f.code_a.data() + eq + 1, f.code_a.size() - eq - 1);
                            const std::string& actual = column == "gender" ? demo.gender
                                                      : column == "race"   ? demo.race
                                                                           : demo.ethnicity;
                            if (actual == level) v = 1.0;
                        }
                    }
                    break;
                }
            }
            if (v != 0.0) entries.emplace_back(c, v);
        }
        for (const auto& [c, v] : entries) {
            m.col_idx.push_back(c);
            m.values.push_back(v);
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    return m;
}

namespace {

constexpr char kMagic[4] = {'M', 'L', 'H', 'O'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

void write_varint(std::ostream& out, std::uint64_t v) {
    while (v >= 0x80) {
        char byte = static_cast<char>((v & 0x7F) | 0x80);
        out.put(byte);
        v >>= 7;
    }
    out.put(static_cast<char>(v));
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::uint64_t read_varint(std::istream& in) {
    std::uint64_t v = 0;
    int shift = 0;
    for (;;) {
        int byte = in.get();
        if (byte == EOF) throw DataError("matrix file truncated");
        v |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
        if (!(byte & 0x80)) break;
        shift += 7;
    }
    return v;
}
std::string read_string(std::istream& in) {
    std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

}  // namespace

void save_matrix(const SparseFeatureMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write matrix file: " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u64(out, m.dictionary.size());
    for (const auto& f : m.dictionary) {
        out.put(static_cast<char>(f.kind));
        write_string(out, f.code_a);
        write_string(out, f.code_b);
    }
    write_u64(out, m.patient_order.size());
    for (const auto& id : m.patient_order) write_string(out, id);
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        std::size_t len;
        auto [cols, vals] = m.row(r, len);
        write_varint(out, len);
        std::uint32_t prev = 0;
        for (std::size_t k = 0; k < len; ++k) {
            write_varint(out, cols[k] - prev);  // strictly increasing, deltas >= 0
            prev = cols[k];
            write_f64(out, vals[k]);
        }
    }
    if (!out) throw Error("failed writing matrix file: " + path);
}

SparseFeatureMatrix load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open matrix file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a matrix file: " + path);
    std::uint32_t version = read_u32(in);
    if (version != kVersion) throw DataError("unsupported matrix version " + std::to_string(version));
    SparseFeatureMatrix m;
    std::uint64_t n_features = read_u64(in);
    m.dictionary.reserve(n_features);
    for (std::uint64_t i = 0; i < n_features; ++i) {
        FeatureDescriptor f;
        f.kind = static_cast<FeatureKind>(in.get());
        f.code_a = read_string(in);
        f.code_b = read_string(in);
        m.dictionary.push_back(std::move(f));
    }
    std::uint64_t n_rows = read_u64(in);
    m.patient_order.reserve(n_rows);
    for (std::uint64_t i = 0; i < n_rows; ++i) m.patient_order.push_back(read_string(in));
    m.row_ptr.resize(n_rows + 1, 0);
    for (std::uint64_t r = 0; r < n_rows; ++r) {
        std::uint64_t len = read_varint(in);
        std::uint32_t col = 0;
        for (std::uint64_t k = 0; k < len; ++k) {
            col += static_cast<std::uint32_t>(read_varint(in));
            m.col_idx.push_back(col);
            m.values.push_back(read_f64(in));
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    if (!in) throw DataError("matrix file truncated: " + path);
    return m;
}

void export_matrix_text(const SparseFeatureMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write matrix export: " + path);
    out << "patient_id,feature,value\n";
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        std::size_t len;
        auto [cols, vals] = m.row(r, len);
        for (std::size_t k = 0; k < len; ++k)
            out << m.patient_order[r] << ',' << m.dictionary[cols[k]].label() << ','
                << format_double(vals[k]) << "\n";
    }
}

}  // namespace mlho
