#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"

namespace elmeta {

enum class ColumnKind { continuous, symbolic };

/// One named column. Continuous columns hold finite reals in `numeric`;
/// symbolic columns hold indices into `categories` in `codes`.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    bool indicator = false; // 0/1 column produced by one-hot binarization
    std::vector<double> numeric;
    std::vector<std::int32_t> codes;
    std::vector<std::string> categories;

    std::size_t size() const {
        return kind == ColumnKind::continuous ? numeric.size() : codes.size();
    }

    static Column make_continuous(std::string name, std::vector<double> values) {
        Column c;
        c.name = std::move(name);
        c.numeric = std::move(values);
        return c;
    }

    static Column make_symbolic(std::string name, std::vector<std::int32_t> codes,
                                std::vector<std::string> categories) {
        Column c;
        c.name = std::move(name);
        c.kind = ColumnKind::symbolic;
        c.codes = std::move(codes);
        c.categories = std::move(categories);
        return c;
    }

    const std::string& category_of(std::size_t row) const {
        return categories.at(static_cast<std::size_t>(codes.at(row)));
    }
};

/// Per-source-column affine/one-hot parameters recorded at normalization time
/// so the same mapping can be reapplied to new rows or inverted.
struct NormalizationParams {
    struct SourceColumn {
        std::string name;
        bool symbolic = false;
        double min = 0.0; // continuous only
        double max = 0.0;
        std::vector<std::string> categories; // symbolic only, observed order
    };
    std::vector<SourceColumn> features;
    double target_min = 0.0;
    double target_max = 1.0;
};

struct Dataset {
    std::string name;
    std::vector<Column> features;
    Column target; // always continuous
    bool normalized = false;
    std::optional<NormalizationParams> norm_params;

    std::size_t rows() const { return target.size(); }
    std::size_t n_features() const { return features.size(); }

    std::size_t n_continuous_features() const {
        std::size_t n = 0;
        for (const auto& c : features)
            if (c.kind == ColumnKind::continuous) ++n;
        return n;
    }

    /// Structural invariants: equal column lengths, at least one row, finite
    /// continuous values, in-range symbolic codes.
    void validate() const {
        if (rows() == 0) throw ValidationError("dataset '" + name + "' has no rows");
        for (const auto& c : features) {
            if (c.size() != rows())
                throw ValidationError("dataset '" + name + "': column '" + c.name +
                                      "' length mismatch");
            if (c.kind == ColumnKind::continuous) {
                for (double v : c.numeric)
                    if (!std::isfinite(v))
                        throw ValidationError("dataset '" + name + "': non-finite value in '" +
                                              c.name + "'");
            } else {
                if (c.categories.empty())
                    throw ValidationError("dataset '" + name + "': symbolic column '" + c.name +
                                          "' has no categories");
                for (auto code : c.codes)
                    if (code < 0 || static_cast<std::size_t>(code) >= c.categories.size())
                        throw ValidationError("dataset '" + name + "': bad category code in '" +
                                              c.name + "'");
            }
        }
        for (double v : target.numeric)
            if (!std::isfinite(v))
                throw ValidationError("dataset '" + name + "': non-finite target value");
    }
};

struct AdmissionReport {
    std::size_t row_count = 0;
    std::size_t distinct_target_values = 0;
    bool admitted = false;
    std::vector<std::string> reasons;
};

inline constexpr std::size_t kMinAdmittedRows = 100;
inline constexpr std::size_t kMinDistinctTargets = 10;

/// Corpus admission: at least 100 examples and at least 10 distinct target
/// values. Works on raw or normalized datasets.
inline AdmissionReport check_admission(const Dataset& d) {
    AdmissionReport r;
    r.row_count = d.rows();
    std::set<double> distinct(d.target.numeric.begin(), d.target.numeric.end());
    r.distinct_target_values = distinct.size();
    if (r.row_count < kMinAdmittedRows)
        r.reasons.push_back("row_count " + std::to_string(r.row_count) + " < " +
                            std::to_string(kMinAdmittedRows));
    if (r.distinct_target_values < kMinDistinctTargets)
        r.reasons.push_back("distinct_target_values " + std::to_string(r.distinct_target_values) +
                            " < " + std::to_string(kMinDistinctTargets));
    r.admitted = r.reasons.empty();
    return r;
}

struct LoadResult {
    Dataset dataset;
    std::size_t rows_rejected = 0; // rows dropped for missing values
    std::vector<std::string> warnings;
};

enum class DatasetFormat { csv, arff };

// ---------------------------------------------------------------------------
// CSV ingestion (RFC-4180-style: mandatory header, quoted fields, '.' decimal
// separator). A feature column is symbolic iff any non-missing cell fails the
// numeric parse; rows with empty cells are rejected with a counted warning.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                               const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false;
    auto end_cell = [&] {
        record.push_back(cell);
        cell.clear();
        cell_started = false;
    };
    auto end_record = [&] {
        end_cell();
        records.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            if (cell_started && !cell.empty())
                throw std::runtime_error(origin + ": stray quote inside unquoted cell");
            in_quotes = true;
            cell_started = true;
        } else if (ch == ',') {
            end_cell();
        } else if (ch == '\n') {
            end_record();
        } else if (ch == '\r') {
            // swallow; \r\n handled by the \n branch
        } else {
            cell += ch;
            cell_started = true;
        }
    }
    if (in_quotes) throw std::runtime_error(origin + ": unterminated quoted cell");
    if (cell_started || !record.empty()) end_record();
    // A trailing blank line produces a single empty cell; drop such records.
    while (!records.empty() && records.back().size() == 1 && trim(records.back()[0]).empty())
        records.pop_back();
    return records;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string dataset_name_from_path(const std::filesystem::path& path) {
    return path.stem().string();
}

struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows; // cells, already trimmed
    std::size_t rows_rejected = 0;              // missing-value rejections
};

/// Column-oriented assembly shared by both loaders once cells are in hand.
/// `declared_kinds` is empty for CSV (heuristic inference) and fixed for ARFF.
inline LoadResult assemble_dataset(RawTable table, const std::string& name,
                                   const std::optional<std::string>& target_column,
                                   const std::vector<std::optional<std::vector<std::string>>>&
                                       declared_nominals, // per column; nullopt = numeric/infer
                                   bool kinds_declared, const std::string& origin) {
    const std::size_t n_cols = table.column_names.size();
    if (n_cols < 2) throw std::runtime_error(origin + ": need at least one feature and a target");
    if (table.rows.empty()) throw std::runtime_error(origin + ": empty dataset");

    std::size_t target_idx = n_cols - 1;
    if (target_column) {
        auto it = std::find(table.column_names.begin(), table.column_names.end(), *target_column);
        if (it == table.column_names.end())
            throw std::runtime_error(origin + ": target column '" + *target_column +
                                     "' not found");
        target_idx = static_cast<std::size_t>(it - table.column_names.begin());
    }

    LoadResult result;
    result.rows_rejected = table.rows_rejected;
    Dataset& d = result.dataset;
    d.name = name;

    for (std::size_t col = 0; col < n_cols; ++col) {
        const std::string& col_name = table.column_names[col];
        bool symbolic;
        if (kinds_declared) {
            symbolic = declared_nominals[col].has_value();
        } else {
            symbolic = false;
            for (const auto& row : table.rows)
                if (!parse_double(row[col])) {
                    symbolic = true;
                    break;
                }
        }

        if (col == target_idx) {
            if (symbolic)
                throw std::runtime_error(origin + ": non-numeric target column '" + col_name +
                                         "'");
            std::vector<double> values;
            values.reserve(table.rows.size());
            for (const auto& row : table.rows) values.push_back(*parse_double(row[col]));
            d.target = Column::make_continuous(col_name, std::move(values));
            continue;
        }

        if (!symbolic) {
            std::vector<double> values;
            values.reserve(table.rows.size());
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                auto v = parse_double(table.rows[r][col]);
                if (!v)
                    throw std::runtime_error(origin + ": row " + std::to_string(r + 1) +
                                             ": non-numeric value in numeric column '" + col_name +
                                             "'");
                values.push_back(*v);
            }
            d.features.push_back(Column::make_continuous(col_name, std::move(values)));
        } else {
            std::vector<std::string> categories;
            std::map<std::string, std::int32_t> index;
            if (kinds_declared) {
                categories = *declared_nominals[col];
                for (std::size_t i = 0; i < categories.size(); ++i)
                    index[categories[i]] = static_cast<std::int32_t>(i);
            }
            std::vector<std::int32_t> codes;
            codes.reserve(table.rows.size());
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const std::string& cell = table.rows[r][col];
                auto it = index.find(cell);
                if (it == index.end()) {
                    if (kinds_declared)
                        throw std::runtime_error(origin + ": row " + std::to_string(r + 1) +
                                                 ": value '" + cell +
                                                 "' not in declared nominal set of '" + col_name +
                                                 "'");
                    categories.push_back(cell);
                    it = index.emplace(cell, static_cast<std::int32_t>(categories.size() - 1))
                             .first;
                }
                codes.push_back(it->second);
            }
            d.features.push_back(
                Column::make_symbolic(col_name, std::move(codes), std::move(categories)));
        }
    }

    if (result.rows_rejected > 0)
        result.warnings.push_back("rejected " + std::to_string(result.rows_rejected) +
                                  " rows with missing values");
    d.validate();
    return result;
}

} // namespace detail

inline LoadResult load_csv(const std::filesystem::path& path,
                           const std::optional<std::string>& target_column = std::nullopt) {
    const std::string origin = path.string();
    auto records = detail::parse_csv_records(detail::read_file(path), origin);
    if (records.empty()) throw std::runtime_error(origin + ": empty dataset");

    detail::RawTable table;
    for (const auto& cell : records[0]) table.column_names.emplace_back(trim(cell));
    const std::size_t n_cols = table.column_names.size();

    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != n_cols)
            throw std::runtime_error(origin + ": row " + std::to_string(r) + " has " +
                                     std::to_string(records[r].size()) + " cells, expected " +
                                     std::to_string(n_cols));
        std::vector<std::string> row;
        row.reserve(n_cols);
        bool missing = false;
        for (const auto& cell : records[r]) {
            std::string t(trim(cell));
            if (t.empty() || t == "?") missing = true;
            row.push_back(std::move(t));
        }
        if (missing) {
            ++table.rows_rejected;
            continue;
        }
        table.rows.push_back(std::move(row));
    }

    std::vector<std::optional<std::vector<std::string>>> no_decls(n_cols);
    return detail::assemble_dataset(std::move(table), detail::dataset_name_from_path(path),
                                    target_column, no_decls, /*kinds_declared=*/false, origin);
}

// ---------------------------------------------------------------------------
// ARFF subset: @relation, @attribute (numeric | real | integer | {nominal}),
// dense @data. '?' cells reject the row with a counted warning; anything
// outside the subset (string/date attributes, sparse data) is a parse error.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string strip_arff_quotes(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"')))
        s = s.substr(1, s.size() - 2);
    return std::string(s);
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

inline std::vector<std::string> split_commas(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    bool quote = false;
    char quote_ch = 0;
    for (char ch : s) {
        if (quote) {
            cur += ch;
            if (ch == quote_ch) quote = false;
        } else if (ch == '\'' || ch == '"') {
            quote = true;
            quote_ch = ch;
            cur += ch;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline LoadResult load_arff(const std::filesystem::path& path,
                            const std::optional<std::string>& target_column = std::nullopt) {
    const std::string origin = path.string();
    std::string text = detail::read_file(path);
    std::istringstream in(text);

    detail::RawTable table;
    std::vector<std::optional<std::vector<std::string>>> nominals;
    bool in_data = false;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '%') continue;

        if (!in_data && sv.front() == '@') {
            auto space = sv.find_first_of(" \t");
            std::string_view keyword = space == std::string_view::npos ? sv : sv.substr(0, space);
            std::string_view rest =
                space == std::string_view::npos ? std::string_view{} : trim(sv.substr(space));
            if (detail::iequals(keyword, "@relation")) {
                // relation name recorded nowhere: the dataset name is the file
                // stem so corpus joins stay keyed by file
                continue;
            }
            if (detail::iequals(keyword, "@data")) {
                in_data = true;
                continue;
            }
            if (detail::iequals(keyword, "@attribute")) {
                std::string name, type;
                std::string_view r = rest;
                if (!r.empty() && (r.front() == '\'' || r.front() == '"')) {
                    char q = r.front();
                    auto close = r.find(q, 1);
                    if (close == std::string_view::npos)
                        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                                 ": unterminated attribute name");
                    name = std::string(r.substr(1, close - 1));
                    type = std::string(trim(r.substr(close + 1)));
                } else {
                    auto sp = r.find_first_of(" \t");
                    if (sp == std::string_view::npos)
                        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                                 ": @attribute needs a name and a type");
                    name = std::string(r.substr(0, sp));
                    type = std::string(trim(r.substr(sp)));
                }
                table.column_names.push_back(name);
                if (!type.empty() && type.front() == '{') {
                    if (type.back() != '}')
                        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                                 ": malformed nominal specification");
                    std::vector<std::string> cats;
                    for (auto& c :
                         detail::split_commas(std::string_view(type).substr(1, type.size() - 2)))
                        cats.push_back(detail::strip_arff_quotes(c));
                    if (cats.empty())
                        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                                 ": empty nominal set");
                    nominals.emplace_back(std::move(cats));
                } else if (detail::iequals(type, "numeric") || detail::iequals(type, "real") ||
                           detail::iequals(type, "integer")) {
                    nominals.emplace_back(std::nullopt);
                } else {
                    throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                             ": unsupported attribute type '" + type + "'");
                }
                continue;
            }
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": unsupported ARFF keyword '" + std::string(keyword) + "'");
        }

        if (!in_data)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": data before @data section");

        if (sv.front() == '{')
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": sparse ARFF data is not supported");

        auto cells = detail::split_commas(sv);
        if (cells.size() != table.column_names.size())
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": row has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(table.column_names.size()));
        std::vector<std::string> row;
        row.reserve(cells.size());
        bool missing = false;
        for (auto& c : cells) {
            std::string t = detail::strip_arff_quotes(c);
            if (t == "?" || t.empty()) missing = true;
            row.push_back(std::move(t));
        }
        if (missing) {
            ++table.rows_rejected;
            continue;
        }
        table.rows.push_back(std::move(row));
    }

    if (table.column_names.empty())
        throw std::runtime_error(origin + ": no @attribute declarations");
    if (!in_data) throw std::runtime_error(origin + ": missing @data section");

    return detail::assemble_dataset(std::move(table), detail::dataset_name_from_path(path),
                                    target_column, nominals, /*kinds_declared=*/true, origin);
}

inline LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                               const std::optional<std::string>& target_column = std::nullopt) {
    return format == DatasetFormat::csv ? load_csv(path, target_column)
                                        : load_arff(path, target_column);
}

/// Guess the format from the file extension.
inline DatasetFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".arff") return DatasetFormat::arff;
    return DatasetFormat::csv;
}

// ---------------------------------------------------------------------------
// Normalization: targets to [0, 1], continuous features to [-1, 1], symbolic
// features one-hot binarized (k indicator columns, exactly one 1 per row).
// Constant feature columns map to all zeros; a constant target is rejected as
// a degenerate regression problem.
// ---------------------------------------------------------------------------

inline Dataset normalize(const Dataset& d, bool force = false) {
    if (d.normalized && !force)
        throw ValidationError("dataset '" + d.name + "' is already normalized");

    Dataset out;
    out.name = d.name;
    out.normalized = true;
    NormalizationParams params;

    auto [tmin_it, tmax_it] =
        std::minmax_element(d.target.numeric.begin(), d.target.numeric.end());
    double tmin = *tmin_it, tmax = *tmax_it;
    if (tmin == tmax)
        throw std::runtime_error("dataset '" + d.name +
                                 "': constant target, degenerate regression problem");
    params.target_min = tmin;
    params.target_max = tmax;
    std::vector<double> tvals;
    tvals.reserve(d.rows());
    for (double v : d.target.numeric) tvals.push_back((v - tmin) / (tmax - tmin));
    out.target = Column::make_continuous(d.target.name, std::move(tvals));

    for (const auto& col : d.features) {
        if (col.indicator) {
            // already a one-hot bit from a previous pass; keep untouched
            out.features.push_back(col);
            continue;
        }
        if (col.kind == ColumnKind::continuous) {
            auto [mn_it, mx_it] = std::minmax_element(col.numeric.begin(), col.numeric.end());
            double mn = *mn_it, mx = *mx_it;
            NormalizationParams::SourceColumn src;
            src.name = col.name;
            src.min = mn;
            src.max = mx;
            params.features.push_back(src);
            std::vector<double> vals;
            vals.reserve(col.numeric.size());
            if (mn == mx) {
                vals.assign(col.numeric.size(), 0.0); // constant column, midpoint
            } else {
                for (double v : col.numeric) vals.push_back(2.0 * (v - mn) / (mx - mn) - 1.0);
            }
            out.features.push_back(Column::make_continuous(col.name, std::move(vals)));
        } else {
            // observed categories only, in dictionary order
            std::vector<bool> seen(col.categories.size(), false);
            for (auto code : col.codes) seen[static_cast<std::size_t>(code)] = true;
            std::vector<std::string> observed;
            std::vector<std::int32_t> remap(col.categories.size(), -1);
            for (std::size_t i = 0; i < col.categories.size(); ++i)
                if (seen[i]) {
                    remap[i] = static_cast<std::int32_t>(observed.size());
                    observed.push_back(col.categories[i]);
                }
            NormalizationParams::SourceColumn src;
            src.name = col.name;
            src.symbolic = true;
            src.categories = observed;
            params.features.push_back(src);
            for (std::size_t k = 0; k < observed.size(); ++k) {
                std::vector<double> bits(col.codes.size(), 0.0);
                for (std::size_t r = 0; r < col.codes.size(); ++r)
                    if (remap[static_cast<std::size_t>(col.codes[r])] ==
                        static_cast<std::int32_t>(k))
                        bits[r] = 1.0;
                Column bit = Column::make_continuous(col.name + "=" + observed[k],
                                                     std::move(bits));
                bit.indicator = true;
                out.features.push_back(std::move(bit));
            }
        }
    }

    out.norm_params = std::move(params);
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Train/test split: uniform random permutation, train size = round(f * n).
// ---------------------------------------------------------------------------

inline std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double train_fraction,
                                                    std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("train_fraction must lie in (0, 1)");
    const std::size_t n = d.rows();
    if (n < 2) throw ValidationError("split needs at least 2 rows");
    const auto train_n =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (train_n == 0 || train_n == n)
        throw ValidationError("train_fraction " + fmt_double(train_fraction) +
                              " yields an empty partition for n=" + std::to_string(n));

    auto perm = shuffled_indices(n, seed);

    auto subset = [&](std::size_t begin, std::size_t end, const char* suffix) {
        Dataset s;
        s.name = d.name + suffix;
        s.normalized = d.normalized;
        s.norm_params = d.norm_params;
        for (const auto& col : d.features) {
            Column c;
            c.name = col.name;
            c.kind = col.kind;
            c.indicator = col.indicator;
            c.categories = col.categories;
            for (std::size_t i = begin; i < end; ++i) {
                if (col.kind == ColumnKind::continuous)
                    c.numeric.push_back(col.numeric[perm[i]]);
                else
                    c.codes.push_back(col.codes[perm[i]]);
            }
            s.features.push_back(std::move(c));
        }
        s.target.name = d.target.name;
        for (std::size_t i = begin; i < end; ++i)
            s.target.numeric.push_back(d.target.numeric[perm[i]]);
        return s;
    };

    return {subset(0, train_n, "#train"), subset(train_n, n, "#test")};
}

// ---------------------------------------------------------------------------
// Canonical serialized form: CSV body plus a JSON sidecar recording column
// kinds, category dictionaries and normalization parameters, so a load after
// save reproduces the dataset exactly and normalization stays reapplicable.
// ---------------------------------------------------------------------------

inline std::filesystem::path sidecar_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".schema.json");
    return p;
}

namespace detail {

inline std::string csv_escape(const std::string& cell) {
    bool needs_quotes = cell.find_first_of(",\"\r\n") != std::string::npos ||
                        (!cell.empty() && (cell.front() == ' ' || cell.back() == ' '));
    if (!needs_quotes) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

inline void save_dataset(const Dataset& d, const std::filesystem::path& csv_path) {
    d.validate();
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());

    std::vector<std::string> header;
    for (const auto& c : d.features) header.push_back(detail::csv_escape(c.name));
    header.push_back(detail::csv_escape(d.target.name));
    out << join(header, ",") << "\n";

    for (std::size_t r = 0; r < d.rows(); ++r) {
        std::vector<std::string> cells;
        for (const auto& c : d.features)
            cells.push_back(c.kind == ColumnKind::continuous
                                ? fmt_double(c.numeric[r])
                                : detail::csv_escape(c.category_of(r)));
        cells.push_back(fmt_double(d.target.numeric[r]));
        out << join(cells, ",") << "\n";
    }
    out.close();

    nlohmann::json schema;
    schema["schema_version"] = 1;
    schema["name"] = d.name;
    schema["normalized"] = d.normalized;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : d.features) {
        nlohmann::json jc;
        jc["name"] = c.name;
        jc["kind"] = c.kind == ColumnKind::continuous ? "continuous" : "symbolic";
        jc["indicator"] = c.indicator;
        if (c.kind == ColumnKind::symbolic) jc["categories"] = c.categories;
        cols.push_back(jc);
    }
    schema["columns"] = cols;
    schema["target"] = {{"name", d.target.name}};
    if (d.norm_params) {
        nlohmann::json np;
        np["target_min"] = d.norm_params->target_min;
        np["target_max"] = d.norm_params->target_max;
        nlohmann::json feats = nlohmann::json::array();
        for (const auto& f : d.norm_params->features) {
            nlohmann::json jf;
            jf["name"] = f.name;
            jf["symbolic"] = f.symbolic;
            if (f.symbolic)
                jf["categories"] = f.categories;
            else {
                jf["min"] = f.min;
                jf["max"] = f.max;
            }
            feats.push_back(jf);
        }
        np["features"] = feats;
        schema["normalization"] = np;
    }
    std::ofstream sout(sidecar_path_for(csv_path), std::ios::binary);
    if (!sout) throw std::runtime_error("cannot write " + sidecar_path_for(csv_path).string());
    sout << schema.dump(2) << "\n";
}

/// Load a canonical CSV + sidecar pair; the sidecar restores declared column
/// kinds, dictionaries and normalization parameters.
inline LoadResult load_canonical(const std::filesystem::path& csv_path) {
    auto side = sidecar_path_for(csv_path);
    if (!std::filesystem::exists(side))
        throw std::runtime_error("missing sidecar schema: " + side.string());
    nlohmann::json schema = nlohmann::json::parse(detail::read_file(side));
    if (schema.value("schema_version", 0) != 1)
        throw std::runtime_error(side.string() + ": unsupported schema_version");

    const std::string origin = csv_path.string();
    auto records = detail::parse_csv_records(detail::read_file(csv_path), origin);
    if (records.empty()) throw std::runtime_error(origin + ": empty dataset");

    detail::RawTable table;
    for (const auto& cell : records[0]) table.column_names.emplace_back(trim(cell));
    const std::size_t n_cols = table.column_names.size();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != n_cols)
            throw std::runtime_error(origin + ": row " + std::to_string(r) +
                                     " has wrong cell count");
        std::vector<std::string> row;
        for (const auto& cell : records[r]) row.emplace_back(trim(cell));
        table.rows.push_back(std::move(row));
    }

    auto jcols = schema.at("columns");
    if (jcols.size() + 1 != n_cols)
        throw std::runtime_error(origin + ": sidecar declares " + std::to_string(jcols.size()) +
                                 " feature columns, file has " + std::to_string(n_cols - 1));
    std::vector<std::optional<std::vector<std::string>>> nominals;
    for (const auto& jc : jcols) {
        if (jc.at("kind") == "symbolic")
            nominals.emplace_back(jc.at("categories").get<std::vector<std::string>>());
        else
            nominals.emplace_back(std::nullopt);
    }
    nominals.emplace_back(std::nullopt); // target

    auto result = detail::assemble_dataset(std::move(table), schema.at("name").get<std::string>(),
                                           std::nullopt, nominals, /*kinds_declared=*/true,
                                           origin);
    result.dataset.normalized = schema.value("normalized", false);
    for (std::size_t i = 0; i < jcols.size(); ++i)
        result.dataset.features[i].indicator = jcols[i].value("indicator", false);
    if (schema.contains("normalization")) {
        NormalizationParams np;
        const auto& jn = schema["normalization"];
        np.target_min = jn.at("target_min").get<double>();
        np.target_max = jn.at("target_max").get<double>();
        for (const auto& jf : jn.at("features")) {
            NormalizationParams::SourceColumn f;
            f.name = jf.at("name").get<std::string>();
            f.symbolic = jf.at("symbolic").get<bool>();
            if (f.symbolic)
                f.categories = jf.at("categories").get<std::vector<std::string>>();
            else {
                f.min = jf.at("min").get<double>();
                f.max = jf.at("max").get<double>();
            }
            np.features.push_back(std::move(f));
        }
        result.dataset.norm_params = std::move(np);
    }
    return result;
}

/// Reapply stored normalization parameters to a raw feature row (used when a
/// trained model meets a new dataset).
inline std::vector<double> apply_normalization(const NormalizationParams& params,
                                               const Dataset& raw, std::size_t row) {
    if (raw.features.size() != params.features.size())
        throw std::runtime_error("normalization reapply: column count mismatch");
    std::vector<double> out;
    for (std::size_t i = 0; i < params.features.size(); ++i) {
        const auto& src = params.features[i];
        const auto& col = raw.features[i];
        if (src.symbolic != (col.kind == ColumnKind::symbolic))
            throw std::runtime_error("normalization reapply: column kind mismatch at '" +
                                     src.name + "'");
        if (!src.symbolic) {
            double v = col.numeric[row];
            out.push_back(src.min == src.max
                              ? 0.0
                              : 2.0 * (v - src.min) / (src.max - src.min) - 1.0);
        } else {
            const std::string& cat = col.category_of(row);
            auto it = std::find(src.categories.begin(), src.categories.end(), cat);
            if (it == src.categories.end())
                throw std::runtime_error("normalization reapply: unseen category '" + cat +
                                         "' in '" + src.name + "'");
            for (std::size_t k = 0; k < src.categories.size(); ++k)
                out.push_back(k == static_cast<std::size_t>(it - src.categories.begin()) ? 1.0
                                                                                         : 0.0);
        }
    }
    return out;
}

} // namespace elmeta
