#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/dataset.hpp"
#include "elmeta/label_search.hpp"
#include "elmeta/meta_features.hpp"

namespace elmeta {

/// One row of the meta-base: a problem's 16 descriptors paired with its
/// empirically best hidden-neuron count.
struct MetaExample {
    std::string dataset_name;
    std::array<double, kMetaFeatureCount> features{};
    int label = 0;
};

struct MetaBaseProvenance {
    int schema_version = 1;
    std::string tool_version = kToolVersion;
    FeatureConfig feature_config;
    SweepConfig sweep_config;

    std::uint64_t feature_config_hash() const { return feature_config.hash(); }
};

struct MetaBase {
    std::vector<MetaExample> examples;
    MetaBaseProvenance provenance;

    void validate() const {
        std::map<std::string, int> seen;
        for (const auto& e : examples) {
            if (++seen[e.dataset_name] > 1)
                throw ValidationError("meta-base: duplicate dataset name '" + e.dataset_name +
                                      "'");
            if (e.label < provenance.sweep_config.n_min || e.label > provenance.sweep_config.n_max)
                throw ValidationError("meta-base: label " + std::to_string(e.label) + " of '" +
                                      e.dataset_name + "' outside sweep range");
        }
    }
};

struct MetaBaseBuild {
    MetaBase metabase;
    std::vector<std::string> skipped; // names present in only one input
};

/// Inner join of extracted features and sweep labels on dataset name.
/// Duplicates within either input are an error; one-sided names are reported
/// as skipped.
inline MetaBaseBuild build_metabase(
    const std::vector<std::pair<std::string, std::array<double, kMetaFeatureCount>>>& features,
    const std::vector<SweepResult>& sweeps, const FeatureConfig& feature_config,
    const SweepConfig& sweep_config) {
    std::map<std::string, const std::array<double, kMetaFeatureCount>*> by_name;
    for (const auto& [name, vec] : features)
        if (!by_name.emplace(name, &vec).second)
            throw ValidationError("build_metabase: duplicate feature row '" + name + "'");

    std::map<std::string, int> labels;
    for (const auto& s : sweeps)
        if (!labels.emplace(s.dataset_name, s.best_count).second)
            throw ValidationError("build_metabase: duplicate sweep result '" + s.dataset_name +
                                  "'");

    MetaBaseBuild out;
    out.metabase.provenance.feature_config = feature_config;
    out.metabase.provenance.sweep_config = sweep_config;

    for (const auto& [name, vec] : features) {
        auto it = labels.find(name);
        if (it == labels.end()) {
            out.skipped.push_back(name + ": no sweep result");
            continue;
        }
        out.metabase.examples.push_back(MetaExample{name, *by_name.at(name), it->second});
    }
    for (const auto& s : sweeps)
        if (!by_name.count(s.dataset_name))
            out.skipped.push_back(s.dataset_name + ": no feature row");

    out.metabase.validate();
    return out;
}

/// Arithmetic mean of the labels; the constant the naive predictor uses.
inline double label_mean(const MetaBase& mb) {
    if (mb.examples.empty()) throw ValidationError("label_mean: empty meta-base");
    double s = 0.0;
    for (const auto& e : mb.examples) s += static_cast<double>(e.label);
    return s / static_cast<double>(mb.examples.size());
}

// ---------------------------------------------------------------------------
// Persistence: hand-inspectable CSV body (name + 16 features + label) with a
// JSON provenance header in a sidecar file.
// ---------------------------------------------------------------------------

inline std::filesystem::path metabase_sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

namespace detail {

inline nlohmann::json feature_config_json(const FeatureConfig& c) {
    return {{"cv_sparse_threshold", c.cv_sparse_threshold},
            {"cv_extreme_threshold", c.cv_extreme_threshold},
            {"outlier_iqr_factor", c.outlier_iqr_factor}};
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j) {
    FeatureConfig c;
    c.cv_sparse_threshold = j.value("cv_sparse_threshold", c.cv_sparse_threshold);
    c.cv_extreme_threshold = j.value("cv_extreme_threshold", c.cv_extreme_threshold);
    c.outlier_iqr_factor = j.value("outlier_iqr_factor", c.outlier_iqr_factor);
    return c;
}

} // namespace detail

inline void save_metabase(const MetaBase& mb, const std::filesystem::path& csv_path) {
    mb.validate();
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    std::vector<std::string> header{"dataset"};
    for (auto name : kMetaFeatureNames) header.emplace_back(name);
    header.emplace_back("label");
    out << join(header, ",") << "\n";
    for (const auto& e : mb.examples) {
        std::vector<std::string> cells{detail::csv_escape(e.dataset_name)};
        for (double v : e.features) cells.push_back(fmt_double(v));
        cells.push_back(std::to_string(e.label));
        out << join(cells, ",") << "\n";
    }
    out.close();

    nlohmann::json j;
    j["schema_version"] = mb.provenance.schema_version;
    j["tool_version"] = mb.provenance.tool_version;
    j["feature_config"] = detail::feature_config_json(mb.provenance.feature_config);
    j["feature_config_hash"] = mb.provenance.feature_config_hash();
    j["sweep_config"] = mb.provenance.sweep_config.to_json();
    j["n_examples"] = mb.examples.size();
    std::ofstream sout(metabase_sidecar_path(csv_path), std::ios::binary);
    if (!sout)
        throw std::runtime_error("cannot write " + metabase_sidecar_path(csv_path).string());
    sout << j.dump(2) << "\n";
}

inline MetaBase load_metabase(const std::filesystem::path& csv_path) {
    auto side = metabase_sidecar_path(csv_path);
    if (!std::filesystem::exists(side))
        throw std::runtime_error("missing meta-base header: " + side.string());
    nlohmann::json j = nlohmann::json::parse(detail::read_file(side));
    MetaBase mb;
    if (j.value("schema_version", 0) != mb.provenance.schema_version)
        throw std::runtime_error(side.string() + ": unsupported schema_version");
    mb.provenance.tool_version = j.value("tool_version", std::string{});
    mb.provenance.feature_config = detail::feature_config_from_json(j.at("feature_config"));
    mb.provenance.sweep_config = SweepConfig::from_json(j.at("sweep_config"));

    const std::string origin = csv_path.string();
    auto records = detail::parse_csv_records(detail::read_file(csv_path), origin);
    if (records.empty()) throw std::runtime_error(origin + ": empty meta-base");
    const std::size_t expect = 1 + kMetaFeatureCount + 1;
    if (records[0].size() != expect)
        throw std::runtime_error(origin + ": header has " + std::to_string(records[0].size()) +
                                 " columns, expected " + std::to_string(expect));
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() != expect)
            throw std::runtime_error(origin + ": row " + std::to_string(r) + " has " +
                                     std::to_string(row.size()) + " columns, expected " +
                                     std::to_string(expect));
        MetaExample e;
        e.dataset_name = std::string(trim(row[0]));
        for (std::size_t k = 0; k < kMetaFeatureCount; ++k) {
            auto v = parse_double(row[1 + k]);
            if (!v)
                throw std::runtime_error(origin + ": row " + std::to_string(r) +
                                         ": bad feature value '" + row[1 + k] + "'");
            e.features[k] = *v;
        }
        auto lbl = parse_double(row[expect - 1]);
        if (!lbl || *lbl != std::floor(*lbl))
            throw std::runtime_error(origin + ": row " + std::to_string(r) + ": bad label '" +
                                     row[expect - 1] + "'");
        e.label = static_cast<int>(*lbl);
        mb.examples.push_back(std::move(e));
    }
    mb.validate();
    return mb;
}

} // namespace elmeta
