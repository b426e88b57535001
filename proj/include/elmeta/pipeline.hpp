#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/dataset.hpp"
#include "elmeta/evaluation.hpp"
#include "elmeta/label_search.hpp"
#include "elmeta/meta_features.hpp"
#include "elmeta/meta_learners.hpp"
#include "elmeta/metabase.hpp"

namespace elmeta {

/// End-to-end run configuration. One JSON file drives the whole chain so a
/// sweep is exactly rerunnable from the artifact; command-line flags override
/// individual fields.
struct PipelineConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    int workers = 1;
    int histogram_bin_width = 25;
    SweepConfig sweep;
    FeatureConfig features;
    std::vector<LearnerSpec> learners = default_learners();

    /// The evaluated meta-learner set: the four families, with the polynomial
    /// kernel and the three documented RBF widths for SVR.
    static std::vector<LearnerSpec> default_learners() {
        std::vector<LearnerSpec> out;
        out.push_back({Family::knn1});
        out.push_back({Family::linear});
        out.push_back({Family::m5});
        LearnerSpec poly{Family::svr};
        poly.svr.kernel = SvrKernel::polynomial;
        poly.svr.degree = 1;
        poly.svr.coef0 = 0.0;
        out.push_back(poly);
        for (double gamma : SvrParams::rbf_gamma_presets()) {
            LearnerSpec rbf{Family::svr};
            rbf.svr.kernel = SvrKernel::rbf;
            rbf.svr.gamma = gamma;
            out.push_back(rbf);
        }
        return out;
    }

    void validate() const {
        sweep.validate();
        if (workers < 1) throw ValidationError("config: workers must be >= 1");
        if (histogram_bin_width < 1)
            throw ValidationError("config: histogram_bin_width must be >= 1");
        if (corpus_dir.empty()) throw ValidationError("config: corpus_dir is required");
        if (output_dir.empty()) throw ValidationError("config: output_dir is required");
        if (learners.empty()) throw ValidationError("config: no meta-learners configured");
        if (features.cv_sparse_threshold <= 0 ||
            features.cv_extreme_threshold < features.cv_sparse_threshold)
            throw ValidationError("config: need 0 < cv_sparse_threshold <= cv_extreme_threshold");
        if (features.outlier_iqr_factor <= 0)
            throw ValidationError("config: outlier_iqr_factor must be > 0");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["corpus_dir"] = corpus_dir.string();
        j["output_dir"] = output_dir.string();
        j["seed"] = seed;
        j["workers"] = workers;
        j["histogram_bin_width"] = histogram_bin_width;
        j["sweep"] = sweep.to_json();
        j["features"] = detail::feature_config_json(features);
        nlohmann::json ls = nlohmann::json::array();
        for (const auto& l : learners) ls.push_back(l.to_json());
        j["meta_learners"] = ls;
        return j;
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig c;
        c.corpus_dir = j.value("corpus_dir", std::string{});
        c.output_dir = j.value("output_dir", std::string{});
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.histogram_bin_width = j.value("histogram_bin_width", c.histogram_bin_width);
        if (j.contains("sweep")) c.sweep = SweepConfig::from_json(j["sweep"]);
        if (j.contains("features"))
            c.features = detail::feature_config_from_json(j["features"]);
        if (j.contains("meta_learners")) {
            c.learners.clear();
            for (const auto& l : j["meta_learners"]) c.learners.push_back(LearnerSpec::from_json(l));
        }
        c.sweep.base_seed = c.seed;
        return c;
    }

    static PipelineConfig from_file(const std::filesystem::path& path) {
        return from_json(nlohmann::json::parse(detail::read_file(path)));
    }
};

// ---------------------------------------------------------------------------
// Corpus ingestion
// ---------------------------------------------------------------------------

struct IngestEntry {
    std::string name;
    std::filesystem::path path;
    std::size_t rows = 0;
    std::size_t distinct_targets = 0;
    std::size_t rows_rejected = 0;
    bool admitted = false;
    std::string error; // nonempty on load failure
};

struct IngestedCorpus {
    std::vector<Dataset> raw;        // admitted, load order
    std::vector<Dataset> normalized; // parallel to raw
    std::vector<IngestEntry> report; // every file, including failures
};

/// All *.csv / *.arff files of a directory in name order.
inline std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ValidationError("corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".csv" || ext == ".arff") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Load every dataset in the directory, apply the admission checks and
/// normalize the admitted ones. Failures and rejections never abort the rest.
inline IngestedCorpus ingest_corpus(const std::filesystem::path& dir, std::ostream& log) {
    IngestedCorpus out;
    for (const auto& path : corpus_files(dir)) {
        IngestEntry entry;
        entry.path = path;
        entry.name = path.stem().string();
        try {
            LoadResult lr = load_dataset(path, format_from_path(path));
            entry.rows_rejected = lr.rows_rejected;
            AdmissionReport ar = check_admission(lr.dataset);
            entry.rows = ar.row_count;
            entry.distinct_targets = ar.distinct_target_values;
            entry.admitted = ar.admitted;
            if (!ar.admitted) {
                log << "ingest: rejected " << entry.name << " (" << join(ar.reasons, "; ")
                    << ")\n";
            } else {
                Dataset norm = normalize(lr.dataset);
                out.raw.push_back(std::move(lr.dataset));
                out.normalized.push_back(std::move(norm));
            }
        } catch (const std::exception& e) {
            entry.error = e.what();
            log << "ingest: failed " << entry.name << ": " << e.what() << "\n";
        }
        out.report.push_back(std::move(entry));
    }
    return out;
}

inline void write_ingest_report_csv(const std::vector<IngestEntry>& report,
                                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "dataset,rows,distinct_targets,rows_rejected,admitted,error\n";
    for (const auto& e : report)
        out << detail::csv_escape(e.name) << "," << e.rows << "," << e.distinct_targets << ","
            << e.rows_rejected << "," << (e.admitted ? 1 : 0) << ","
            << detail::csv_escape(e.error) << "\n";
}

// ---------------------------------------------------------------------------
// Feature artifacts: one CSV row per dataset (name + 16 values + warnings),
// extractor configuration in a JSON sidecar.
// ---------------------------------------------------------------------------

inline void write_features_csv(
    const std::vector<std::pair<std::string, MetaFeatures>>& rows,
    const FeatureConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::vector<std::string> header{"dataset"};
    for (auto n : kMetaFeatureNames) header.emplace_back(n);
    header.emplace_back("warnings");
    out << join(header, ",") << "\n";
    for (const auto& [name, mf] : rows) {
        std::vector<std::string> cells{detail::csv_escape(name)};
        for (double v : mf.values) cells.push_back(fmt_double(v));
        cells.push_back(detail::csv_escape(join(mf.warnings, ";")));
        out << join(cells, ",") << "\n";
    }
    out.close();

    nlohmann::json j;
    j["schema_version"] = 1;
    j["tool_version"] = kToolVersion;
    j["feature_config"] = detail::feature_config_json(config);
    j["feature_config_hash"] = config.hash();
    std::filesystem::path side = path;
    side.replace_extension(".meta.json");
    std::ofstream sout(side, std::ios::binary);
    if (!sout) throw std::runtime_error("cannot write " + side.string());
    sout << j.dump(2) << "\n";
}

struct FeaturesArtifact {
    std::vector<std::pair<std::string, std::array<double, kMetaFeatureCount>>> rows;
    FeatureConfig config;
};

inline FeaturesArtifact read_features_csv(const std::filesystem::path& path) {
    std::filesystem::path side = path;
    side.replace_extension(".meta.json");
    if (!std::filesystem::exists(side))
        throw std::runtime_error("missing features sidecar: " + side.string());
    nlohmann::json j = nlohmann::json::parse(detail::read_file(side));
    FeaturesArtifact art;
    art.config = detail::feature_config_from_json(j.at("feature_config"));

    auto records = detail::parse_csv_records(detail::read_file(path), path.string());
    const std::size_t expect = 1 + kMetaFeatureCount + 1;
    if (records.empty() || records[0].size() != expect)
        throw std::runtime_error(path.string() + ": unexpected features header");
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != expect)
            throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                                     " has wrong column count");
        std::pair<std::string, std::array<double, kMetaFeatureCount>> row;
        row.first = std::string(trim(records[r][0]));
        for (std::size_t k = 0; k < kMetaFeatureCount; ++k) {
            auto v = parse_double(records[r][1 + k]);
            if (!v)
                throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                                         ": bad value '" + records[r][1 + k] + "'");
            row.second[k] = *v;
        }
        art.rows.push_back(std::move(row));
    }
    return art;
}

// ---------------------------------------------------------------------------
// Sweep artifacts: per-dataset JSON result files plus a corpus summary CSV.
// ---------------------------------------------------------------------------

inline void write_sweep_results(const std::vector<SweepResult>& results,
                                const SweepConfig& config,
                                const std::filesystem::path& sweep_dir,
                                const std::filesystem::path& summary_csv) {
    std::filesystem::create_directories(sweep_dir);
    for (const auto& r : results) {
        std::ofstream out(sweep_dir / (r.dataset_name + ".json"), std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write sweep result for " + r.dataset_name);
        out << r.to_json().dump(2) << "\n";
    }
    std::ofstream out(summary_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + summary_csv.string());
    out << "dataset,best_count,min_mean_rmse\n";
    for (const auto& r : results)
        out << detail::csv_escape(r.dataset_name) << "," << r.best_count << ","
            << fmt_double(r.min_mean_rmse) << "\n";
    out.close();

    nlohmann::json j;
    j["schema_version"] = 1;
    j["tool_version"] = kToolVersion;
    j["sweep_config"] = config.to_json();
    std::filesystem::path side = summary_csv;
    side.replace_extension(".meta.json");
    std::ofstream sout(side, std::ios::binary);
    if (!sout) throw std::runtime_error("cannot write " + side.string());
    sout << j.dump(2) << "\n";
}

struct SweepSummaryArtifact {
    std::vector<SweepResult> results; // summary-level: name, best count, min rmse
    SweepConfig config;
};

inline SweepSummaryArtifact read_sweep_summary_csv(const std::filesystem::path& path) {
    std::filesystem::path side = path;
    side.replace_extension(".meta.json");
    if (!std::filesystem::exists(side))
        throw std::runtime_error("missing sweep sidecar: " + side.string());
    nlohmann::json j = nlohmann::json::parse(detail::read_file(side));
    SweepSummaryArtifact art;
    art.config = SweepConfig::from_json(j.at("sweep_config"));

    auto records = detail::parse_csv_records(detail::read_file(path), path.string());
    if (records.empty() || records[0].size() != 3)
        throw std::runtime_error(path.string() + ": unexpected sweep summary header");
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != 3)
            throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                                     " has wrong column count");
        SweepResult s;
        s.dataset_name = std::string(trim(records[r][0]));
        auto bc = parse_double(records[r][1]);
        auto mm = parse_double(records[r][2]);
        if (!bc || !mm || *bc != std::floor(*bc))
            throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                                     ": bad values");
        s.best_count = static_cast<int>(*bc);
        s.min_mean_rmse = *mm;
        s.config = art.config;
        art.results.push_back(std::move(s));
    }
    return art;
}

/// Load full per-dataset sweep JSONs from a directory (used by `report`).
inline std::vector<SweepResult> read_sweep_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ValidationError("sweep directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<SweepResult> out;
    for (const auto& f : files)
        out.push_back(SweepResult::from_json(nlohmann::json::parse(detail::read_file(f))));
    return out;
}

inline void write_histogram_csv(const std::vector<HistogramBin>& bins,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "bin_start,bin_end,count\n";
    for (const auto& b : bins) out << b.start << "," << b.end << "," << b.count << "\n";
}

inline void write_evaluation_csv(const std::vector<RankingRow>& rows,
                                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "method,rae_percent,correlation\n";
    for (const auto& r : rows)
        out << detail::csv_escape(r.method) << "," << fmt_double(r.rae_percent) << ","
            << fmt_double(r.correlation) << "\n";
}

// ---------------------------------------------------------------------------
// Full pipeline: ingest -> features -> label sweep -> meta-base -> evaluation
// -> histogram. Outputs are deterministic for a fixed config and seed; the
// run log carries the only timestamps.
// ---------------------------------------------------------------------------

struct PipelineOutcome {
    std::filesystem::path metabase_csv;
    std::filesystem::path evaluation_csv;
    std::filesystem::path histogram_csv;
    std::size_t n_datasets = 0;
    std::size_t n_meta_examples = 0;
    std::vector<std::string> failures;
};

inline PipelineOutcome run_pipeline(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    SweepConfig sweep_cfg = config.sweep;
    sweep_cfg.base_seed = config.seed;

    const auto& out_dir = config.output_dir;
    std::filesystem::create_directories(out_dir);
    std::filesystem::create_directories(out_dir / "normalized");

    log << "stage ingest: " << config.corpus_dir.string() << "\n";
    IngestedCorpus corpus = ingest_corpus(config.corpus_dir, log);
    write_ingest_report_csv(corpus.report, out_dir / "ingest_report.csv");
    if (corpus.raw.empty()) throw std::runtime_error("ingest: no admitted datasets in corpus");
    for (const auto& d : corpus.normalized)
        save_dataset(d, out_dir / "normalized" / (d.name + ".csv"));

    log << "stage features: " << corpus.raw.size() << " datasets\n";
    std::vector<std::pair<std::string, MetaFeatures>> feature_rows;
    for (const auto& d : corpus.raw)
        feature_rows.emplace_back(d.name, extract_meta_features(d, config.features));
    write_features_csv(feature_rows, config.features, out_dir / "features.csv");

    log << "stage label-sweep: range [" << sweep_cfg.n_min << ", " << sweep_cfg.n_max << "], "
        << sweep_cfg.repetitions << " repetitions, " << config.workers << " workers\n";
    CorpusSweep sweep = sweep_corpus(corpus.normalized, sweep_cfg, config.workers,
                                     [&](const std::string& name) {
                                         log << "  sweep " << name << "\n";
                                     });
    write_sweep_results(sweep.results, sweep_cfg, out_dir / "sweeps",
                        out_dir / "sweep_summary.csv");

    log << "stage build-metabase\n";
    std::vector<std::pair<std::string, std::array<double, kMetaFeatureCount>>> feats;
    for (const auto& [name, mf] : feature_rows) feats.emplace_back(name, mf.values);
    MetaBaseBuild build = build_metabase(feats, sweep.results, config.features, sweep_cfg);
    for (const auto& s : build.skipped) log << "  skipped " << s << "\n";
    save_metabase(build.metabase, out_dir / "metabase.csv");

    log << "stage evaluate: " << config.learners.size() << " meta-learners\n";
    std::vector<LooReport> reports;
    for (const auto& spec : config.learners) {
        log << "  loo " << spec.id() << "\n";
        reports.push_back(loo_evaluate(spec, build.metabase));
        std::ofstream rout(out_dir / ("loo_" + spec.id() + ".json"), std::ios::binary);
        if (!rout) throw std::runtime_error("cannot write loo report for " + spec.id());
        nlohmann::json rj = reports.back().to_json();
        rj["feature_config_hash"] = config.features.hash();
        rout << rj.dump(2) << "\n";
    }
    write_evaluation_csv(compare_report(reports), out_dir / "evaluation.csv");

    log << "stage report\n";
    write_histogram_csv(label_histogram(sweep.results, config.histogram_bin_width,
                                        sweep_cfg.n_min, sweep_cfg.n_max),
                        out_dir / "histogram.csv");

    nlohmann::json prov;
    prov["tool_version"] = kToolVersion;
    prov["config"] = config.to_json();
    prov["feature_config_hash"] = config.features.hash();
    std::ofstream pout(out_dir / "provenance.json", std::ios::binary);
    pout << prov.dump(2) << "\n";

    PipelineOutcome outcome;
    outcome.metabase_csv = out_dir / "metabase.csv";
    outcome.evaluation_csv = out_dir / "evaluation.csv";
    outcome.histogram_csv = out_dir / "histogram.csv";
    outcome.n_datasets = corpus.raw.size();
    outcome.n_meta_examples = build.metabase.examples.size();
    outcome.failures = sweep.failures;
    for (const auto& e : corpus.report)
        if (!e.error.empty()) outcome.failures.push_back(e.name + ": " + e.error);
    return outcome;
}

} // namespace elmeta
