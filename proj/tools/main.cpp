// elmeta command-line front end: ingest -> features -> label-sweep ->
// build-metabase -> evaluate / train-meta -> predict -> report, plus the
// one-shot `pipeline` subcommand. Progress goes to stderr; machine-readable
// results go to files (and stdout for `predict`).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "elmeta/elmeta.hpp"

namespace {

int env_workers() {
    const char* v = std::getenv("ELMETA_WORKERS");
    if (!v) return 0;
    auto parsed = elmeta::parse_double(v);
    if (!parsed || *parsed < 1 || *parsed != static_cast<int>(*parsed)) {
        std::cerr << "warning: ignoring invalid ELMETA_WORKERS='" << v << "'\n";
        return 0;
    }
    return static_cast<int>(*parsed);
}

// flag > (config) > ELMETA_WORKERS > 1
int resolve_workers(std::optional<int> flag, std::optional<int> config = std::nullopt) {
    if (flag) return *flag;
    if (config) return *config;
    int env = env_workers();
    return env > 0 ? env : 1;
}

struct FeatureFlags {
    double cv_sparse = 0.5;
    double cv_extreme = 1.0;
    double iqr_factor = 1.5;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--cv-sparse", cv_sparse, "CV sparsity threshold (category 0 below)");
        cmd->add_option("--cv-extreme", cv_extreme, "CV sparsity threshold (category 2 at or above)");
        cmd->add_option("--iqr-factor", iqr_factor, "Tukey fence factor for outlier detection");
    }

    elmeta::FeatureConfig config() const { return {cv_sparse, cv_extreme, iqr_factor}; }
};

struct SweepFlags {
    int n_min = 1;
    int n_max = 300;
    int repetitions = 10;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    bool resplit = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--n-min", n_min, "Smallest hidden-neuron count");
        cmd->add_option("--n-max", n_max, "Largest hidden-neuron count");
        cmd->add_option("--repetitions", repetitions, "Trainings per neuron count");
        cmd->add_option("--train-fraction", train_fraction, "Training split fraction");
        cmd->add_option("--seed", seed, "Base seed for splits and weights");
        cmd->add_flag("--resplit-per-repetition", resplit,
                      "Redraw the train/test split for every repetition");
    }

    elmeta::SweepConfig config() const {
        elmeta::SweepConfig c;
        c.n_min = n_min;
        c.n_max = n_max;
        c.repetitions = repetitions;
        c.train_fraction = train_fraction;
        c.base_seed = seed;
        c.resplit_per_repetition = resplit;
        c.validate();
        return c;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"elmeta: recommends ELM hidden-layer sizes for regression datasets by "
                 "meta-learning over dataset characteristics"};
    app.require_subcommand(1);

    // ---- ingest ------------------------------------------------------------
    struct {
        std::string corpus, out;
    } ingest_opts;
    auto* ingest = app.add_subcommand(
        "ingest", "Load a corpus, apply admission checks, write normalized canonical datasets");
    ingest->add_option("--corpus", ingest_opts.corpus, "Directory of .csv/.arff datasets")
        ->required();
    ingest->add_option("--out", ingest_opts.out, "Output directory")->required();
    ingest->callback([&] {
        std::filesystem::path out_dir = ingest_opts.out;
        std::filesystem::create_directories(out_dir / "normalized");
        auto corpus = elmeta::ingest_corpus(ingest_opts.corpus, std::cerr);
        elmeta::write_ingest_report_csv(corpus.report, out_dir / "ingest_report.csv");
        for (const auto& d : corpus.normalized)
            elmeta::save_dataset(d, out_dir / "normalized" / (d.name + ".csv"));
        std::cerr << "ingest: " << corpus.raw.size() << " admitted of " << corpus.report.size()
                  << " files\n";
        if (corpus.raw.empty()) throw std::runtime_error("no admitted datasets");
    });

    // ---- features ----------------------------------------------------------
    struct {
        std::string corpus, out;
        FeatureFlags feat;
    } feat_opts;
    auto* features = app.add_subcommand(
        "features", "Extract the 16 meta-features of every admitted dataset into a CSV");
    features->add_option("--corpus", feat_opts.corpus, "Directory of .csv/.arff datasets")
        ->required();
    features->add_option("--out", feat_opts.out, "Output CSV path")->required();
    feat_opts.feat.add_to(features);
    features->callback([&] {
        auto corpus = elmeta::ingest_corpus(feat_opts.corpus, std::cerr);
        if (corpus.raw.empty()) throw std::runtime_error("no admitted datasets");
        auto cfg = feat_opts.feat.config();
        std::vector<std::pair<std::string, elmeta::MetaFeatures>> rows;
        for (const auto& d : corpus.raw)
            rows.emplace_back(d.name, elmeta::extract_meta_features(d, cfg));
        elmeta::write_features_csv(rows, cfg, feat_opts.out);
        std::cerr << "features: wrote " << rows.size() << " rows to " << feat_opts.out << "\n";
    });

    // ---- label-sweep --------------------------------------------------------
    struct {
        std::string corpus, out;
        SweepFlags sweep;
        std::optional<int> workers;
    } sweep_opts;
    auto* sweep = app.add_subcommand(
        "label-sweep",
        "Find each dataset's best hidden-neuron count by exhaustive seeded ELM sweep");
    sweep->add_option("--corpus", sweep_opts.corpus, "Directory of .csv/.arff datasets")
        ->required();
    sweep->add_option("--out", sweep_opts.out, "Output directory")->required();
    sweep_opts.sweep.add_to(sweep);
    sweep->add_option("--workers", sweep_opts.workers,
                      "Worker threads (default: $ELMETA_WORKERS or 1)");
    sweep->callback([&] {
        auto cfg = sweep_opts.sweep.config();
        int workers = resolve_workers(sweep_opts.workers);
        auto corpus = elmeta::ingest_corpus(sweep_opts.corpus, std::cerr);
        if (corpus.normalized.empty()) throw std::runtime_error("no admitted datasets");
        auto result = elmeta::sweep_corpus(corpus.normalized, cfg, workers,
                                           [](const std::string& name) {
                                               std::cerr << "sweep: " << name << "\n";
                                           });
        std::filesystem::path out_dir = sweep_opts.out;
        std::filesystem::create_directories(out_dir);
        elmeta::write_sweep_results(result.results, cfg, out_dir / "sweeps",
                                    out_dir / "sweep_summary.csv");
        for (const auto& f : result.failures) std::cerr << "sweep failure: " << f << "\n";
        if (result.results.empty()) throw std::runtime_error("every sweep failed");
    });

    // ---- build-metabase ------------------------------------------------------
    struct {
        std::string features, sweep_summary, out;
    } build_opts;
    auto* build = app.add_subcommand(
        "build-metabase", "Join a features CSV and a sweep summary CSV into a meta-base");
    build->add_option("--features", build_opts.features, "features.csv path")->required();
    build->add_option("--sweep-summary", build_opts.sweep_summary, "sweep_summary.csv path")
        ->required();
    build->add_option("--out", build_opts.out, "Output metabase.csv path")->required();
    build->callback([&] {
        auto feats = elmeta::read_features_csv(build_opts.features);
        auto sweeps = elmeta::read_sweep_summary_csv(build_opts.sweep_summary);
        auto built = elmeta::build_metabase(feats.rows, sweeps.results, feats.config,
                                            sweeps.config);
        for (const auto& s : built.skipped) std::cerr << "build-metabase: skipped " << s << "\n";
        elmeta::save_metabase(built.metabase, build_opts.out);
        std::cerr << "build-metabase: " << built.metabase.examples.size() << " meta-examples\n";
    });

    // ---- train-meta -----------------------------------------------------------
    struct {
        std::string metabase, family, out;
        std::string kernel = "rbf";
        double gamma = 0.1, coef0 = 0.0, c = 1.0, epsilon = 1e-3;
        int degree = 1, min_leaf = 4;
        double smoothing_k = 15.0;
        bool no_prune = false;
    } train_opts;
    auto* train = app.add_subcommand("train-meta", "Fit one meta-learner on a meta-base");
    train->add_option("--metabase", train_opts.metabase, "metabase.csv path")->required();
    train->add_option("--family", train_opts.family, "knn1 | linear | m5 | svr | mean")
        ->required();
    train->add_option("--out", train_opts.out, "Output model JSON path")->required();
    train->add_option("--kernel", train_opts.kernel, "SVR kernel: rbf | polynomial");
    train->add_option("--gamma", train_opts.gamma, "SVR RBF width (presets: 0.01, 0.1, 1)");
    train->add_option("--degree", train_opts.degree, "SVR polynomial degree");
    train->add_option("--coef0", train_opts.coef0, "SVR polynomial coef0");
    train->add_option("--svr-c", train_opts.c, "SVR regularization C");
    train->add_option("--epsilon", train_opts.epsilon, "SVR tube half-width");
    train->add_option("--min-leaf", train_opts.min_leaf, "M5 minimum leaf size");
    train->add_option("--smoothing-k", train_opts.smoothing_k, "M5 smoothing constant");
    train->add_flag("--no-prune", train_opts.no_prune, "Disable M5 pruning");
    train->callback([&] {
        auto mb = elmeta::load_metabase(train_opts.metabase);
        elmeta::LearnerSpec spec;
        spec.family = elmeta::family_from_string(train_opts.family);
        spec.m5.min_leaf = train_opts.min_leaf;
        spec.m5.smoothing_k = train_opts.smoothing_k;
        spec.m5.prune = !train_opts.no_prune;
        spec.svr.kernel = train_opts.kernel == "polynomial" || train_opts.kernel == "poly"
                              ? elmeta::SvrKernel::polynomial
                              : elmeta::SvrKernel::rbf;
        spec.svr.gamma = train_opts.gamma;
        spec.svr.degree = train_opts.degree;
        spec.svr.coef0 = train_opts.coef0;
        spec.svr.C = train_opts.c;
        spec.svr.epsilon = train_opts.epsilon;
        auto model = elmeta::MetaRegressor::fit(spec, mb);
        for (const auto& w : model.warnings()) std::cerr << "train-meta: " << w << "\n";
        elmeta::save_model(model, train_opts.out);
        std::cerr << "train-meta: wrote " << spec.id() << " model to " << train_opts.out << "\n";
    });

    // ---- evaluate ---------------------------------------------------------------
    struct {
        std::string metabase, out_dir, learners_file;
        bool include_mean = false;
    } eval_opts;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Leave-one-out evaluation of meta-learners on a meta-base");
    evaluate->add_option("--metabase", eval_opts.metabase, "metabase.csv path")->required();
    evaluate->add_option("--out", eval_opts.out_dir, "Output directory")->required();
    evaluate->add_option("--learners", eval_opts.learners_file,
                         "JSON file with an array of meta-learner specs (default: built-in set)");
    evaluate->add_flag("--include-mean", eval_opts.include_mean,
                       "Also evaluate the constant-mean baseline");
    evaluate->callback([&] {
        auto mb = elmeta::load_metabase(eval_opts.metabase);
        std::vector<elmeta::LearnerSpec> specs;
        if (!eval_opts.learners_file.empty()) {
            auto j = nlohmann::json::parse(elmeta::detail::read_file(eval_opts.learners_file));
            for (const auto& e : j) specs.push_back(elmeta::LearnerSpec::from_json(e));
        } else {
            specs = elmeta::PipelineConfig::default_learners();
        }
        if (eval_opts.include_mean) specs.push_back({elmeta::Family::mean});
        std::filesystem::path out_dir = eval_opts.out_dir;
        std::filesystem::create_directories(out_dir);
        std::vector<elmeta::LooReport> reports;
        for (const auto& spec : specs) {
            std::cerr << "evaluate: loo " << spec.id() << "\n";
            reports.push_back(elmeta::loo_evaluate(spec, mb));
            nlohmann::json rj = reports.back().to_json();
            rj["feature_config_hash"] = mb.provenance.feature_config_hash();
            std::ofstream rout(out_dir / ("loo_" + spec.id() + ".json"), std::ios::binary);
            if (!rout) throw std::runtime_error("cannot write loo report");
            rout << rj.dump(2) << "\n";
        }
        elmeta::write_evaluation_csv(elmeta::compare_report(reports),
                                     out_dir / "evaluation.csv");
        std::cerr << "evaluate: wrote " << (out_dir / "evaluation.csv").string() << "\n";
    });

    // ---- predict -------------------------------------------------------------
    struct {
        std::string model, dataset, out, target;
        FeatureFlags feat;
    } pred_opts;
    auto* predict = app.add_subcommand(
        "predict", "Recommend a hidden-neuron count for a new dataset");
    predict->add_option("--model", pred_opts.model, "Trained model JSON path")->required();
    predict->add_option("--dataset", pred_opts.dataset, "Dataset path (.csv or .arff)")
        ->required();
    predict->add_option("--out", pred_opts.out, "Also write the JSON record here");
    predict->add_option("--target", pred_opts.target, "Target column name (default: last)");
    pred_opts.feat.add_to(predict);
    predict->callback([&] {
        auto model = elmeta::load_model(pred_opts.model);
        std::filesystem::path path = pred_opts.dataset;
        std::optional<std::string> target;
        if (!pred_opts.target.empty()) target = pred_opts.target;
        auto loaded = elmeta::load_dataset(path, elmeta::format_from_path(path), target);
        for (const auto& w : loaded.warnings) std::cerr << "predict: " << w << "\n";
        auto admission = elmeta::check_admission(loaded.dataset);
        if (!admission.admitted)
            std::cerr << "predict: warning: dataset would not be admitted to a corpus ("
                      << elmeta::join(admission.reasons, "; ") << ")\n";
        auto mf = elmeta::extract_meta_features(loaded.dataset, pred_opts.feat.config());
        double raw = model.predict_raw(mf); // checks the feature-config hash
        int rec = model.recommend(mf);
        nlohmann::json j{{"dataset", loaded.dataset.name},
                         {"predicted_raw", raw},
                         {"recommended_count", rec},
                         {"family", elmeta::family_name(model.family())},
                         {"method", model.spec().id()}};
        std::cout << j.dump() << "\n";
        if (!pred_opts.out.empty()) {
            std::ofstream out(pred_opts.out, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + pred_opts.out);
            out << j.dump(2) << "\n";
        }
    });

    // ---- report ----------------------------------------------------------------
    struct {
        std::string sweep_dir, out;
        int bin_width = 25;
    } report_opts;
    auto* report = app.add_subcommand(
        "report", "Histogram of best hidden-neuron counts from sweep results");
    report->add_option("--sweep-dir", report_opts.sweep_dir,
                       "Directory of per-dataset sweep JSON files")
        ->required();
    report->add_option("--out", report_opts.out, "Output histogram CSV path")->required();
    report->add_option("--bin-width", report_opts.bin_width, "Histogram bin width");
    report->callback([&] {
        auto results = elmeta::read_sweep_dir(report_opts.sweep_dir);
        if (results.empty()) throw std::runtime_error("no sweep results found");
        auto bins = elmeta::label_histogram(results, report_opts.bin_width);
        elmeta::write_histogram_csv(bins, report_opts.out);
        std::cerr << "report: wrote " << report_opts.out << "\n";
    });

    // ---- pipeline ----------------------------------------------------------------
    struct {
        std::string config, corpus, out;
        std::optional<int> workers;
        std::optional<std::uint64_t> seed;
    } pipe_opts;
    auto* pipeline = app.add_subcommand("pipeline", "Run the whole chain from one config file");
    pipeline->add_option("--config", pipe_opts.config, "Pipeline config JSON")->required();
    pipeline->add_option("--corpus", pipe_opts.corpus, "Override corpus directory");
    pipeline->add_option("--out", pipe_opts.out, "Override output directory");
    pipeline->add_option("--workers", pipe_opts.workers, "Override worker count");
    pipeline->add_option("--seed", pipe_opts.seed, "Override global seed");
    pipeline->callback([&] {
        nlohmann::json raw = nlohmann::json::parse(elmeta::detail::read_file(pipe_opts.config));
        auto config = elmeta::PipelineConfig::from_json(raw);
        if (!pipe_opts.corpus.empty()) config.corpus_dir = pipe_opts.corpus;
        if (!pipe_opts.out.empty()) config.output_dir = pipe_opts.out;
        if (pipe_opts.seed) {
            config.seed = *pipe_opts.seed;
            config.sweep.base_seed = *pipe_opts.seed;
        }
        std::optional<int> config_workers;
        if (raw.contains("workers")) config_workers = config.workers;
        config.workers = resolve_workers(pipe_opts.workers, config_workers);
        config.validate();

        // timestamps go only to the run log, keeping every artifact
        // byte-stable across reruns
        std::filesystem::create_directories(config.output_dir);
        std::ofstream run_log(config.output_dir / "run.log", std::ios::app);
        auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        run_log << "run started " << std::ctime(&now);

        auto outcome = elmeta::run_pipeline(config, std::cerr);
        for (const auto& f : outcome.failures) std::cerr << "pipeline: failure: " << f << "\n";
        std::cerr << "pipeline: " << outcome.n_meta_examples << " meta-examples from "
                  << outcome.n_datasets << " datasets; artifacts in "
                  << config.output_dir.string() << "\n";
        now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        run_log << "run finished " << std::ctime(&now);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // CLI misuse is a validation error
    } catch (const elmeta::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
