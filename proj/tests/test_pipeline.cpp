#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "elmeta/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace elmeta;
namespace fs = std::filesystem;

namespace {

fs::path fixture_corpus() {
    return fs::path(ELMETA_SOURCE_DIR) / "tests" / "fixtures" / "corpus";
}

fs::path fresh_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("elmeta_pipeline_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

PipelineConfig small_pipeline(const fs::path& out, int workers) {
    PipelineConfig cfg;
    cfg.corpus_dir = fixture_corpus();
    cfg.output_dir = out;
    cfg.seed = 11;
    cfg.workers = workers;
    cfg.histogram_bin_width = 4;
    cfg.sweep.n_min = 1;
    cfg.sweep.n_max = 12;
    cfg.sweep.repetitions = 2;
    cfg.sweep.base_seed = cfg.seed;
    cfg.learners = {{Family::knn1}, {Family::linear}};
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("ingest admits every fixture and reports it") {
    std::ostringstream log;
    auto corpus = ingest_corpus(fixture_corpus(), log);
    REQUIRE(corpus.raw.size() == 5);
    REQUIRE(corpus.normalized.size() == 5);
    REQUIRE(corpus.report.size() == 5);
    for (const auto& e : corpus.report) {
        REQUIRE(e.admitted);
        REQUIRE(e.error.empty());
        REQUIRE(e.rows >= 100);
    }
    // the ARFF fixture one-hot expands its nominal column
    for (const auto& d : corpus.normalized)
        if (d.name == "fix_mixed") REQUIRE(d.features.size() == 5);
}

TEST_CASE("the full pipeline produces every artifact") {
    auto out = fresh_dir("artifacts");
    auto cfg = small_pipeline(out, 2);
    std::ostringstream log;
    auto outcome = run_pipeline(cfg, log);

    REQUIRE(outcome.n_datasets == 5);
    REQUIRE(outcome.n_meta_examples == 5);
    REQUIRE(outcome.failures.empty());
    for (const char* artifact :
         {"ingest_report.csv", "features.csv", "features.meta.json", "sweep_summary.csv",
          "sweep_summary.meta.json", "metabase.csv", "metabase.meta.json", "evaluation.csv",
          "histogram.csv", "provenance.json"})
        REQUIRE(fs::exists(out / artifact));
    for (const char* name :
         {"fix_linear", "fix_mixed", "fix_quad", "fix_sine2", "fix_sine5"}) {
        REQUIRE(fs::exists(out / "sweeps" / (std::string(name) + ".json")));
        REQUIRE(fs::exists(out / "normalized" / (std::string(name) + ".csv")));
    }

    auto mb = load_metabase(out / "metabase.csv");
    REQUIRE(mb.examples.size() == 5);
    for (const auto& e : mb.examples) {
        REQUIRE(e.label >= cfg.sweep.n_min);
        REQUIRE(e.label <= cfg.sweep.n_max);
    }

    // histogram counts add up to the number of sweep results
    auto hist = slurp(out / "histogram.csv");
    std::istringstream lines(hist);
    std::string line;
    std::getline(lines, line); // header
    std::size_t total = 0, bins = 0;
    while (std::getline(lines, line)) {
        ++bins;
        total += std::stoul(line.substr(line.rfind(',') + 1));
    }
    REQUIRE(total == 5);
    REQUIRE(bins == 3); // range 12 at width 4
}

TEST_CASE("reruns and worker counts leave the artifacts byte-identical") {
    auto out1 = fresh_dir("det1");
    auto out2 = fresh_dir("det2");
    auto out4 = fresh_dir("det4");
    std::ostringstream log;
    run_pipeline(small_pipeline(out1, 1), log);
    run_pipeline(small_pipeline(out2, 1), log);
    run_pipeline(small_pipeline(out4, 4), log);

    for (const char* artifact : {"metabase.csv", "evaluation.csv", "features.csv",
                                 "sweep_summary.csv", "histogram.csv"}) {
        REQUIRE(slurp(out1 / artifact) == slurp(out2 / artifact));
        REQUIRE(slurp(out1 / artifact) == slurp(out4 / artifact));
    }
}

TEST_CASE("invalid configs fail before any work") {
    auto out = fresh_dir("badcfg");
    fs::remove_all(out);
    auto cfg = small_pipeline(out, 1);
    cfg.sweep.n_min = 50;
    cfg.sweep.n_max = 10;
    std::ostringstream log;
    REQUIRE_THROWS_AS(run_pipeline(cfg, log), ValidationError);
    REQUIRE_FALSE(fs::exists(out)); // nothing was created
}

TEST_CASE("pipeline config JSON round-trips") {
    auto cfg = small_pipeline("/tmp/x", 3);
    auto restored = PipelineConfig::from_json(cfg.to_json());
    REQUIRE(restored.sweep.n_max == cfg.sweep.n_max);
    REQUIRE(restored.workers == 3);
    REQUIRE(restored.learners.size() == 2);
    REQUIRE(restored.histogram_bin_width == 4);
}

TEST_CASE("a recommendation from pipeline artifacts round-trips through the library") {
    auto out = fresh_dir("predict");
    auto cfg = small_pipeline(out, 2);
    std::ostringstream log;
    run_pipeline(cfg, log);

    auto mb = load_metabase(out / "metabase.csv");
    auto model = MetaRegressor::fit({Family::knn1}, mb);

    auto lr = load_csv(fixture_corpus() / "fix_quad.csv");
    auto mf = extract_meta_features(lr.dataset, cfg.features);
    int rec = model.recommend(mf);
    REQUIRE(rec >= cfg.sweep.n_min);
    REQUIRE(rec <= cfg.sweep.n_max);
    REQUIRE(rec == model.recommend(mf.values)); // same path, same answer
    REQUIRE(static_cast<double>(rec) ==
            Catch::Approx(model.predict_raw(mf)).margin(0.5 + 1e-9));
}

TEST_CASE("features artifact round-trips") {
    auto out = fresh_dir("featrt");
    std::ostringstream log;
    auto corpus = ingest_corpus(fixture_corpus(), log);
    FeatureConfig cfg;
    std::vector<std::pair<std::string, MetaFeatures>> rows;
    for (const auto& d : corpus.raw) rows.emplace_back(d.name, extract_meta_features(d, cfg));
    write_features_csv(rows, cfg, out / "features.csv");
    auto art = read_features_csv(out / "features.csv");
    REQUIRE(art.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(art.rows[i].first == rows[i].first);
        for (std::size_t k = 0; k < kMetaFeatureCount; ++k)
            REQUIRE(art.rows[i].second[k] == rows[i].second.values[k]);
    }
    REQUIRE(art.config.hash() == cfg.hash());
}
