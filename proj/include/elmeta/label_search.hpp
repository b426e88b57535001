#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/dataset.hpp"
#include "elmeta/elm.hpp"

namespace elmeta {

struct SweepConfig {
    int n_min = 1;
    int n_max = 300;
    int repetitions = 10;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;
    // The repetitions vary only the random hidden weights and biases; the
    // 70/30 split is drawn once per dataset unless this flag is set.
    bool resplit_per_repetition = false;

    void validate() const {
        if (n_min < 1 || n_min > n_max)
            throw ValidationError("sweep config: need 1 <= n_min <= n_max");
        if (repetitions < 1) throw ValidationError("sweep config: repetitions must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ValidationError("sweep config: train_fraction must lie in (0, 1)");
    }

    nlohmann::json to_json() const {
        return {{"n_min", n_min},
                {"n_max", n_max},
                {"repetitions", repetitions},
                {"train_fraction", train_fraction},
                {"base_seed", base_seed},
                {"resplit_per_repetition", resplit_per_repetition}};
    }

    static SweepConfig from_json(const nlohmann::json& j) {
        SweepConfig c;
        c.n_min = j.value("n_min", c.n_min);
        c.n_max = j.value("n_max", c.n_max);
        c.repetitions = j.value("repetitions", c.repetitions);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.resplit_per_repetition = j.value("resplit_per_repetition", c.resplit_per_repetition);
        c.validate();
        return c;
    }
};

/// Mean/stddev of test RMSE over the surviving repetitions at one hidden
/// neuron count. `excluded` marks counts where every repetition failed.
struct CountStats {
    int count = 0;
    double mean_rmse = 0.0;
    double stddev_rmse = 0.0; // sample stddev over repetitions
    int failed_repetitions = 0;
    bool excluded = false;
};

struct SweepResult {
    std::string dataset_name;
    SweepConfig config;
    std::vector<CountStats> per_count; // one entry per L in [n_min, n_max]
    int best_count = 0;
    double min_mean_rmse = 0.0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["dataset"] = dataset_name;
        j["config"] = config.to_json();
        nlohmann::json pc = nlohmann::json::array();
        for (const auto& s : per_count)
            pc.push_back({{"count", s.count},
                          {"mean_rmse", s.mean_rmse},
                          {"stddev_rmse", s.stddev_rmse},
                          {"failed_repetitions", s.failed_repetitions},
                          {"excluded", s.excluded}});
        j["per_count"] = pc;
        j["best_count"] = best_count;
        j["min_mean_rmse"] = min_mean_rmse;
        j["warnings"] = warnings;
        return j;
    }

    static SweepResult from_json(const nlohmann::json& j) {
        SweepResult r;
        r.dataset_name = j.at("dataset").get<std::string>();
        r.config = SweepConfig::from_json(j.at("config"));
        for (const auto& e : j.at("per_count")) {
            CountStats s;
            s.count = e.at("count").get<int>();
            s.mean_rmse = e.at("mean_rmse").get<double>();
            s.stddev_rmse = e.at("stddev_rmse").get<double>();
            s.failed_repetitions = e.value("failed_repetitions", 0);
            s.excluded = e.value("excluded", false);
            r.per_count.push_back(s);
        }
        r.best_count = j.at("best_count").get<int>();
        r.min_mean_rmse = j.at("min_mean_rmse").get<double>();
        r.warnings = j.value("warnings", std::vector<std::string>{});
        return r;
    }
};

/// argmin of mean test RMSE over the non-excluded counts; ties resolve to the
/// smaller neuron count. Returns (best_count, its mean RMSE).
inline std::pair<int, double> select_best_count(const std::vector<CountStats>& per_count) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < per_count.size(); ++i) {
        if (per_count[i].excluded) continue;
        if (!best || per_count[i].mean_rmse < per_count[*best].mean_rmse) best = i;
    }
    if (!best) throw std::runtime_error("select_best_count: every count is excluded");
    return {per_count[*best].count, per_count[*best].mean_rmse};
}

namespace detail {

/// Run `total` independent tasks on `workers` threads. Each task writes only
/// its own output slot, so scheduling cannot affect results.
template <typename Fn>
inline void parallel_for(std::size_t total, int workers, Fn&& fn) {
    if (workers <= 1 || total <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int n_threads = std::min<int>(workers, static_cast<int>(total));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Exhaustive search for the best hidden-neuron count: every L in
/// [n_min, n_max], `repetitions` ELM trainings per L with seeds derived from
/// (dataset, L, repetition), scored by RMSE on the held-out test partition.
/// The argmin of the mean test RMSE is the meta-label; ties go to smaller L.
inline SweepResult run_sweep(const Dataset& d, const SweepConfig& cfg, int workers = 1) {
    cfg.validate();
    if (!d.normalized)
        throw ValidationError("run_sweep: dataset '" + d.name + "' is not normalized");

    SweepResult result;
    result.dataset_name = d.name;
    result.config = cfg;

    const int n_counts = cfg.n_max - cfg.n_min + 1;
    const int reps = cfg.repetitions;

    struct SplitPair {
        Eigen::MatrixXd train_x, test_x;
        Eigen::VectorXd train_t, test_t;
    };
    auto make_split = [&](std::uint64_t seed) {
        auto [train, test] = split_train_test(d, cfg.train_fraction, seed);
        SplitPair s;
        s.train_x = feature_matrix(train);
        s.train_t = target_vector(train);
        s.test_x = feature_matrix(test);
        s.test_t = target_vector(test);
        return s;
    };

    // One fixed split for the whole sweep; per-repetition splits only when
    // configured.
    std::vector<SplitPair> splits;
    if (cfg.resplit_per_repetition) {
        for (int r = 0; r < reps; ++r)
            splits.push_back(make_split(derive_seed(cfg.base_seed, d.name + "#split", 0, r)));
    } else {
        splits.push_back(make_split(derive_seed(cfg.base_seed, d.name + "#split", 0, 0)));
    }

    const std::size_t total = static_cast<std::size_t>(n_counts) * static_cast<std::size_t>(reps);
    std::vector<double> grid(total, std::numeric_limits<double>::quiet_NaN());

    detail::parallel_for(total, workers, [&](std::size_t task) {
        const int li = static_cast<int>(task / static_cast<std::size_t>(reps));
        const int r = static_cast<int>(task % static_cast<std::size_t>(reps));
        const int L = cfg.n_min + li;
        const SplitPair& sp = splits[cfg.resplit_per_repetition ? static_cast<std::size_t>(r) : 0];
        try {
            std::uint64_t seed = derive_seed(cfg.base_seed, d.name, L, r);
            ElmModel m = train_elm(sp.train_x, sp.train_t, L, seed);
            Eigen::VectorXd pred = predict(m, sp.test_x);
            double value = rmse(pred, sp.test_t).value;
            if (std::isfinite(value)) grid[task] = value;
        } catch (const std::exception&) {
            // leave NaN: this repetition is excluded from the mean
        }
    });

    result.per_count.resize(static_cast<std::size_t>(n_counts));
    for (int li = 0; li < n_counts; ++li) {
        CountStats& s = result.per_count[static_cast<std::size_t>(li)];
        s.count = cfg.n_min + li;
        std::vector<double> ok;
        for (int r = 0; r < reps; ++r) {
            double v = grid[static_cast<std::size_t>(li) * static_cast<std::size_t>(reps) +
                            static_cast<std::size_t>(r)];
            if (std::isfinite(v))
                ok.push_back(v);
            else
                ++s.failed_repetitions;
        }
        if (ok.empty()) {
            s.excluded = true;
            result.warnings.push_back("count " + std::to_string(s.count) +
                                      ": all repetitions failed, excluded");
            continue;
        }
        double sum = 0.0;
        for (double v : ok) sum += v;
        s.mean_rmse = sum / static_cast<double>(ok.size());
        if (ok.size() > 1) {
            double ss = 0.0;
            for (double v : ok) ss += (v - s.mean_rmse) * (v - s.mean_rmse);
            s.stddev_rmse = std::sqrt(ss / static_cast<double>(ok.size() - 1));
        }
        if (s.failed_repetitions > 0)
            result.warnings.push_back("count " + std::to_string(s.count) + ": " +
                                      std::to_string(s.failed_repetitions) +
                                      " repetitions failed");
    }

    try {
        std::tie(result.best_count, result.min_mean_rmse) = select_best_count(result.per_count);
    } catch (const std::exception&) {
        throw std::runtime_error("run_sweep: every neuron count failed on '" + d.name + "'");
    }
    return result;
}

struct CorpusSweep {
    std::vector<SweepResult> results;          // order matches the input corpus
    std::vector<std::string> failures;         // "<dataset>: <error>"
};

/// Sweep every dataset; a failure on one dataset is recorded and does not
/// abort the rest.
template <typename ProgressFn>
inline CorpusSweep sweep_corpus(const std::vector<Dataset>& corpus, const SweepConfig& cfg,
                                int workers, ProgressFn&& progress) {
    cfg.validate();
    if (corpus.empty()) throw ValidationError("sweep_corpus: empty corpus");
    CorpusSweep out;
    for (const auto& d : corpus) {
        progress(d.name);
        try {
            out.results.push_back(run_sweep(d, cfg, workers));
        } catch (const std::exception& e) {
            out.failures.push_back(d.name + ": " + e.what());
        }
    }
    return out;
}

inline CorpusSweep sweep_corpus(const std::vector<Dataset>& corpus, const SweepConfig& cfg,
                                int workers = 1) {
    return sweep_corpus(corpus, cfg, workers, [](const std::string&) {});
}

struct HistogramBin {
    int start = 0; // inclusive
    int end = 0;   // inclusive
    std::size_t count = 0;
};

/// Distribution of best counts over [n_min, n_max] in fixed-width bins; the
/// bins always cover the whole configured range.
inline std::vector<HistogramBin> label_histogram(const std::vector<SweepResult>& results,
                                                 int bin_width, int n_min = 0, int n_max = -1) {
    if (bin_width < 1) throw ValidationError("label_histogram: bin_width must be >= 1");
    if (n_max < n_min) {
        if (results.empty())
            throw ValidationError("label_histogram: empty results and no explicit range");
        n_min = results.front().config.n_min;
        n_max = results.front().config.n_max;
    }
    const int span = n_max - n_min + 1;
    const int n_bins = (span + bin_width - 1) / bin_width;
    std::vector<HistogramBin> bins(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        bins[static_cast<std::size_t>(b)].start = n_min + b * bin_width;
        bins[static_cast<std::size_t>(b)].end = std::min(n_max, n_min + (b + 1) * bin_width - 1);
    }
    for (const auto& r : results) {
        if (r.best_count < n_min || r.best_count > n_max)
            throw ValidationError("label_histogram: best_count " +
                                  std::to_string(r.best_count) + " outside [" +
                                  std::to_string(n_min) + ", " + std::to_string(n_max) + "]");
        bins[static_cast<std::size_t>((r.best_count - n_min) / bin_width)].count++;
    }
    return bins;
}

} // namespace elmeta
