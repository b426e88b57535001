#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/meta_learners.hpp"
#include "elmeta/metabase.hpp"
#include "elmeta/stats.hpp"

namespace elmeta {

struct RaeValue {
    double percent = 0.0;
    bool degenerate = false; // zero denominator
};

/// Relative absolute error against a per-example naive baseline:
/// 100 * sum|p_i - a_i| / sum|baseline_i - a_i|. 100% means the predictor is
/// no better than predicting the baseline mean.
inline RaeValue rae(std::span<const double> predictions, std::span<const double> actuals,
                    std::span<const double> baselines) {
    if (predictions.size() != actuals.size() || predictions.size() != baselines.size())
        throw ValidationError("rae: length mismatch");
    if (predictions.empty()) throw ValidationError("rae: empty input");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        num += std::abs(predictions[i] - actuals[i]);
        den += std::abs(baselines[i] - actuals[i]);
    }
    if (den == 0.0) return {0.0, true};
    return {100.0 * num / den, false};
}

/// Sample Pearson correlation; zero-variance input yields 0 with the flag set.
inline double pearson(std::span<const double> xs, std::span<const double> ys,
                      bool* degenerate = nullptr) {
    auto r = stats::pearson(xs, ys);
    if (degenerate) *degenerate = !r.has_value();
    return r.value_or(0.0);
}

struct LooReport {
    std::string method;        // LearnerSpec::id()
    nlohmann::json spec;       // full parameter echo
    struct Row {
        std::string dataset_name;
        double actual = 0.0;
        double predicted = 0.0; // raw, unrounded
    };
    std::vector<Row> rows;     // one per meta-example, input order
    double rae_percent = 0.0;
    double pearson_correlation = 0.0;
    bool rae_degenerate = false;
    bool pearson_degenerate = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["method"] = method;
        j["spec"] = spec;
        j["rae_percent"] = rae_percent;
        j["pearson_correlation"] = pearson_correlation;
        j["rae_degenerate"] = rae_degenerate;
        j["pearson_degenerate"] = pearson_degenerate;
        nlohmann::json rows_json = nlohmann::json::array();
        for (const auto& r : rows)
            rows_json.push_back({{"dataset", r.dataset_name},
                                 {"actual", r.actual},
                                 {"predicted", r.predicted}});
        j["rows"] = rows_json;
        return j;
    }
};

/// Leave-one-out evaluation: each meta-example is predicted by a model fitted
/// on the other n-1, with no state reuse between folds. The RAE baseline for
/// fold i is the mean label of that fold's training examples, which makes the
/// constant-mean predictor score exactly 100%. A fit failure in any fold
/// aborts the report; skipping folds would bias the error.
inline LooReport loo_evaluate(const LearnerSpec& spec, const MetaBase& mb) {
    const std::size_t n = mb.examples.size();
    if (n < 3) throw ValidationError("loo_evaluate: need at least 3 meta-examples");

    LooReport report;
    report.method = spec.id();
    report.spec = spec.to_json();

    std::vector<double> predictions(n), actuals(n), baselines(n);
    for (std::size_t i = 0; i < n; ++i) {
        MetaBase fold;
        fold.provenance = mb.provenance;
        fold.examples.reserve(n - 1);
        double label_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            fold.examples.push_back(mb.examples[k]);
            label_sum += static_cast<double>(mb.examples[k].label);
        }
        MetaRegressor model = MetaRegressor::fit(spec, fold);
        predictions[i] = model.predict_raw(mb.examples[i].features);
        actuals[i] = static_cast<double>(mb.examples[i].label);
        baselines[i] = label_sum / static_cast<double>(n - 1);
        report.rows.push_back({mb.examples[i].dataset_name, actuals[i], predictions[i]});
    }

    RaeValue rv = rae(predictions, actuals, baselines);
    report.rae_percent = rv.percent;
    report.rae_degenerate = rv.degenerate;
    report.pearson_correlation = pearson(predictions, actuals, &report.pearson_degenerate);
    return report;
}

struct RankingRow {
    std::string method;
    double rae_percent = 0.0;
    double correlation = 0.0;
};

/// Comparison table sorted ascending by RAE; ties keep the input order.
inline std::vector<RankingRow> compare_report(const std::vector<LooReport>& reports) {
    if (reports.empty()) throw ValidationError("compare_report: no reports");
    std::vector<RankingRow> rows;
    rows.reserve(reports.size());
    for (const auto& r : reports)
        rows.push_back({r.method, r.rae_percent, r.pearson_correlation});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const RankingRow& a, const RankingRow& b) {
                         return a.rae_percent < b.rae_percent;
                     });
    return rows;
}

} // namespace elmeta
