#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/linalg.hpp"
#include "elmeta/m5.hpp"
#include "elmeta/metabase.hpp"
#include "elmeta/svr.hpp"

namespace elmeta {

/// The four meta-learner families, plus the constant-mean baseline used for
/// calibration (it must score RAE = 100% under leave-one-out by definition).
enum class Family { knn1, linear, m5, svr, mean };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::knn1: return "knn1";
        case Family::linear: return "linear";
        case Family::m5: return "m5";
        case Family::svr: return "svr";
        case Family::mean: return "mean";
    }
    throw ValidationError("unknown family");
}

inline Family family_from_string(const std::string& s) {
    if (s == "knn1" || s == "1-nn" || s == "1nn") return Family::knn1;
    if (s == "linear") return Family::linear;
    if (s == "m5") return Family::m5;
    if (s == "svr" || s == "svm") return Family::svr;
    if (s == "mean") return Family::mean;
    throw ValidationError("unknown meta-learner family '" + s + "'");
}

struct LearnerSpec {
    Family family = Family::knn1;
    M5Params m5{};
    SvrParams svr{};

    /// Human-readable identifier used in reports ("svr-rbf-0.1", "m5", ...).
    std::string id() const {
        switch (family) {
            case Family::svr:
                if (svr.kernel == SvrKernel::rbf) return "svr-rbf-" + fmt_double(svr.gamma);
                return "svr-poly-" + std::to_string(svr.degree);
            default: return family_name(family);
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"family", family_name(family)}};
        if (family == Family::m5) j["m5"] = m5.to_json();
        if (family == Family::svr) j["svr"] = svr.to_json();
        return j;
    }
    static LearnerSpec from_json(const nlohmann::json& j) {
        LearnerSpec s;
        s.family = family_from_string(j.at("family").get<std::string>());
        if (j.contains("m5")) s.m5 = M5Params::from_json(j["m5"]);
        if (j.contains("svr")) s.svr = SvrParams::from_json(j["svr"]);
        return s;
    }
};

/// A fitted meta-regressor: meta-feature vector in, estimated hidden-neuron
/// count out. Immutable after fit; shareable across threads.
class MetaRegressor {
  public:
    static MetaRegressor fit(const LearnerSpec& spec, const MetaBase& mb) {
        if (mb.examples.empty()) throw ValidationError("fit: empty meta-base");
        const std::size_t n = mb.examples.size();
        if (n < 2 && spec.family != Family::knn1 && spec.family != Family::mean)
            throw ValidationError("fit: family '" + family_name(spec.family) +
                                  "' needs at least 2 meta-examples");

        MetaRegressor r;
        r.spec_ = spec;
        r.feature_config_hash_ = mb.provenance.feature_config_hash();
        r.n_min_ = mb.provenance.sweep_config.n_min;
        r.n_max_ = mb.provenance.sweep_config.n_max;

        // min-max scaling to [0,1] for the distance- and margin-based
        // families; trees are split-invariant and use raw features
        r.scaled_ = spec.family == Family::knn1 || spec.family == Family::linear ||
                    spec.family == Family::svr;
        for (std::size_t k = 0; k < kMetaFeatureCount; ++k) {
            double mn = std::numeric_limits<double>::infinity();
            double mx = -mn;
            for (const auto& e : mb.examples) {
                mn = std::min(mn, e.features[k]);
                mx = std::max(mx, e.features[k]);
            }
            r.scale_min_[k] = mn;
            r.scale_max_[k] = mx;
        }

        Eigen::MatrixXd x(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(kMetaFeatureCount));
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            auto row = r.scaled_ ? r.scale(mb.examples[i].features) : mb.examples[i].features;
            for (std::size_t k = 0; k < kMetaFeatureCount; ++k)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
            y(static_cast<Eigen::Index>(i)) = static_cast<double>(mb.examples[i].label);
        }

        bool constant_labels = true;
        for (std::size_t i = 1; i < n; ++i)
            if (mb.examples[i].label != mb.examples[0].label) constant_labels = false;
        if (constant_labels && (spec.family == Family::linear || spec.family == Family::svr))
            r.warnings_.push_back("constant labels: model degenerates to a constant");

        switch (spec.family) {
            case Family::knn1: {
                KnnState st;
                st.points = x;
                st.labels = y;
                r.state_ = std::move(st);
                break;
            }
            case Family::linear: {
                LinearState st;
                st.fit = linalg::ols_with_intercept(x, y);
                if (st.fit.ridge_fallback) r.warnings_.push_back("rank-deficient OLS, ridge fallback");
                r.state_ = std::move(st);
                break;
            }
            case Family::m5: {
                r.state_ = M5State{m5_fit(x, y, spec.m5)};
                break;
            }
            case Family::svr: {
                // labels are min-max scaled into [0, 1] for the solver, so C
                // and epsilon are label-scale-free; predictions are unscaled
                // on the way out
                SvrState st;
                st.label_min = y.minCoeff();
                st.label_max = y.maxCoeff();
                double range = st.label_max - st.label_min;
                Eigen::VectorXd ys = range > 0.0
                                         ? ((y.array() - st.label_min) / range).matrix().eval()
                                         : Eigen::VectorXd::Zero(y.size()).eval();
                st.model = svr_fit(x, ys, spec.svr);
                r.state_ = std::move(st);
                break;
            }
            case Family::mean: {
                // plain left-to-right sum: the LOO baseline uses the same
                // arithmetic, so the calibration identity RAE = 100% is exact
                double s = 0.0;
                for (const auto& e : mb.examples) s += static_cast<double>(e.label);
                r.state_ = MeanState{s / static_cast<double>(n)};
                break;
            }
        }
        return r;
    }

    /// Raw (real-valued) prediction; evaluation uses this unrounded.
    double predict_raw(const std::array<double, kMetaFeatureCount>& f) const {
        auto row = scaled_ ? scale(f) : f;
        Eigen::Map<const Eigen::VectorXd> x(row.data(),
                                            static_cast<Eigen::Index>(kMetaFeatureCount));
        if (const auto* knn = std::get_if<KnnState>(&state_)) {
            Eigen::Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < knn->points.rows(); ++i) {
                double d = (knn->points.row(i).transpose() - x).squaredNorm();
                if (d < best_d) { // strict: ties keep the earliest training row
                    best_d = d;
                    best = i;
                }
            }
            return knn->labels(best);
        }
        if (const auto* lin = std::get_if<LinearState>(&state_))
            return lin->fit.coef.dot(x) + lin->fit.intercept;
        if (const auto* m5 = std::get_if<M5State>(&state_)) return m5->model.predict(x);
        if (const auto* svr = std::get_if<SvrState>(&state_))
            return svr->label_min + (svr->label_max - svr->label_min) * svr->model.predict(x);
        return std::get<MeanState>(state_).value;
    }

    /// Overload that verifies the vector was extracted under the same
    /// feature-extractor configuration the meta-base was built with.
    double predict_raw(const MetaFeatures& f) const {
        if (f.config_hash != feature_config_hash_)
            throw ValidationError(
                "feature-config hash mismatch: model was trained on features extracted with a "
                "different configuration");
        return predict_raw(f.values);
    }

    /// Integer recommendation: rounded and clamped to the label range the
    /// meta-base was swept over.
    int recommend(const std::array<double, kMetaFeatureCount>& f) const {
        return clamp_count(predict_raw(f));
    }
    int recommend(const MetaFeatures& f) const { return clamp_count(predict_raw(f)); }

    Family family() const { return spec_.family; }
    const LearnerSpec& spec() const { return spec_; }
    std::uint64_t feature_config_hash() const { return feature_config_hash_; }
    int n_min() const { return n_min_; }
    int n_max() const { return n_max_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Tree inspection hook (split-quality tests); only valid for m5 models.
    const M5Model& m5_model() const { return std::get<M5State>(state_).model; }
    const SvrModel& svr_model() const { return std::get<SvrState>(state_).model; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["tool_version"] = kToolVersion;
        j["spec"] = spec_.to_json();
        j["feature_config_hash"] = feature_config_hash_;
        j["label_range"] = {n_min_, n_max_};
        j["scaled"] = scaled_;
        j["scale_min"] = scale_min_;
        j["scale_max"] = scale_max_;
        j["warnings"] = warnings_;
        if (const auto* knn = std::get_if<KnnState>(&state_)) {
            nlohmann::json pts = nlohmann::json::array();
            for (Eigen::Index i = 0; i < knn->points.rows(); ++i) {
                std::vector<double> row(kMetaFeatureCount);
                for (std::size_t k = 0; k < kMetaFeatureCount; ++k)
                    row[k] = knn->points(i, static_cast<Eigen::Index>(k));
                pts.push_back(row);
            }
            j["knn"] = {{"points", pts},
                        {"labels", std::vector<double>(knn->labels.data(),
                                                       knn->labels.data() + knn->labels.size())}};
        } else if (const auto* lin = std::get_if<LinearState>(&state_)) {
            j["linear"] = {{"intercept", lin->fit.intercept},
                           {"coef", std::vector<double>(lin->fit.coef.data(),
                                                        lin->fit.coef.data() + lin->fit.coef.size())}};
        } else if (const auto* m5 = std::get_if<M5State>(&state_)) {
            j["m5_model"] = m5_to_json(m5->model);
        } else if (const auto* svr = std::get_if<SvrState>(&state_)) {
            j["svr_model"] = svr_to_json(svr->model);
        } else {
            j["mean"] = std::get<MeanState>(state_).value;
        }
        return j;
    }

    static MetaRegressor from_json(const nlohmann::json& j) {
        MetaRegressor r;
        r.spec_ = LearnerSpec::from_json(j.at("spec"));
        r.feature_config_hash_ = j.at("feature_config_hash").get<std::uint64_t>();
        r.n_min_ = j.at("label_range")[0].get<int>();
        r.n_max_ = j.at("label_range")[1].get<int>();
        r.scaled_ = j.at("scaled").get<bool>();
        auto mn = j.at("scale_min").get<std::vector<double>>();
        auto mx = j.at("scale_max").get<std::vector<double>>();
        if (mn.size() != kMetaFeatureCount || mx.size() != kMetaFeatureCount)
            throw std::runtime_error("model file: bad scaling vector length");
        std::copy(mn.begin(), mn.end(), r.scale_min_.begin());
        std::copy(mx.begin(), mx.end(), r.scale_max_.begin());
        r.warnings_ = j.value("warnings", std::vector<std::string>{});
        if (j.contains("knn")) {
            KnnState st;
            const auto& pts = j["knn"].at("points");
            st.points.resize(static_cast<Eigen::Index>(pts.size()),
                             static_cast<Eigen::Index>(kMetaFeatureCount));
            for (std::size_t i = 0; i < pts.size(); ++i) {
                auto row = pts[i].get<std::vector<double>>();
                for (std::size_t k = 0; k < kMetaFeatureCount; ++k)
                    st.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
            }
            auto labels = j["knn"].at("labels").get<std::vector<double>>();
            st.labels = Eigen::Map<const Eigen::VectorXd>(labels.data(),
                                                          static_cast<Eigen::Index>(labels.size()));
            r.state_ = std::move(st);
        } else if (j.contains("linear")) {
            LinearState st;
            st.fit.intercept = j["linear"].at("intercept").get<double>();
            auto coef = j["linear"].at("coef").get<std::vector<double>>();
            st.fit.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                            static_cast<Eigen::Index>(coef.size()));
            r.state_ = std::move(st);
        } else if (j.contains("m5_model")) {
            r.state_ = M5State{m5_from_json(j["m5_model"])};
        } else if (j.contains("svr_model")) {
            r.state_ = SvrState{svr_from_json(j["svr_model"])};
        } else if (j.contains("mean")) {
            r.state_ = MeanState{j["mean"].get<double>()};
        } else {
            throw std::runtime_error("model file: no recognizable state");
        }
        return r;
    }

  private:
    struct KnnState {
        Eigen::MatrixXd points;
        Eigen::VectorXd labels;
    };
    struct LinearState {
        linalg::OlsFit fit;
    };
    struct M5State {
        M5Model model;
    };
    struct SvrState {
        SvrModel model; // trained on [0, 1]-scaled labels
        double label_min = 0.0;
        double label_max = 1.0;
    };
    struct MeanState {
        double value = 0.0;
    };

    std::array<double, kMetaFeatureCount> scale(
        const std::array<double, kMetaFeatureCount>& f) const {
        std::array<double, kMetaFeatureCount> out{};
        for (std::size_t k = 0; k < kMetaFeatureCount; ++k) {
            double range = scale_max_[k] - scale_min_[k];
            out[k] = range > 0.0 ? (f[k] - scale_min_[k]) / range : 0.0;
        }
        return out;
    }

    int clamp_count(double raw) const {
        long r = std::lround(raw);
        return static_cast<int>(std::clamp(r, static_cast<long>(n_min_),
                                           static_cast<long>(n_max_)));
    }

    LearnerSpec spec_;
    std::uint64_t feature_config_hash_ = 0;
    int n_min_ = 1;
    int n_max_ = 300;
    bool scaled_ = false;
    std::array<double, kMetaFeatureCount> scale_min_{};
    std::array<double, kMetaFeatureCount> scale_max_{};
    std::vector<std::string> warnings_;
    std::variant<KnnState, LinearState, M5State, SvrState, MeanState> state_;
};

inline void save_model(const MetaRegressor& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << r.to_json().dump(2) << "\n";
}

inline MetaRegressor load_model(const std::filesystem::path& path) {
    return MetaRegressor::from_json(nlohmann::json::parse(detail::read_file(path)));
}

} // namespace elmeta
