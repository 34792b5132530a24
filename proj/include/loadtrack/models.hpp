#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loadtrack/boosting.hpp"
#include "loadtrack/features.hpp"
#include "loadtrack/metrics.hpp"

namespace loadtrack {

enum class ModelKind : std::uint8_t { scaling, baseline_lm, boosted };
enum class Level : std::uint8_t { subtrack, game };

inline const char* to_string(Level l) { return l == Level::subtrack ? "subtrack" : "game"; }

inline Level parse_level(const std::string& s) {
    if (s == "subtrack") return Level::subtrack;
    if (s == "game") return Level::game;
    fail(ErrorCode::invalid_config, "unknown level: '" + s + "'");
}

// ---------------------------------------------------------------------------
// Scaling estimator
// ---------------------------------------------------------------------------

struct ScalingInputs {
    double observed_metric = 0.0;
    double observed_time = 0.0;  // seconds, > 0
    double censored_time = 0.0;  // seconds, >= 0
};

// Under MCAR the censored metric accrues at the observed rate, so the
// estimate is the observed value scaled by the censored/observed time ratio.
inline double scaling_estimate(const ScalingInputs& in) {
    if (!(in.observed_time > 0.0))
        fail(ErrorCode::data_error, "scaling estimator requires observed time > 0");
    return in.observed_metric * in.censored_time / in.observed_time;
}

// ---------------------------------------------------------------------------
// Baseline linear model: y ~ 1 + censored_time + observed_metric
// ---------------------------------------------------------------------------

struct BaselineFit {
    double intercept = 0.0;
    double coef_time = 0.0;
    double coef_metric = 0.0;
};

inline BaselineFit fit_baseline_lm(const Eigen::VectorXd& censored_time,
                                   const Eigen::VectorXd& observed_metric,
                                   const Eigen::VectorXd& y) {
    const long n = y.size();
    if (censored_time.size() != n || observed_metric.size() != n)
        fail(ErrorCode::data_error, "baseline fit: input length mismatch");
    if (n < 3) fail(ErrorCode::data_error, "baseline fit: need at least 3 observations");

    Eigen::MatrixXd X(n, 3);
    X.col(0).setOnes();
    X.col(1) = censored_time;
    X.col(2) = observed_metric;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 3) {
        static const char* names[3] = {"intercept", "censored_time", "observed_metric"};
        const auto& perm = qr.colsPermutation().indices();
        const int dependent = perm[qr.rank()];
        fail(ErrorCode::data_error, std::string("baseline fit: rank-deficient design, column '") +
                                        names[dependent] + "' is collinear");
    }
    const Eigen::VectorXd beta = qr.solve(y);
    return {beta[0], beta[1], beta[2]};
}

inline Eigen::VectorXd baseline_predict(const BaselineFit& fit,
                                        const Eigen::VectorXd& censored_time,
                                        const Eigen::VectorXd& observed_metric) {
    return (fit.intercept + fit.coef_time * censored_time.array() +
            fit.coef_metric * observed_metric.array())
        .matrix();
}

// ---------------------------------------------------------------------------
// Fitted model wrapper (what gets serialized and reloaded)
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

struct FittedModel {
    ModelKind kind = ModelKind::boosted;
    Level level = Level::game;
    std::string target;  // metric name

    // raw predictor columns expected at predict time, in order
    std::vector<std::string> schema;
    std::vector<ColumnKind> schema_kinds;

    // boosted models
    ScalerStats scaler;
    bool interactions = false;
    std::vector<std::string> design_columns;  // after scaling (+ expansion)
    BoostFit boost;

    // baseline
    BaselineFit baseline;

    std::uint64_t seed = 0;
    std::vector<std::string> training_games;
};

namespace detail {

// Reorders raw columns to the model schema; unknown or missing columns are a
// schema error listing both sides.
inline Eigen::MatrixXd align_columns(const FittedModel& model, const Eigen::MatrixXd& X,
                                     const std::vector<std::string>& names) {
    if (names == model.schema) return X;
    std::vector<long> where(model.schema.size(), -1);
    std::vector<std::string> missing, extra;
    for (std::size_t i = 0; i < model.schema.size(); ++i) {
        auto it = std::find(names.begin(), names.end(), model.schema[i]);
        if (it == names.end())
            missing.push_back(model.schema[i]);
        else
            where[i] = it - names.begin();
    }
    for (const auto& n : names)
        if (std::find(model.schema.begin(), model.schema.end(), n) == model.schema.end())
            extra.push_back(n);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "predict: schema mismatch;";
        if (!missing.empty()) {
            msg += " missing columns:";
            for (const auto& m : missing) msg += " " + m;
        }
        if (!extra.empty()) {
            msg += " unexpected columns:";
            for (const auto& e : extra) msg += " " + e;
        }
        fail(ErrorCode::schema_mismatch, msg);
    }
    Eigen::MatrixXd out(X.rows(), static_cast<long>(model.schema.size()));
    for (std::size_t i = 0; i < model.schema.size(); ++i) out.col(static_cast<long>(i)) = X.col(where[i]);
    return out;
}

}  // namespace detail

// Builds the design the boosted model was trained on from raw features.
inline Eigen::MatrixXd build_design(const FittedModel& model, const Eigen::MatrixXd& raw,
                                    const std::vector<std::string>& names) {
    Eigen::MatrixXd X = detail::align_columns(model, raw, names);
    X = apply_scaler(model.scaler, X);
    if (model.interactions) {
        std::vector<std::string> cols = model.scaler.output_columns();
        expand_interactions(X, cols, model.scaler.output_kinds());
    }
    return X;
}

// Deterministic estimates; the nonnegativity floor is applied downstream,
// after subtrack-to-game aggregation.
inline Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& raw,
                               const std::vector<std::string>& names) {
    if (model.kind == ModelKind::baseline_lm) {
        Eigen::MatrixXd X = detail::align_columns(model, raw, names);
        return baseline_predict(model.baseline, X.col(0), X.col(1));
    }
    if (model.kind != ModelKind::boosted)
        fail(ErrorCode::data_error, "predict: scaling estimator has no feature-matrix form");
    return model.boost.predict(build_design(model, raw, names));
}

// ---------------------------------------------------------------------------
// Subtrack -> game aggregation
// ---------------------------------------------------------------------------

// Sums for accumulating metrics; sample-time weighted mean for densities.
// Weights are the per-subtrack acceleration sample times.
inline std::optional<double> aggregate_to_game(const std::vector<double>& estimates,
                                               const std::vector<double>& weights, MetricId id) {
    if (estimates.size() != weights.size())
        fail(ErrorCode::data_error, "aggregate_to_game: estimate/weight length mismatch");
    if (metric_is_sum(id)) {
        double sum = 0.0;
        for (double e : estimates) sum += e;
        return sum;
    }
    double wsum = 0.0, vsum = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        vsum += weights[i] * estimates[i];
        wsum += weights[i];
    }
    if (wsum <= 0.0) return std::nullopt;
    return vsum / wsum;
}

// ---------------------------------------------------------------------------
// Variable importance
// ---------------------------------------------------------------------------

struct ImportanceEntry {
    std::string feature;
    double score = 0.0;
};

// Linear models rank by |coefficient| on the standardized design, the tree
// booster by accumulated split gain. Ties keep design order.
inline std::vector<ImportanceEntry> variable_importance(const FittedModel& model) {
    std::vector<ImportanceEntry> out;
    if (model.kind == ModelKind::baseline_lm) {
        out.push_back({"censored_time", std::abs(model.baseline.coef_time)});
        out.push_back({"observed_metric", std::abs(model.baseline.coef_metric)});
    } else if (model.kind == ModelKind::boosted) {
        const auto scores =
            model.boost.feature_importance(static_cast<long>(model.design_columns.size()));
        out.reserve(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            out.push_back({model.design_columns[i], scores[i]});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                         return a.score > b.score;
                     });
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json scaler_to_json(const ScalerStats& s) {
    nlohmann::json j;
    j["columns"] = s.columns;
    std::vector<int> kinds;
    for (auto k : s.kinds) kinds.push_back(static_cast<int>(k));
    j["kinds"] = kinds;
    j["mean"] = s.mean;
    j["sd"] = s.sd;
    std::vector<int> dropped(s.dropped.begin(), s.dropped.end());
    j["dropped"] = dropped;
    return j;
}

inline ScalerStats scaler_from_json(const nlohmann::json& j) {
    ScalerStats s;
    s.columns = j.at("columns").get<std::vector<std::string>>();
    for (int k : j.at("kinds").get<std::vector<int>>()) s.kinds.push_back(static_cast<ColumnKind>(k));
    s.mean = j.at("mean").get<std::vector<double>>();
    s.sd = j.at("sd").get<std::vector<double>>();
    for (int d : j.at("dropped").get<std::vector<int>>())
        s.dropped.push_back(static_cast<std::uint8_t>(d));
    return s;
}

}  // namespace detail

inline nlohmann::json model_to_json(const FittedModel& m) {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = m.kind == ModelKind::baseline_lm ? "baseline_lm"
               : m.kind == ModelKind::scaling    ? "scaling"
                                                 : "boosted";
    j["level"] = to_string(m.level);
    j["target"] = m.target;
    j["schema"] = m.schema;
    std::vector<int> kinds;
    for (auto k : m.schema_kinds) kinds.push_back(static_cast<int>(k));
    j["schema_kinds"] = kinds;
    j["seed"] = m.seed;
    j["training_games"] = m.training_games;

    if (m.kind == ModelKind::baseline_lm) {
        j["baseline"] = {{"intercept", m.baseline.intercept},
                         {"coef_time", m.baseline.coef_time},
                         {"coef_metric", m.baseline.coef_metric}};
        return j;
    }
    j["scaler"] = detail::scaler_to_json(m.scaler);
    j["interactions"] = m.interactions;
    j["design_columns"] = m.design_columns;

    nlohmann::json boost;
    boost["booster"] = to_string(m.boost.spec.booster);
    boost["rounds"] = m.boost.spec.rounds;
    boost["learning_rate"] = m.boost.spec.learning_rate;
    boost["max_depth"] = m.boost.spec.max_depth;
    boost["l2"] = m.boost.spec.l2;
    boost["min_samples_leaf"] = m.boost.spec.min_samples_leaf;
    boost["base_score"] = m.boost.base_score;
    boost["constant_model"] = m.boost.constant_model;
    if (m.boost.spec.booster == BoosterKind::tree) {
        nlohmann::json trees = nlohmann::json::array();
        for (const RegressionTree& t : m.boost.trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const TreeNode& n : t.nodes)
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"value", n.value},
                                 {"gain", n.gain}});
            trees.push_back(std::move(nodes));
        }
        boost["trees"] = std::move(trees);
    } else {
        boost["intercept"] = m.boost.intercept;
        std::vector<double> coef(m.boost.coef.data(), m.boost.coef.data() + m.boost.coef.size());
        boost["coef"] = coef;
    }
    j["boost"] = std::move(boost);
    return j;
}

inline FittedModel model_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
        fail(ErrorCode::schema_mismatch, "unsupported model format version");
    FittedModel m;
    const std::string kind = j.at("kind").get<std::string>();
    m.kind = kind == "baseline_lm" ? ModelKind::baseline_lm
             : kind == "scaling"   ? ModelKind::scaling
                                   : ModelKind::boosted;
    m.level = parse_level(j.at("level").get<std::string>());
    m.target = j.at("target").get<std::string>();
    m.schema = j.at("schema").get<std::vector<std::string>>();
    for (int k : j.at("schema_kinds").get<std::vector<int>>())
        m.schema_kinds.push_back(static_cast<ColumnKind>(k));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.training_games = j.at("training_games").get<std::vector<std::string>>();

    if (m.kind == ModelKind::baseline_lm) {
        m.baseline.intercept = j.at("baseline").at("intercept").get<double>();
        m.baseline.coef_time = j.at("baseline").at("coef_time").get<double>();
        m.baseline.coef_metric = j.at("baseline").at("coef_metric").get<double>();
        return m;
    }
    m.scaler = detail::scaler_from_json(j.at("scaler"));
    m.interactions = j.at("interactions").get<bool>();
    m.design_columns = j.at("design_columns").get<std::vector<std::string>>();

    const auto& boost = j.at("boost");
    m.boost.spec.booster = parse_booster(boost.at("booster").get<std::string>());
    m.boost.spec.rounds = boost.at("rounds").get<int>();
    m.boost.spec.learning_rate = boost.at("learning_rate").get<double>();
    m.boost.spec.max_depth = boost.at("max_depth").get<int>();
    m.boost.spec.l2 = boost.at("l2").get<double>();
    m.boost.spec.min_samples_leaf = boost.at("min_samples_leaf").get<int>();
    m.boost.base_score = boost.at("base_score").get<double>();
    m.boost.constant_model = boost.at("constant_model").get<bool>();
    if (m.boost.spec.booster == BoosterKind::tree) {
        for (const auto& tj : boost.at("trees")) {
            RegressionTree t;
            for (const auto& nj : tj) {
                TreeNode n;
                n.feature = nj.at("feature").get<int>();
                n.threshold = nj.at("threshold").get<double>();
                n.left = nj.at("left").get<int>();
                n.right = nj.at("right").get<int>();
                n.value = nj.at("value").get<double>();
                n.gain = nj.at("gain").get<double>();
                t.nodes.push_back(n);
            }
            m.boost.trees.push_back(std::move(t));
        }
        m.boost.coef = Eigen::VectorXd::Zero(0);
    } else {
        m.boost.intercept = boost.at("intercept").get<double>();
        const auto coef = boost.at("coef").get<std::vector<double>>();
        m.boost.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                         static_cast<long>(coef.size()));
    }
    return m;
}

inline void save_model(const std::string& path, const FittedModel& m) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::missing_file, "cannot open file for writing: " + path);
    out << model_to_json(m).dump(2) << '\n';
}

inline FittedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::missing_file, "cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::schema_mismatch, path + ": invalid model file: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace loadtrack
