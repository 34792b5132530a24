#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loadtrack/features.hpp"
#include "loadtrack/metrics.hpp"
#include "loadtrack/models.hpp"

namespace loadtrack {

// ---------------------------------------------------------------------------
// Error measures
// ---------------------------------------------------------------------------

inline double rmspe(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty() || y.size() != yhat.size())
        fail(ErrorCode::data_error, "rmspe: inputs must be nonempty and equal length");
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(y.size()));
}

inline double cv(const std::vector<double>& y, const std::vector<double>& yhat) {
    const double e = rmspe(y, yhat);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    if (mean == 0.0) fail(ErrorCode::data_error, "cv: zero-mean targets");
    return e / mean;
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

// Games in season order (game_id ascending stands in for date order): the
// first train_count games train, the remaining test_count games test.
struct SplitPlan {
    std::vector<std::string> games;
    int train_count = 13;
    int test_count = 5;

    std::vector<std::string> train_games() const {
        return {games.begin(), games.begin() + train_count};
    }
    std::vector<std::string> test_games() const {
        return {games.begin() + train_count, games.end()};
    }
};

inline SplitPlan make_split_plan(std::vector<std::string> games, int train_count, int test_count) {
    if (train_count < 1 || test_count < 1)
        fail(ErrorCode::invalid_config, "split plan: train and test counts must be >= 1");
    std::sort(games.begin(), games.end());
    games.erase(std::unique(games.begin(), games.end()), games.end());
    if (static_cast<int>(games.size()) != train_count + test_count)
        fail(ErrorCode::invalid_config,
             "split plan: corpus has " + std::to_string(games.size()) + " games, expected " +
                 std::to_string(train_count + test_count));
    return {std::move(games), train_count, test_count};
}

// ---------------------------------------------------------------------------
// Model roster
// ---------------------------------------------------------------------------

inline constexpr const char* kModelBase = "base";
inline constexpr const char* kModelScaling = "scaling";

inline std::string booster_model_name(BoosterKind k) {
    return std::string("boost_") + to_string(k);
}

inline std::string observed_metric_column(MetricId id) {
    switch (id) {
        case MetricId::total_distance: return "observed_total_distance";
        case MetricId::high_speed_distance: return "observed_high_speed_distance";
        case MetricId::very_high_speed_distance: return "observed_very_high_speed_distance";
        case MetricId::time_v_band_0: return "observed_time_v_band_0";
        case MetricId::time_v_band_1: return "observed_time_v_band_1";
        case MetricId::time_v_band_2: return "observed_time_v_band_2";
        case MetricId::total_acceleration: return "observed_total_acceleration";
        case MetricId::acceleration_density: return "observed_average_acceleration";
        case MetricId::time_a_band_0: return "observed_time_a_band_0";
        case MetricId::time_a_band_1: return "observed_time_a_band_1";
        case MetricId::time_a_band_2: return "observed_time_a_band_2";
    }
    fail(ErrorCode::data_error, "unknown metric id");
}

struct ExperimentConfig {
    int train_games = 13;
    int test_games = 5;
    bool fit_scaling = true;
    bool fit_baseline = true;
    std::vector<BoostSpec> boosters;  // empty -> default roster
    std::uint64_t seed = 0;

    std::vector<BoostSpec> roster() const {
        if (!boosters.empty()) return boosters;
        BoostSpec lin;
        lin.booster = BoosterKind::linear;
        lin.seed = seed;
        BoostSpec li = lin;
        li.booster = BoosterKind::linear_interactions;
        BoostSpec tree = lin;
        tree.booster = BoosterKind::tree;
        return {lin, li, tree};
    }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd extract_matrix(const FeatureTable& t,
                                      const std::vector<std::string>& columns,
                                      const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd X(static_cast<long>(rows.size()), static_cast<long>(columns.size()));
    std::vector<std::size_t> idx;
    idx.reserve(columns.size());
    for (const auto& c : columns) idx.push_back(t.column(c));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            X(static_cast<long>(r), static_cast<long>(c)) = t.rows[rows[r]][idx[c]];
    return X;
}

inline std::vector<std::size_t> rows_in_games(const FeatureTable& t,
                                              const std::set<std::string>& games) {
    const std::size_t gcol = t.id_column("game_id");
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t.ids.size(); ++r)
        if (games.count(t.ids[r][gcol])) rows.push_back(r);
    return rows;
}

}  // namespace detail

struct ModelCellKey {
    std::string metric;
    std::string model;
    std::string level;
    bool operator<(const ModelCellKey& o) const {
        return std::tie(metric, model, level) < std::tie(o.metric, o.model, o.level);
    }
};

struct TrainedModels {
    std::vector<FittedModel> models;
    std::map<ModelCellKey, std::string> fit_errors;
    std::vector<std::string> warnings;

    const FittedModel* find(const std::string& metric, const std::string& model,
                            Level level) const {
        for (const FittedModel& m : models) {
            const std::string name = m.kind == ModelKind::baseline_lm
                                         ? kModelBase
                                         : booster_model_name(m.boost.spec.booster);
            if (m.target == metric && name == model && m.level == level) return &m;
        }
        return nullptr;
    }
};

// Fits the base model plus every (metric x booster x level) cell on the
// training games. A failed fit is recorded and the run continues.
inline TrainedModels train_models(const FeatureTable& game_features,
                                  const FeatureTable& subtrack_features, const SplitPlan& plan,
                                  const ExperimentConfig& cfg) {
    TrainedModels out;
    const auto train_games_list = plan.train_games();
    const std::set<std::string> train_set(train_games_list.begin(), train_games_list.end());

    const PredictorSchema g_schema = game_predictor_schema();
    const PredictorSchema s_schema = subtrack_predictor_schema();
    const auto g_rows = detail::rows_in_games(game_features, train_set);
    const auto s_rows = detail::rows_in_games(subtrack_features, train_set);

    const Eigen::MatrixXd Xg = detail::extract_matrix(game_features, g_schema.names, g_rows);
    const Eigen::MatrixXd Xs = detail::extract_matrix(subtrack_features, s_schema.names, s_rows);

    for (MetricId id : all_target_metrics()) {
        const std::string metric = metric_name(id);
        const std::string target_col = "target_" + metric;

        // rows with a defined target
        auto present_of = [&](const FeatureTable& t, const std::vector<std::size_t>& rows) {
            const std::size_t tc = t.column(target_col);
            std::vector<std::size_t> local;  // indices into `rows`
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (!std::isnan(t.rows[rows[i]][tc])) local.push_back(i);
            return local;
        };
        const auto g_present = present_of(game_features, g_rows);
        const auto s_present = present_of(subtrack_features, s_rows);

        auto subset = [](const Eigen::MatrixXd& X, const std::vector<std::size_t>& keep) {
            Eigen::MatrixXd out(static_cast<long>(keep.size()), X.cols());
            for (std::size_t i = 0; i < keep.size(); ++i)
                out.row(static_cast<long>(i)) = X.row(static_cast<long>(keep[i]));
            return out;
        };
        auto targets = [&](const FeatureTable& t, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& keep) {
            const std::size_t tc = t.column(target_col);
            Eigen::VectorXd y(static_cast<long>(keep.size()));
            for (std::size_t i = 0; i < keep.size(); ++i)
                y[static_cast<long>(i)] = t.rows[rows[keep[i]]][tc];
            return y;
        };

        const Eigen::VectorXd yg = targets(game_features, g_rows, g_present);
        const Eigen::VectorXd ys = targets(subtrack_features, s_rows, s_present);
        const Eigen::MatrixXd Xg_m = subset(Xg, g_present);
        const Eigen::MatrixXd Xs_m = subset(Xs, s_present);

        if (cfg.fit_baseline) {
            try {
                const std::string obs_col = observed_metric_column(id);
                Eigen::MatrixXd B = detail::extract_matrix(
                    game_features, {"censored_total_time", obs_col}, g_rows);
                B = subset(B, g_present);
                FittedModel m;
                m.kind = ModelKind::baseline_lm;
                m.level = Level::game;
                m.target = metric;
                m.schema = {"censored_total_time", obs_col};
                m.schema_kinds = {ColumnKind::numeric, ColumnKind::numeric};
                m.baseline = fit_baseline_lm(B.col(0), B.col(1), yg);
                m.seed = cfg.seed;
                m.training_games = train_games_list;
                out.models.push_back(std::move(m));
            } catch (const Error& e) {
                out.fit_errors[{metric, kModelBase, "game"}] = e.what();
            }
        }

        for (const BoostSpec& spec : cfg.roster()) {
            const std::string model_name = booster_model_name(spec.booster);
            const bool expand = spec.booster == BoosterKind::linear_interactions;
            auto fit_level = [&](Level level, const Eigen::MatrixXd& Xraw,
                                 const Eigen::VectorXd& y, const PredictorSchema& schema) {
                try {
                    if (Xraw.rows() == 0)
                        fail(ErrorCode::data_error, "no training rows with a defined target");
                    FittedModel m;
                    m.kind = ModelKind::boosted;
                    m.level = level;
                    m.target = metric;
                    m.schema = schema.names;
                    m.schema_kinds = schema.kinds;
                    m.scaler = fit_scaler(Xraw, schema.names, schema.kinds);
                    for (const auto& w : m.scaler.warnings)
                        out.warnings.push_back(metric + "/" + model_name + "/" +
                                               to_string(level) + ": " + w);
                    Eigen::MatrixXd X = apply_scaler(m.scaler, Xraw);
                    m.design_columns = m.scaler.output_columns();
                    m.interactions = expand;
                    if (expand) expand_interactions(X, m.design_columns, m.scaler.output_kinds());
                    m.boost = fit_boosted(spec, X, y);
                    for (const auto& w : m.boost.warnings)
                        out.warnings.push_back(metric + "/" + model_name + "/" +
                                               to_string(level) + ": " + w);
                    m.seed = spec.seed;
                    m.training_games = train_games_list;
                    out.models.push_back(std::move(m));
                } catch (const Error& e) {
                    out.fit_errors[{metric, model_name, to_string(level)}] = e.what();
                }
            };
            fit_level(Level::subtrack, Xs_m, ys, s_schema);
            fit_level(Level::game, Xg_m, yg, g_schema);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Prediction rows (shared by `predict` and `evaluate`)
// ---------------------------------------------------------------------------

struct PredictionRow {
    std::string game_id;
    std::string player_id;
    std::string metric;
    std::string model;
    std::string level;
    std::optional<double> estimate;
};

// Game-level estimates for every player-game in the feature tables, for
// every metric and model. Subtrack-level models are aggregated to the game
// and every estimate is floored at zero afterwards.
inline std::vector<PredictionRow> build_predictions(const TrainedModels& trained,
                                                    bool include_scaling,
                                                    const FeatureTable& game_features,
                                                    const FeatureTable& subtrack_features) {
    std::vector<PredictionRow> out;
    const std::size_t n_games = game_features.rows.size();
    const std::size_t g_game = game_features.id_column("game_id");
    const std::size_t g_player = game_features.id_column("player_id");
    const std::size_t s_game = subtrack_features.id_column("game_id");
    const std::size_t s_player = subtrack_features.id_column("player_id");

    std::vector<std::size_t> all_g_rows(n_games);
    for (std::size_t i = 0; i < n_games; ++i) all_g_rows[i] = i;
    std::vector<std::size_t> all_s_rows(subtrack_features.rows.size());
    for (std::size_t i = 0; i < all_s_rows.size(); ++i) all_s_rows[i] = i;

    const PredictorSchema g_schema = game_predictor_schema();
    const PredictorSchema s_schema = subtrack_predictor_schema();
    const Eigen::MatrixXd Xg = detail::extract_matrix(game_features, g_schema.names, all_g_rows);
    const Eigen::MatrixXd Xs =
        detail::extract_matrix(subtrack_features, s_schema.names, all_s_rows);

    // subtrack rows grouped by player-game, in row order
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> subs_of;
    for (std::size_t r = 0; r < subtrack_features.rows.size(); ++r)
        subs_of[{subtrack_features.ids[r][s_game], subtrack_features.ids[r][s_player]}]
            .push_back(r);
    const std::size_t weight_col = subtrack_features.column("accel_time");

    const std::size_t tc_col = game_features.column("censored_total_time");
    const std::size_t to_col = game_features.column("observed_total_time");

    auto floor0 = [](double v) { return v < 0.0 ? 0.0 : v; };

    for (MetricId id : all_target_metrics()) {
        const std::string metric = metric_name(id);

        if (include_scaling) {
            const std::size_t obs_col = game_features.column(observed_metric_column(id));
            for (std::size_t r = 0; r < n_games; ++r) {
                ScalingInputs in;
                in.observed_metric = game_features.rows[r][obs_col];
                in.observed_time = game_features.rows[r][to_col];
                in.censored_time = game_features.rows[r][tc_col];
                out.push_back({game_features.ids[r][g_game], game_features.ids[r][g_player],
                               metric, kModelScaling, "game",
                               floor0(scaling_estimate(in))});
            }
        }

        if (const FittedModel* m = trained.find(metric, kModelBase, Level::game)) {
            const Eigen::MatrixXd Xb =
                detail::extract_matrix(game_features, m->schema, all_g_rows);
            const Eigen::VectorXd est = predict(*m, Xb, m->schema);
            for (std::size_t r = 0; r < n_games; ++r)
                out.push_back({game_features.ids[r][g_game], game_features.ids[r][g_player],
                               metric, kModelBase, "game", floor0(est[static_cast<long>(r)])});
        }

        for (BoosterKind k :
             {BoosterKind::linear, BoosterKind::linear_interactions, BoosterKind::tree}) {
            const std::string model_name = booster_model_name(k);

            if (const FittedModel* m = trained.find(metric, model_name, Level::subtrack)) {
                const Eigen::VectorXd est = predict(*m, Xs, s_schema.names);
                for (std::size_t r = 0; r < n_games; ++r) {
                    const auto key = std::make_pair(game_features.ids[r][g_game],
                                                    game_features.ids[r][g_player]);
                    std::vector<double> parts, weights;
                    if (auto it = subs_of.find(key); it != subs_of.end()) {
                        for (std::size_t sr : it->second) {
                            parts.push_back(est[static_cast<long>(sr)]);
                            weights.push_back(subtrack_features.rows[sr][weight_col]);
                        }
                    }
                    auto agg = aggregate_to_game(parts, weights, id);
                    if (agg) *agg = floor0(*agg);
                    out.push_back({key.first, key.second, metric, model_name, "subtrack", agg});
                }
            }
            if (const FittedModel* m = trained.find(metric, model_name, Level::game)) {
                const Eigen::VectorXd est = predict(*m, Xg, g_schema.names);
                for (std::size_t r = 0; r < n_games; ++r)
                    out.push_back({game_features.ids[r][g_game], game_features.ids[r][g_player],
                                   metric, model_name, "game",
                                   floor0(est[static_cast<long>(r)])});
            }
        }
    }
    return out;
}

inline const std::vector<std::string> kPredictionsHeader = {
    "game_id", "player_id", "metric", "model", "level", "estimate"};

inline void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows) {
    csv::Writer w(path, kPredictionsHeader);
    for (const auto& r : rows)
        w.write_row({r.game_id, r.player_id, r.metric, r.model, r.level,
                     r.estimate ? format_double(*r.estimate) : std::string()});
}

inline std::vector<PredictionRow> read_predictions(const std::string& path) {
    csv::Reader reader(path, kPredictionsHeader);
    std::vector<PredictionRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) {
        PredictionRow r{row[0], row[1], row[2], row[3], row[4], std::nullopt};
        if (!row[5].empty()) r.estimate = parse_double(row[5], reader.location());
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EvalCell {
    std::string metric;
    std::string model;
    std::string level;
    double rmspe = std::numeric_limits<double>::quiet_NaN();
    double cv = std::numeric_limits<double>::quiet_NaN();
    double mean_y = std::numeric_limits<double>::quiet_NaN();
    long n = 0;
    std::string error;  // empty means the cell is valid
};

struct ResidualRecord {
    std::string metric;
    std::string model;
    std::string level;
    std::string game_id;
    std::string player_id;
    std::string position;
    double censored_fraction = 0.0;
    double truth = 0.0;
    double estimate = 0.0;

    double residual() const { return truth - estimate; }
};

struct PositionStat {
    std::string metric;
    std::string model;
    std::string level;
    std::string position;
    double rmspe = 0.0;
    long n = 0;
};

struct FeatureCount {
    std::string feature;
    long count = 0;
};

struct EvalReport {
    std::uint64_t seed = 0;
    std::vector<std::string> train_games;
    std::vector<std::string> test_games;
    std::vector<std::string> warnings;
    std::vector<EvalCell> cells;
    std::vector<ResidualRecord> residuals;
    std::map<std::string, std::vector<std::string>> top_features;   // "metric|model|level"
    std::map<std::string, std::vector<FeatureCount>> importance_tally;  // "model|level"
    std::vector<PositionStat> position_stats;

    const EvalCell* find_cell(const std::string& metric, const std::string& model,
                              const std::string& level) const {
        for (const auto& c : cells)
            if (c.metric == metric && c.model == model && c.level == level) return &c;
        return nullptr;
    }
};

// Fig. 3-shaped table: (censored fraction, residual, position) records for
// one (metric, model, level) cell.
inline std::vector<ResidualRecord> residuals_by_censoring(const EvalReport& report,
                                                          const std::string& metric,
                                                          const std::string& model,
                                                          const std::string& level) {
    if (!report.find_cell(metric, model, level))
        fail(ErrorCode::data_error, "report has no cell (" + metric + ", " + model + ", " +
                                        level + ")");
    std::vector<ResidualRecord> out;
    for (const auto& r : report.residuals)
        if (r.metric == metric && r.model == model && r.level == level) out.push_back(r);
    return out;
}

struct ExperimentResult {
    TrainedModels trained;
    std::vector<PredictionRow> predictions;
    EvalReport report;
};

// Full protocol: train on the first train_count games, predict the held-out
// games, score every (metric x model x level) cell, and keep the residual
// records and top-predictor tallies the diagnostics sections need.
inline ExperimentResult run_experiment_full(const FeatureTable& game_features,
                                            const FeatureTable& subtrack_features,
                                            const ExperimentConfig& cfg) {
    std::vector<std::string> games;
    {
        const std::size_t g = game_features.id_column("game_id");
        for (const auto& ids : game_features.ids) games.push_back(ids[g]);
    }
    const SplitPlan plan = make_split_plan(std::move(games), cfg.train_games, cfg.test_games);

    ExperimentResult result;
    EvalReport& report = result.report;
    report.seed = cfg.seed;
    report.train_games = plan.train_games();
    report.test_games = plan.test_games();

    result.trained = train_models(game_features, subtrack_features, plan, cfg);
    TrainedModels& trained = result.trained;
    report.warnings = trained.warnings;

    result.predictions =
        build_predictions(trained, cfg.fit_scaling, game_features, subtrack_features);
    const auto& preds = result.predictions;

    // index predictions and game rows
    std::map<std::tuple<std::string, std::string, std::string, std::string, std::string>,
             std::optional<double>>
        pred_of;
    for (const auto& p : preds)
        pred_of[{p.metric, p.model, p.level, p.game_id, p.player_id}] = p.estimate;

    const std::set<std::string> test_set(report.test_games.begin(), report.test_games.end());
    const std::size_t g_game = game_features.id_column("game_id");
    const std::size_t g_player = game_features.id_column("player_id");
    const std::size_t g_pos = game_features.id_column("position");
    const std::size_t frac_col = game_features.column("censored_fraction");
    const auto test_rows = detail::rows_in_games(game_features, test_set);

    struct RosterEntry {
        std::string model;
        std::string level;
    };
    std::vector<RosterEntry> roster;
    if (cfg.fit_baseline) roster.push_back({kModelBase, "game"});
    if (cfg.fit_scaling) roster.push_back({kModelScaling, "game"});
    for (const BoostSpec& spec : cfg.roster()) {
        roster.push_back({booster_model_name(spec.booster), "subtrack"});
        roster.push_back({booster_model_name(spec.booster), "game"});
    }

    for (MetricId id : all_target_metrics()) {
        const std::string metric = metric_name(id);
        const std::size_t tc = game_features.column("target_" + metric);

        for (const auto& entry : roster) {
            EvalCell cell;
            cell.metric = metric;
            cell.model = entry.model;
            cell.level = entry.level;

            if (auto it = trained.fit_errors.find({metric, entry.model, entry.level});
                it != trained.fit_errors.end()) {
                cell.error = it->second;
                report.cells.push_back(std::move(cell));
                continue;
            }

            std::vector<double> truth, est;
            std::vector<ResidualRecord> records;
            bool missing_estimate = false;
            for (std::size_t r : test_rows) {
                const double y = game_features.rows[r][tc];
                if (std::isnan(y)) continue;
                auto it = pred_of.find({metric, entry.model, entry.level,
                                        game_features.ids[r][g_game],
                                        game_features.ids[r][g_player]});
                if (it == pred_of.end()) {
                    missing_estimate = true;
                    break;
                }
                if (!it->second) continue;  // undefined estimate with defined truth
                truth.push_back(y);
                est.push_back(*it->second);
                ResidualRecord rec;
                rec.metric = metric;
                rec.model = entry.model;
                rec.level = entry.level;
                rec.game_id = game_features.ids[r][g_game];
                rec.player_id = game_features.ids[r][g_player];
                rec.position = game_features.ids[r][g_pos];
                rec.censored_fraction = game_features.rows[r][frac_col];
                rec.truth = y;
                rec.estimate = *it->second;
                records.push_back(std::move(rec));
            }

            if (missing_estimate) {
                cell.error = "no predictions for this cell";
            } else if (truth.empty()) {
                cell.error = "no test observations with a defined target";
            } else {
                cell.rmspe = rmspe(truth, est);
                double mean = 0.0;
                for (double v : truth) mean += v;
                mean /= static_cast<double>(truth.size());
                cell.mean_y = mean;
                cell.n = static_cast<long>(truth.size());
                if (mean == 0.0)
                    cell.error = "zero-mean targets, CV undefined";
                else
                    cell.cv = cell.rmspe / mean;

                for (const char* pos : {"defender", "midfielder", "forward"}) {
                    std::vector<double> py, pe;
                    for (const auto& rec : records)
                        if (rec.position == pos) {
                            py.push_back(rec.truth);
                            pe.push_back(rec.estimate);
                        }
                    if (!py.empty())
                        report.position_stats.push_back(
                            {metric, entry.model, entry.level, pos, rmspe(py, pe),
                             static_cast<long>(py.size())});
                }
                for (auto& rec : records) report.residuals.push_back(std::move(rec));
            }
            report.cells.push_back(std::move(cell));
        }

        // top-5 predictors per boosted cell
        for (const BoostSpec& spec : cfg.roster()) {
            const std::string model_name = booster_model_name(spec.booster);
            for (Level level : {Level::subtrack, Level::game}) {
                if (const FittedModel* m = trained.find(metric, model_name, level)) {
                    auto ranked = variable_importance(*m);
                    std::vector<std::string> top;
                    for (std::size_t i = 0; i < ranked.size() && i < 5; ++i)
                        top.push_back(ranked[i].feature);
                    report.top_features[metric + "|" + model_name + "|" + to_string(level)] =
                        std::move(top);
                }
            }
        }
    }

    // tally how often each predictor makes a model's top five across metrics
    for (const BoostSpec& spec : cfg.roster()) {
        const std::string model_name = booster_model_name(spec.booster);
        for (const char* level : {"subtrack", "game"}) {
            std::map<std::string, long> counts;
            for (MetricId id : all_target_metrics()) {
                auto it = report.top_features.find(std::string(metric_name(id)) + "|" +
                                                   model_name + "|" + level);
                if (it == report.top_features.end()) continue;
                for (const auto& f : it->second) ++counts[f];
            }
            std::vector<FeatureCount> tally;
            for (const auto& [feature, count] : counts) tally.push_back({feature, count});
            std::stable_sort(tally.begin(), tally.end(),
                             [](const FeatureCount& a, const FeatureCount& b) {
                                 return a.count > b.count;
                             });
            report.importance_tally[std::string(model_name) + "|" + level] = std::move(tally);
        }
    }
    return result;
}

inline EvalReport run_experiment(const FeatureTable& game_features,
                                 const FeatureTable& subtrack_features,
                                 const ExperimentConfig& cfg) {
    return run_experiment_full(game_features, subtrack_features, cfg).report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json opt_num(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

inline double num_or_nan(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["seed"] = r.seed;
    j["train_games"] = r.train_games;
    j["test_games"] = r.test_games;
    j["warnings"] = r.warnings;

    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells)
        cells.push_back({{"metric", c.metric},
                         {"model", c.model},
                         {"level", c.level},
                         {"rmspe", detail::opt_num(c.rmspe)},
                         {"cv", detail::opt_num(c.cv)},
                         {"mean_y", detail::opt_num(c.mean_y)},
                         {"n", c.n},
                         {"error", c.error}});
    j["cells"] = std::move(cells);

    nlohmann::json residuals = nlohmann::json::array();
    for (const auto& rec : r.residuals)
        residuals.push_back({{"metric", rec.metric},
                             {"model", rec.model},
                             {"level", rec.level},
                             {"game_id", rec.game_id},
                             {"player_id", rec.player_id},
                             {"position", rec.position},
                             {"censored_fraction", rec.censored_fraction},
                             {"truth", rec.truth},
                             {"estimate", rec.estimate}});
    j["residuals"] = std::move(residuals);

    j["top_features"] = r.top_features;

    nlohmann::json tally;
    for (const auto& [key, counts] : r.importance_tally) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& fc : counts) arr.push_back({{"feature", fc.feature}, {"count", fc.count}});
        tally[key] = std::move(arr);
    }
    j["importance_tally"] = std::move(tally);

    nlohmann::json pos = nlohmann::json::array();
    for (const auto& p : r.position_stats)
        pos.push_back({{"metric", p.metric},
                       {"model", p.model},
                       {"level", p.level},
                       {"position", p.position},
                       {"rmspe", p.rmspe},
                       {"n", p.n}});
    j["position_stats"] = std::move(pos);
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.train_games = j.at("train_games").get<std::vector<std::string>>();
    r.test_games = j.at("test_games").get<std::vector<std::string>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& c : j.at("cells")) {
        EvalCell cell;
        cell.metric = c.at("metric").get<std::string>();
        cell.model = c.at("model").get<std::string>();
        cell.level = c.at("level").get<std::string>();
        cell.rmspe = detail::num_or_nan(c.at("rmspe"));
        cell.cv = detail::num_or_nan(c.at("cv"));
        cell.mean_y = detail::num_or_nan(c.at("mean_y"));
        cell.n = c.at("n").get<long>();
        cell.error = c.at("error").get<std::string>();
        r.cells.push_back(std::move(cell));
    }
    for (const auto& rec : j.at("residuals")) {
        ResidualRecord rr;
        rr.metric = rec.at("metric").get<std::string>();
        rr.model = rec.at("model").get<std::string>();
        rr.level = rec.at("level").get<std::string>();
        rr.game_id = rec.at("game_id").get<std::string>();
        rr.player_id = rec.at("player_id").get<std::string>();
        rr.position = rec.at("position").get<std::string>();
        rr.censored_fraction = rec.at("censored_fraction").get<double>();
        rr.truth = rec.at("truth").get<double>();
        rr.estimate = rec.at("estimate").get<double>();
        r.residuals.push_back(std::move(rr));
    }
    r.top_features =
        j.at("top_features").get<std::map<std::string, std::vector<std::string>>>();
    for (const auto& [key, arr] : j.at("importance_tally").items()) {
        std::vector<FeatureCount> counts;
        for (const auto& fc : arr)
            counts.push_back({fc.at("feature").get<std::string>(), fc.at("count").get<long>()});
        r.importance_tally[key] = std::move(counts);
    }
    for (const auto& p : j.at("position_stats")) {
        PositionStat ps;
        ps.metric = p.at("metric").get<std::string>();
        ps.model = p.at("model").get<std::string>();
        ps.level = p.at("level").get<std::string>();
        ps.position = p.at("position").get<std::string>();
        ps.rmspe = p.at("rmspe").get<double>();
        ps.n = p.at("n").get<long>();
        r.position_stats.push_back(std::move(ps));
    }
    return r;
}

inline void write_report_json(const std::string& path, const EvalReport& r) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::missing_file, "cannot open file for writing: " + path);
    out << report_to_json(r).dump(2) << '\n';
}

inline EvalReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::missing_file, "cannot open report file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::schema_mismatch, path + ": invalid report file: " + e.what());
    }
    return report_from_json(j);
}

// One results table per estimation level, base model column repeated in
// both, mirroring the paper's layout.
inline void write_results_table(const std::string& path, const EvalReport& r,
                                const std::string& level) {
    csv::Writer w(path, {"metric", "base_rmspe", "base_cv", "linear_rmspe", "linear_cv",
                         "linear_interactions_rmspe", "linear_interactions_cv", "tree_rmspe",
                         "tree_cv"});
    for (MetricId id : all_target_metrics()) {
        const std::string metric = metric_name(id);
        std::vector<std::string> row = {metric};
        auto push_cell = [&](const std::string& model, const std::string& lv) {
            const EvalCell* c = r.find_cell(metric, model, lv);
            if (c && c->error.empty()) {
                row.push_back(format_double(c->rmspe));
                row.push_back(format_double(c->cv));
            } else {
                row.push_back("");
                row.push_back("");
            }
        };
        push_cell(kModelBase, "game");  // base model is game-level by definition
        push_cell(booster_model_name(BoosterKind::linear), level);
        push_cell(booster_model_name(BoosterKind::linear_interactions), level);
        push_cell(booster_model_name(BoosterKind::tree), level);
        w.write_row(row);
    }
}

inline const std::vector<std::string> kResidualsHeader = {
    "metric",   "model", "level",    "game_id", "player_id",
    "position", "censored_fraction", "truth",   "estimate", "residual"};

inline void write_residuals_csv(const std::string& path, const EvalReport& r) {
    csv::Writer w(path, kResidualsHeader);
    for (const auto& rec : r.residuals)
        w.write_row({rec.metric, rec.model, rec.level, rec.game_id, rec.player_id, rec.position,
                     format_double(rec.censored_fraction), format_double(rec.truth),
                     format_double(rec.estimate), format_double(rec.residual())});
}

}  // namespace loadtrack
