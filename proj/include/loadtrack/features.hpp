#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loadtrack/csv.hpp"
#include "loadtrack/kinematics.hpp"
#include "loadtrack/metrics.hpp"
#include "loadtrack/segment.hpp"
#include "loadtrack/types.hpp"

namespace loadtrack {

// ---------------------------------------------------------------------------
// Assembled per-player-game view of the censored corpus
// ---------------------------------------------------------------------------

struct HalfData {
    PlayerTrack track;
    VisibilityMask mask;
    KinematicSeries kin;
    std::vector<Subtrack> subtracks;
};

struct PlayerGame {
    std::string game_id;
    std::string player_id;
    PlayerPosition position = PlayerPosition::defender;
    std::vector<HalfData> halves;  // ordered by half number
    LoadMetrics observed;          // merged across halves
    LoadMetrics censored;
    LoadMetrics full;

    double censored_fraction() const {
        const double total = observed.elapsed + censored.elapsed;
        return total > 0.0 ? censored.elapsed / total : 0.0;
    }
};

// ---------------------------------------------------------------------------
// Named-column tables (the on-disk feature matrix form)
// ---------------------------------------------------------------------------

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

struct FeatureTable {
    std::vector<std::string> id_columns;
    std::vector<std::string> value_columns;
    std::vector<std::vector<std::string>> ids;  // one entry per row
    std::vector<std::vector<double>> rows;      // NaN marks an absent value

    std::size_t column(const std::string& name) const {
        auto it = std::find(value_columns.begin(), value_columns.end(), name);
        if (it == value_columns.end())
            fail(ErrorCode::schema_mismatch, "feature table has no column '" + name + "'");
        return static_cast<std::size_t>(it - value_columns.begin());
    }

    std::size_t id_column(const std::string& name) const {
        auto it = std::find(id_columns.begin(), id_columns.end(), name);
        if (it == id_columns.end())
            fail(ErrorCode::schema_mismatch, "feature table has no id column '" + name + "'");
        return static_cast<std::size_t>(it - id_columns.begin());
    }
};

inline void write_feature_table(const std::string& path, const FeatureTable& table) {
    std::vector<std::string> header = table.id_columns;
    header.insert(header.end(), table.value_columns.begin(), table.value_columns.end());
    csv::Writer w(path, header);
    std::vector<std::string> row;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        row = table.ids[r];
        for (double v : table.rows[r]) row.push_back(std::isnan(v) ? std::string() : format_double(v));
        w.write_row(row);
        row.clear();
    }
}

inline FeatureTable read_feature_table(const std::string& path, std::size_t id_count) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::missing_file, "cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::schema_mismatch, path + ": empty file");
    auto header = csv::split_row(line);
    if (header.size() < id_count)
        fail(ErrorCode::schema_mismatch, path + ": fewer columns than expected id columns");

    FeatureTable t;
    t.id_columns.assign(header.begin(), header.begin() + static_cast<long>(id_count));
    t.value_columns.assign(header.begin() + static_cast<long>(id_count), header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = csv::split_row(line);
        if (fields.size() != header.size())
            fail(ErrorCode::data_error,
                 path + ":" + std::to_string(line_no) + ": wrong field count");
        t.ids.emplace_back(fields.begin(), fields.begin() + static_cast<long>(id_count));
        std::vector<double> vals;
        vals.reserve(fields.size() - id_count);
        for (std::size_t c = id_count; c < fields.size(); ++c)
            vals.push_back(fields[c].empty()
                               ? kAbsent
                               : parse_double(fields[c], path + ":" + std::to_string(line_no)));
        t.rows.push_back(std::move(vals));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Predictor schemas (the Table 2 columns, by level)
// ---------------------------------------------------------------------------

enum class ColumnKind : std::uint8_t { numeric, indicator, flag };

struct PredictorSchema {
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;

    void add(const std::string& name, ColumnKind kind) {
        names.push_back(name);
        kinds.push_back(kind);
    }
};

inline const std::vector<std::string>& observed_block_columns() {
    static const std::vector<std::string> cols = {
        "observed_average_acceleration", "observed_total_acceleration",
        "observed_average_velocity",     "observed_high_speed_distance",
        "observed_very_high_speed_distance", "observed_time_v_band_0",
        "observed_time_v_band_1",        "observed_time_v_band_2",
        "observed_time_a_band_0",        "observed_time_a_band_1",
        "observed_time_a_band_2"};
    return cols;
}

inline PredictorSchema subtrack_predictor_schema() {
    PredictorSchema s;
    s.add("pos_midfielder", ColumnKind::indicator);
    s.add("pos_forward", ColumnKind::indicator);
    s.add("offscreen_time", ColumnKind::numeric);
    s.add("offscreen_distance", ColumnKind::numeric);
    s.add("pre_velocity", ColumnKind::numeric);
    s.add("post_velocity", ColumnKind::numeric);
    s.add("pre_abs_accel", ColumnKind::numeric);
    s.add("post_abs_accel", ColumnKind::numeric);
    s.add("pre_imputed", ColumnKind::flag);
    s.add("post_imputed", ColumnKind::flag);
    for (const auto& c : observed_block_columns()) s.add(c, ColumnKind::numeric);
    return s;
}

inline PredictorSchema game_predictor_schema() {
    PredictorSchema s;
    s.add("pos_midfielder", ColumnKind::indicator);
    s.add("pos_forward", ColumnKind::indicator);
    s.add("censored_total_time", ColumnKind::numeric);
    s.add("observed_total_distance", ColumnKind::numeric);
    for (const auto& c : observed_block_columns()) s.add(c, ColumnKind::numeric);
    s.add("censored_fraction", ColumnKind::numeric);
    return s;
}

// ---------------------------------------------------------------------------
// Feature construction
// ---------------------------------------------------------------------------

namespace detail {

struct WindowStats {
    double velocity = 0.0;
    double abs_accel = 0.0;
    bool velocity_imputed = false;
    bool accel_imputed = false;
};

// Mean speed / |accel| over up to 20 observed frames on one side of a
// censored subtrack; truncated at track ends and at the nearest censored
// frame, imputed from the game-level observed means when nothing remains.
inline WindowStats boundary_window(const HalfData& half, std::size_t sub_first,
                                   std::size_t sub_count, bool before, double impute_velocity,
                                   double impute_accel) {
    const std::size_t n = half.track.frames.size();
    std::vector<std::size_t> frames;
    if (before) {
        std::size_t j = sub_first;
        while (j > 0 && frames.size() < 20 && half.mask[j - 1]) {
            --j;
            frames.push_back(j);
        }
    } else {
        std::size_t j = sub_first + sub_count;
        while (j < n && frames.size() < 20 && half.mask[j]) {
            frames.push_back(j);
            ++j;
        }
    }

    WindowStats w;
    double vsum = 0.0, asum = 0.0;
    std::size_t vcount = 0, acount = 0;
    for (std::size_t f : frames) {
        if (f + 1 < n) {
            vsum += half.kin.speed[f];
            ++vcount;
        }
        if (f >= 1 && f + 1 < n) {
            asum += std::abs(half.kin.accel[f - 1]);
            ++acount;
        }
    }
    if (vcount > 0) {
        w.velocity = vsum / static_cast<double>(vcount);
    } else {
        w.velocity = impute_velocity;
        w.velocity_imputed = true;
    }
    if (acount > 0) {
        w.abs_accel = asum / static_cast<double>(acount);
    } else {
        w.abs_accel = impute_accel;
        w.accel_imputed = true;
    }
    return w;
}

inline void append_observed_block(const PlayerGame& pg, std::vector<double>& row) {
    const LoadMetrics& o = pg.observed;
    row.push_back(o.acceleration_density.value_or(0.0));
    row.push_back(o.total_acceleration);
    row.push_back(o.elapsed > 0.0 ? o.total_distance / o.elapsed : 0.0);
    row.push_back(o.high_speed_distance);
    row.push_back(o.very_high_speed_distance);
    for (int b = 0; b < 3; ++b) row.push_back(o.time_v_band[b]);
    for (int b = 0; b < 3; ++b) row.push_back(o.time_a_band[b]);
}

}  // namespace detail

inline const std::vector<std::string>& target_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> v;
        for (MetricId id : all_target_metrics()) v.push_back(std::string("target_") + metric_name(id));
        return v;
    }();
    return cols;
}

// Censored-subtrack predictor rows plus their ground-truth targets.
// Row ids: game_id, player_id, half, subtrack_id, position.
inline FeatureTable subtrack_feature_table(const std::vector<PlayerGame>& corpus,
                                           const BandConfig& bands = {}) {
    FeatureTable t;
    t.id_columns = {"game_id", "player_id", "half", "subtrack_id", "position"};
    const PredictorSchema schema = subtrack_predictor_schema();
    t.value_columns = schema.names;
    t.value_columns.push_back("accel_time");  // density aggregation weight
    for (const auto& c : target_columns()) t.value_columns.push_back(c);

    for (const PlayerGame& pg : corpus) {
        if (!(pg.observed.elapsed > 0.0)) continue;  // never on camera
        const double obs_avg_velocity =
            pg.observed.total_distance / pg.observed.elapsed;
        const double obs_avg_accel = pg.observed.acceleration_density.value_or(0.0);

        for (const HalfData& half : pg.halves) {
            for (const Subtrack& sub : half.subtracks) {
                if (sub.observed) continue;
                auto pre = detail::boundary_window(half, sub.first_frame, sub.frame_count, true,
                                                   obs_avg_velocity, obs_avg_accel);
                auto post = detail::boundary_window(half, sub.first_frame, sub.frame_count, false,
                                                    obs_avg_velocity, obs_avg_accel);
                std::vector<double> row;
                row.push_back(pg.position == PlayerPosition::midfielder ? 1.0 : 0.0);
                row.push_back(pg.position == PlayerPosition::forward ? 1.0 : 0.0);
                row.push_back(sub.elapsed);
                row.push_back(sub.gap_distance ? *sub.gap_distance
                                               : obs_avg_velocity * sub.elapsed);
                row.push_back(pre.velocity);
                row.push_back(post.velocity);
                row.push_back(pre.abs_accel);
                row.push_back(post.abs_accel);
                row.push_back(pre.velocity_imputed || pre.accel_imputed ? 1.0 : 0.0);
                row.push_back(post.velocity_imputed || post.accel_imputed ? 1.0 : 0.0);
                detail::append_observed_block(pg, row);

                const VisibilityMask m = subtrack_mask(sub, half.track.frames.size());
                const LoadMetrics sm = compute_load_metrics(half.kin, m, bands);
                row.push_back(kFrameDt * static_cast<double>(sm.accel_samples));
                for (MetricId id : all_target_metrics()) {
                    auto v = metric_value(sm, id);
                    row.push_back(v ? *v : kAbsent);
                }

                t.ids.push_back({pg.game_id, pg.player_id, std::to_string(half.track.half),
                                 sub.subtrack_id, to_string(pg.position)});
                t.rows.push_back(std::move(row));
            }
        }
    }
    return t;
}

// Game-level predictor rows with censored-scope targets.
// Row ids: game_id, player_id, position.
inline FeatureTable game_feature_table(const std::vector<PlayerGame>& corpus) {
    FeatureTable t;
    t.id_columns = {"game_id", "player_id", "position"};
    const PredictorSchema schema = game_predictor_schema();
    t.value_columns = schema.names;
    t.value_columns.push_back("observed_total_time");
    t.value_columns.push_back("censored_accel_time");
    for (const auto& c : target_columns()) t.value_columns.push_back(c);

    for (const PlayerGame& pg : corpus) {
        if (!(pg.observed.elapsed > 0.0))
            fail(ErrorCode::data_error, "player " + pg.player_id + " in game " + pg.game_id +
                                            " has zero observed time (never on camera)");
        std::vector<double> row;
        row.push_back(pg.position == PlayerPosition::midfielder ? 1.0 : 0.0);
        row.push_back(pg.position == PlayerPosition::forward ? 1.0 : 0.0);
        row.push_back(pg.censored.elapsed);
        row.push_back(pg.observed.total_distance);
        detail::append_observed_block(pg, row);
        row.push_back(pg.censored_fraction());
        row.push_back(pg.observed.elapsed);
        row.push_back(kFrameDt * static_cast<double>(pg.censored.accel_samples));
        for (MetricId id : all_target_metrics()) {
            auto v = metric_value(pg.censored, id);
            row.push_back(v ? *v : kAbsent);
        }
        t.ids.push_back({pg.game_id, pg.player_id, to_string(pg.position)});
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

struct ScalerStats {
    std::vector<std::string> columns;  // input order
    std::vector<ColumnKind> kinds;
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<std::uint8_t> dropped;  // constant numeric columns
    std::vector<std::string> warnings;

    std::vector<std::string> output_columns() const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (!dropped[i]) out.push_back(columns[i]);
        return out;
    }
    std::vector<ColumnKind> output_kinds() const {
        std::vector<ColumnKind> out;
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (!dropped[i]) out.push_back(kinds[i]);
        return out;
    }
};

// Mean/sd per numeric column on training rows only; indicators and flags
// pass through. Constant numeric columns are dropped with a warning.
inline ScalerStats fit_scaler(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                              const std::vector<ColumnKind>& kinds) {
    if (X.rows() == 0) fail(ErrorCode::data_error, "fit_scaler: empty training matrix");
    if (static_cast<std::size_t>(X.cols()) != names.size() || names.size() != kinds.size())
        fail(ErrorCode::data_error, "fit_scaler: names/kinds do not match matrix width");

    ScalerStats s;
    s.columns = names;
    s.kinds = kinds;
    s.mean.assign(names.size(), 0.0);
    s.sd.assign(names.size(), 1.0);
    s.dropped.assign(names.size(), 0);
    const double n = static_cast<double>(X.rows());
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (kinds[c] != ColumnKind::numeric) continue;
        const double mean = X.col(static_cast<long>(c)).mean();
        double var = 0.0;
        if (X.rows() > 1) {
            var = (X.col(static_cast<long>(c)).array() - mean).square().sum() / (n - 1.0);
        }
        const double sd = std::sqrt(var);
        s.mean[c] = mean;
        s.sd[c] = sd;
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            s.dropped[c] = 1;
            s.warnings.push_back("dropping constant column '" + names[c] + "'");
        }
    }
    return s;
}

inline Eigen::MatrixXd apply_scaler(const ScalerStats& s, const Eigen::MatrixXd& X) {
    if (static_cast<std::size_t>(X.cols()) != s.columns.size())
        fail(ErrorCode::schema_mismatch, "apply_scaler: matrix width does not match scaler");
    std::size_t out_cols = 0;
    for (auto d : s.dropped)
        if (!d) ++out_cols;
    Eigen::MatrixXd out(X.rows(), static_cast<long>(out_cols));
    long oc = 0;
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
        if (s.dropped[c]) continue;
        if (s.kinds[c] == ColumnKind::numeric)
            out.col(oc) = (X.col(static_cast<long>(c)).array() - s.mean[c]) / s.sd[c];
        else
            out.col(oc) = X.col(static_cast<long>(c));
        ++oc;
    }
    return out;
}

inline Eigen::MatrixXd unscale(const ScalerStats& s, const Eigen::MatrixXd& Xs) {
    std::size_t out_cols = 0;
    for (auto d : s.dropped)
        if (!d) ++out_cols;
    if (static_cast<std::size_t>(Xs.cols()) != out_cols)
        fail(ErrorCode::schema_mismatch, "unscale: matrix width does not match scaler output");
    Eigen::MatrixXd out(Xs.rows(), Xs.cols());
    long oc = 0;
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
        if (s.dropped[c]) continue;
        if (s.kinds[c] == ColumnKind::numeric)
            out.col(oc) = Xs.col(oc).array() * s.sd[c] + s.mean[c];
        else
            out.col(oc) = Xs.col(oc);
        ++oc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Two-way interaction expansion (after scaling)
// ---------------------------------------------------------------------------

// Appends numeric x numeric and indicator x numeric products; flags take no
// part in interactions. Base columns stay first, in their input order.
inline void expand_interactions(Eigen::MatrixXd& X, std::vector<std::string>& names,
                                const std::vector<ColumnKind>& kinds) {
    const std::size_t base = names.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < base; ++i) {
        for (std::size_t j = i + 1; j < base; ++j) {
            const bool nn = kinds[i] == ColumnKind::numeric && kinds[j] == ColumnKind::numeric;
            const bool in = (kinds[i] == ColumnKind::indicator && kinds[j] == ColumnKind::numeric) ||
                            (kinds[i] == ColumnKind::numeric && kinds[j] == ColumnKind::indicator);
            if (nn || in) pairs.emplace_back(i, j);
        }
    }
    Eigen::MatrixXd out(X.rows(), static_cast<long>(base + pairs.size()));
    out.leftCols(static_cast<long>(base)) = X;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        out.col(static_cast<long>(base + k)) =
            X.col(static_cast<long>(i)).cwiseProduct(X.col(static_cast<long>(j)));
        names.push_back(names[i] + "*" + names[j]);
    }
    X = std::move(out);
}

}  // namespace loadtrack
