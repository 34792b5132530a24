#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "loadtrack/camera.hpp"
#include "loadtrack/config.hpp"
#include "loadtrack/evaluation.hpp"
#include "loadtrack/features.hpp"
#include "loadtrack/io.hpp"
#include "loadtrack/kinematics.hpp"
#include "loadtrack/metrics.hpp"
#include "loadtrack/models.hpp"
#include "loadtrack/segment.hpp"

namespace loadtrack {

// Reads a frames file with or without the visibility column; without one,
// every frame counts as observed.
inline std::vector<CensoredTrack> read_frames_any(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) fail(ErrorCode::missing_file, "cannot open file: " + path);
    std::string first;
    std::getline(probe, first);
    probe.close();
    if (csv::split_row(first) == kCensoredFramesHeader) return read_censored_frames(path);

    auto tracks = read_frames(path);
    std::vector<CensoredTrack> out;
    out.reserve(tracks.size());
    for (auto& tr : tracks) {
        VisibilityMask mask(tr.frames.size(), 1);
        out.push_back({std::move(tr), std::move(mask)});
    }
    return out;
}

// Camera simulation across a whole corpus: one path per (game, half), every
// event required to fall inside that half's covered time range.
inline std::vector<CensoredTrack> censor_corpus(std::vector<PlayerTrack> tracks,
                                                const std::vector<EventSequence>& events,
                                                const CameraWindow& window) {
    std::map<std::pair<std::string, int>, const EventSequence*> events_of;
    for (const auto& seq : events) events_of[{seq.game_id, seq.half}] = &seq;

    std::map<std::pair<std::string, int>, std::pair<double, double>> ranges;
    for (const auto& tr : tracks) {
        if (tr.frames.empty()) continue;
        auto [it, fresh] = ranges.try_emplace(std::pair{tr.game_id, tr.half},
                                              tr.frames.front().t, tr.frames.back().t);
        if (!fresh) {
            it->second.first = std::min(it->second.first, tr.frames.front().t);
            it->second.second = std::max(it->second.second, tr.frames.back().t);
        }
    }

    std::map<std::pair<std::string, int>, CameraPath> paths;
    for (const auto& [key, range] : ranges) {
        auto it = events_of.find(key);
        if (it == events_of.end())
            fail(ErrorCode::data_error, "no events for game " + key.first + " half " +
                                            std::to_string(key.second) +
                                            "; cannot build a camera track");
        for (const Event& e : it->second->events)
            if (e.t < range.first - 0.05 || e.t > range.second + 0.05)
                fail(ErrorCode::data_error,
                     "event at t=" + format_time(e.t) + " outside the time range of game " +
                         key.first + " half " + std::to_string(key.second));
        paths.emplace(key, build_camera_path(it->second->events));
    }

    std::vector<CensoredTrack> out;
    out.reserve(tracks.size());
    for (auto& tr : tracks) {
        const CameraPath& path = paths.at({tr.game_id, tr.half});
        VisibilityMask mask = censor(tr, path, window);
        out.push_back({std::move(tr), std::move(mask)});
    }
    return out;
}

inline std::vector<Subtrack> segment_corpus(const std::vector<CensoredTrack>& tracks) {
    std::vector<Subtrack> all;
    for (const auto& ct : tracks) {
        auto subs = segment_subtracks(ct.track, ct.mask);
        all.insert(all.end(), subs.begin(), subs.end());
    }
    return all;
}

// Groups censored tracks into player-games with kinematics, per-scope load
// metrics and subtracks. Player-games that never appear on camera are
// dropped with a warning; they have no observed side to predict from.
inline std::vector<PlayerGame> assemble_player_games(std::vector<CensoredTrack> tracks,
                                                     double bandwidth, const BandConfig& bands,
                                                     std::vector<std::string>* warnings = nullptr) {
    std::stable_sort(tracks.begin(), tracks.end(),
                     [](const CensoredTrack& a, const CensoredTrack& b) {
                         return std::tie(a.track.game_id, a.track.player_id, a.track.half) <
                                std::tie(b.track.game_id, b.track.player_id, b.track.half);
                     });

    std::vector<PlayerGame> out;
    std::size_t i = 0;
    while (i < tracks.size()) {
        std::size_t j = i;
        while (j < tracks.size() && tracks[j].track.game_id == tracks[i].track.game_id &&
               tracks[j].track.player_id == tracks[i].track.player_id)
            ++j;

        PlayerGame pg;
        pg.game_id = tracks[i].track.game_id;
        pg.player_id = tracks[i].track.player_id;
        pg.position = tracks[i].track.position;
        bool first = true;
        for (std::size_t k = i; k < j; ++k) {
            HalfData half;
            half.track = std::move(tracks[k].track);
            half.mask = std::move(tracks[k].mask);
            half.kin = derive_kinematics(half.track, bandwidth);
            half.subtracks = segment_subtracks(half.track, half.mask);

            VisibilityMask inverted(half.mask.size());
            for (std::size_t f = 0; f < half.mask.size(); ++f) inverted[f] = half.mask[f] ? 0 : 1;
            VisibilityMask all(half.mask.size(), 1);

            const LoadMetrics obs = compute_load_metrics(half.kin, half.mask, bands);
            const LoadMetrics cen = compute_load_metrics(half.kin, inverted, bands);
            const LoadMetrics ful = compute_load_metrics(half.kin, all, bands);
            if (first) {
                pg.observed = obs;
                pg.censored = cen;
                pg.full = ful;
                first = false;
            } else {
                pg.observed = merge_load_metrics(pg.observed, obs);
                pg.censored = merge_load_metrics(pg.censored, cen);
                pg.full = merge_load_metrics(pg.full, ful);
            }
            pg.halves.push_back(std::move(half));
        }
        if (pg.observed.elapsed > 0.0) {
            out.push_back(std::move(pg));
        } else if (warnings) {
            warnings->push_back("player " + pg.player_id + " in game " + pg.game_id +
                                " never on camera; excluded");
        }
        i = j;
    }
    return out;
}

inline std::vector<MetricsRow> compute_metrics_rows(const std::vector<PlayerGame>& corpus) {
    std::vector<MetricsRow> rows;
    rows.reserve(corpus.size() * 3);
    for (const PlayerGame& pg : corpus) {
        rows.push_back({pg.game_id, pg.player_id, "observed", pg.observed});
        rows.push_back({pg.game_id, pg.player_id, "censored", pg.censored});
        rows.push_back({pg.game_id, pg.player_id, "full", pg.full});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Model directory layout
// ---------------------------------------------------------------------------

inline std::string model_file_name(const FittedModel& m) {
    const std::string model = m.kind == ModelKind::baseline_lm
                                  ? kModelBase
                                  : booster_model_name(m.boost.spec.booster);
    return "model_" + m.target + "_" + to_string(m.level) + "_" + model + ".json";
}

inline void save_models(const std::string& dir, const TrainedModels& trained,
                        const SplitPlan& plan, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format_version"] = kModelFormatVersion;
    manifest["seed"] = seed;
    manifest["train_games"] = plan.train_games();
    manifest["test_games"] = plan.test_games();
    std::vector<std::string> files;
    for (const FittedModel& m : trained.models) {
        const std::string name = model_file_name(m);
        save_model((fs::path(dir) / name).string(), m);
        files.push_back(name);
    }
    manifest["files"] = files;
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& [key, message] : trained.fit_errors)
        errors.push_back({{"metric", key.metric},
                          {"model", key.model},
                          {"level", key.level},
                          {"error", message}});
    manifest["fit_errors"] = std::move(errors);
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) fail(ErrorCode::missing_file, "cannot write model manifest in " + dir);
    out << manifest.dump(2) << '\n';
}

inline TrainedModels load_models(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorCode::missing_file, "cannot open model manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::schema_mismatch, manifest_path.string() + ": invalid manifest: " + e.what());
    }
    TrainedModels trained;
    for (const auto& f : manifest.at("files").get<std::vector<std::string>>())
        trained.models.push_back(load_model((fs::path(dir) / f).string()));
    for (const auto& e : manifest.at("fit_errors"))
        trained.fit_errors[{e.at("metric").get<std::string>(), e.at("model").get<std::string>(),
                            e.at("level").get<std::string>()}] = e.at("error").get<std::string>();
    return trained;
}

// ---------------------------------------------------------------------------
// Full run: frames + events in, every artifact out
// ---------------------------------------------------------------------------

struct EvaluationArtifacts {
    EvalReport report;
    std::vector<std::string> warnings;
};

inline EvaluationArtifacts run_full_evaluation(std::vector<PlayerTrack> tracks,
                                               const std::vector<EventSequence>& events,
                                               const RunConfig& cfg, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const auto path = [&](const char* name) { return (fs::path(outdir) / name).string(); };

    auto censored = censor_corpus(std::move(tracks), events, cfg.window);
    write_censored_frames(path("censored_frames.csv"), censored);
    write_subtracks(path("subtracks.csv"), segment_corpus(censored), censored);

    EvaluationArtifacts artifacts;
    auto corpus =
        assemble_player_games(std::move(censored), cfg.smoothing_bandwidth, cfg.bands(),
                              &artifacts.warnings);
    write_metrics(path("metrics.csv"), compute_metrics_rows(corpus));

    const FeatureTable game_features = game_feature_table(corpus);
    const FeatureTable subtrack_features = subtrack_feature_table(corpus, cfg.bands());
    write_feature_table(path("game_features.csv"), game_features);
    write_feature_table(path("subtrack_features.csv"), subtrack_features);

    ExperimentResult result =
        run_experiment_full(game_features, subtrack_features, cfg.experiment());

    std::vector<std::string> games;
    for (const auto& ids : game_features.ids) games.push_back(ids[0]);
    const SplitPlan plan = make_split_plan(std::move(games), cfg.train_games, cfg.test_games);
    save_models((fs::path(outdir) / "models").string(), result.trained, plan, cfg.seed);

    write_predictions(path("predictions.csv"), result.predictions);
    result.report.warnings.insert(result.report.warnings.begin(), artifacts.warnings.begin(),
                                  artifacts.warnings.end());
    write_report_json(path("report.json"), result.report);
    write_results_table(path("subtrack_results.csv"), result.report, "subtrack");
    write_results_table(path("game_results.csv"), result.report, "game");
    write_residuals_csv(path("residuals.csv"), result.report);

    artifacts.report = std::move(result.report);
    return artifacts;
}

}  // namespace loadtrack
