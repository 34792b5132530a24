// Command-line pipeline around the loadtrack library: simulate a corpus,
// censor it with the broadcast-camera model, compute load metrics, build
// features, fit the predictor roster, and reproduce the evaluation tables.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loadtrack/config.hpp"
#include "loadtrack/evaluation.hpp"
#include "loadtrack/io.hpp"
#include "loadtrack/pipeline.hpp"
#include "loadtrack/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace loadtrack;

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;

    RunConfig load() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (seed_set) cfg.set_seed(seed);
        cfg.validate();
        return cfg;
    }
};

std::string join_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

int cmd_simulate(const GlobalOptions& global, const std::string& outdir) {
    const RunConfig cfg = global.load();
    fs::create_directories(outdir);
    const SynthCorpus corpus = generate_corpus(cfg.synth);
    write_corpus(corpus, join_path(outdir, "frames.csv"), join_path(outdir, "events.csv"),
                 join_path(outdir, "positions.csv"));
    std::size_t frames = 0;
    for (const auto& t : corpus.tracks) frames += t.frames.size();
    std::cout << "simulated " << cfg.synth.games << " games, " << corpus.tracks.size()
              << " tracks, " << frames << " frames\n";
    return 0;
}

int cmd_ingest(const std::string& frames_path, const std::string& events_path,
               const std::string& output) {
    const auto tracks = read_frames(frames_path);
    std::set<std::string> games;
    std::map<std::string, std::size_t> by_position;
    std::size_t frames = 0;
    for (const auto& t : tracks) {
        games.insert(t.game_id);
        frames += t.frames.size();
        ++by_position[to_string(t.position)];
    }
    std::cout << "frames file: " << tracks.size() << " tracks, " << frames << " frames, "
              << games.size() << " games\n";
    for (const auto& [pos, count] : by_position)
        std::cout << "  " << pos << " tracks: " << count << "\n";
    if (!events_path.empty()) {
        const auto events = read_events(events_path);
        std::size_t n = 0;
        for (const auto& seq : events) n += seq.events.size();
        std::cout << "events file: " << n << " events across " << events.size()
                  << " (game, half) groups\n";
    }
    if (!output.empty()) {
        write_frames(output, tracks);
        std::cout << "wrote normalized frames to " << output << "\n";
    }
    return 0;
}

int cmd_censor(const GlobalOptions& global, const std::string& frames_path,
               const std::string& events_path, const std::string& outdir) {
    const RunConfig cfg = global.load();
    fs::create_directories(outdir);
    auto tracks = read_frames(frames_path);
    const auto events = read_events(events_path);
    auto censored = censor_corpus(std::move(tracks), events, cfg.window);
    write_censored_frames(join_path(outdir, "censored_frames.csv"), censored);
    const auto subs = segment_corpus(censored);
    write_subtracks(join_path(outdir, "subtracks.csv"), subs, censored);
    std::size_t censored_subs = 0;
    for (const auto& s : subs)
        if (!s.observed) ++censored_subs;
    std::cout << "censored " << censored.size() << " tracks into " << subs.size()
              << " subtracks (" << censored_subs << " censored)\n";
    return 0;
}

int cmd_metrics(const GlobalOptions& global, const std::string& frames_path,
                const std::string& output) {
    const RunConfig cfg = global.load();
    auto censored = read_frames_any(frames_path);
    std::vector<std::string> warnings;
    const auto corpus = assemble_player_games(std::move(censored), cfg.smoothing_bandwidth,
                                              cfg.bands(), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    write_metrics(output, compute_metrics_rows(corpus));
    std::cout << "wrote metrics for " << corpus.size() << " player-games to " << output << "\n";
    return 0;
}

int cmd_features(const GlobalOptions& global, const std::string& frames_path,
                 const std::string& outdir) {
    const RunConfig cfg = global.load();
    fs::create_directories(outdir);
    auto censored = read_censored_frames(frames_path);
    std::vector<std::string> warnings;
    const auto corpus = assemble_player_games(std::move(censored), cfg.smoothing_bandwidth,
                                              cfg.bands(), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const auto game = game_feature_table(corpus);
    const auto sub = subtrack_feature_table(corpus, cfg.bands());
    write_feature_table(join_path(outdir, "game_features.csv"), game);
    write_feature_table(join_path(outdir, "subtrack_features.csv"), sub);
    std::cout << "wrote " << game.rows.size() << " game rows and " << sub.rows.size()
              << " censored-subtrack rows\n";
    return 0;
}

int cmd_fit(const GlobalOptions& global, const std::string& game_path,
            const std::string& subtrack_path, const std::string& outdir) {
    const RunConfig cfg = global.load();
    const auto game = read_feature_table(game_path, 3);
    const auto sub = read_feature_table(subtrack_path, 5);
    std::vector<std::string> games;
    for (const auto& ids : game.ids) games.push_back(ids[0]);
    const SplitPlan plan = make_split_plan(std::move(games), cfg.train_games, cfg.test_games);
    const TrainedModels trained = train_models(game, sub, plan, cfg.experiment());
    for (const auto& w : trained.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& [key, message] : trained.fit_errors)
        std::cerr << "fit error (" << key.metric << ", " << key.model << ", " << key.level
                  << "): " << message << "\n";
    save_models(outdir, trained, plan, cfg.seed);
    std::cout << "fitted " << trained.models.size() << " models on games";
    for (const auto& g : plan.train_games()) std::cout << " " << g;
    std::cout << "\n";
    return 0;
}

int cmd_predict(const GlobalOptions& global, const std::string& models_dir,
                const std::string& game_path, const std::string& subtrack_path,
                const std::string& output) {
    const RunConfig cfg = global.load();
    const TrainedModels trained = load_models(models_dir);
    const auto game = read_feature_table(game_path, 3);
    const auto sub = read_feature_table(subtrack_path, 5);
    const auto preds = build_predictions(trained, cfg.fit_scaling, game, sub);
    write_predictions(output, preds);
    std::cout << "wrote " << preds.size() << " prediction rows to " << output << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOptions& global, const std::string& frames_path,
                 const std::string& events_path, const std::string& outdir) {
    const RunConfig cfg = global.load();
    auto tracks = read_frames(frames_path);
    const auto events = read_events(events_path);
    const auto artifacts = run_full_evaluation(std::move(tracks), events, cfg, outdir);
    for (const auto& w : artifacts.report.warnings) std::cerr << "warning: " << w << "\n";
    std::size_t failed = 0;
    for (const auto& c : artifacts.report.cells)
        if (!c.error.empty()) ++failed;
    std::cout << "evaluated " << artifacts.report.cells.size() << " cells ("
              << failed << " failed) over test games";
    for (const auto& g : artifacts.report.test_games) std::cout << " " << g;
    std::cout << "; artifacts in " << outdir << "\n";
    return 0;
}

void print_table(const EvalReport& report, const std::string& level) {
    std::printf("RMSPE / CV by model, %s level\n", level.c_str());
    std::printf("%-45s %15s %15s %15s %15s\n", "metric", "base", "linear", "linear w/ int",
                "tree");
    for (MetricId id : all_target_metrics()) {
        const std::string metric = metric_name(id);
        std::printf("%-45s", metric_label(id));
        auto cell = [&](const char* model, const std::string& lv) {
            const EvalCell* c = report.find_cell(metric, model, lv);
            if (!c || !c->error.empty()) {
                std::printf(" %15s", "-");
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.1f / %.2f", c->rmspe, c->cv);
            std::printf(" %15s", buf);
        };
        cell(kModelBase, "game");
        cell("boost_linear", level);
        cell("boost_linear_interactions", level);
        cell("boost_tree", level);
        std::printf("\n");
    }
    std::printf("\n");
}

int cmd_report(const std::string& report_path) {
    const EvalReport report = read_report_json(report_path);
    std::printf("train games:");
    for (const auto& g : report.train_games) std::printf(" %s", g.c_str());
    std::printf("\ntest games:");
    for (const auto& g : report.test_games) std::printf(" %s", g.c_str());
    std::printf("\n\n");
    print_table(report, "subtrack");
    print_table(report, "game");

    std::printf("top-5 predictor tallies across the %d metrics\n", kTargetMetricCount);
    for (const auto& [key, tally] : report.importance_tally) {
        std::printf("  %s:", key.c_str());
        std::size_t shown = 0;
        for (const auto& fc : tally) {
            if (shown++ == 6) break;
            std::printf(" %s(%ld)", fc.feature.c_str(), fc.count);
        }
        std::printf("\n");
    }

    std::printf("\nper-position RMSPE, total distance\n");
    for (const auto& p : report.position_stats) {
        if (p.metric != "total_distance") continue;
        std::printf("  %-10s %-28s %-9s %8.1f (n=%ld)\n", p.position.c_str(), p.model.c_str(),
                    p.level.c_str(), p.rmspe, p.n);
    }
    if (!report.warnings.empty()) {
        std::printf("\nwarnings:\n");
        for (const auto& w : report.warnings) std::printf("  %s\n", w.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"broadcast-censored tracking: load metrics and censored-load prediction"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "run configuration file (JSON)");
    app.add_option("--seed", global.seed, "override the config seed")
        ->each([&](const std::string&) { global.seed_set = true; });

    std::string frames = "frames.csv";
    std::string events = "events.csv";
    std::string outdir = "out";
    std::string output;
    std::string game_features = "game_features.csv";
    std::string subtrack_features = "subtrack_features.csv";
    std::string models_dir = "models";
    std::string report_path = "report.json";

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic corpus");
    simulate->add_option("--output-dir", outdir, "directory for frames/events/positions files");

    auto* ingest = app.add_subcommand("ingest", "validate a frames file and print a summary");
    ingest->add_option("--frames", frames, "frames file")->required();
    ingest->add_option("--events", events, "events file (optional)")->default_val("");
    ingest->add_option("--output", output, "write normalized frames here");

    auto* censor_cmd = app.add_subcommand("censor", "apply the broadcast camera window");
    censor_cmd->add_option("--frames", frames, "frames file")->required();
    censor_cmd->add_option("--events", events, "events file")->required();
    censor_cmd->add_option("--output-dir", outdir, "directory for censored frames + subtracks");

    auto* metrics_cmd = app.add_subcommand("metrics", "compute the load metric suite");
    metrics_cmd->add_option("--frames", frames, "frames file (censored or plain)")->required();
    metrics_cmd->add_option("--output", output, "metrics output file")->default_val("metrics.csv");

    auto* features_cmd = app.add_subcommand("features", "build predictor tables");
    features_cmd->add_option("--frames", frames, "censored frames file")->required();
    features_cmd->add_option("--output-dir", outdir, "directory for feature tables");

    auto* fit_cmd = app.add_subcommand("fit", "train the model roster on the training split");
    fit_cmd->add_option("--game-features", game_features, "game feature table")->required();
    fit_cmd->add_option("--subtrack-features", subtrack_features, "subtrack feature table")
        ->required();
    fit_cmd->add_option("--output-dir", models_dir, "directory for model files");

    auto* predict_cmd = app.add_subcommand("predict", "apply saved models to feature tables");
    predict_cmd->add_option("--models", models_dir, "model directory")->required();
    predict_cmd->add_option("--game-features", game_features, "game feature table")->required();
    predict_cmd->add_option("--subtrack-features", subtrack_features, "subtrack feature table")
        ->required();
    predict_cmd->add_option("--output", output, "predictions output file")
        ->default_val("predictions.csv");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "run the full protocol end to end");
    evaluate_cmd->add_option("--frames", frames, "frames file")->required();
    evaluate_cmd->add_option("--events", events, "events file")->required();
    evaluate_cmd->add_option("--output-dir", outdir, "directory for all artifacts");

    auto* report_cmd = app.add_subcommand("report", "print result tables from a report file");
    report_cmd->add_option("--report", report_path, "report.json path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(global, outdir);
        if (ingest->parsed()) return cmd_ingest(frames, events, output);
        if (censor_cmd->parsed()) return cmd_censor(global, frames, events, outdir);
        if (metrics_cmd->parsed()) return cmd_metrics(global, frames, output);
        if (features_cmd->parsed()) return cmd_features(global, frames, outdir);
        if (fit_cmd->parsed()) return cmd_fit(global, game_features, subtrack_features, models_dir);
        if (predict_cmd->parsed())
            return cmd_predict(global, models_dir, game_features, subtrack_features, output);
        if (evaluate_cmd->parsed()) return cmd_evaluate(global, frames, events, outdir);
        if (report_cmd->parsed()) return cmd_report(report_path);
    } catch (const loadtrack::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
