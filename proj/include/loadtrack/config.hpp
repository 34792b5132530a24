#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "loadtrack/boosting.hpp"
#include "loadtrack/error.hpp"
#include "loadtrack/evaluation.hpp"
#include "loadtrack/metrics.hpp"
#include "loadtrack/synth.hpp"
#include "loadtrack/types.hpp"

namespace loadtrack {

// Defaults reproduce the working constants: 40x40 m camera window, the
// standard velocity/acceleration band edges, 0.3 s smoothing bandwidth and
// the 13/5 season split.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string coordinate_system = "pitch-centered-meters";
    CameraWindow window;
    double smoothing_bandwidth = 0.3;
    double velocity_edges[2] = {3.5, 5.7};
    double accel_edges[3] = {0.65, 1.46, 2.77};
    int train_games = 13;
    int test_games = 5;
    bool fit_baseline = true;
    bool fit_scaling = true;
    BoostSpec linear_spec;
    BoostSpec interactions_spec;
    BoostSpec tree_spec;
    SynthConfig synth;

    RunConfig() {
        linear_spec.booster = BoosterKind::linear;
        interactions_spec.booster = BoosterKind::linear_interactions;
        interactions_spec.l2 = 10.0;  // the expanded design needs a stronger penalty
        tree_spec.booster = BoosterKind::tree;
    }

    BandConfig bands() const {
        return BandConfig::from_edges(velocity_edges[0], velocity_edges[1], accel_edges[0],
                                      accel_edges[1], accel_edges[2]);
    }

    ExperimentConfig experiment() const {
        ExperimentConfig e;
        e.train_games = train_games;
        e.test_games = test_games;
        e.fit_baseline = fit_baseline;
        e.fit_scaling = fit_scaling;
        e.boosters = {linear_spec, interactions_spec, tree_spec};
        e.seed = seed;
        return e;
    }

    // Every random choice in a run flows from this one seed.
    void set_seed(std::uint64_t s) {
        seed = s;
        synth.seed = s;
        linear_spec.seed = s;
        interactions_spec.seed = s;
        tree_spec.seed = s;
    }

    void validate() const {
        if (!(window.width > 0.0) || !(window.height > 0.0))
            fail(ErrorCode::invalid_config, "config: camera window dimensions must be positive");
        if (!(smoothing_bandwidth > 0.0))
            fail(ErrorCode::invalid_config, "config: smoothing bandwidth must be positive");
        if (!(0.0 < velocity_edges[0] && velocity_edges[0] < velocity_edges[1]))
            fail(ErrorCode::invalid_config, "config: velocity band edges must be increasing");
        if (!(0.0 < accel_edges[0] && accel_edges[0] < accel_edges[1] &&
              accel_edges[1] < accel_edges[2]))
            fail(ErrorCode::invalid_config, "config: acceleration band edges must be increasing");
        if (train_games < 1 || test_games < 1)
            fail(ErrorCode::invalid_config, "config: split counts must be >= 1");
        linear_spec.validate();
        interactions_spec.validate();
        tree_spec.validate();
        synth.validate();
    }
};

namespace detail {

inline void parse_boost_spec(const nlohmann::json& j, BoostSpec& spec,
                             const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (key == "rounds")
            spec.rounds = value.get<int>();
        else if (key == "learning_rate")
            spec.learning_rate = value.get<double>();
        else if (key == "l2")
            spec.l2 = value.get<double>();
        else if (key == "max_depth")
            spec.max_depth = value.get<int>();
        else if (key == "min_samples_leaf")
            spec.min_samples_leaf = value.get<int>();
        else
            fail(ErrorCode::invalid_config, "config: unknown key '" + key + "' in " + where);
    }
}

inline void parse_synth(const nlohmann::json& j, SynthConfig& s) {
    for (const auto& [key, value] : j.items()) {
        if (key == "games") s.games = value.get<int>();
        else if (key == "players_per_side") s.players_per_side = value.get<int>();
        else if (key == "pitch_length") s.pitch_length = value.get<double>();
        else if (key == "pitch_width") s.pitch_width = value.get<double>();
        else if (key == "half_length_s") s.half_length_s = value.get<double>();
        else if (key == "event_rate_hz") s.event_rate_hz = value.get<double>();
        else if (key == "camera_bias") s.camera_bias = value.get<double>();
        else if (key == "bias_radius") s.bias_radius = value.get<double>();
        else if (key == "bias_decay") s.bias_decay = value.get<double>();
        else if (key == "speed_cap") s.speed_cap = value.get<double>();
        else if (key == "mean_speed") s.mean_speed = value.get<double>();
        else if (key == "speed_reversion") s.speed_reversion = value.get<double>();
        else if (key == "speed_noise") s.speed_noise = value.get<double>();
        else if (key == "sprint_rate_hz") s.sprint_rate_hz = value.get<double>();
        else if (key == "sprint_speed_min") s.sprint_speed_min = value.get<double>();
        else if (key == "sprint_speed_max") s.sprint_speed_max = value.get<double>();
        else if (key == "sprint_duration_min_s") s.sprint_duration_min_s = value.get<double>();
        else if (key == "sprint_duration_max_s") s.sprint_duration_max_s = value.get<double>();
        else if (key == "heading_noise") s.heading_noise = value.get<double>();
        else if (key == "homing_gain") s.homing_gain = value.get<double>();
        else if (key == "intensity_sd") s.intensity_sd = value.get<double>();
        else if (key == "intensity_timescale_s") s.intensity_timescale_s = value.get<double>();
        else fail(ErrorCode::invalid_config, "config: unknown key '" + key + "' in synth section");
    }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") {
                c.set_seed(value.get<std::uint64_t>());
            } else if (key == "coordinate_system") {
                c.coordinate_system = value.get<std::string>();
            } else if (key == "camera") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "window_width") c.window.width = v2.get<double>();
                    else if (k2 == "window_height") c.window.height = v2.get<double>();
                    else fail(ErrorCode::invalid_config, "config: unknown key '" + k2 + "' in camera");
                }
            } else if (key == "smoothing") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "bandwidth") c.smoothing_bandwidth = v2.get<double>();
                    else fail(ErrorCode::invalid_config, "config: unknown key '" + k2 + "' in smoothing");
                }
            } else if (key == "bands") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "velocity") {
                        auto edges = v2.get<std::vector<double>>();
                        if (edges.size() != 2)
                            fail(ErrorCode::invalid_config, "config: velocity bands need 2 edges");
                        c.velocity_edges[0] = edges[0];
                        c.velocity_edges[1] = edges[1];
                    } else if (k2 == "acceleration") {
                        auto edges = v2.get<std::vector<double>>();
                        if (edges.size() != 3)
                            fail(ErrorCode::invalid_config, "config: acceleration bands need 3 edges");
                        for (int i = 0; i < 3; ++i) c.accel_edges[i] = edges[i];
                    } else {
                        fail(ErrorCode::invalid_config, "config: unknown key '" + k2 + "' in bands");
                    }
                }
            } else if (key == "split") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "train_games") c.train_games = v2.get<int>();
                    else if (k2 == "test_games") c.test_games = v2.get<int>();
                    else fail(ErrorCode::invalid_config, "config: unknown key '" + k2 + "' in split");
                }
            } else if (key == "models") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "baseline") c.fit_baseline = v2.get<bool>();
                    else if (k2 == "scaling") c.fit_scaling = v2.get<bool>();
                    else if (k2 == "boosters") {
                        for (const auto& [k3, v3] : v2.items()) {
                            if (k3 == "linear")
                                detail::parse_boost_spec(v3, c.linear_spec, "boosters.linear");
                            else if (k3 == "linear_interactions")
                                detail::parse_boost_spec(v3, c.interactions_spec,
                                                         "boosters.linear_interactions");
                            else if (k3 == "tree")
                                detail::parse_boost_spec(v3, c.tree_spec, "boosters.tree");
                            else
                                fail(ErrorCode::invalid_config,
                                     "config: unknown booster '" + k3 + "'");
                        }
                    } else {
                        fail(ErrorCode::invalid_config, "config: unknown key '" + k2 + "' in models");
                    }
                }
            } else if (key == "synth") {
                detail::parse_synth(value, c.synth);
            } else {
                fail(ErrorCode::invalid_config, "config: unknown top-level key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_config, std::string("config: ") + e.what());
    }
    // keep derived seeds consistent when the file set seed before other keys
    c.set_seed(c.seed);
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::missing_file, "cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_config, path + ": invalid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace loadtrack
