#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "loadtrack/csv.hpp"
#include "loadtrack/io.hpp"
#include "loadtrack/types.hpp"

namespace loadtrack {

// Synthetic multi-game corpus: mean-reverting player motion around
// position-specific home regions, a wandering ball that sources the event
// stream, and an optional on-camera speed bias. The point is controllable
// ground truth: with camera_bias = 0 censoring is unrelated to movement
// (MCAR); with camera_bias > 0 players near the ball move faster, which is
// the pattern that breaks the scaling estimator.
struct SynthConfig {
    int games = 18;
    int players_per_side = 7;
    double pitch_length = 105.0;
    double pitch_width = 68.0;
    double half_length_s = 480.0;
    double event_rate_hz = 0.4;
    double camera_bias = 0.3;   // b: speed multiplier 1+b near the ball
    double bias_radius = 20.0;  // meters from the most recent event
    // beyond the radius the multiplier relaxes to 1 over this length scale,
    // so deeper off-camera excursions are genuinely slower than shallow ones
    double bias_decay = 30.0;
    double speed_cap = 9.5;     // hard physical cap, m/s
    double mean_speed = 2.2;
    double speed_reversion = 2.0;  // 1/s
    double speed_noise = 1.0;      // m/s per sqrt(s)
    double sprint_rate_hz = 0.04;
    double sprint_speed_min = 3.8;
    double sprint_speed_max = 8.0;
    double sprint_duration_min_s = 1.0;
    double sprint_duration_max_s = 3.0;
    double heading_noise = 2.0;  // rad per sqrt(s)
    double homing_gain = 1.5;    // 1/s pull toward the home region
    // slow work-rate phases: an OU multiplier on the speed targets whose
    // persistence is what makes boundary context informative about a gap
    double intensity_sd = 0.25;
    double intensity_timescale_s = 90.0;
    std::uint64_t seed = 1;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) fail(ErrorCode::invalid_config, std::string("synth config: ") + name +
                                                                " must be positive");
        };
        if (games < 1) fail(ErrorCode::invalid_config, "synth config: games must be >= 1");
        if (players_per_side < 1)
            fail(ErrorCode::invalid_config, "synth config: players_per_side must be >= 1");
        positive(pitch_length, "pitch_length");
        positive(pitch_width, "pitch_width");
        positive(half_length_s, "half_length_s");
        positive(event_rate_hz, "event_rate_hz");
        positive(bias_radius, "bias_radius");
        positive(speed_cap, "speed_cap");
        if (camera_bias < 0.0) fail(ErrorCode::invalid_config, "synth config: camera_bias must be >= 0");
        if (bias_decay < 0.0) fail(ErrorCode::invalid_config, "synth config: bias_decay must be >= 0");
        if (mean_speed < 0.0) fail(ErrorCode::invalid_config, "synth config: mean_speed must be >= 0");
        if (speed_noise < 0.0) fail(ErrorCode::invalid_config, "synth config: speed_noise must be >= 0");
        if (sprint_rate_hz < 0.0)
            fail(ErrorCode::invalid_config, "synth config: sprint_rate_hz must be >= 0");
        if (sprint_speed_max < sprint_speed_min || sprint_duration_max_s < sprint_duration_min_s)
            fail(ErrorCode::invalid_config, "synth config: sprint ranges are inverted");
        positive(speed_reversion, "speed_reversion");
        positive(homing_gain, "homing_gain");
        positive(intensity_timescale_s, "intensity_timescale_s");
        if (intensity_sd < 0.0)
            fail(ErrorCode::invalid_config, "synth config: intensity_sd must be >= 0");
        if (heading_noise < 0.0)
            fail(ErrorCode::invalid_config, "synth config: heading_noise must be >= 0");
    }
};

struct SynthCorpus {
    std::vector<PlayerTrack> tracks;       // sorted (game, player, half)
    std::vector<EventSequence> events;     // sorted (game, half)
    std::map<std::string, PlayerPosition> positions;
};

namespace synth_detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct Roster {
    std::string player_id;
    PlayerPosition position;
    Point home;
    std::uint64_t index;
};

inline std::vector<Roster> build_roster(const SynthConfig& cfg) {
    const int P = cfg.players_per_side;
    const int n_fwd = std::max(1, P / 5);
    const int n_def = std::max(1, (P - n_fwd + 1) / 2);
    const int n_mid = std::max(0, P - n_fwd - n_def);

    std::vector<Roster> roster;
    std::uint64_t index = 0;
    for (int side = 0; side < 2; ++side) {
        const double dir = side == 0 ? 1.0 : -1.0;  // side 0 attacks +x
        char prefix = side == 0 ? 'h' : 'a';
        int slot = 0;
        auto add_class = [&](PlayerPosition pos, int count, double x_frac) {
            for (int k = 0; k < count; ++k) {
                Roster r;
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%c%02d", prefix, ++slot);
                r.player_id = buf;
                r.position = pos;
                const double y_frac =
                    (static_cast<double>(k + 1) / (count + 1) - 0.5) * 0.85;
                r.home = {-dir * x_frac * cfg.pitch_length, y_frac * cfg.pitch_width};
                r.index = index++;
                roster.push_back(r);
            }
        };
        add_class(PlayerPosition::defender, n_def, 0.30);
        add_class(PlayerPosition::midfielder, n_mid, 0.05);
        add_class(PlayerPosition::forward, n_fwd, -0.20);
    }
    std::sort(roster.begin(), roster.end(),
              [](const Roster& a, const Roster& b) { return a.player_id < b.player_id; });
    return roster;
}

// Ball trajectory: per-axis OU around the pitch center, reflected at the
// touchlines. Sampled at 10 Hz purely to source event locations.
inline std::vector<Point> simulate_ball(const SynthConfig& cfg, std::mt19937_64& rng,
                                        std::size_t frames) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double dt = kFrameDt;
    const double kappa = 0.08;
    const double sigma_x = 8.8;
    const double sigma_y = 5.6;
    const double xmax = cfg.pitch_length / 2.0;
    const double ymax = cfg.pitch_width / 2.0;

    std::vector<Point> ball(frames);
    Point p{0.0, 0.0};
    for (std::size_t k = 0; k < frames; ++k) {
        ball[k] = p;
        p.x += -kappa * p.x * dt + sigma_x * std::sqrt(dt) * gauss(rng);
        p.y += -kappa * p.y * dt + sigma_y * std::sqrt(dt) * gauss(rng);
        if (p.x > xmax) p.x = 2.0 * xmax - p.x;
        if (p.x < -xmax) p.x = -2.0 * xmax - p.x;
        if (p.y > ymax) p.y = 2.0 * ymax - p.y;
        if (p.y < -ymax) p.y = -2.0 * ymax - p.y;
    }
    return ball;
}

inline const char* event_kind(std::size_t i) {
    static const char* kinds[] = {"pass", "touch", "carry", "tackle", "clearance", "shot"};
    return kinds[i % 6];
}

}  // namespace synth_detail

inline SynthCorpus generate_corpus(const SynthConfig& cfg) {
    cfg.validate();
    SynthCorpus corpus;
    const std::size_t frames = static_cast<std::size_t>(std::llround(cfg.half_length_s / kFrameDt));
    const auto roster = synth_detail::build_roster(cfg);
    for (const auto& r : roster) corpus.positions[r.player_id] = r.position;

    const double xmax = cfg.pitch_length / 2.0;
    const double ymax = cfg.pitch_width / 2.0;
    const double dt = kFrameDt;

    for (int g = 0; g < cfg.games; ++g) {
        char game_buf[16];
        std::snprintf(game_buf, sizeof(game_buf), "g%02d", g + 1);
        const std::string game_id = game_buf;

        for (int half = 1; half <= 2; ++half) {
            const std::uint64_t half_seed = synth_detail::mix_seed(
                synth_detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(g)),
                static_cast<std::uint64_t>(half));

            std::mt19937_64 ball_rng(half_seed);
            const auto ball = synth_detail::simulate_ball(cfg, ball_rng, frames);

            // Poisson event stream along the ball track; the half always
            // opens with an event so the camera is defined from t = 0.
            EventSequence seq;
            seq.game_id = game_id;
            seq.half = half;
            std::exponential_distribution<double> gap(cfg.event_rate_hz);
            double t = 0.0;
            std::size_t count = 0;
            while (t < cfg.half_length_s) {
                const std::size_t k =
                    std::min(frames - 1, static_cast<std::size_t>(std::llround(t / dt)));
                const double et = static_cast<double>(k) / 10.0;
                if (seq.events.empty() || seq.events.back().t < et)
                    seq.events.push_back(
                        {et, ball[k].x, ball[k].y, synth_detail::event_kind(count)});
                ++count;
                t += gap(ball_rng);
            }

            // per-frame location of the most recent event
            std::vector<Point> last_event(frames);
            {
                std::size_t e = 0;
                Point cur{seq.events.front().x, seq.events.front().y};
                for (std::size_t k = 0; k < frames; ++k) {
                    const double tk = static_cast<double>(k) / 10.0;
                    while (e < seq.events.size() && seq.events[e].t <= tk + 1e-9) {
                        cur = {seq.events[e].x, seq.events[e].y};
                        ++e;
                    }
                    last_event[k] = cur;
                }
            }
            corpus.events.push_back(std::move(seq));

            for (const auto& r : roster) {
                std::mt19937_64 rng(
                    synth_detail::mix_seed(half_seed, 1000 + r.index));
                std::normal_distribution<double> gauss(0.0, 1.0);
                std::uniform_real_distribution<double> uniform(0.0, 1.0);

                PlayerTrack track;
                track.game_id = game_id;
                track.player_id = r.player_id;
                track.half = half;
                track.position = r.position;
                track.frames.reserve(frames);

                Point p{r.home.x + 5.0 * gauss(rng), r.home.y + 5.0 * gauss(rng)};
                p.x = std::clamp(p.x, -xmax, xmax);
                p.y = std::clamp(p.y, -ymax, ymax);
                double speed = cfg.mean_speed;
                double heading = 2.0 * M_PI * uniform(rng);
                double intensity = 1.0;
                const double intensity_kappa = 1.0 / cfg.intensity_timescale_s;
                const double intensity_sigma =
                    cfg.intensity_sd * std::sqrt(2.0 * intensity_kappa);
                int sprint_left = 0;
                double sprint_target = 0.0;

                for (std::size_t k = 0; k < frames; ++k) {
                    track.frames.push_back({static_cast<double>(k) / 10.0, p.x, p.y});

                    // slow work-rate phase multiplier
                    intensity += intensity_kappa * (1.0 - intensity) * dt +
                                 intensity_sigma * std::sqrt(dt) * gauss(rng);
                    intensity = std::clamp(intensity, 0.3, 2.0);

                    // speed process: mean reversion toward the phase-scaled
                    // base speed or, during a sprint episode, the sprint target
                    if (sprint_left > 0) {
                        --sprint_left;
                    } else if (uniform(rng) < cfg.sprint_rate_hz * intensity * dt) {
                        sprint_target = cfg.sprint_speed_min +
                                        (cfg.sprint_speed_max - cfg.sprint_speed_min) * uniform(rng);
                        const double dur =
                            cfg.sprint_duration_min_s +
                            (cfg.sprint_duration_max_s - cfg.sprint_duration_min_s) * uniform(rng);
                        sprint_left = static_cast<int>(std::llround(dur / dt));
                    }
                    const bool sprinting = sprint_left > 0;
                    const double target =
                        sprinting ? sprint_target : cfg.mean_speed * intensity;
                    speed += cfg.speed_reversion * (target - speed) * dt +
                             cfg.speed_noise * std::sqrt(dt) * gauss(rng);
                    speed = std::clamp(speed, 0.0, cfg.speed_cap);

                    // heading: random drift, straighter while sprinting, plus
                    // an elastic pull toward the home region
                    const double noise = (sprinting ? 0.5 : 1.0) * cfg.heading_noise;
                    heading += noise * std::sqrt(dt) * gauss(rng);
                    const double dx = r.home.x - p.x;
                    const double dy = r.home.y - p.y;
                    const double dist_home = std::sqrt(dx * dx + dy * dy);
                    if (dist_home > 1e-9) {
                        const double desired = std::atan2(dy, dx);
                        double delta = std::remainder(desired - heading, 2.0 * M_PI);
                        heading += cfg.homing_gain * std::min(1.0, dist_home / 25.0) * delta * dt;
                    }

                    // the on-camera bias scales actual movement: the full
                    // (1+b) inside the radius, relaxing toward 1 beyond it
                    double v_eff = speed;
                    if (cfg.camera_bias > 0.0) {
                        const Point& e = last_event[k];
                        const double ex = p.x - e.x;
                        const double ey = p.y - e.y;
                        const double dist = std::sqrt(ex * ex + ey * ey);
                        double mult = 1.0 + cfg.camera_bias;
                        if (dist > cfg.bias_radius)
                            mult = 1.0 + (cfg.bias_decay > 0.0
                                              ? cfg.camera_bias *
                                                    std::exp(-(dist - cfg.bias_radius) /
                                                             cfg.bias_decay)
                                              : 0.0);
                        v_eff = std::min(speed * mult, cfg.speed_cap);
                    }

                    p.x += v_eff * dt * std::cos(heading);
                    p.y += v_eff * dt * std::sin(heading);
                    if (p.x > xmax) {
                        p.x = 2.0 * xmax - p.x;
                        heading = M_PI - heading;
                    } else if (p.x < -xmax) {
                        p.x = -2.0 * xmax - p.x;
                        heading = M_PI - heading;
                    }
                    if (p.y > ymax) {
                        p.y = 2.0 * ymax - p.y;
                        heading = -heading;
                    } else if (p.y < -ymax) {
                        p.y = -2.0 * ymax - p.y;
                        heading = -heading;
                    }
                }
                corpus.tracks.push_back(std::move(track));
            }
        }
    }

    std::sort(corpus.tracks.begin(), corpus.tracks.end(),
              [](const PlayerTrack& a, const PlayerTrack& b) {
                  return std::tie(a.game_id, a.player_id, a.half) <
                         std::tie(b.game_id, b.player_id, b.half);
              });
    return corpus;
}

inline void write_positions(const std::string& path,
                            const std::map<std::string, PlayerPosition>& positions) {
    csv::Writer w(path, {"player_id", "position"});
    for (const auto& [id, pos] : positions) w.write_row({id, to_string(pos)});
}

inline void write_corpus(const SynthCorpus& corpus, const std::string& frames_path,
                         const std::string& events_path, const std::string& positions_path) {
    write_frames(frames_path, corpus.tracks);
    write_events(events_path, corpus.events);
    write_positions(positions_path, corpus.positions);
}

}  // namespace loadtrack
