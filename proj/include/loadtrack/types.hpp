#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loadtrack/error.hpp"

namespace loadtrack {

// Sampling interval of the tracking feed: 10 Hz.
inline constexpr double kFrameDt = 0.1;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

enum class PlayerPosition : std::uint8_t { defender, midfielder, forward };

inline const char* to_string(PlayerPosition p) {
    switch (p) {
        case PlayerPosition::defender: return "defender";
        case PlayerPosition::midfielder: return "midfielder";
        case PlayerPosition::forward: return "forward";
    }
    return "?";
}

inline PlayerPosition parse_position(const std::string& s) {
    if (s == "defender") return PlayerPosition::defender;
    if (s == "midfielder") return PlayerPosition::midfielder;
    if (s == "forward") return PlayerPosition::forward;
    fail(ErrorCode::data_error, "unknown position label: '" + s + "'");
}

struct Frame {
    double t = 0.0;  // seconds since half start, multiple of 0.1
    double x = 0.0;  // meters
    double y = 0.0;  // meters
};

// Uniformly sampled 10 Hz position sequence for one player-half.
struct PlayerTrack {
    std::string game_id;
    std::string player_id;
    int half = 1;  // 1 or 2
    PlayerPosition position = PlayerPosition::defender;
    std::vector<Frame> frames;
};

struct Event {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    std::string kind;
};

// Events of one (game, half), the raw material for the camera track.
struct EventSequence {
    std::string game_id;
    int half = 1;
    std::vector<Event> events;
};

struct CameraWindow {
    double width = 40.0;   // meters
    double height = 40.0;  // meters
};

// Per-frame visibility; aligned with PlayerTrack::frames.
using VisibilityMask = std::vector<std::uint8_t>;

// Maximal run of consecutively observed or consecutively censored frames.
// Frames are referenced as an index range into the parent track.
struct Subtrack {
    std::string subtrack_id;
    std::string game_id;
    std::string player_id;
    int half = 1;
    bool observed = false;
    std::size_t first_frame = 0;
    std::size_t frame_count = 0;
    std::optional<Point> exit_point;   // last observed position before the subtrack
    std::optional<Point> entry_point;  // first observed position after it
    double elapsed = 0.0;              // frame_count * 0.1 s
    std::optional<double> gap_distance;
};

}  // namespace loadtrack
