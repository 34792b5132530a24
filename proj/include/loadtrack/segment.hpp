#pragma once

#include <string>
#include <vector>

#include "loadtrack/types.hpp"

namespace loadtrack {

// Splits a track into maximal runs of equal visibility. Exit/entry points
// come from the nearest observed frame on either side of the run; the gap
// distance is only defined when both exist.
inline std::vector<Subtrack> segment_subtracks(const PlayerTrack& track,
                                               const VisibilityMask& mask) {
    if (mask.size() != track.frames.size())
        fail(ErrorCode::data_error, "visibility mask length does not match frame count");

    std::vector<Subtrack> subs;
    const std::size_t n = mask.size();
    if (n == 0) return subs;

    std::size_t start = 0;
    int index = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i == n || mask[i] != mask[start]) {
            Subtrack s;
            s.game_id = track.game_id;
            s.player_id = track.player_id;
            s.half = track.half;
            s.observed = mask[start] != 0;
            s.first_frame = start;
            s.frame_count = i - start;
            s.elapsed = static_cast<double>(s.frame_count) * kFrameDt;
            s.subtrack_id = track.game_id + ":" + track.player_id + ":h" +
                            std::to_string(track.half) + ":s" + std::to_string(index++);
            subs.push_back(std::move(s));
            start = i;
        }
    }

    // Boundary context: nearest observed frame strictly before / after.
    for (Subtrack& s : subs) {
        for (std::size_t j = s.first_frame; j-- > 0;) {
            if (mask[j]) {
                s.exit_point = Point{track.frames[j].x, track.frames[j].y};
                break;
            }
        }
        for (std::size_t j = s.first_frame + s.frame_count; j < n; ++j) {
            if (mask[j]) {
                s.entry_point = Point{track.frames[j].x, track.frames[j].y};
                break;
            }
        }
        if (s.exit_point && s.entry_point)
            s.gap_distance = distance(*s.exit_point, *s.entry_point);
    }
    return subs;
}

// Frame mask selecting exactly this subtrack's frames.
inline VisibilityMask subtrack_mask(const Subtrack& s, std::size_t track_frames) {
    VisibilityMask m(track_frames, 0);
    for (std::size_t i = 0; i < s.frame_count; ++i) m[s.first_frame + i] = 1;
    return m;
}

}  // namespace loadtrack
