#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "loadtrack/csv.hpp"
#include "loadtrack/metrics.hpp"
#include "loadtrack/types.hpp"

namespace loadtrack {

inline const std::vector<std::string> kFramesHeader = {"game_id", "player_id", "half",
                                                       "position", "t", "x", "y"};
inline const std::vector<std::string> kCensoredFramesHeader = {
    "game_id", "player_id", "half", "position", "t", "x", "y", "observed"};
inline const std::vector<std::string> kEventsHeader = {"game_id", "half", "t", "x", "y", "kind"};
inline const std::vector<std::string> kSubtracksHeader = {
    "subtrack_id", "game_id", "player_id", "half",   "observed", "start_frame", "n_frames",
    "start_t",     "end_t",   "elapsed",   "exit_x", "exit_y",   "entry_x",     "entry_y",
    "gap_distance"};

struct CensoredTrack {
    PlayerTrack track;
    VisibilityMask mask;  // empty when the file carried no visibility column
};

namespace detail {

struct FrameRow {
    std::string game_id, player_id;
    int half;
    PlayerPosition position;
    double t, x, y;
    std::uint8_t observed;
};

inline std::vector<CensoredTrack> group_frame_rows(std::vector<FrameRow>&& rows, bool with_mask,
                                                   const std::string& path) {
    std::stable_sort(rows.begin(), rows.end(), [](const FrameRow& a, const FrameRow& b) {
        return std::tie(a.game_id, a.player_id, a.half, a.t) <
               std::tie(b.game_id, b.player_id, b.half, b.t);
    });

    std::vector<CensoredTrack> tracks;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].game_id == rows[i].game_id &&
               rows[j].player_id == rows[i].player_id && rows[j].half == rows[i].half)
            ++j;

        CensoredTrack ct;
        ct.track.game_id = rows[i].game_id;
        ct.track.player_id = rows[i].player_id;
        ct.track.half = rows[i].half;
        ct.track.position = rows[i].position;
        ct.track.frames.reserve(j - i);
        if (with_mask) ct.mask.reserve(j - i);
        const std::string who = "player " + ct.track.player_id + " half " +
                                std::to_string(ct.track.half) + " in game " + ct.track.game_id;
        for (std::size_t k = i; k < j; ++k) {
            const FrameRow& r = rows[k];
            if (r.position != ct.track.position)
                fail(ErrorCode::data_error, path + ": inconsistent position label for " + who);
            if (k > i) {
                const double dt = r.t - rows[k - 1].t;
                if (std::abs(dt - kFrameDt) > 1e-6)
                    fail(ErrorCode::data_error,
                         path + ": non-uniform timestamps for " + who + ": t=" +
                             format_time(rows[k - 1].t) + " followed by t=" + format_time(r.t));
            }
            ct.track.frames.push_back({r.t, r.x, r.y});
            if (with_mask) ct.mask.push_back(r.observed);
        }
        tracks.push_back(std::move(ct));
        i = j;
    }
    return tracks;
}

inline FrameRow parse_frame_row(const std::vector<std::string>& row, bool with_mask,
                                const std::string& loc) {
    FrameRow r;
    r.game_id = row[0];
    r.player_id = row[1];
    r.half = static_cast<int>(parse_long(row[2], loc));
    if (r.half != 1 && r.half != 2) fail(ErrorCode::data_error, loc + ": half must be 1 or 2");
    r.position = parse_position(row[3]);
    r.t = parse_double(row[4], loc);
    r.x = parse_double(row[5], loc);
    r.y = parse_double(row[6], loc);
    if (r.t < 0.0) fail(ErrorCode::data_error, loc + ": negative timestamp");
    if (!std::isfinite(r.x) || !std::isfinite(r.y))
        fail(ErrorCode::data_error, loc + ": non-finite coordinates");
    if (with_mask) {
        const long o = parse_long(row[7], loc);
        if (o != 0 && o != 1) fail(ErrorCode::data_error, loc + ": observed must be 0 or 1");
        r.observed = static_cast<std::uint8_t>(o);
    } else {
        r.observed = 1;
    }
    return r;
}

}  // namespace detail

// One track per (game, player, half); rows may arrive unsorted, ingestion
// sorts before validating uniform 0.1 s spacing.
inline std::vector<PlayerTrack> read_frames(const std::string& path) {
    csv::Reader reader(path, kFramesHeader);
    std::vector<detail::FrameRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) rows.push_back(detail::parse_frame_row(row, false, reader.location()));
    auto grouped = detail::group_frame_rows(std::move(rows), false, path);
    std::vector<PlayerTrack> tracks;
    tracks.reserve(grouped.size());
    for (auto& g : grouped) tracks.push_back(std::move(g.track));
    return tracks;
}

inline std::vector<CensoredTrack> read_censored_frames(const std::string& path) {
    csv::Reader reader(path, kCensoredFramesHeader);
    std::vector<detail::FrameRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) rows.push_back(detail::parse_frame_row(row, true, reader.location()));
    return detail::group_frame_rows(std::move(rows), true, path);
}

inline void write_frames(const std::string& path, const std::vector<PlayerTrack>& tracks) {
    csv::Writer w(path, kFramesHeader);
    for (const PlayerTrack& tr : tracks)
        for (const Frame& f : tr.frames)
            w.write_row({tr.game_id, tr.player_id, std::to_string(tr.half),
                         to_string(tr.position), format_time(f.t), format_double(f.x),
                         format_double(f.y)});
}

inline void write_censored_frames(const std::string& path,
                                  const std::vector<CensoredTrack>& tracks) {
    csv::Writer w(path, kCensoredFramesHeader);
    for (const CensoredTrack& ct : tracks)
        for (std::size_t i = 0; i < ct.track.frames.size(); ++i) {
            const Frame& f = ct.track.frames[i];
            w.write_row({ct.track.game_id, ct.track.player_id, std::to_string(ct.track.half),
                         to_string(ct.track.position), format_time(f.t), format_double(f.x),
                         format_double(f.y), ct.mask[i] ? "1" : "0"});
        }
}

// Events grouped per (game, half), sorted by time.
inline std::vector<EventSequence> read_events(const std::string& path) {
    csv::Reader reader(path, kEventsHeader);
    std::map<std::pair<std::string, int>, std::vector<Event>> grouped;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::string loc = reader.location();
        const int half = static_cast<int>(parse_long(row[1], loc));
        if (half != 1 && half != 2) fail(ErrorCode::data_error, loc + ": half must be 1 or 2");
        Event e;
        e.t = parse_double(row[2], loc);
        e.x = parse_double(row[3], loc);
        e.y = parse_double(row[4], loc);
        e.kind = row[5];
        if (!std::isfinite(e.x) || !std::isfinite(e.y))
            fail(ErrorCode::data_error, loc + ": non-finite coordinates");
        grouped[{row[0], half}].push_back(e);
    }
    std::vector<EventSequence> out;
    out.reserve(grouped.size());
    for (auto& [key, events] : grouped) {
        std::stable_sort(events.begin(), events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        out.push_back({key.first, key.second, std::move(events)});
    }
    return out;
}

inline void write_events(const std::string& path, const std::vector<EventSequence>& sequences) {
    csv::Writer w(path, kEventsHeader);
    for (const EventSequence& seq : sequences)
        for (const Event& e : seq.events)
            w.write_row({seq.game_id, std::to_string(seq.half), format_time(e.t),
                         format_double(e.x), format_double(e.y), e.kind});
}

inline void write_subtracks_impl(const std::string& path, const std::vector<Subtrack>& subs,
                                 const std::map<std::tuple<std::string, std::string, int>,
                                                const PlayerTrack*>& by_key) {

    csv::Writer w(path, kSubtracksHeader);
    for (const Subtrack& s : subs) {
        auto it = by_key.find({s.game_id, s.player_id, s.half});
        if (it == by_key.end())
            fail(ErrorCode::data_error, "subtrack " + s.subtrack_id + " has no parent track");
        const PlayerTrack& tr = *it->second;
        const Frame& first = tr.frames[s.first_frame];
        const Frame& last = tr.frames[s.first_frame + s.frame_count - 1];
        auto opt = [](const std::optional<double>& v) {
            return v ? format_double(*v) : std::string();
        };
        w.write_row({s.subtrack_id, s.game_id, s.player_id, std::to_string(s.half),
                     s.observed ? "1" : "0", std::to_string(s.first_frame),
                     std::to_string(s.frame_count), format_time(first.t), format_time(last.t),
                     format_double(s.elapsed), opt(s.exit_point ? std::optional(s.exit_point->x)
                                                                : std::nullopt),
                     opt(s.exit_point ? std::optional(s.exit_point->y) : std::nullopt),
                     opt(s.entry_point ? std::optional(s.entry_point->x) : std::nullopt),
                     opt(s.entry_point ? std::optional(s.entry_point->y) : std::nullopt),
                     opt(s.gap_distance)});
    }
}

// tracks supply start/end timestamps; subtracks are emitted in input order
inline void write_subtracks(const std::string& path, const std::vector<Subtrack>& subs,
                            const std::vector<PlayerTrack>& tracks) {
    std::map<std::tuple<std::string, std::string, int>, const PlayerTrack*> by_key;
    for (const PlayerTrack& tr : tracks) by_key[{tr.game_id, tr.player_id, tr.half}] = &tr;
    write_subtracks_impl(path, subs, by_key);
}

inline void write_subtracks(const std::string& path, const std::vector<Subtrack>& subs,
                            const std::vector<CensoredTrack>& tracks) {
    std::map<std::tuple<std::string, std::string, int>, const PlayerTrack*> by_key;
    for (const CensoredTrack& ct : tracks)
        by_key[{ct.track.game_id, ct.track.player_id, ct.track.half}] = &ct.track;
    write_subtracks_impl(path, subs, by_key);
}

inline std::vector<Subtrack> read_subtracks(const std::string& path) {
    csv::Reader reader(path, kSubtracksHeader);
    std::vector<Subtrack> subs;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::string loc = reader.location();
        Subtrack s;
        s.subtrack_id = row[0];
        s.game_id = row[1];
        s.player_id = row[2];
        s.half = static_cast<int>(parse_long(row[3], loc));
        s.observed = parse_long(row[4], loc) != 0;
        s.first_frame = static_cast<std::size_t>(parse_long(row[5], loc));
        s.frame_count = static_cast<std::size_t>(parse_long(row[6], loc));
        s.elapsed = parse_double(row[9], loc);
        if (!row[10].empty() && !row[11].empty())
            s.exit_point = Point{parse_double(row[10], loc), parse_double(row[11], loc)};
        if (!row[12].empty() && !row[13].empty())
            s.entry_point = Point{parse_double(row[12], loc), parse_double(row[13], loc)};
        if (!row[14].empty()) s.gap_distance = parse_double(row[14], loc);
        subs.push_back(std::move(s));
    }
    return subs;
}

inline const std::vector<std::string> kMetricsHeader = {
    "game_id",          "player_id",        "scope",
    "elapsed",          "total_distance",   "high_speed_distance",
    "very_high_speed_distance", "time_v_band_0", "time_v_band_1",
    "time_v_band_2",    "peak_velocity_1s", "peak_velocity_3s",
    "peak_velocity_5s", "peak_velocity_10s", "total_acceleration",
    "acceleration_density", "time_a_band_0", "time_a_band_1",
    "time_a_band_2",    "accel_samples"};

struct MetricsRow {
    std::string game_id, player_id, scope;
    LoadMetrics metrics;
};

inline void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
    csv::Writer w(path, kMetricsHeader);
    auto opt = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    for (const MetricsRow& r : rows) {
        const LoadMetrics& m = r.metrics;
        w.write_row({r.game_id, r.player_id, r.scope, format_double(m.elapsed),
                     format_double(m.total_distance), format_double(m.high_speed_distance),
                     format_double(m.very_high_speed_distance), format_double(m.time_v_band[0]),
                     format_double(m.time_v_band[1]), format_double(m.time_v_band[2]),
                     opt(m.peak_velocity[0]), opt(m.peak_velocity[1]), opt(m.peak_velocity[2]),
                     opt(m.peak_velocity[3]), format_double(m.total_acceleration),
                     opt(m.acceleration_density), format_double(m.time_a_band[0]),
                     format_double(m.time_a_band[1]), format_double(m.time_a_band[2]),
                     std::to_string(m.accel_samples)});
    }
}

inline std::vector<MetricsRow> read_metrics(const std::string& path) {
    csv::Reader reader(path, kMetricsHeader);
    std::vector<MetricsRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::string loc = reader.location();
        MetricsRow r;
        r.game_id = row[0];
        r.player_id = row[1];
        r.scope = row[2];
        LoadMetrics& m = r.metrics;
        m.elapsed = parse_double(row[3], loc);
        m.total_distance = parse_double(row[4], loc);
        m.high_speed_distance = parse_double(row[5], loc);
        m.very_high_speed_distance = parse_double(row[6], loc);
        for (int b = 0; b < 3; ++b) m.time_v_band[b] = parse_double(row[7 + b], loc);
        for (int p = 0; p < 4; ++p)
            if (!row[10 + p].empty()) m.peak_velocity[p] = parse_double(row[10 + p], loc);
        m.total_acceleration = parse_double(row[14], loc);
        if (!row[15].empty()) m.acceleration_density = parse_double(row[15], loc);
        for (int b = 0; b < 3; ++b) m.time_a_band[b] = parse_double(row[16 + b], loc);
        m.accel_samples = static_cast<std::size_t>(parse_long(row[19], loc));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace loadtrack
