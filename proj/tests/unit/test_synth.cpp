#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "loadtrack/pipeline.hpp"
#include "loadtrack/synth.hpp"

using namespace loadtrack;

namespace {

SynthConfig tiny_config() {
    SynthConfig cfg;
    cfg.games = 2;
    cfg.players_per_side = 3;
    cfg.half_length_s = 60.0;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("zero-speed config produces stationary tracks") {
    SynthConfig cfg = tiny_config();
    cfg.mean_speed = 0.0;
    cfg.speed_noise = 0.0;
    cfg.sprint_rate_hz = 0.0;
    const auto corpus = generate_corpus(cfg);
    REQUIRE_FALSE(corpus.tracks.empty());
    for (const auto& t : corpus.tracks) {
        for (std::size_t i = 1; i < t.frames.size(); ++i) {
            REQUIRE(t.frames[i].x == t.frames[0].x);
            REQUIRE(t.frames[i].y == t.frames[0].y);
        }
    }
    // all-observed metrics are zero
    std::vector<CensoredTrack> cts;
    for (const auto& t : corpus.tracks) {
        VisibilityMask m(t.frames.size(), 1);
        cts.push_back({t, m});
    }
    const auto pgs = assemble_player_games(std::move(cts), 0.3, {});
    for (const auto& pg : pgs) {
        CHECK(pg.full.total_distance == 0.0);
        CHECK(pg.full.total_acceleration == 0.0);
    }
}

TEST_CASE("same seed gives byte-identical files") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "loadtrack_synth_det";
    fs::create_directories(dir);
    const SynthConfig cfg = tiny_config();
    for (int run = 0; run < 2; ++run) {
        const auto corpus = generate_corpus(cfg);
        write_corpus(corpus, (dir / ("f" + std::to_string(run) + ".csv")).string(),
                     (dir / ("e" + std::to_string(run) + ".csv")).string(),
                     (dir / ("p" + std::to_string(run) + ".csv")).string());
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(dir / "f0.csv") == slurp(dir / "f1.csv"));
    CHECK(slurp(dir / "e0.csv") == slurp(dir / "e1.csv"));
    CHECK(slurp(dir / "p0.csv") == slurp(dir / "p1.csv"));
    fs::remove_all(dir);
}

TEST_CASE("different seeds differ") {
    SynthConfig a = tiny_config(), b = tiny_config();
    b.seed = 6;
    const auto ca = generate_corpus(a);
    const auto cb = generate_corpus(b);
    bool any_diff = false;
    for (std::size_t i = 0; i < ca.tracks.size() && !any_diff; ++i)
        for (std::size_t f = 0; f < ca.tracks[i].frames.size(); ++f)
            if (ca.tracks[i].frames[f].x != cb.tracks[i].frames[f].x) {
                any_diff = true;
                break;
            }
    CHECK(any_diff);
}

TEST_CASE("generated speeds never exceed the cap") {
    SynthConfig cfg = tiny_config();
    cfg.camera_bias = 0.5;  // the bias multiplier must respect the cap too
    const auto corpus = generate_corpus(cfg);
    for (const auto& t : corpus.tracks) {
        for (std::size_t i = 0; i + 1 < t.frames.size(); ++i) {
            const double dx = t.frames[i + 1].x - t.frames[i].x;
            const double dy = t.frames[i + 1].y - t.frames[i].y;
            const double speed = std::sqrt(dx * dx + dy * dy) / 0.1;
            REQUIRE(speed <= cfg.speed_cap + 1e-9);
        }
    }
}

TEST_CASE("generated corpora satisfy the ingestion invariants") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "loadtrack_synth_ingest";
    fs::create_directories(dir);
    const auto corpus = generate_corpus(tiny_config());
    write_corpus(corpus, (dir / "frames.csv").string(), (dir / "events.csv").string(),
                 (dir / "positions.csv").string());

    const auto tracks = read_frames((dir / "frames.csv").string());  // validates spacing
    CHECK(tracks.size() == corpus.tracks.size());
    const auto events = read_events((dir / "events.csv").string());
    CHECK(events.size() == 4);  // 2 games x 2 halves
    for (const auto& seq : events) REQUIRE_FALSE(seq.events.empty());

    // positions stay inside the pitch
    const SynthConfig cfg = tiny_config();
    for (const auto& t : tracks)
        for (const auto& f : t.frames) {
            REQUIRE(std::abs(f.x) <= cfg.pitch_length / 2 + 1e-9);
            REQUIRE(std::abs(f.y) <= cfg.pitch_width / 2 + 1e-9);
        }
    fs::remove_all(dir);
}

TEST_CASE("median censored fraction decreases with window size") {
    SynthConfig cfg = tiny_config();
    cfg.games = 3;
    cfg.half_length_s = 120.0;
    const auto corpus = generate_corpus(cfg);

    auto median_fraction = [&](double window) {
        auto tracks = corpus.tracks;
        const auto censored = censor_corpus(std::move(tracks), corpus.events,
                                            CameraWindow{window, window});
        std::vector<double> fractions;
        for (const auto& ct : censored) {
            std::size_t c = 0;
            for (auto m : ct.mask)
                if (!m) ++c;
            fractions.push_back(static_cast<double>(c) / ct.mask.size());
        }
        std::sort(fractions.begin(), fractions.end());
        return fractions[fractions.size() / 2];
    };
    const double f20 = median_fraction(20.0);
    const double f40 = median_fraction(40.0);
    const double f60 = median_fraction(60.0);
    CHECK(f20 >= f40);
    CHECK(f40 >= f60);
    CHECK(f20 > f60);  // strictly somewhere
}

TEST_CASE("position classes are assigned and sortable") {
    const auto corpus = generate_corpus(tiny_config());
    std::map<PlayerPosition, int> count;
    for (const auto& [id, pos] : corpus.positions) ++count[pos];
    CHECK(count[PlayerPosition::defender] > 0);
    CHECK(count[PlayerPosition::midfielder] > 0);
    CHECK(count[PlayerPosition::forward] > 0);
    // tracks arrive sorted by (game, player, half)
    for (std::size_t i = 1; i < corpus.tracks.size(); ++i) {
        const auto& a = corpus.tracks[i - 1];
        const auto& b = corpus.tracks[i];
        REQUIRE(std::tie(a.game_id, a.player_id, a.half) <
                std::tie(b.game_id, b.player_id, b.half));
    }
}

TEST_CASE("invalid synth configs are rejected before generation") {
    SynthConfig cfg = tiny_config();
    cfg.games = 0;
    CHECK_THROWS_AS(generate_corpus(cfg), Error);
    cfg = tiny_config();
    cfg.event_rate_hz = 0.0;
    CHECK_THROWS_AS(generate_corpus(cfg), Error);
    cfg = tiny_config();
    cfg.camera_bias = -0.1;
    CHECK_THROWS_AS(generate_corpus(cfg), Error);
    cfg = tiny_config();
    cfg.sprint_speed_max = cfg.sprint_speed_min - 1.0;
    CHECK_THROWS_AS(generate_corpus(cfg), Error);
}
