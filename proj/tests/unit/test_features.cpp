#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>

#include "loadtrack/features.hpp"
#include "loadtrack/pipeline.hpp"
#include "oracles.hpp"

using namespace loadtrack;

namespace {

PlayerTrack track_with_speeds(const std::vector<double>& speeds, const std::string& player = "p01",
                              const std::string& game = "g01") {
    PlayerTrack t;
    t.game_id = game;
    t.player_id = player;
    t.half = 1;
    double x = 0.0;
    t.frames.push_back({0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        x += speeds[i] * 0.1;
        t.frames.push_back({static_cast<double>(i + 1) / 10.0, x, 0.0});
    }
    return t;
}

std::vector<PlayerGame> corpus_from(PlayerTrack track, VisibilityMask mask) {
    std::vector<CensoredTrack> cts;
    cts.push_back({std::move(track), std::move(mask)});
    return assemble_player_games(std::move(cts), 0.3, {});
}

}  // namespace

TEST_CASE("constant boundary speeds") {
    // 4 m/s throughout; censor a middle stretch
    auto track = track_with_speeds(std::vector<double>(120, 4.0));
    VisibilityMask mask(track.frames.size(), 1);
    for (std::size_t i = 50; i < 70; ++i) mask[i] = 0;
    const auto corpus = corpus_from(std::move(track), std::move(mask));
    const auto table = subtrack_feature_table(corpus);
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK(row[table.column("pre_velocity")] == Catch::Approx(4.0));
    CHECK(row[table.column("post_velocity")] == Catch::Approx(4.0));
    CHECK(row[table.column("pre_imputed")] == 0.0);
    CHECK(row[table.column("post_imputed")] == 0.0);
    CHECK(row[table.column("offscreen_time")] == Catch::Approx(2.0));
    // constant motion along x: gap distance = speed * gap frames
    CHECK(row[table.column("offscreen_distance")] ==
          Catch::Approx(4.0 * 0.1 * 21.0).epsilon(1e-6));
}

TEST_CASE("censored subtrack at track start imputes the pre window") {
    auto track = track_with_speeds(std::vector<double>(100, 3.0));
    VisibilityMask mask(track.frames.size(), 1);
    for (std::size_t i = 0; i < 30; ++i) mask[i] = 0;
    const auto corpus = corpus_from(std::move(track), std::move(mask));
    const auto table = subtrack_feature_table(corpus);
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK(row[table.column("pre_imputed")] == 1.0);
    CHECK(row[table.column("post_imputed")] == 0.0);
    // imputed with the game-level observed average speed (3.0)
    CHECK(row[table.column("pre_velocity")] == Catch::Approx(3.0).epsilon(1e-9));
    CHECK(row[table.column("post_velocity")] == Catch::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("boundary window mean over twenty samples") {
    // speeds 3,4,...,22 immediately before the gap -> mean 12.5
    std::vector<double> speeds;
    for (int i = 0; i < 40; ++i) speeds.push_back(2.0);
    for (int v = 3; v <= 22; ++v) speeds.push_back(static_cast<double>(v));
    for (int i = 0; i < 30; ++i) speeds.push_back(2.0);  // censored span
    for (int i = 0; i < 30; ++i) speeds.push_back(2.0);
    auto track = track_with_speeds(speeds);
    VisibilityMask mask(track.frames.size(), 1);
    // frames 60..89 censored: the 20 frames before are 40..59 with speeds 3..22
    for (std::size_t i = 60; i < 90; ++i) mask[i] = 0;
    const auto corpus = corpus_from(std::move(track), std::move(mask));
    const auto table = subtrack_feature_table(corpus);
    REQUIRE(table.rows.size() == 1);
    double expected = 0.0;
    for (int v = 3; v <= 22; ++v) expected += v;
    expected /= 20.0;
    CHECK(table.rows[0][table.column("pre_velocity")] == Catch::Approx(expected).epsilon(1e-12));
    CHECK(expected == 12.5);
}

TEST_CASE("truncated boundary window uses only the observed run") {
    std::vector<double> speeds(100, 2.0);
    for (std::size_t i = 20; i < 25; ++i) speeds[i] = 5.0;  // the short observed run
    auto track = track_with_speeds(speeds);
    VisibilityMask mask(track.frames.size(), 1);
    for (std::size_t i = 10; i < 20; ++i) mask[i] = 0;
    for (std::size_t i = 25; i < 60; ++i) mask[i] = 0;  // pre window is frames 20..24 only
    const auto corpus = corpus_from(std::move(track), std::move(mask));
    const auto table = subtrack_feature_table(corpus);
    REQUIRE(table.rows.size() == 2);
    // a window reaching past the censored run would mix in 2.0 samples
    CHECK(table.rows[1][table.column("pre_velocity")] == Catch::Approx(5.0));
}

TEST_CASE("game features for a fully observed game") {
    auto track = track_with_speeds(std::vector<double>(100, 4.0));
    const std::size_t n = track.frames.size();
    const auto corpus = corpus_from(std::move(track), VisibilityMask(n, 1));
    const auto table = game_feature_table(corpus);
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK(row[table.column("censored_total_time")] == 0.0);
    CHECK(row[table.column("censored_fraction")] == 0.0);
    CHECK(row[table.column("observed_total_distance")] == Catch::Approx(40.0));
    CHECK(row[table.column("observed_average_velocity")] == Catch::Approx(4.0));
    CHECK(row[table.column("target_total_distance")] == 0.0);
}

TEST_CASE("uniform half censoring gives fraction one half") {
    auto track = track_with_speeds(std::vector<double>(199, 4.0));  // 200 frames
    VisibilityMask mask(track.frames.size(), 1);
    for (std::size_t i = 0; i < mask.size(); i += 2) mask[i] = 0;
    const auto corpus = corpus_from(std::move(track), std::move(mask));
    const auto table = game_feature_table(corpus);
    const auto& row = table.rows[0];
    CHECK(row[table.column("censored_fraction")] == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("observed block equals the metrics module on the observed mask") {
    std::mt19937_64 rng(41);
    PlayerTrack t;
    t.game_id = "g01";
    t.player_id = "p01";
    t.half = 1;
    t.frames = oracle::random_track(rng, 500);
    const auto mask = oracle::random_mask(rng, t.frames.size());
    const auto kin = derive_kinematics(t, 0.3);
    const auto expected = compute_load_metrics(kin, mask);

    const auto corpus = corpus_from(std::move(t), mask);
    const auto table = game_feature_table(corpus);
    const auto& row = table.rows[0];
    CHECK(row[table.column("observed_total_distance")] ==
          Catch::Approx(expected.total_distance).epsilon(1e-12));
    CHECK(row[table.column("observed_total_acceleration")] ==
          Catch::Approx(expected.total_acceleration).epsilon(1e-12));
    CHECK(row[table.column("observed_high_speed_distance")] ==
          Catch::Approx(expected.high_speed_distance).epsilon(1e-12));
    CHECK(row[table.column("observed_time_v_band_0")] ==
          Catch::Approx(expected.time_v_band[0]).epsilon(1e-12));
    CHECK(row[table.column("observed_time_a_band_2")] ==
          Catch::Approx(expected.time_a_band[2]).epsilon(1e-12));
    if (expected.acceleration_density)
        CHECK(row[table.column("observed_average_acceleration")] ==
              Catch::Approx(*expected.acceleration_density).epsilon(1e-12));
}

TEST_CASE("subtrack targets equal metrics over the subtrack frames") {
    std::mt19937_64 rng(43);
    PlayerTrack t;
    t.game_id = "g01";
    t.player_id = "p01";
    t.half = 1;
    t.frames = oracle::random_track(rng, 400);
    const auto mask = oracle::random_mask(rng, t.frames.size());
    const auto kin = derive_kinematics(t, 0.3);
    const auto subs = segment_subtracks(t, mask);

    const auto corpus = corpus_from(std::move(t), mask);
    const auto table = subtrack_feature_table(corpus);
    const std::size_t id_col = table.id_column("subtrack_id");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& sid = table.ids[r][id_col];
        const auto sub = std::find_if(subs.begin(), subs.end(),
                                      [&](const Subtrack& s) { return s.subtrack_id == sid; });
        REQUIRE(sub != subs.end());
        const auto sm = compute_load_metrics(kin, subtrack_mask(*sub, mask.size()));
        CHECK(table.rows[r][table.column("target_total_distance")] ==
              Catch::Approx(sm.total_distance).margin(1e-12));
        CHECK(table.rows[r][table.column("target_time_v_band_0")] ==
              Catch::Approx(sm.time_v_band[0]).margin(1e-12));
    }
}

TEST_CASE("scaler standardizes and round-trips") {
    Eigen::MatrixXd X(3, 2);
    X << 1.0, 5.0, 2.0, 5.0, 3.0, 5.0;
    const std::vector<std::string> names = {"a", "constant"};
    const std::vector<ColumnKind> kinds = {ColumnKind::numeric, ColumnKind::numeric};
    const auto stats = fit_scaler(X, names, kinds);
    CHECK(stats.dropped[1] == 1);
    REQUIRE(stats.warnings.size() == 1);

    const auto scaled = apply_scaler(stats, X);
    REQUIRE(scaled.cols() == 1);
    CHECK(scaled(0, 0) == Catch::Approx(-1.0));
    CHECK(scaled(1, 0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(scaled(2, 0) == Catch::Approx(1.0));

    const auto back = unscale(stats, scaled);
    for (int i = 0; i < 3; ++i) CHECK(back(i, 0) == Catch::Approx(X(i, 0)).margin(1e-9));
}

TEST_CASE("scaled training columns have mean zero and unit sd") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> gauss(3.0, 7.0);
    Eigen::MatrixXd X(200, 3);
    for (int r = 0; r < 200; ++r)
        for (int c = 0; c < 3; ++c) X(r, c) = gauss(rng) * (c + 1);
    const std::vector<std::string> names = {"a", "b", "c"};
    const std::vector<ColumnKind> kinds(3, ColumnKind::numeric);
    const auto stats = fit_scaler(X, names, kinds);
    const auto S = apply_scaler(stats, X);
    for (int c = 0; c < 3; ++c) {
        const double mean = S.col(c).mean();
        const double sd = std::sqrt((S.col(c).array() - mean).square().sum() / (S.rows() - 1.0));
        REQUIRE(mean == Catch::Approx(0.0).margin(1e-9));
        REQUIRE(sd == Catch::Approx(1.0).margin(1e-9));

        // two-pass oracle agreement
        double om = 0.0;
        for (int r = 0; r < X.rows(); ++r) om += X(r, c);
        om /= X.rows();
        double ov = 0.0;
        for (int r = 0; r < X.rows(); ++r) ov += (X(r, c) - om) * (X(r, c) - om);
        ov /= (X.rows() - 1.0);
        REQUIRE(stats.mean[c] == Catch::Approx(om).margin(1e-9));
        REQUIRE(stats.sd[c] == Catch::Approx(std::sqrt(ov)).margin(1e-9));
    }
    // standardizing an already standardized column is the identity
    const auto stats2 = fit_scaler(S, names, kinds);
    const auto S2 = apply_scaler(stats2, S);
    for (int r = 0; r < 20; ++r) REQUIRE(S2(r, 0) == Catch::Approx(S(r, 0)).margin(1e-9));
}

TEST_CASE("indicators pass through the scaler") {
    Eigen::MatrixXd X(4, 2);
    X << 0, 10, 1, 20, 0, 30, 1, 40;
    const auto stats = fit_scaler(X, {"ind", "num"},
                                  {ColumnKind::indicator, ColumnKind::numeric});
    const auto S = apply_scaler(stats, X);
    CHECK(S(0, 0) == 0.0);
    CHECK(S(1, 0) == 1.0);
}

TEST_CASE("interaction expansion") {
    Eigen::MatrixXd X(2, 4);
    X << 1.0, 2.0, 3.0, 1.0, 4.0, 5.0, 6.0, 0.0;
    std::vector<std::string> names = {"a", "b", "ind", "flag"};
    const std::vector<ColumnKind> kinds = {ColumnKind::numeric, ColumnKind::numeric,
                                           ColumnKind::indicator, ColumnKind::flag};
    expand_interactions(X, names, kinds);
    // a*b, a*ind, b*ind; no flag products
    REQUIRE(names.size() == 7);
    CHECK(names[4] == "a*b");
    CHECK(names[5] == "a*ind");
    CHECK(names[6] == "b*ind");
    CHECK(X(0, 4) == Catch::Approx(2.0));
    CHECK(X(1, 4) == Catch::Approx(20.0));
    CHECK(X(0, 5) == Catch::Approx(3.0));
    CHECK(X(1, 6) == Catch::Approx(30.0));
}

TEST_CASE("feature tables survive the file round trip") {
    std::mt19937_64 rng(53);
    PlayerTrack t;
    t.game_id = "g01";
    t.player_id = "p01";
    t.half = 1;
    t.frames = oracle::random_track(rng, 300);
    const auto mask = oracle::random_mask(rng, t.frames.size());
    const auto corpus = corpus_from(std::move(t), mask);
    const auto table = subtrack_feature_table(corpus);

    const auto path = std::filesystem::temp_directory_path() / "loadtrack_features_rt.csv";
    write_feature_table(path.string(), table);
    const auto back = read_feature_table(path.string(), table.id_columns.size());
    std::filesystem::remove(path);

    REQUIRE(back.value_columns == table.value_columns);
    REQUIRE(back.ids == table.ids);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
            if (std::isnan(table.rows[r][c]))
                REQUIRE(std::isnan(back.rows[r][c]));
            else
                REQUIRE(back.rows[r][c] == table.rows[r][c]);  // bit-exact
        }
}
