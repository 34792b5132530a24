#include <catch2/catch_amalgamated.hpp>
#include <functional>
#include <random>

#include "loadtrack/evaluation.hpp"

using namespace loadtrack;

TEST_CASE("rmspe") {
    CHECK(rmspe({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(rmspe({0.0, 0.0}, {3.0, 4.0}) == Catch::Approx(3.5355339059327378).epsilon(1e-12));
    // a constant offset shifts the error by its magnitude
    CHECK(rmspe({5.0, 7.0, 9.0}, {5.0 - 2.5, 7.0 - 2.5, 9.0 - 2.5}) == Catch::Approx(2.5));
    CHECK_THROWS_AS(rmspe({}, {}), Error);
    CHECK_THROWS_AS(rmspe({1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("cv") {
    CHECK(cv({2.0, 2.0}, {2.0, 2.0}) == 0.0);
    CHECK(cv({2.0, 2.0}, {3.0, 3.0}) == Catch::Approx(0.5));
    // the published headline numbers: RMSPE 288.2 m over a 3524 m mean
    const double v = 288.2 / 3524.0;
    CHECK(v == Catch::Approx(0.08).margin(0.005));
    CHECK_THROWS_AS(cv({1.0, -1.0}, {0.0, 0.0}), Error);
}

TEST_CASE("split plan") {
    const auto plan = make_split_plan({"g3", "g1", "g2", "g4", "g1"}, 3, 1);
    CHECK(plan.train_games() == std::vector<std::string>({"g1", "g2", "g3"}));
    CHECK(plan.test_games() == std::vector<std::string>({"g4"}));
    CHECK_THROWS_AS(make_split_plan({"g1", "g2"}, 13, 5), Error);
    CHECK_THROWS_AS(make_split_plan({"g1", "g2"}, 0, 2), Error);
}

namespace {

// Small synthetic feature tables with the real schemas. `game_target` maps
// (game index, player index, censored time, observed metric value) to the
// target so tests can plant exact structure.
struct TableBuilder {
    int n_games = 6;
    int n_players = 8;
    std::uint64_t seed = 1234;
    std::function<double(double T_c, double x_obs, std::mt19937_64&)> game_target;

    FeatureTable game_table;
    FeatureTable subtrack_table;

    void build() {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);

        const PredictorSchema gs = game_predictor_schema();
        game_table.id_columns = {"game_id", "player_id", "position"};
        game_table.value_columns = gs.names;
        game_table.value_columns.push_back("observed_total_time");
        game_table.value_columns.push_back("censored_accel_time");
        for (const auto& c : target_columns()) game_table.value_columns.push_back(c);

        const PredictorSchema ss = subtrack_predictor_schema();
        subtrack_table.id_columns = {"game_id", "player_id", "half", "subtrack_id", "position"};
        subtrack_table.value_columns = ss.names;
        subtrack_table.value_columns.push_back("accel_time");
        for (const auto& c : target_columns()) subtrack_table.value_columns.push_back(c);

        const char* positions[3] = {"defender", "midfielder", "forward"};
        for (int g = 0; g < n_games; ++g) {
            char game[8];
            std::snprintf(game, sizeof(game), "g%02d", g + 1);
            for (int p = 0; p < n_players; ++p) {
                char player[8];
                std::snprintf(player, sizeof(player), "p%02d", p + 1);
                const char* pos = positions[p % 3];
                const double T_c = 200.0 + 100.0 * uniform(rng);
                const double T_o = 600.0 + 100.0 * uniform(rng);
                const double x_obs = 1000.0 + 300.0 * gauss(rng);

                std::vector<double> row;
                row.push_back(pos == std::string("midfielder") ? 1.0 : 0.0);
                row.push_back(pos == std::string("forward") ? 1.0 : 0.0);
                row.push_back(T_c);
                row.push_back(x_obs);
                // observed block: average accel, total accel, avg velocity,
                // hsd, vhsd, 3 velocity bands, 3 accel bands
                row.push_back(1.0 + 0.1 * gauss(rng));
                row.push_back(800.0 + 50.0 * gauss(rng));
                row.push_back(x_obs / T_o);
                row.push_back(120.0 + 20.0 * gauss(rng));
                row.push_back(30.0 + 10.0 * gauss(rng));
                row.push_back(0.8 * T_o);
                row.push_back(0.15 * T_o);
                row.push_back(0.05 * T_o);
                row.push_back(0.2 * T_o);
                row.push_back(0.05 * T_o);
                row.push_back(0.02 * T_o);
                row.push_back(T_c / (T_c + T_o));
                row.push_back(T_o);
                row.push_back(0.9 * T_c);
                const double target = game_target(T_c, x_obs, rng);
                for (int m = 0; m < kTargetMetricCount; ++m)
                    row.push_back(m == 0 ? target : 10.0 + gauss(rng));

                game_table.ids.push_back({game, player, pos});
                game_table.rows.push_back(std::move(row));

                // two censored subtracks per player-game splitting the target
                for (int s = 0; s < 2; ++s) {
                    std::vector<double> srow;
                    srow.push_back(pos == std::string("midfielder") ? 1.0 : 0.0);
                    srow.push_back(pos == std::string("forward") ? 1.0 : 0.0);
                    srow.push_back(T_c / 2.0);                      // offscreen_time
                    srow.push_back(20.0 + 5.0 * gauss(rng));        // offscreen_distance
                    srow.push_back(1.5 + 0.2 * gauss(rng));         // pre_velocity
                    srow.push_back(1.5 + 0.2 * gauss(rng));         // post_velocity
                    srow.push_back(1.0 + 0.1 * gauss(rng));         // pre_abs_accel
                    srow.push_back(1.0 + 0.1 * gauss(rng));         // post_abs_accel
                    srow.push_back(0.0);
                    srow.push_back(0.0);
                    for (int c = 0; c < 11; ++c) srow.push_back(1.0 + 0.1 * gauss(rng));
                    srow.push_back(0.45 * T_c);  // accel_time weight
                    for (int m = 0; m < kTargetMetricCount; ++m)
                        srow.push_back(m == 0 ? target / 2.0 : 5.0 + gauss(rng));
                    subtrack_table.ids.push_back({game, player, "1",
                                                  std::string(game) + ":" + player + ":s" +
                                                      std::to_string(s),
                                                  pos});
                    subtrack_table.rows.push_back(std::move(srow));
                }
            }
        }
    }
};

ExperimentConfig small_experiment(std::uint64_t seed = 9) {
    ExperimentConfig cfg;
    cfg.train_games = 4;
    cfg.test_games = 2;
    cfg.seed = seed;
    BoostSpec lin;
    lin.booster = BoosterKind::linear;
    lin.rounds = 120;
    BoostSpec li = lin;
    li.booster = BoosterKind::linear_interactions;
    li.l2 = 10.0;
    BoostSpec tree = lin;
    tree.booster = BoosterKind::tree;
    tree.max_depth = 3;
    tree.min_samples_leaf = 5;
    cfg.boosters = {lin, li, tree};
    return cfg;
}

}  // namespace

TEST_CASE("experiment report shape and cell identities") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64&) { return 2.0 + 0.5 * T + 0.1 * x; };
    b.build();
    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());

    CHECK(report.cells.size() == 11u * 8u);  // 11 metrics x (base, scaling, 3 boosters x 2 levels)
    for (MetricId id : all_target_metrics()) {
        int count = 0;
        for (const auto& c : report.cells)
            if (c.metric == metric_name(id)) ++count;
        CHECK(count == 8);
    }
    // base and scaling are game-level only
    for (const auto& c : report.cells)
        if (c.model == kModelBase || c.model == kModelScaling) CHECK(c.level == "game");

    // every valid cell satisfies cv * mean = rmspe
    int checked = 0;
    for (const auto& c : report.cells) {
        if (!c.error.empty()) continue;
        REQUIRE(std::abs(c.cv * c.mean_y - c.rmspe) <= 1e-12 * std::max(1.0, std::abs(c.rmspe)));
        ++checked;
    }
    CHECK(checked > 0);
    CHECK(report.train_games.size() == 4);
    CHECK(report.test_games.size() == 2);
}

TEST_CASE("a corpus generated by the base model is fit exactly") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64&) { return 2.0 + 3.0 * T + 0.5 * x; };
    b.build();
    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    const EvalCell* cell = report.find_cell("total_distance", kModelBase, "game");
    REQUIRE(cell);
    REQUIRE(cell->error.empty());
    CHECK(cell->rmspe < 1e-6);
    CHECK(cell->n == 2 * 8);
}

TEST_CASE("noisy base-model corpus recovers the noise floor") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64& rng) {
        std::normal_distribution<double> g(0.0, 25.0);
        return 2.0 + 3.0 * T + 0.5 * x + g(rng);
    };
    b.n_games = 12;
    b.n_players = 10;
    b.build();
    ExperimentConfig cfg = small_experiment();
    cfg.train_games = 9;
    cfg.test_games = 3;
    const auto report = run_experiment(b.game_table, b.subtrack_table, cfg);
    const EvalCell* cell = report.find_cell("total_distance", kModelBase, "game");
    REQUIRE(cell);
    CHECK(cell->rmspe == Catch::Approx(25.0).margin(12.0));
}

TEST_CASE("informative subtracks beat the base model") {
    // the subtrack target is a clean function of subtrack features while the
    // game-level observed metric is pure noise
    TableBuilder b;
    std::mt19937_64 noise(55);
    b.game_target = [&](double T, double, std::mt19937_64&) { return 5.0 * T; };
    b.build();
    // overwrite: make subtrack targets exactly 5 * offscreen_time
    const std::size_t tcol = b.subtrack_table.column("target_total_distance");
    const std::size_t ocol = b.subtrack_table.column("offscreen_time");
    for (auto& row : b.subtrack_table.rows) row[tcol] = 5.0 * row[ocol];
    // and scramble the game-level observed metric so the base model suffers
    const std::size_t xcol = b.game_table.column("observed_total_distance");
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& row : b.game_table.rows) row[xcol] = g(noise);

    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    const EvalCell* base = report.find_cell("total_distance", kModelBase, "game");
    const EvalCell* sub =
        report.find_cell("total_distance", booster_model_name(BoosterKind::linear), "subtrack");
    REQUIRE(base);
    REQUIRE(sub);
    REQUIRE(sub->error.empty());
    CHECK(sub->rmspe < 1e-6);          // the structure is exactly recoverable
    CHECK(sub->rmspe < 0.5 * base->rmspe);
}

TEST_CASE("perfect scaling corpus has zero scaling residuals") {
    TableBuilder b;
    b.game_target = [](double, double, std::mt19937_64&) { return 0.0; };
    b.build();
    // target = x_obs * T_c / T_o exactly
    const std::size_t tcol = b.game_table.column("target_total_distance");
    const std::size_t xcol = b.game_table.column("observed_total_distance");
    const std::size_t Tc = b.game_table.column("censored_total_time");
    const std::size_t To = b.game_table.column("observed_total_time");
    for (auto& row : b.game_table.rows) row[tcol] = row[xcol] * row[Tc] / row[To];

    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    const auto records = residuals_by_censoring(report, "total_distance", kModelScaling, "game");
    REQUIRE_FALSE(records.empty());
    for (const auto& r : records) CHECK(r.residual() == Catch::Approx(0.0).margin(1e-9));
    CHECK_THROWS_AS(residuals_by_censoring(report, "nope", kModelScaling, "game"), Error);
}

TEST_CASE("training artifacts ignore test-set targets") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64& rng) {
        std::normal_distribution<double> g(0.0, 10.0);
        return 2.0 + 3.0 * T + 0.5 * x + g(rng);
    };
    b.build();
    const ExperimentConfig cfg = small_experiment();

    std::vector<std::string> games;
    for (const auto& ids : b.game_table.ids) games.push_back(ids[0]);
    const auto plan = make_split_plan(games, cfg.train_games, cfg.test_games);
    const auto trained_a = train_models(b.game_table, b.subtrack_table, plan, cfg);

    // permute every test-game target; training must not notice
    FeatureTable permuted = b.game_table;
    const std::set<std::string> test(plan.test_games().begin(), plan.test_games().end());
    std::mt19937_64 rng(77);
    for (std::size_t r = 0; r < permuted.rows.size(); ++r) {
        if (!test.count(permuted.ids[r][0])) continue;
        for (const auto& c : target_columns()) {
            std::normal_distribution<double> g(0.0, 1000.0);
            permuted.rows[r][permuted.column(c)] = g(rng);
        }
    }
    FeatureTable permuted_sub = b.subtrack_table;
    for (std::size_t r = 0; r < permuted_sub.rows.size(); ++r) {
        if (!test.count(permuted_sub.ids[r][0])) continue;
        for (const auto& c : target_columns()) {
            std::normal_distribution<double> g(0.0, 1000.0);
            permuted_sub.rows[r][permuted_sub.column(c)] = g(rng);
        }
    }
    const auto trained_b = train_models(permuted, permuted_sub, plan, cfg);

    REQUIRE(trained_a.models.size() == trained_b.models.size());
    for (std::size_t i = 0; i < trained_a.models.size(); ++i) {
        const auto ja = model_to_json(trained_a.models[i]).dump();
        const auto jb = model_to_json(trained_b.models[i]).dump();
        REQUIRE(ja == jb);
    }
}

TEST_CASE("identical corpus and seed give byte-identical reports") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64& rng) {
        std::normal_distribution<double> g(0.0, 5.0);
        return T + 0.2 * x + g(rng);
    };
    b.build();
    const auto r1 = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    const auto r2 = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    CHECK(report_to_json(r1).dump() == report_to_json(r2).dump());
}

TEST_CASE("report JSON round trip preserves cells and residuals") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64&) { return T + x; };
    b.build();
    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());

    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "loadtrack_report_rt.json";
    write_report_json(path.string(), report);
    const auto back = read_report_json(path.string());
    fs::remove(path);
    CHECK(report_to_json(back).dump() == report_to_json(report).dump());
}

TEST_CASE("fit failures are reported per cell and the run continues") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64&) { return T + x; };
    b.build();
    // make the baseline design rank-deficient: observed metric constant
    const std::size_t xcol = b.game_table.column("observed_total_distance");
    const std::size_t avcol = b.game_table.column("observed_average_velocity");
    for (auto& row : b.game_table.rows) {
        row[xcol] = 7.0;
        row[avcol] = 7.0;
    }
    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    const EvalCell* base = report.find_cell("total_distance", kModelBase, "game");
    REQUIRE(base);
    CHECK_FALSE(base->error.empty());
    // other models still produced results
    const EvalCell* lin =
        report.find_cell("total_distance", booster_model_name(BoosterKind::linear), "game");
    REQUIRE(lin);
    CHECK(lin->error.empty());
}

TEST_CASE("top feature lists and tallies are populated") {
    TableBuilder b;
    b.game_target = [](double T, double x, std::mt19937_64&) { return 3.0 * T + 0.1 * x; };
    b.build();
    const auto report = run_experiment(b.game_table, b.subtrack_table, small_experiment());
    const auto key = std::string("total_distance|boost_linear|game");
    REQUIRE(report.top_features.count(key));
    CHECK(report.top_features.at(key).size() == 5);
    REQUIRE(report.importance_tally.count("boost_linear|game"));
    // censored time dominates the planted structure
    const auto& top = report.top_features.at(key);
    CHECK(std::find(top.begin(), top.end(), "censored_total_time") != top.end());
}
