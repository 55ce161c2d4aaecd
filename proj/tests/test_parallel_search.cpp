#include <catch2/catch_amalgamated.hpp>

#include <terncse/io.hpp>
#include <terncse/parallel_search.hpp>

#include <climits>

#include "test_util.hpp"

using namespace terncse;

TEST_CASE("the first process of the first iteration is always pure greedy") {
    SearchConfig cfg;
    cfg.master_seed = 9;
    for (std::uint64_t salt : {0, 1, 2}) {
        const auto slots = assign_strategies(cfg, 1, 16, salt);
        CHECK(slots[0].strategy == StrategyKind::greedy);
    }
    // later iterations draw slot 0 like everyone else
    cfg.strategy_weights = {};
    cfg.strategy_weights[std::size_t(StrategyKind::greedy_intersections)] = 1.0;
    const auto later = assign_strategies(cfg, 2, 4, 0);
    CHECK(later[0].strategy == StrategyKind::greedy_intersections);
}

TEST_CASE("degenerate weights force a single strategy") {
    SearchConfig cfg;
    cfg.strategy_weights = {};
    cfg.strategy_weights[std::size_t(StrategyKind::greedy)] = 1.0;
    for (const auto& slot : assign_strategies(cfg, 3, 64, 0))
        CHECK(slot.strategy == StrategyKind::greedy);
}

TEST_CASE("strategy draws follow the configured weights") {
    SearchConfig cfg;
    cfg.master_seed = 31;
    std::array<int, strategy_count> hits{};
    const int draws = 10000;
    const auto slots = assign_strategies(cfg, 2, draws, 0);
    for (const auto& slot : slots)
        ++hits[std::size_t(slot.strategy)];
    // default weights 8/4/2/1/0.1/0.01 normalize over 15.11
    CHECK(std::abs(hits[std::size_t(StrategyKind::greedy_intersections)] / double(draws) - 8.0 / 15.11) < 0.02);
    CHECK(std::abs(hits[std::size_t(StrategyKind::greedy_alternative)] / double(draws) - 4.0 / 15.11) < 0.02);
    CHECK(std::abs(hits[std::size_t(StrategyKind::greedy_random)] / double(draws) - 2.0 / 15.11) < 0.02);
}

TEST_CASE("per-process parameters live in their configured ranges") {
    SearchConfig cfg;
    cfg.master_seed = 17;
    for (const auto& slot : assign_strategies(cfg, 1, 500, 0)) {
        CHECK((slot.alpha >= 0.0 && slot.alpha <= 0.5));
        CHECK((slot.beta >= 0.5 && slot.beta <= 1.0));
        CHECK((slot.p_greedy >= 0.5 && slot.p_greedy <= 1.0));
    }
}

TEST_CASE("all-zero strategy weights are rejected") {
    SearchConfig cfg;
    cfg.strategy_weights = {};
    CHECK_THROWS_AS(assign_strategies(cfg, 1, 4, 0), error);
    cfg.forced_strategy = StrategyKind::greedy;  // forced runs do not draw
    CHECK_NOTHROW(assign_strategies(cfg, 1, 4, 0));
}

TEST_CASE("a forced strategy covers every slot including the first") {
    SearchConfig cfg;
    cfg.forced_strategy = StrategyKind::weighted_random;
    for (const auto& slot : assign_strategies(cfg, 1, 32, 0))
        CHECK(slot.strategy == StrategyKind::weighted_random);
}

TEST_CASE("a single-process greedy portfolio equals one engine run") {
    const auto sys = testutil::example_system();
    SearchConfig cfg;
    cfg.n_processes = 1;
    cfg.patience = 1;
    cfg.strategy_weights = {};
    cfg.strategy_weights[std::size_t(StrategyKind::greedy)] = 1.0;
    const auto portfolio = optimize_system(sys, cfg);

    ProcessConfig greedy;
    std::mt19937_64 rng(0);
    const auto direct = run_cse(sys, greedy, rng);
    CHECK(portfolio.best.cost == direct.cost);
    CHECK(portfolio.best.substitutions == direct.substitutions);
}

TEST_CASE("the portfolio reaches the proven optimum of the worked example") {
    const auto sys = testutil::example_system();
    SearchConfig cfg;
    cfg.n_processes = 64;
    cfg.patience = 3;
    cfg.master_seed = 42;
    const auto result = optimize_system(sys, cfg);
    CHECK(result.best.cost == 6);
    CHECK(expand_and_verify(sys, replay_prefix(sys, result.best.substitutions)));
}

TEST_CASE("incumbent cost is non-increasing across iterations") {
    std::mt19937_64 gen(88);
    const auto sys = testutil::random_system(gen, 25, 12, 20, 10);
    SearchConfig cfg;
    cfg.n_processes = 16;
    cfg.patience = 4;
    cfg.master_seed = 5;
    int last = INT_MAX;
    optimize_system(sys, cfg, 0, [&](int, const SolutionRecord& incumbent) {
        REQUIRE(incumbent.cost <= last);
        last = incumbent.cost;
    });
}

TEST_CASE("prefix sharing keeps records replayable") {
    std::mt19937_64 gen(1234);
    for (int round = 0; round < 5; ++round) {
        const auto sys = testutil::random_system(gen, 20, 10, 15, 8);
        SearchConfig cfg;
        cfg.n_processes = 12;
        cfg.patience = 3;
        cfg.master_seed = gen();
        const auto result = optimize_system(sys, cfg);
        const auto state = replay_prefix(sys, result.best.substitutions);
        REQUIRE(total_cost(state) == result.best.cost);
        REQUIRE(expand_and_verify(sys, state));
    }
}

TEST_CASE("optimize_scheme on strassen reports the naive totals untouched") {
    SearchConfig cfg;
    cfg.n_processes = 16;
    cfg.patience = 2;
    const auto report = optimize_scheme(testutil::strassen(), cfg);
    CHECK(report.total == 18);
    CHECK(report.components[0].cost == 5);
    CHECK(report.components[1].cost == 5);
    CHECK(report.components[2].cost == 8);
    for (const auto& comp : report.components)
        CHECK(comp.record.substitutions.empty());
    CHECK(report.total == report.components[0].cost + report.components[1].cost + report.components[2].cost);
}

TEST_CASE("optimize_scheme rejects invalid schemes before any work") {
    auto s = testutil::strassen();
    s.u[0][0] = -1;
    SearchConfig cfg;
    cfg.n_processes = 2;
    cfg.patience = 1;
    CHECK_THROWS_WITH(optimize_scheme(s, cfg), Catch::Matchers::ContainsSubstring("validation"));
}

TEST_CASE("a scheme with singleton rows everywhere reduces to zero additions") {
    SearchConfig cfg;
    cfg.n_processes = 4;
    cfg.patience = 1;
    const auto report = optimize_scheme(naive_scheme(1, 1, 2), cfg);
    CHECK(report.total == 0);
}

TEST_CASE("reduction never exceeds the naive total") {
    SearchConfig cfg;
    cfg.n_processes = 24;
    cfg.patience = 2;
    cfg.master_seed = 7;
    for (std::uint64_t seed : {11u, 22u, 33u}) {
        const auto s = testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 25, seed);
        const auto systems = extract_systems(s);
        const int naive = naive_cost(systems[0]) + naive_cost(systems[1]) + naive_cost(systems[2]);
        const auto report = optimize_scheme(s, cfg);
        CHECK(report.total <= naive);
        for (std::size_t comp = 0; comp < 3; ++comp)
            CHECK(report.components[comp].naive == naive_cost(systems[comp]));
    }
}

TEST_CASE("auto process count follows the rank tiers") {
    SearchConfig cfg;
    cfg.patience = 1;
    const auto report = optimize_scheme(naive_scheme(1, 1, 2), cfg);
    CHECK(report.config.n_processes == 256);
    CHECK(detail::tier_processes(99) == 256);
    CHECK(detail::tier_processes(100) == 64);
    CHECK(detail::tier_processes(199) == 64);
    CHECK(detail::tier_processes(200) == 32);
}

TEST_CASE("reports are identical for any thread count") {
    const auto s = testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 30, 99);
    SearchConfig cfg;
    cfg.n_processes = 32;
    cfg.patience = 3;
    cfg.master_seed = 1001;

    cfg.threads = 1;
    const auto serial = optimize_scheme(s, cfg);
    cfg.threads = 4;
    const auto quad = optimize_scheme(s, cfg);
    cfg.threads = 13;
    const auto odd = optimize_scheme(s, cfg);
    CHECK(report_to_json(serial) == report_to_json(quad));
    CHECK(report_to_json(serial) == report_to_json(odd));
}

TEST_CASE("flip mode with one scheme behaves exactly like optimize_scheme") {
    const auto s = testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 10, 3);
    SearchConfig cfg;
    cfg.n_processes = 8;
    cfg.patience = 2;
    cfg.master_seed = 21;
    const auto plain = optimize_scheme(s, cfg);
    cfg.flip_mode.enabled = true;
    cfg.flip_mode.m_schemes = 1;
    const auto flip = optimize_with_flips(s, cfg);
    CHECK(flip.total == plain.total);
    for (std::size_t comp = 0; comp < 3; ++comp)
        CHECK(flip.components[comp].record.substitutions == plain.components[comp].record.substitutions);
}

TEST_CASE("flip mode results verify against their carried scheme") {
    SearchConfig cfg;
    cfg.n_processes = 12;
    cfg.patience = 2;
    cfg.master_seed = 77;
    cfg.flip_mode.enabled = true;
    cfg.flip_mode.m_schemes = 4;
    cfg.flip_mode.flips_min = 1;
    cfg.flip_mode.flips_max = 6;

    const auto s = naive_scheme(2, 2, 3);
    const auto report = optimize_with_flips(s, cfg);
    REQUIRE(report.carried_scheme.has_value());
    CHECK(verify_brent(*report.carried_scheme).valid);
    CHECK(report.scheme_digest == scheme_digest(*report.carried_scheme));

    const auto systems = extract_systems(*report.carried_scheme);
    int total = 0;
    for (std::size_t comp = 0; comp < 3; ++comp) {
        const auto state = replay_prefix(systems[comp], report.components[comp].record.substitutions);
        REQUIRE(expand_and_verify(systems[comp], state));
        REQUIRE(total_cost(state) == report.components[comp].cost);
        total += report.components[comp].cost;
    }
    CHECK(report.total == total);

    // flip exploration may wander, but never past the original naive total
    const auto original = extract_systems(s);
    CHECK(report.total <= naive_cost(original[0]) + naive_cost(original[1]) + naive_cost(original[2]));
}

TEST_CASE("flip mode is deterministic") {
    SearchConfig cfg;
    cfg.n_processes = 9;
    cfg.patience = 2;
    cfg.master_seed = 3;
    cfg.flip_mode.enabled = true;
    cfg.flip_mode.m_schemes = 3;
    const auto a = optimize_with_flips(testutil::strassen(), cfg);
    cfg.threads = 5;
    const auto b = optimize_with_flips(testutil::strassen(), cfg);
    CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("combine of a single report is the report itself") {
    SearchConfig cfg;
    cfg.n_processes = 4;
    cfg.patience = 1;
    const auto report = optimize_scheme(testutil::strassen(), cfg);
    const auto combined = combine_componentwise({report});
    CHECK(report_to_json(combined) == report_to_json(report));
}

TEST_CASE("combine picks the component-wise minima") {
    SearchConfig cfg;
    cfg.n_processes = 4;
    cfg.patience = 1;
    auto a = optimize_scheme(testutil::strassen(), cfg);
    auto b = a;
    // two runs that each win different components: 158/227/305 vs 160/234/304
    a.components[0].cost = 158; a.components[1].cost = 227; a.components[2].cost = 305;
    a.total = 690;
    b.components[0].cost = 160; b.components[1].cost = 234; b.components[2].cost = 304;
    b.total = 698;
    const auto combined = combine_componentwise({a, b});
    CHECK(combined.components[0].cost == 158);
    CHECK(combined.components[1].cost == 227);
    CHECK(combined.components[2].cost == 304);
    CHECK(combined.total == 689);
    CHECK(combined.combined_minimum);
    CHECK(combined.total <= std::min(a.total, b.total));
}

TEST_CASE("combine refuses mismatched schemes") {
    SearchConfig cfg;
    cfg.n_processes = 4;
    cfg.patience = 1;
    const auto a = optimize_scheme(testutil::strassen(), cfg);
    const auto b = optimize_scheme(naive_scheme(2, 2, 2), cfg);
    CHECK_THROWS_WITH(combine_componentwise({a, b}), Catch::Matchers::ContainsSubstring("different schemes"));
}

TEST_CASE("search config validation catches bad values") {
    SearchConfig cfg;
    cfg.reinit_fraction = 1.5;
    CHECK_THROWS_AS(detail::validate_config(cfg), error);
    cfg.reinit_fraction = 0.4;
    cfg.patience = 0;
    CHECK_THROWS_AS(detail::validate_config(cfg), error);
    cfg.patience = 10;
    cfg.flip_mode.enabled = true;
    cfg.flip_mode.flips_max = 0;
    CHECK_THROWS_AS(detail::validate_config(cfg), error);
}
