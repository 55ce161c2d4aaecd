#include <catch2/catch_amalgamated.hpp>

#include <terncse/io.hpp>

#include <map>
#include <sstream>

#include "test_util.hpp"

using namespace terncse;

namespace {

// Minimal SLP reader used to check that emitted programs expand back to the
// original linear forms. Variables are whatever identifier strings appear.
std::map<std::string, std::map<std::string, long long>> expand_slp(const std::string& text) {
    std::map<std::string, std::map<std::string, long long>> defined;
    std::map<std::string, std::map<std::string, long long>> outputs;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find(" = ");
        REQUIRE(eq != std::string::npos);
        const std::string name = line.substr(0, eq);
        std::map<std::string, long long> sum;
        std::string rest = line.substr(eq + 3);
        int sign = 1;
        if (!rest.empty() && rest[0] == '-') {
            sign = -1;
            rest = rest.substr(1);
        }
        std::size_t pos = 0;
        while (pos < rest.size()) {
            std::size_t next = rest.find(' ', pos);
            if (next == std::string::npos)
                next = rest.size();
            const std::string token = rest.substr(pos, next - pos);
            pos = next + 1;
            if (token == "+") { sign = 1; continue; }
            if (token == "-") { sign = -1; continue; }
            if (auto it = defined.find(token); it != defined.end()) {
                for (const auto& [var, c] : it->second)
                    sum[var] += sign * c;
            } else {
                sum[token] += sign;
            }
        }
        if (name[0] == 't')
            defined[name] = sum;
        else
            outputs[name] = sum;
    }
    for (auto& [name, sum] : outputs)
        std::erase_if(sum, [](const auto& entry) { return entry.second == 0; });
    return outputs;
}

}  // namespace

TEST_CASE("scheme json round-trips exactly") {
    const auto s = testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 8, 4);
    const auto text = scheme_to_json(s);
    const auto parsed = parse_scheme(text);
    CHECK(parsed == s);
    CHECK(scheme_to_json(parse_scheme(scheme_to_json(parsed))) == text);
}

TEST_CASE("scheme parsing reports exact error coordinates") {
    auto s = testutil::strassen();
    auto text = scheme_to_json(s);
    // plant an out-of-range coefficient at u[3][1]
    auto j = json::parse(text);
    j["u"][3][1] = 2;
    CHECK_THROWS_WITH(parse_scheme(j.dump()), Catch::Matchers::ContainsSubstring("u[3][1]"));

    j = json::parse(text);
    j["u"].erase(6);
    CHECK_THROWS_WITH(parse_scheme(j.dump()),
                      Catch::Matchers::ContainsSubstring("tensor u has 6 rows, expected 7"));

    CHECK_THROWS_WITH(parse_scheme("{ not json"), Catch::Matchers::ContainsSubstring("scheme json"));
    CHECK_THROWS_WITH(parse_scheme("{\"m\":2,\"n\":2,\"p\":2}"),
                      Catch::Matchers::ContainsSubstring("\"r\""));
}

TEST_CASE("strassen fixture parses to the expected shape") {
    const auto parsed = parse_scheme(scheme_to_json(testutil::strassen()));
    CHECK(parsed.m == 2);
    CHECK(parsed.n == 2);
    CHECK(parsed.p == 2);
    CHECK(parsed.r == 7);
    CHECK(verify_brent(parsed).valid);
}

TEST_CASE("system json round-trips") {
    const auto sys = testutil::example_system();
    const auto parsed = parse_system(system_to_json(sys));
    CHECK(parsed.n_x == sys.n_x);
    CHECK(parsed.expressions == sys.expressions);
    CHECK_THROWS_AS(parse_system("{\"expressions\": []}"), error);
}

TEST_CASE("the worked example emits two definitions and three outputs") {
    const auto sys = testutil::example_system();
    const auto optimal = brute_force_optimal(sys);
    REQUIRE(optimal.best.cost == 6);
    const auto slp = emit_slp_system(sys, optimal.best);

    int defs = 0, outs = 0;
    std::istringstream in(slp);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (line[0] == 't')
            ++defs;
        else
            ++outs;
    }
    CHECK(defs == 2);
    CHECK(outs == 3);
    CHECK(slp.find("# additions: 6") != std::string::npos);
    CHECK(testutil::count_slp_operators(slp) == 6);
}

TEST_CASE("a zero-substitution component emits no definition lines") {
    SearchConfig cfg;
    cfg.n_processes = 2;
    cfg.patience = 1;
    const auto report = optimize_scheme(testutil::strassen(), cfg);
    const auto slp = emit_slp(report, testutil::strassen());
    CHECK(slp.find("t1") == std::string::npos);
    CHECK(slp.find("# additions: U=5 V=5 W=8 total=18") != std::string::npos);
    CHECK(testutil::count_slp_operators(slp) == 18);
}

TEST_CASE("property: emitted operator count equals the reported cost") {
    SearchConfig cfg;
    cfg.n_processes = 8;
    cfg.patience = 1;
    std::mt19937_64 gen(51);
    for (int round = 0; round < 100; ++round) {
        const auto s = testutil::flipped_scheme(round % 2 ? testutil::strassen() : naive_scheme(2, 2, 3),
                                                20 + round, gen());
        cfg.master_seed = gen();
        const auto report = optimize_scheme(s, cfg);
        const auto slp = emit_slp(report, s);
        REQUIRE(testutil::count_slp_operators(slp) == report.total);
    }
}

TEST_CASE("re-expanding the emitted SLP reproduces the scheme's linear forms") {
    const auto s = testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 35, 8);
    SearchConfig cfg;
    cfg.n_processes = 16;
    cfg.patience = 2;
    const auto report = optimize_scheme(s, cfg);
    const auto outputs = expand_slp(emit_slp(report, s));

    const auto systems = extract_systems(s);
    // check component W: every output c[i][j] must equal its original row
    for (int i = 0; i < s.m; ++i)
        for (int j = 0; j < s.p; ++j) {
            const auto& expr = systems[2].expressions[std::size_t(i) * s.p + j];
            const std::string name = "c[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
            if (expr.empty()) {
                CHECK_FALSE(outputs.count(name));
                continue;
            }
            REQUIRE(outputs.count(name));
            const auto& sum = outputs.at(name);
            REQUIRE(sum.size() == expr.size());
            for (int term : expr) {
                const std::string var = "m[" + std::to_string(std::abs(term)) + "]";
                REQUIRE(sum.count(var));
                CHECK(sum.at(var) == (term > 0 ? 1 : -1));
            }
        }
    // and component U against the a[i][j] inputs
    for (int l = 0; l < s.r; ++l) {
        const auto& expr = systems[0].expressions[std::size_t(l)];
        const std::string name = "u[" + std::to_string(l + 1) + "]";
        if (expr.empty())
            continue;
        REQUIRE(outputs.count(name));
        const auto& sum = outputs.at(name);
        REQUIRE(sum.size() == expr.size());
        for (int term : expr) {
            const int id = std::abs(term) - 1;
            const std::string var = "a[" + std::to_string(id / s.n + 1) + "][" + std::to_string(id % s.n + 1) + "]";
            REQUIRE(sum.count(var));
            CHECK(sum.at(var) == (term > 0 ? 1 : -1));
        }
    }
}

TEST_CASE("report json round-trips and carries the full config") {
    const auto s = testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 15, 2);
    SearchConfig cfg;
    cfg.n_processes = 8;
    cfg.patience = 2;
    cfg.master_seed = 424242;
    const auto report = optimize_scheme(s, cfg);
    const auto text = report_to_json(report);

    const auto parsed = parse_report(text);
    CHECK(report_to_json(parsed) == text);
    CHECK(parsed.config.master_seed == 424242);
    CHECK(parsed.config.n_processes == 8);
    CHECK(parsed.scheme_digest == report.scheme_digest);

    // rerunning with the parsed config reproduces the identical report
    const auto rerun = optimize_scheme(s, parsed.config);
    CHECK(report_to_json(rerun) == text);
}

TEST_CASE("cli verify prints the naive cost summary for strassen") {
    const auto path = testutil::write_temp("strassen.json", scheme_to_json(testutil::strassen()));
    const auto result = testutil::run_cli("verify " + path);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("naive: U=5 V=5 W=8 total=18") != std::string::npos);
    CHECK(result.output.find("valid: true") != std::string::npos);
    CHECK(result.output.find("method: exact_brent") != std::string::npos);
}

TEST_CASE("cli verify flags a corrupted scheme") {
    auto s = testutil::strassen();
    s.w[2][1] = -1;
    const auto path = testutil::write_temp("broken.json", scheme_to_json(s));
    const auto result = testutil::run_cli("verify " + path);
    CHECK(result.exit_code != 0);
    CHECK(result.output.find("valid: false") != std::string::npos);
}

TEST_CASE("cli reduce on strassen keeps the 18 additions") {
    const auto path = testutil::write_temp("strassen.json", scheme_to_json(testutil::strassen()));
    const auto result = testutil::run_cli("reduce " + path + " --seed 1 --processes 16 --iterations-patience 2");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("reduced: U=5 V=5 W=8 total=18") != std::string::npos);
}

TEST_CASE("cli reduce honors --strategy for single-strategy runs") {
    const auto path = testutil::write_temp("strassen_f.json",
                                           scheme_to_json(testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 20, 16)));
    const auto result = testutil::run_cli("reduce " + path
                                          + " --seed 5 --processes 4 --iterations-patience 1 --strategy greedy");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("strategy: U=greedy V=greedy W=greedy") != std::string::npos);
}

TEST_CASE("cli reduce round-trips through its own report as config") {
    const auto path = testutil::write_temp("strassen_g.json",
                                           scheme_to_json(testutil::flipped_scheme(terncse::naive_scheme(2, 2, 3), 18, 31)));
    const auto report_path = testutil::write_temp("report_a.json", "");
    auto first = testutil::run_cli("reduce " + path + " --seed 9 --processes 8 --iterations-patience 2 --out-report "
                                   + report_path);
    REQUIRE(first.exit_code == 0);
    const auto report_text = testutil::slurp(report_path);

    const auto second_path = testutil::write_temp("report_b.json", "");
    auto second = testutil::run_cli("reduce " + path + " --config " + report_path + " --out-report " + second_path);
    REQUIRE(second.exit_code == 0);
    CHECK(testutil::slurp(second_path) == report_text);
}

TEST_CASE("cli combine picks the component-wise minima across reports") {
    SearchConfig cfg;
    cfg.n_processes = 2;
    cfg.patience = 1;
    auto a = optimize_scheme(testutil::strassen(), cfg);
    auto b = a;
    a.components[0].cost = 158; a.components[1].cost = 227; a.components[2].cost = 305;
    a.total = 690;
    b.components[0].cost = 160; b.components[1].cost = 234; b.components[2].cost = 304;
    b.total = 698;
    const auto pa = testutil::write_temp("combine_a.json", report_to_json(a));
    const auto pb = testutil::write_temp("combine_b.json", report_to_json(b));
    const auto result = testutil::run_cli("combine " + pa + " " + pb);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("total=689") != std::string::npos);
}

TEST_CASE("cli oracle solves the bare worked example") {
    const auto path = testutil::write_temp("example_system.json", system_to_json(testutil::example_system()));
    const auto result = testutil::run_cli("oracle " + path);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("naive: 8") != std::string::npos);
    CHECK(result.output.find("optimal: 6 (exact)") != std::string::npos);
}

TEST_CASE("cli errors are machine-parseable and nonzero") {
    const auto missing = testutil::run_cli("verify /nonexistent/scheme.json");
    CHECK(missing.exit_code != 0);
    CHECK(missing.output.find("error: ") != std::string::npos);

    const auto bad = testutil::write_temp("bad.json", "{\"m\": 2}");
    const auto malformed = testutil::run_cli("reduce " + bad);
    CHECK(malformed.exit_code != 0);
    CHECK(malformed.output.find("error: ") != std::string::npos);
}
