#include <CLI11.hpp>

#include <terncse/io.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw terncse::error("cannot read file \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw terncse::error("cannot write file \"" + path + "\"");
    out << text;
}

// Weight list in the form "gi=8,ga=4,gr=2,wr=1,mix=0.1,gp=0.01"; omitted
// strategies get weight 0.
std::array<double, terncse::strategy_count> parse_weights(const std::string& text) {
    std::array<double, terncse::strategy_count> weights{};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw terncse::error("weights: expected key=value, got \"" + item + "\"");
        const auto kind = terncse::strategy_from_string(item.substr(0, eq));
        if (!kind)
            throw terncse::error("weights: unknown strategy \"" + item.substr(0, eq) + "\"");
        weights[std::size_t(*kind)] = std::stod(item.substr(eq + 1));
    }
    return weights;
}

terncse::SearchConfig load_config(const std::string& path) {
    const auto j = terncse::json::parse(read_file(path), nullptr, true);
    // accept either a bare config object or a whole report
    if (j.contains("config"))
        return terncse::detail::config_from_json(j["config"]);
    return terncse::detail::config_from_json(j);
}

void print_naive(const terncse::Scheme& scheme) {
    const auto systems = terncse::extract_systems(scheme);
    const int nu = terncse::naive_cost(systems[0]);
    const int nv = terncse::naive_cost(systems[1]);
    const int nw = terncse::naive_cost(systems[2]);
    std::cout << "naive: U=" << nu << " V=" << nv << " W=" << nw
              << " total=" << nu + nv + nw << "\n";
}

int cmd_verify(const std::string& path, const std::string& method, int trials, std::uint64_t seed) {
    const auto scheme = terncse::parse_scheme(read_file(path));
    terncse::SchemeCheckReport report;
    if (method == "exact" || (method == "auto" && scheme.r < 200))
        report = terncse::verify_brent(scheme);
    else
        report = terncse::verify_by_product(scheme, trials, seed);
    std::cout << "scheme: " << scheme.m << "x" << scheme.n << "x" << scheme.p
              << ":" << scheme.r << " digest: " << terncse::scheme_digest(scheme) << "\n";
    std::cout << "method: " << (report.method == terncse::CheckMethod::exact_brent
                                    ? "exact_brent" : "randomized_product") << "\n";
    print_naive(scheme);
    std::cout << "valid: " << (report.valid ? "true" : "false") << "\n";
    if (report.first_violation)
        std::cout << "first_violation: " << *report.first_violation << "\n";
    return report.valid ? 0 : 2;
}

int cmd_reduce(const terncse::SearchConfig& cfg, const std::string& path,
               const std::string& out_slp, const std::string& out_report) {
    const auto scheme = terncse::parse_scheme(read_file(path));
    const auto report = cfg.flip_mode.enabled ? terncse::optimize_with_flips(scheme, cfg)
                                              : terncse::optimize_scheme(scheme, cfg);
    std::cout << "scheme: " << scheme.m << "x" << scheme.n << "x" << scheme.p
              << ":" << scheme.r << " digest: " << report.scheme_digest << "\n";
    print_naive(report.carried_scheme ? *report.carried_scheme : scheme);
    std::cout << "reduced: U=" << report.components[0].cost
              << " V=" << report.components[1].cost
              << " W=" << report.components[2].cost
              << " total=" << report.total << "\n";
    std::cout << "strategy: U=" << terncse::to_string(report.components[0].record.strategy)
              << " V=" << terncse::to_string(report.components[1].record.strategy)
              << " W=" << terncse::to_string(report.components[2].record.strategy) << "\n";
    std::cout << "iterations: " << report.iterations << "\n";
    std::cout << "wall_ms: " << report.wall_ms << "\n";
    if (!out_report.empty())
        write_file(out_report, terncse::report_to_json(report));
    if (!out_slp.empty())
        write_file(out_slp, terncse::emit_slp(report, report.carried_scheme ? *report.carried_scheme : scheme));
    return 0;
}

int cmd_combine(const std::vector<std::string>& paths, const std::string& out_report) {
    std::vector<terncse::SearchReport> reports;
    reports.reserve(paths.size());
    for (const auto& path : paths)
        reports.push_back(terncse::parse_report(read_file(path)));
    const auto combined = terncse::combine_componentwise(reports);
    std::cout << "combined: U=" << combined.components[0].cost
              << " V=" << combined.components[1].cost
              << " W=" << combined.components[2].cost
              << " total=" << combined.total << "\n";
    if (!out_report.empty())
        write_file(out_report, terncse::report_to_json(combined));
    return 0;
}

int cmd_oracle(const std::string& path, std::size_t max_nodes, const std::string& out_slp) {
    const auto sys = terncse::parse_system(read_file(path));
    const auto result = terncse::brute_force_optimal(sys, max_nodes);
    std::cout << "naive: " << terncse::naive_cost(sys) << "\n";
    std::cout << "optimal: " << result.best.cost
              << (result.exact ? " (exact)" : " (budget exhausted, best found)") << "\n";
    std::cout << "substitutions: " << result.best.substitutions.size() << "\n";
    if (!out_slp.empty())
        write_file(out_slp, terncse::emit_slp_system(sys, result.best));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Addition-count minimizer for ternary matrix multiplication schemes"};
    app.require_subcommand(1);

    std::string scheme_path, system_path, out_slp, out_report, weights_text, strategy_name;
    std::string method = "auto", config_path;
    std::vector<std::string> report_paths;
    int trials = 16;
    std::size_t max_nodes = std::size_t(1) << 20;
    terncse::SearchConfig cfg;

    auto* verify = app.add_subcommand("verify", "Check validity and report naive costs");
    verify->add_option("scheme", scheme_path, "scheme JSON file")->required();
    verify->add_option("--method", method, "exact | product | auto (auto: exact below rank 200)")
        ->check(CLI::IsMember({"exact", "product", "auto"}));
    verify->add_option("--trials", trials, "trials for the randomized product check");
    verify->add_option("--seed", cfg.master_seed, "seed for the randomized product check");

    auto* reduce = app.add_subcommand("reduce", "Run the parallel portfolio reduction");
    reduce->add_option("scheme", scheme_path, "scheme JSON file")->required();
    reduce->add_option("--config", config_path, "JSON config (or a previous report) to start from");
    auto* opt_processes = reduce->add_option("--processes", cfg.n_processes, "process count (0 = tier by rank)");
    auto* opt_patience = reduce->add_option("--iterations-patience", cfg.patience,
                                            "stop after this many iterations without improvement");
    auto* opt_reinit = reduce->add_option("--reinit-fraction", cfg.reinit_fraction,
                                          "share of processes reseeded from the best solution");
    auto* opt_weights = reduce->add_option("--weights", weights_text, "strategy weights, e.g. gi=8,ga=4,gr=2,wr=1,mix=0.1,gp=0.01");
    auto* opt_seed = reduce->add_option("--seed", cfg.master_seed, "master seed");
    auto* opt_flip = reduce->add_flag("--flip-mode", "explore random flip variants of the scheme");
    auto* opt_flip_m = reduce->add_option("--flip-schemes", cfg.flip_mode.m_schemes, "schemes per iteration in flip mode");
    auto* opt_strategy = reduce->add_option("--strategy", strategy_name, "single-strategy run (disables weighted drawing)");
    reduce->add_option("--threads", cfg.threads, "worker threads (0 = hardware); never changes results");
    reduce->add_option("--out-slp", out_slp, "write the straight-line program here");
    reduce->add_option("--out-report", out_report, "write the report JSON here");

    auto* combine = app.add_subcommand("combine", "Component-wise minimum of reports for one scheme");
    combine->add_option("reports", report_paths, "report JSON files")->required()->expected(-1);
    combine->add_option("--out-report", out_report, "write the combined report here");

    auto* oracle = app.add_subcommand("oracle", "Exact optimum of a tiny expression set");
    oracle->add_option("system", system_path, "system JSON file {\"n_x\", \"expressions\"}")->required();
    oracle->add_option("--max-nodes", max_nodes, "search node budget");
    oracle->add_option("--out-slp", out_slp, "write the optimal straight-line program here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed())
            return cmd_verify(scheme_path, method, trials, cfg.master_seed);
        if (reduce->parsed()) {
            if (!config_path.empty()) {
                // CLI flags override config-file fields
                terncse::SearchConfig base = load_config(config_path);
                if (!*opt_processes) cfg.n_processes = base.n_processes;
                if (!*opt_patience) cfg.patience = base.patience;
                if (!*opt_reinit) cfg.reinit_fraction = base.reinit_fraction;
                if (!*opt_weights) cfg.strategy_weights = base.strategy_weights;
                if (!*opt_seed) cfg.master_seed = base.master_seed;
                if (!*opt_flip) cfg.flip_mode.enabled = base.flip_mode.enabled;
                if (!*opt_flip_m) cfg.flip_mode.m_schemes = base.flip_mode.m_schemes;
                cfg.flip_mode.flips_min = base.flip_mode.flips_min;
                cfg.flip_mode.flips_max = base.flip_mode.flips_max;
                if (!*opt_strategy) cfg.forced_strategy = base.forced_strategy;
            }
            if (*opt_weights)
                cfg.strategy_weights = parse_weights(weights_text);
            if (*opt_flip)
                cfg.flip_mode.enabled = true;
            if (*opt_strategy) {
                const auto kind = terncse::strategy_from_string(strategy_name);
                if (!kind)
                    throw terncse::error("unknown strategy \"" + strategy_name + "\"");
                cfg.forced_strategy = kind;
            }
            return cmd_reduce(cfg, scheme_path, out_slp, out_report);
        }
        if (combine->parsed())
            return cmd_combine(report_paths, out_report);
        if (oracle->parsed())
            return cmd_oracle(system_path, max_nodes, out_slp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
