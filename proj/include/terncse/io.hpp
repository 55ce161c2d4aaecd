#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cse_engine.hpp"
#include "parallel_search.hpp"
#include "scheme.hpp"

namespace terncse {

using json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::vector<int8_t>> parse_tensor(const json& j, const char* name,
                                                     std::size_t rows, std::size_t cols) {
    if (!j.contains(name) || !j[name].is_array())
        throw error(std::string("scheme json: missing tensor \"") + name + "\"");
    const json& t = j[name];
    if (t.size() != rows)
        throw error(std::string("scheme json: tensor ") + name + " has " + std::to_string(t.size())
                    + " rows, expected " + std::to_string(rows));
    std::vector<std::vector<int8_t>> out(rows);
    for (std::size_t row = 0; row < rows; ++row) {
        if (!t[row].is_array() || t[row].size() != cols)
            throw error(std::string("scheme json: tensor ") + name + " row " + std::to_string(row)
                        + " must hold " + std::to_string(cols) + " integers");
        out[row].resize(cols);
        for (std::size_t col = 0; col < cols; ++col) {
            const json& cell = t[row][col];
            if (!cell.is_number_integer())
                throw error(std::string("scheme json: non-integer coefficient at ") + name + "["
                            + std::to_string(row) + "][" + std::to_string(col) + "]");
            const long long value = cell.get<long long>();
            if (value < -1 || value > 1)
                throw error(std::string("scheme json: coefficient ") + std::to_string(value)
                            + " out of range at " + name + "[" + std::to_string(row) + "]["
                            + std::to_string(col) + "]");
            out[row][col] = int8_t(value);
        }
    }
    return out;
}

inline int parse_positive(const json& j, const char* name) {
    if (!j.contains(name) || !j[name].is_number_integer())
        throw error(std::string("scheme json: missing integer field \"") + name + "\"");
    const long long value = j[name].get<long long>();
    if (value < 1 || value > 1 << 20)
        throw error(std::string("scheme json: field \"") + name + "\" must be a positive integer");
    return int(value);
}

}  // namespace detail

// Scheme wire format: {"m","n","p","r"} plus "u" (r rows of m*n), "v" (r rows
// of n*p) and "w" (m*p rows of r), all coefficients exactly -1, 0 or 1.
inline Scheme parse_scheme(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw error(std::string("scheme json: ") + e.what());
    }
    Scheme s;
    s.m = detail::parse_positive(j, "m");
    s.n = detail::parse_positive(j, "n");
    s.p = detail::parse_positive(j, "p");
    s.r = detail::parse_positive(j, "r");
    s.u = detail::parse_tensor(j, "u", std::size_t(s.r), std::size_t(s.m) * s.n);
    s.v = detail::parse_tensor(j, "v", std::size_t(s.r), std::size_t(s.n) * s.p);
    s.w = detail::parse_tensor(j, "w", std::size_t(s.m) * s.p, std::size_t(s.r));
    return s;
}

inline std::string scheme_to_json(const Scheme& s) {
    check_structure(s);
    json j;
    j["m"] = s.m;
    j["n"] = s.n;
    j["p"] = s.p;
    j["r"] = s.r;
    auto tensor_rows = [](const std::vector<std::vector<int8_t>>& tensor) {
        json rows = json::array();
        for (const auto& row : tensor)
            rows.push_back(std::vector<int>(row.begin(), row.end()));
        return rows;
    };
    j["u"] = tensor_rows(s.u);
    j["v"] = tensor_rows(s.v);
    j["w"] = tensor_rows(s.w);
    return j.dump(1) + "\n";
}

// Bare expression-set input for the oracle subcommand:
// {"n_x": int, "expressions": [[signed ints], ...]}.
inline LinearSystem parse_system(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw error(std::string("system json: ") + e.what());
    }
    if (!j.contains("n_x") || !j["n_x"].is_number_integer())
        throw error("system json: missing integer field \"n_x\"");
    if (!j.contains("expressions") || !j["expressions"].is_array())
        throw error("system json: missing array field \"expressions\"");
    std::vector<std::vector<int>> exprs;
    for (const json& row : j["expressions"]) {
        if (!row.is_array())
            throw error("system json: every expression must be an array of signed indices");
        std::vector<int> terms;
        for (const json& cell : row) {
            if (!cell.is_number_integer())
                throw error("system json: non-integer term");
            terms.push_back(cell.get<int>());
        }
        exprs.push_back(std::move(terms));
    }
    return LinearSystem(j["n_x"].get<int>(), exprs);
}

inline std::string system_to_json(const LinearSystem& sys) {
    json j;
    j["n_x"] = sys.n_x;
    json rows = json::array();
    for (const auto& expr : sys.expressions) {
        std::vector<int> terms(expr.begin(), expr.end());
        std::sort(terms.begin(), terms.end(), [](int a, int b) {
            return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
        });
        rows.push_back(terms);
    }
    j["expressions"] = std::move(rows);
    return j.dump(1) + "\n";
}

namespace detail {

inline json weights_to_json(const std::array<double, strategy_count>& weights) {
    json j;
    for (std::size_t k = 0; k < strategy_count; ++k)
        j[strategy_short_names[k]] = weights[k];
    return j;
}

inline json config_to_json(const SearchConfig& cfg) {
    // threads and wall time are execution details: serializing them would
    // break byte-identical reports across machines
    json j;
    j["n_processes"] = cfg.n_processes;
    j["strategy_weights"] = weights_to_json(cfg.strategy_weights);
    j["reinit_fraction"] = cfg.reinit_fraction;
    j["patience"] = cfg.patience;
    j["flip_mode"] = {
        {"enabled", cfg.flip_mode.enabled},
        {"m_schemes", cfg.flip_mode.m_schemes},
        {"flips_min", cfg.flip_mode.flips_min},
        {"flips_max", cfg.flip_mode.flips_max},
    };
    j["master_seed"] = cfg.master_seed;
    if (cfg.forced_strategy)
        j["strategy"] = to_string(*cfg.forced_strategy);
    return j;
}

inline SearchConfig config_from_json(const json& j) {
    SearchConfig cfg;
    if (j.contains("n_processes")) cfg.n_processes = j["n_processes"].get<int>();
    if (j.contains("strategy_weights")) {
        for (std::size_t k = 0; k < strategy_count; ++k) {
            const auto& w = j["strategy_weights"];
            if (w.contains(strategy_short_names[k]))
                cfg.strategy_weights[k] = w[strategy_short_names[k]].get<double>();
            else if (w.contains(strategy_names[k]))
                cfg.strategy_weights[k] = w[strategy_names[k]].get<double>();
            else
                cfg.strategy_weights[k] = 0.0;
        }
    }
    if (j.contains("reinit_fraction")) cfg.reinit_fraction = j["reinit_fraction"].get<double>();
    if (j.contains("patience")) cfg.patience = j["patience"].get<int>();
    if (j.contains("flip_mode")) {
        const auto& f = j["flip_mode"];
        if (f.contains("enabled")) cfg.flip_mode.enabled = f["enabled"].get<bool>();
        if (f.contains("m_schemes")) cfg.flip_mode.m_schemes = f["m_schemes"].get<int>();
        if (f.contains("flips_min")) cfg.flip_mode.flips_min = f["flips_min"].get<int>();
        if (f.contains("flips_max")) cfg.flip_mode.flips_max = f["flips_max"].get<int>();
    }
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("strategy") && !j["strategy"].is_null()) {
        const auto kind = strategy_from_string(j["strategy"].get<std::string>());
        if (!kind)
            throw error("config json: unknown strategy \"" + j["strategy"].get<std::string>() + "\"");
        cfg.forced_strategy = kind;
    }
    return cfg;
}

inline json component_to_json(const ComponentResult& c, bool with_scheme_id) {
    json j;
    j["cost"] = c.cost;
    j["naive"] = c.naive;
    json subs = json::array();
    for (const auto& q : c.record.substitutions)
        subs.push_back({q.i, q.j, q.rel_sign});
    j["substitutions"] = std::move(subs);
    j["strategy"] = to_string(c.record.strategy);
    j["seed"] = c.record.seed;
    j["iterations"] = c.iterations;
    if (with_scheme_id)
        j["scheme_id"] = c.scheme_id;
    return j;
}

inline ComponentResult component_from_json(const json& j) {
    ComponentResult c;
    c.cost = j["cost"].get<int>();
    c.naive = j["naive"].get<int>();
    for (const json& entry : j["substitutions"]) {
        if (!entry.is_array() || entry.size() != 3)
            throw error("report json: substitutions must be [i, j, sign] triples");
        c.record.substitutions.push_back(
            {entry[0].get<int>(), entry[1].get<int>(), entry[2].get<int>()});
    }
    c.record.cost = c.cost;
    if (j.contains("strategy")) {
        const auto kind = strategy_from_string(j["strategy"].get<std::string>());
        if (!kind)
            throw error("report json: unknown strategy \"" + j["strategy"].get<std::string>() + "\"");
        c.record.strategy = *kind;
    }
    if (j.contains("seed")) c.record.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("iterations")) c.iterations = j["iterations"].get<int>();
    if (j.contains("scheme_id")) c.scheme_id = j["scheme_id"].get<std::string>();
    return c;
}

}  // namespace detail

inline constexpr std::array<const char*, 3> component_keys{"u", "v", "w"};

inline std::string report_to_json(const SearchReport& report) {
    json j;
    j["scheme_digest"] = report.scheme_digest;
    j["config"] = detail::config_to_json(report.config);
    json comps;
    for (std::size_t comp = 0; comp < 3; ++comp)
        comps[component_keys[comp]] =
            detail::component_to_json(report.components[comp], report.carried_scheme.has_value());
    j["components"] = std::move(comps);
    j["total"] = report.total;
    j["iterations"] = report.iterations;
    if (report.combined_minimum)
        j["combined"] = true;
    if (report.carried_scheme)
        j["scheme"] = json::parse(scheme_to_json(*report.carried_scheme));
    return j.dump(1) + "\n";
}

inline SearchReport parse_report(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw error(std::string("report json: ") + e.what());
    }
    SearchReport report;
    try {
        report.scheme_digest = j.at("scheme_digest").get<std::string>();
        report.config = detail::config_from_json(j.at("config"));
        for (std::size_t comp = 0; comp < 3; ++comp)
            report.components[comp] = detail::component_from_json(j.at("components").at(component_keys[comp]));
        report.total = j.at("total").get<int>();
        report.iterations = j.at("iterations").get<int>();
        if (j.contains("combined"))
            report.combined_minimum = j["combined"].get<bool>();
        if (j.contains("scheme"))
            report.carried_scheme = parse_scheme(j["scheme"].dump());
    } catch (const nlohmann::json::exception& e) {
        throw error(std::string("report json: ") + e.what());
    }
    return report;
}

namespace detail {

// Renders terms positive-first so every line spends exactly (terms - 1)
// binary +/- operators; an all-negative line leads with one attached minus.
inline std::string render_sum(std::vector<int> terms, const std::function<std::string(int)>& var_name) {
    std::sort(terms.begin(), terms.end(), [](int a, int b) {
        if ((a > 0) != (b > 0))
            return a > 0;
        return std::abs(a) < std::abs(b);
    });
    std::string out;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (t == 0)
            out += terms[t] > 0 ? "" : "-";
        else
            out += terms[t] > 0 ? " + " : " - ";
        out += var_name(std::abs(terms[t]));
    }
    return out;
}

inline std::string emit_component_slp(const LinearSystem& original, const SolutionRecord& record,
                                      const std::function<std::string(int)>& base_name,
                                      const std::function<std::string(std::size_t)>& output_name) {
    const LinearSystem state = replay_prefix(original, record.substitutions);
    auto var_name = [&](int id) {
        return id <= original.n_x ? base_name(id) : "t" + std::to_string(id - original.n_x);
    };
    std::string out;
    for (const auto& def : state.fresh_defs) {
        out += var_name(def.id) + " = "
             + render_sum({def.pair.i, def.pair.rel_sign * def.pair.j}, var_name) + "\n";
    }
    for (std::size_t row = 0; row < state.expressions.size(); ++row) {
        const auto& expr = state.expressions[row];
        if (expr.empty())
            continue;  // an all-zero output needs no statement
        out += output_name(row) + " = "
             + render_sum(std::vector<int>(expr.begin(), expr.end()), var_name) + "\n";
    }
    return out;
}

}  // namespace detail

// Straight-line program for one bare expression set: inputs x1..x_nx,
// temporaries t1.., outputs e1..e_ne, then a comment with the addition count.
inline std::string emit_slp_system(const LinearSystem& original, const SolutionRecord& record) {
    std::string out = detail::emit_component_slp(
        original, record,
        [](int id) { return "x" + std::to_string(id); },
        [](std::size_t row) { return "e" + std::to_string(row + 1); });
    out += "# additions: " + std::to_string(record.cost) + "\n";
    return out;
}

// Straight-line program for a whole scheme: per component, the fresh
// definitions in order followed by the output rows, then a trailing comment
// with per-component and total addition counts.
inline std::string emit_slp(const SearchReport& report, const Scheme& scheme) {
    const auto systems = extract_systems(scheme);
    const int n = scheme.n, p = scheme.p;
    std::string out;

    out += "# component U (inputs a[i][j], outputs u[l])\n";
    out += detail::emit_component_slp(
        systems[0], report.components[0].record,
        [n](int id) {
            return "a[" + std::to_string((id - 1) / n + 1) + "][" + std::to_string((id - 1) % n + 1) + "]";
        },
        [](std::size_t row) { return "u[" + std::to_string(row + 1) + "]"; });

    out += "# component V (inputs b[j][k], outputs v[l])\n";
    out += detail::emit_component_slp(
        systems[1], report.components[1].record,
        [p](int id) {
            return "b[" + std::to_string((id - 1) / p + 1) + "][" + std::to_string((id - 1) % p + 1) + "]";
        },
        [](std::size_t row) { return "v[" + std::to_string(row + 1) + "]"; });

    out += "# component W (inputs m[l], outputs c[i][j])\n";
    out += detail::emit_component_slp(
        systems[2], report.components[2].record,
        [](int id) { return "m[" + std::to_string(id) + "]"; },
        [p](std::size_t row) {
            return "c[" + std::to_string(row / std::size_t(p) + 1) + "]["
                 + std::to_string(row % std::size_t(p) + 1) + "]";
        });

    out += "# additions: U=" + std::to_string(report.components[0].cost)
         + " V=" + std::to_string(report.components[1].cost)
         + " W=" + std::to_string(report.components[2].cost)
         + " total=" + std::to_string(report.total) + "\n";
    return out;
}

inline std::string emit_slp(const SearchReport& report) {
    if (!report.carried_scheme)
        throw error("emit_slp: report does not carry a scheme");
    return emit_slp(report, *report.carried_scheme);
}

}  // namespace terncse
