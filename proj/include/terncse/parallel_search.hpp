#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cse_engine.hpp"
#include "rng.hpp"
#include "scheme.hpp"
#include "strategies.hpp"

namespace terncse {

struct FlipModeConfig {
    bool enabled = false;
    int m_schemes = 32;
    int flips_min = 1;
    int flips_max = 16;
};

inline constexpr std::array<double, strategy_count> default_strategy_weights_array{
    0.0,   // greedy
    4.0,   // greedy_alternative
    1.0,   // weighted_random
    2.0,   // greedy_random
    8.0,   // greedy_intersections
    0.1,   // mixed
    0.01,  // greedy_potential
};

// All search tunables. n_processes = 0 picks the CPU tier for the scheme's
// rank (256 below rank 100, 64 below 200, 32 above). threads is an execution
// knob only: results are identical for any value.
struct SearchConfig {
    int n_processes = 0;
    std::array<double, strategy_count> strategy_weights = default_strategy_weights_array;
    double reinit_fraction = 0.40;
    int patience = 10;
    FlipModeConfig flip_mode;
    std::uint64_t master_seed = 0;
    std::optional<StrategyKind> forced_strategy;
    unsigned threads = 0;
};

struct ComponentResult {
    SolutionRecord record;
    int cost = 0;
    int naive = 0;
    int iterations = 0;
    std::string scheme_id = "original";
};

struct SearchReport {
    std::string scheme_digest;
    SearchConfig config;
    std::array<ComponentResult, 3> components;  // U, V, W
    int total = 0;
    int iterations = 0;
    long long wall_ms = 0;
    bool combined_minimum = false;
    std::optional<Scheme> carried_scheme;  // flip mode: what the records verify against
};

namespace detail {

// Static-free work loop: item order inside a worker varies with scheduling,
// but results are stored by index and reduced sequentially, so the outcome
// does not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned spawned = unsigned(std::min<std::size_t>(threads, count));
    pool.reserve(spawned);
    for (unsigned t = 0; t < spawned; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

inline void validate_config(const SearchConfig& cfg) {
    if (cfg.n_processes < 0)
        throw error("search config: n_processes must be >= 0");
    if (cfg.reinit_fraction < 0.0 || cfg.reinit_fraction > 1.0)
        throw error("search config: reinit_fraction must be in [0, 1]");
    if (cfg.patience < 1)
        throw error("search config: patience must be >= 1");
    if (!cfg.forced_strategy) {
        double total = 0.0;
        for (double weight : cfg.strategy_weights) {
            if (weight < 0.0)
                throw error("search config: strategy weights must be >= 0");
            total += weight;
        }
        if (total <= 0.0)
            throw error("search config: all strategy weights are zero");
    }
    if (cfg.flip_mode.enabled) {
        if (cfg.flip_mode.m_schemes < 1)
            throw error("search config: flip mode needs m_schemes >= 1");
        if (cfg.flip_mode.flips_min < 1 || cfg.flip_mode.flips_max < cfg.flip_mode.flips_min)
            throw error("search config: flip counts must satisfy 1 <= min <= max");
    }
}

inline int tier_processes(int rank) {
    if (rank < 100)
        return 256;
    return rank < 200 ? 64 : 32;
}

// Indices of the share worst-performing processes, ties by index.
inline std::vector<char> pick_reinit(const std::vector<int>& last_cost, double fraction) {
    const std::size_t n = last_cost.size();
    std::vector<char> chosen(n, 0);
    const std::size_t count = std::min<std::size_t>(n, std::size_t(std::llround(fraction * double(n))));
    if (count == 0)
        return chosen;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return last_cost[a] > last_cost[b];
    });
    for (std::size_t t = 0; t < count; ++t)
        chosen[order[t]] = 1;
    return chosen;
}

}  // namespace detail

// Draws one ProcessConfig per slot. The first process of the first iteration
// is always pure greedy; every other slot draws its strategy proportionally
// to the configured weights and its alpha/beta/p from their ranges. All draws
// come from a per-slot stream mixed from (master_seed, stream_salt,
// iteration, process), so assignments are independent of execution order.
inline std::vector<ProcessConfig> assign_strategies(const SearchConfig& cfg, int iteration,
                                                    int n_processes, std::uint64_t stream_salt = 0) {
    detail::validate_config(cfg);
    if (n_processes < 1)
        throw error("assign_strategies: need at least one process");
    double weight_total = 0.0;
    for (double weight : cfg.strategy_weights)
        weight_total += weight;

    auto slots = std::vector<ProcessConfig>(std::size_t(n_processes));
    for (int p = 0; p < n_processes; ++p) {
        const std::uint64_t slot_seed =
            mix_seed({cfg.master_seed, stream_salt, std::uint64_t(iteration), std::uint64_t(p)});
        std::mt19937_64 prng(slot_seed);
        ProcessConfig& pc = slots[std::size_t(p)];
        pc.alpha = std::uniform_real_distribution<double>(0.0, 0.5)(prng);
        pc.beta = std::uniform_real_distribution<double>(0.5, 1.0)(prng);
        pc.p_greedy = std::uniform_real_distribution<double>(0.5, 1.0)(prng);
        if (cfg.forced_strategy) {
            pc.strategy = *cfg.forced_strategy;
        } else if (iteration == 1 && p == 0) {
            pc.strategy = StrategyKind::greedy;
        } else {
            double target = std::uniform_real_distribution<double>(0.0, 1.0)(prng) * weight_total;
            pc.strategy = StrategyKind::greedy;
            for (std::size_t k = 0; k < strategy_count; ++k) {
                target -= cfg.strategy_weights[k];
                if (target < 0.0) {
                    pc.strategy = StrategyKind(k);
                    break;
                }
            }
        }
        pc.seed = prng();
    }
    return slots;
}

struct SystemSearchResult {
    SolutionRecord best;
    int iterations = 0;
};

// Portfolio search over one expression set. Every iteration runs n
// independent reductions; from the second iteration on, the worst
// reinit_fraction share restarts from a random prefix of the incumbent best
// sequence (k uniform in [1, 3*len/4]) while the rest restart fresh.
// Terminates once the best cost survives `patience` iterations unchanged.
inline SystemSearchResult optimize_system(
    const LinearSystem& sys, const SearchConfig& cfg, std::uint64_t stream_salt = 0,
    const std::function<void(int, const SolutionRecord&)>& on_iteration = {}) {
    detail::validate_config(cfg);
    const int n = cfg.n_processes > 0 ? cfg.n_processes : 256;

    std::optional<SolutionRecord> incumbent;
    std::vector<int> last_cost(std::size_t(n), 0);
    auto results = std::vector<SolutionRecord>(std::size_t(n));
    int unchanged = 0;
    int iteration = 0;
    for (;;) {
        ++iteration;
        const auto slots = assign_strategies(cfg, iteration, n, stream_salt);
        std::vector<char> reinit(std::size_t(n), 0);
        const bool can_share = incumbent && incumbent->substitutions.size() >= 2;
        if (iteration >= 2 && can_share)
            reinit = detail::pick_reinit(last_cost, cfg.reinit_fraction);

        detail::parallel_for(std::size_t(n), cfg.threads, [&](std::size_t p) {
            std::mt19937_64 rng(slots[p].seed);
            SolutionRecord rec;
            if (reinit[p]) {
                const std::size_t len = incumbent->substitutions.size();
                const std::size_t k_max = 3 * len / 4;
                const std::size_t k = std::uniform_int_distribution<std::size_t>(1, k_max)(rng);
                const std::span<const CanonicalPair> prefix{incumbent->substitutions.data(), k};
                rec = run_cse(replay_prefix(sys, prefix), slots[p], rng);
                rec.substitutions.insert(rec.substitutions.begin(), prefix.begin(), prefix.end());
            } else {
                rec = run_cse(sys, slots[p], rng);
            }
            results[p] = std::move(rec);
        });

        std::size_t best_p = 0;
        for (std::size_t p = 0; p < std::size_t(n); ++p) {
            last_cost[p] = results[p].cost;
            if (results[p].cost < results[best_p].cost)
                best_p = p;
        }
        if (!incumbent || results[best_p].cost < incumbent->cost) {
            incumbent = results[best_p];
            unchanged = 0;
        } else {
            ++unchanged;
        }
        if (on_iteration)
            on_iteration(iteration, *incumbent);
        if (unchanged >= cfg.patience)
            break;
    }
    return {std::move(*incumbent), iteration};
}

// 64-bit FNV-1a over the canonical scheme serialization, as a hex string.
inline std::string scheme_digest(const Scheme& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](long long value) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= std::uint64_t((value >> (8 * byte)) & 0xff);
            h *= 0x100000001b3ULL;
        }
    };
    feed(s.m); feed(s.n); feed(s.p); feed(s.r);
    for (const auto* tensor : {&s.u, &s.v, &s.w})
        for (const auto& row : *tensor)
            for (int8_t value : row)
                feed(value);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

namespace detail {

inline SchemeCheckReport check_scheme_auto(const Scheme& s, std::uint64_t seed) {
    // exact Brent verification is O(r * (mn*np*mp)); switch to the randomized
    // product check once it stops being sub-second
    if (s.r >= 200)
        return verify_by_product(s, 16, seed);
    return verify_brent(s);
}

inline int resolve_processes(const SearchConfig& cfg, int rank) {
    return cfg.n_processes > 0 ? cfg.n_processes : tier_processes(rank);
}

}  // namespace detail

// Optimizes E_U, E_V and E_W independently and assembles the report. The
// scheme is validated up front (exact Brent check, or the randomized product
// check for rank >= 200) and every winning record is re-verified by
// expansion before the report is returned.
inline SearchReport optimize_scheme(const Scheme& s, const SearchConfig& cfg) {
    detail::validate_config(cfg);
    const auto started = std::chrono::steady_clock::now();
    const auto check = detail::check_scheme_auto(s, cfg.master_seed);
    if (!check.valid)
        throw error("optimize_scheme: scheme failed validation ("
                    + check.first_violation.value_or("unknown") + ")");

    SearchConfig resolved = cfg;
    resolved.n_processes = detail::resolve_processes(cfg, s.r);

    const auto systems = extract_systems(s);
    SearchReport report;
    report.scheme_digest = scheme_digest(s);
    report.config = resolved;
    for (std::size_t comp = 0; comp < 3; ++comp) {
        auto outcome = optimize_system(systems[comp], resolved, std::uint64_t(comp));
        const auto final_state = replay_prefix(systems[comp], outcome.best.substitutions);
        if (total_cost(final_state) != outcome.best.cost || !expand_and_verify(systems[comp], final_state))
            throw error("optimize_scheme: internal verification failed");
        ComponentResult& result = report.components[comp];
        result.record = std::move(outcome.best);
        result.cost = result.record.cost;
        result.naive = naive_cost(systems[comp]);
        result.iterations = outcome.iterations;
        report.total += result.cost;
        report.iterations += result.iterations;
    }
    report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started).count();
    return report;
}

// Flip-mode search: every iteration rebuilds M schemes (slot 0 is always the
// unmodified input, the rest are fresh random flip chains), deals them
// round-robin to the processes and reduces all three expression sets of each.
// Prefix sharing applies only to the stable original scheme; flipped schemes
// are regenerated, so their processes always start fresh. The incumbent is
// the best per-scheme component-minimum total, and the winning scheme ships
// inside the report so its records stay verifiable.
inline SearchReport optimize_with_flips(const Scheme& s, const SearchConfig& cfg) {
    detail::validate_config(cfg);
    if (!cfg.flip_mode.enabled)
        throw error("optimize_with_flips: flip mode is disabled");
    if (cfg.flip_mode.m_schemes == 1)
        return optimize_scheme(s, cfg);

    const auto started = std::chrono::steady_clock::now();
    const auto check = detail::check_scheme_auto(s, cfg.master_seed);
    if (!check.valid)
        throw error("optimize_with_flips: scheme failed validation ("
                    + check.first_violation.value_or("unknown") + ")");

    SearchConfig resolved = cfg;
    resolved.n_processes = detail::resolve_processes(cfg, s.r);
    const int n = resolved.n_processes;
    const int m_schemes = std::min(resolved.flip_mode.m_schemes, n);

    const auto original_systems = extract_systems(s);

    struct Best {
        int total = 0;
        std::array<SolutionRecord, 3> records;
        std::array<int, 3> costs{};
        Scheme scheme;
        std::string id;
        int iteration = 0;
    };
    std::optional<Best> best;
    std::array<std::optional<SolutionRecord>, 3> original_incumbent;
    auto last_cost = std::vector<std::array<int, 3>>(std::size_t(n));

    int unchanged = 0;
    int iteration = 0;
    for (;;) {
        ++iteration;

        auto schemes = std::vector<Scheme>(std::size_t(m_schemes));
        auto scheme_ids = std::vector<std::string>(std::size_t(m_schemes));
        schemes[0] = s;
        scheme_ids[0] = "original";
        for (int slot = 1; slot < m_schemes; ++slot) {
            std::mt19937_64 flip_rng(mix_seed({resolved.master_seed, 0xf11b5ULL,
                                               std::uint64_t(iteration), std::uint64_t(slot)}));
            const int flips = std::uniform_int_distribution<int>(
                resolved.flip_mode.flips_min, resolved.flip_mode.flips_max)(flip_rng);
            Scheme flipped = s;
            for (int t = 0; t < flips; ++t)
                flipped = random_flip(flipped, flip_rng);
            // no scheme reaches a process without passing the validity check
            if (!detail::check_scheme_auto(flipped, resolved.master_seed).valid)
                throw error("optimize_with_flips: flip produced an invalid scheme");
            schemes[std::size_t(slot)] = std::move(flipped);
            scheme_ids[std::size_t(slot)] = "flip-" + std::to_string(iteration) + "-" + std::to_string(slot);
        }
        auto systems = std::vector<std::array<LinearSystem, 3>>(std::size_t(m_schemes));
        systems[0] = original_systems;
        for (int slot = 1; slot < m_schemes; ++slot)
            systems[std::size_t(slot)] = extract_systems(schemes[std::size_t(slot)]);

        const auto slots = assign_strategies(resolved, iteration, n, 0);

        // per-component reinit among the processes holding the original scheme
        std::array<std::vector<char>, 3> reinit;
        for (std::size_t comp = 0; comp < 3; ++comp) {
            reinit[comp].assign(std::size_t(n), 0);
            if (iteration < 2 || !original_incumbent[comp]
                || original_incumbent[comp]->substitutions.size() < 2)
                continue;
            std::vector<int> costs;
            std::vector<int> owners;
            for (int p = 0; p < n; ++p)
                if (p % m_schemes == 0) {
                    costs.push_back(last_cost[std::size_t(p)][comp]);
                    owners.push_back(p);
                }
            const auto chosen = detail::pick_reinit(costs, resolved.reinit_fraction);
            for (std::size_t t = 0; t < owners.size(); ++t)
                reinit[comp][std::size_t(owners[t])] = chosen[t];
        }

        auto results = std::vector<std::array<SolutionRecord, 3>>(std::size_t(n));
        detail::parallel_for(std::size_t(n) * 3, resolved.threads, [&](std::size_t task) {
            const std::size_t p = task / 3;
            const std::size_t comp = task % 3;
            const int scheme_slot = int(p) % m_schemes;
            const LinearSystem& base = systems[std::size_t(scheme_slot)][comp];
            std::mt19937_64 rng(mix_seed({slots[p].seed, std::uint64_t(comp)}));
            SolutionRecord rec;
            if (reinit[comp][p]) {
                const auto& inc = *original_incumbent[comp];
                const std::size_t k_max = 3 * inc.substitutions.size() / 4;
                const std::size_t k = std::uniform_int_distribution<std::size_t>(1, k_max)(rng);
                const std::span<const CanonicalPair> prefix{inc.substitutions.data(), k};
                rec = run_cse(replay_prefix(base, prefix), slots[p], rng);
                rec.substitutions.insert(rec.substitutions.begin(), prefix.begin(), prefix.end());
            } else {
                rec = run_cse(base, slots[p], rng);
            }
            results[p][comp] = std::move(rec);
        });

        for (std::size_t p = 0; p < std::size_t(n); ++p)
            for (std::size_t comp = 0; comp < 3; ++comp)
                last_cost[p][comp] = results[p][comp].cost;

        // component-wise minima are only combinable within one scheme instance
        bool improved = false;
        for (int slot = 0; slot < m_schemes; ++slot) {
            std::array<const SolutionRecord*, 3> chosen{};
            for (std::size_t comp = 0; comp < 3; ++comp) {
                for (int p = slot; p < n; p += m_schemes) {
                    const SolutionRecord& rec = results[std::size_t(p)][comp];
                    if (!chosen[comp] || rec.cost < chosen[comp]->cost)
                        chosen[comp] = &rec;
                }
            }
            if (!chosen[0])
                continue;  // more schemes than processes
            if (slot == 0) {
                for (std::size_t comp = 0; comp < 3; ++comp)
                    if (!original_incumbent[comp] || chosen[comp]->cost < original_incumbent[comp]->cost)
                        original_incumbent[comp] = *chosen[comp];
            }
            const int slot_total = chosen[0]->cost + chosen[1]->cost + chosen[2]->cost;
            if (!best || slot_total < best->total) {
                Best candidate;
                candidate.total = slot_total;
                candidate.records = {*chosen[0], *chosen[1], *chosen[2]};
                candidate.costs = {chosen[0]->cost, chosen[1]->cost, chosen[2]->cost};
                candidate.scheme = schemes[std::size_t(slot)];
                candidate.id = scheme_ids[std::size_t(slot)];
                candidate.iteration = iteration;
                best = std::move(candidate);
                improved = true;
            }
        }
        unchanged = improved ? 0 : unchanged + 1;
        if (unchanged >= resolved.patience)
            break;
    }

    SearchReport report;
    report.scheme_digest = scheme_digest(best->scheme);
    report.config = resolved;
    report.carried_scheme = best->scheme;
    const auto best_systems = extract_systems(best->scheme);
    for (std::size_t comp = 0; comp < 3; ++comp) {
        const auto final_state = replay_prefix(best_systems[comp], best->records[comp].substitutions);
        if (total_cost(final_state) != best->records[comp].cost
            || !expand_and_verify(best_systems[comp], final_state))
            throw error("optimize_with_flips: internal verification failed");
        ComponentResult& result = report.components[comp];
        result.record = best->records[comp];
        result.cost = best->costs[comp];
        result.naive = naive_cost(best_systems[comp]);
        result.iterations = iteration;
        result.scheme_id = best->id;
        report.total += result.cost;
    }
    report.iterations = iteration;
    report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started).count();
    return report;
}

// Component-wise minimum across reports for the same scheme: picks the
// cheapest record per component and sums the three minima.
inline SearchReport combine_componentwise(const std::vector<SearchReport>& reports) {
    if (reports.empty())
        throw error("combine: no reports");
    for (const auto& report : reports)
        if (report.scheme_digest != reports.front().scheme_digest)
            throw error("combine: reports refer to different schemes ("
                        + reports.front().scheme_digest + " vs " + report.scheme_digest + ")");
    SearchReport combined = reports.front();
    if (reports.size() == 1)
        return combined;
    combined.total = 0;
    combined.iterations = 0;
    combined.wall_ms = 0;
    combined.combined_minimum = true;
    for (std::size_t comp = 0; comp < 3; ++comp) {
        const SearchReport* source = &reports.front();
        for (const auto& report : reports)
            if (report.components[comp].cost < source->components[comp].cost)
                source = &report;
        combined.components[comp] = source->components[comp];
        combined.total += combined.components[comp].cost;
        combined.iterations += combined.components[comp].iterations;
        combined.wall_ms += source->wall_ms;
    }
    return combined;
}

}  // namespace terncse
