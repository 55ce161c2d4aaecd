#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "linear_system.hpp"
#include "strategies.hpp"

namespace terncse {

// One complete reduction: the substitution sequence in application order
// (fresh ids implied by position) and the resulting total cost. Replaying the
// sequence on the original system reproduces the cost exactly.
struct SolutionRecord {
    std::vector<CanonicalPair> substitutions;
    int cost = 0;
    StrategyKind strategy = StrategyKind::greedy;
    std::uint64_t seed = 0;
};

// Iterates {count pairs -> select -> substitute} until no pair occurs twice.
// Each step strictly lowers the total cost by c - 1, so the loop ends within
// the initial naive cost. The system is taken by value; pass a replayed
// partial state to continue from a shared prefix.
inline SolutionRecord run_cse(LinearSystem sys, const ProcessConfig& cfg, std::mt19937_64& rng) {
    SolutionRecord rec;
    rec.strategy = cfg.strategy;
    rec.seed = cfg.seed;
    for (;;) {
        const PairStats stats = count_pairs(sys);
        const auto pick = select_pair(sys, stats, cfg, rng);
        if (!pick)
            break;
        apply_substitution(sys, *pick);
        rec.substitutions.push_back(*pick);
    }
    rec.cost = total_cost(sys);
    return rec;
}

// Applies the first substitutions of a shared solution in order. Throws if a
// pair no longer occurs, naming the failing position.
inline LinearSystem replay_prefix(const LinearSystem& original, std::span<const CanonicalPair> prefix) {
    LinearSystem sys = original;
    for (std::size_t t = 0; t < prefix.size(); ++t) {
        try {
            apply_substitution(sys, prefix[t]);
        } catch (const error&) {
            throw error("replay_prefix: unreplayable pair at position " + std::to_string(t));
        }
    }
    return sys;
}

struct OracleResult {
    SolutionRecord best;
    bool exact = true;
};

namespace detail {

// Canonical key for the oracle memo: expressions sorted with fresh ids
// renamed by first appearance, so states reached by reordered substitutions
// merge.
inline std::string oracle_encode(const LinearSystem& sys) {
    std::vector<std::vector<int>> rows;
    rows.reserve(sys.expressions.size());
    for (const auto& expr : sys.expressions) {
        std::vector<int> row(expr.begin(), expr.end());
        std::sort(row.begin(), row.end(), [](int a, int b) {
            return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
        });
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end());

    std::unordered_map<int, int> rename;
    int next_fresh = sys.n_x + 1;
    for (auto& row : rows) {
        for (int& term : row) {
            const int id = std::abs(term);
            if (id <= sys.n_x)
                continue;
            auto [it, inserted] = rename.try_emplace(id, next_fresh);
            if (inserted)
                ++next_fresh;
            term = term > 0 ? it->second : -it->second;
        }
        std::sort(row.begin(), row.end(), [](int a, int b) {
            return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
        });
    }
    std::sort(rows.begin(), rows.end());

    std::string key;
    for (const auto& row : rows) {
        for (int term : row) {
            key += std::to_string(term);
            key += ',';
        }
        key += ';';
    }
    return key;
}

struct OracleSearch {
    std::unordered_map<std::string, int> memo;  // state -> best residual cost
    std::size_t nodes_left = 0;
    bool exhausted = false;

    // Residual cost: fresh definitions still to add plus the final naive
    // cost, minimized over all completions. Not substituting is always
    // dominated, so leaves are exactly the states without candidates.
    int residual(const LinearSystem& sys) {
        const auto cands = count_pairs(sys).candidates();
        if (cands.empty())
            return naive_cost(sys);
        const std::string key = oracle_encode(sys);
        if (auto it = memo.find(key); it != memo.end())
            return it->second;
        if (nodes_left == 0) {
            exhausted = true;
            return greedy_residual(sys);  // upper bound, never memoized
        }
        --nodes_left;
        int best = std::numeric_limits<int>::max();
        for (const auto& pc : cands) {
            LinearSystem child = sys;
            apply_substitution(child, pc.pair);
            best = std::min(best, 1 + residual(child));
        }
        if (!exhausted)
            memo.emplace(key, best);
        return best;
    }

    static int greedy_residual(LinearSystem sys) {
        int extra = 0;
        for (;;) {
            const auto cands = count_pairs(sys).candidates();
            if (cands.empty())
                return extra + naive_cost(sys);
            apply_substitution(sys, cands[0].pair);
            ++extra;
        }
    }
};

}  // namespace detail

// Exhaustive depth-first search over all substitutable pairs with
// memoization. Exact when the node budget suffices, otherwise returns the
// best completion found and clears the exact flag. Intended for tiny systems.
inline OracleResult brute_force_optimal(const LinearSystem& sys, std::size_t max_nodes = 1u << 20) {
    detail::OracleSearch search;
    search.nodes_left = max_nodes;
    const int target = search.residual(sys) + sys.fresh_count();

    OracleResult result;
    result.exact = !search.exhausted;

    // walk the memo to reconstruct one optimal substitution sequence
    LinearSystem state = sys;
    for (;;) {
        const auto cands = count_pairs(state).candidates();
        if (cands.empty())
            break;
        bool advanced = false;
        const int want = target - state.fresh_count();
        for (const auto& pc : cands) {
            LinearSystem child = state;
            apply_substitution(child, pc.pair);
            const auto child_cands = count_pairs(child).candidates();
            const int child_res = child_cands.empty()
                ? naive_cost(child)
                : [&]() {
                      auto it = search.memo.find(detail::oracle_encode(child));
                      return it == search.memo.end() ? std::numeric_limits<int>::max() : it->second;
                  }();
            if (child_res != std::numeric_limits<int>::max() && 1 + child_res == want) {
                state = std::move(child);
                result.best.substitutions.push_back(pc.pair);
                advanced = true;
                break;
            }
        }
        if (!advanced) {
            // budget ran out mid-tree; fall back to greedy completion
            apply_substitution(state, cands[0].pair);
            result.best.substitutions.push_back(cands[0].pair);
        }
    }
    result.best.cost = total_cost(state);
    return result;
}

}  // namespace terncse
