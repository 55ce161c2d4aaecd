#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "linear_system.hpp"

namespace terncse {

enum class StrategyKind {
    greedy,
    greedy_alternative,
    weighted_random,
    greedy_random,
    greedy_intersections,
    mixed,
    greedy_potential,
};

inline constexpr std::size_t strategy_count = 7;

inline constexpr std::array<const char*, strategy_count> strategy_names{
    "greedy", "greedy_alternative", "weighted_random", "greedy_random",
    "greedy_intersections", "mixed", "greedy_potential",
};

inline constexpr std::array<const char*, strategy_count> strategy_short_names{
    "g", "ga", "wr", "gr", "gi", "mix", "gp",
};

inline const char* to_string(StrategyKind kind) {
    return strategy_names[std::size_t(kind)];
}

inline std::optional<StrategyKind> strategy_from_string(const std::string& name) {
    for (std::size_t k = 0; k < strategy_count; ++k)
        if (name == strategy_names[k] || name == strategy_short_names[k])
            return StrategyKind(k);
    return std::nullopt;
}

// Per-process tunables, drawn once per reduction process.
struct ProcessConfig {
    StrategyKind strategy = StrategyKind::greedy;
    double alpha = 0.25;     // gi scaling / gp blend weight, in [0, 0.5]
    double beta = 0.75;      // gi survival weight, in [0.5, 1.0]
    double p_greedy = 0.75;  // gr exploitation probability, in (0.5, 1.0)
    std::uint64_t seed = 0;
    std::array<double, 4> mix_weights{8.0, 4.0, 2.0, 1.0};  // gi, ga, gr, wr
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::optional<CanonicalPair> greedy_from(const std::vector<PairCount>& cands) {
    if (cands.empty())
        return std::nullopt;
    const PairCount* best = &cands[0];
    for (const auto& pc : cands)
        if (pc.count > best->count)
            best = &pc;  // candidates are sorted, first max wins ties
    return best->pair;
}

inline std::optional<CanonicalPair> greedy_alternative_from(const std::vector<PairCount>& cands, std::mt19937_64& rng) {
    if (cands.empty())
        return std::nullopt;
    int max_c = 0;
    for (const auto& pc : cands)
        max_c = std::max(max_c, pc.count);
    std::vector<const PairCount*> argmax;
    for (const auto& pc : cands)
        if (pc.count == max_c)
            argmax.push_back(&pc);
    std::uniform_int_distribution<std::size_t> pick(0, argmax.size() - 1);
    return argmax[pick(rng)]->pair;
}

inline std::optional<CanonicalPair> weighted_random_from(const std::vector<PairCount>& cands, std::mt19937_64& rng) {
    if (cands.empty())
        return std::nullopt;
    double total = 0.0;
    for (const auto& pc : cands)
        total += pc.count - 1;
    double target = uniform01(rng) * total;
    for (const auto& pc : cands) {
        target -= pc.count - 1;
        if (target < 0.0)
            return pc.pair;
    }
    return cands.back().pair;
}

}  // namespace detail

// Always the highest-frequency pair; ties go to the smallest (i, j, sign).
inline std::optional<CanonicalPair> select_greedy(const PairStats& stats) {
    return detail::greedy_from(stats.candidates());
}

// Uniform choice among the maximum-frequency pairs.
inline std::optional<CanonicalPair> select_greedy_alternative(const PairStats& stats, std::mt19937_64& rng) {
    return detail::greedy_alternative_from(stats.candidates(), rng);
}

// Pair q drawn with probability proportional to its profit c_q - 1.
inline std::optional<CanonicalPair> select_weighted_random(const PairStats& stats, std::mt19937_64& rng) {
    return detail::weighted_random_from(stats.candidates(), rng);
}

// With probability p_greedy exploit via greedy-alternative, otherwise explore
// via weighted-random.
inline std::optional<CanonicalPair> select_greedy_random(const PairStats& stats, const ProcessConfig& cfg, std::mt19937_64& rng) {
    const auto cands = stats.candidates();
    if (detail::uniform01(rng) < cfg.p_greedy)
        return detail::greedy_alternative_from(cands, rng);
    return detail::weighted_random_from(cands, rng);
}

// Sign-insensitive: true iff the pairs share a variable index.
inline bool pairs_intersect(const CanonicalPair& a, const CanonicalPair& b) {
    return a.i == b.i || a.i == b.j || a.j == b.i || a.j == b.j;
}

namespace detail {

// H(q) = (c_q - 1) + alpha * sum of I(q, s) over the other candidates, where
// disjoint pairs keep their profit and intersecting pairs survive with
// probability 0.5 at weight beta. Fresh coin flips on every call.
inline double score_intersections_from(const CanonicalPair& q, int c_q,
                                       const std::vector<PairCount>& cands,
                                       const ProcessConfig& cfg, std::mt19937_64& rng) {
    const double gain = double(c_q - 1);
    if (cfg.alpha == 0.0)
        return gain;
    double future = 0.0;
    std::uniform_int_distribution<int> coin(0, 1);
    for (const auto& pc : cands) {
        if (pc.pair == q)
            continue;
        if (!pairs_intersect(q, pc.pair))
            future += pc.count - 1;
        else if (coin(rng))
            future += cfg.beta * (pc.count - 1);
    }
    return gain + cfg.alpha * future;
}

}  // namespace detail

inline double score_intersections(const CanonicalPair& q, const PairStats& stats,
                                  const ProcessConfig& cfg, std::mt19937_64& rng) {
    return detail::score_intersections_from(q, stats.count(q), stats.candidates(), cfg, rng);
}

inline std::optional<CanonicalPair> select_greedy_intersections(const PairStats& stats, const ProcessConfig& cfg, std::mt19937_64& rng) {
    const auto cands = stats.candidates();
    if (cands.empty())
        return std::nullopt;
    std::optional<CanonicalPair> best;
    double best_score = 0.0;
    for (const auto& pc : cands) {
        const double h = detail::score_intersections_from(pc.pair, pc.count, cands, cfg, rng);
        if (!best || h > best_score) {
            best = pc.pair;
            best_score = h;
        }
    }
    return best;
}

// Scores a pair by a trial substitution on a scratch copy: immediate profit
// plus alpha times the number of pairs that become substitutable (frequency
// reaching 2) only in the trial state.
inline double score_potential(const CanonicalPair& q, const LinearSystem& sys, double alpha) {
    const PairStats before = count_pairs(sys);
    const double gain = double(before.count(q) - 1);
    if (alpha == 0.0)
        return gain;
    LinearSystem trial = sys;
    apply_substitution(trial, q);
    const PairStats after = count_pairs(trial);
    int created = 0;
    for (const auto& [pair, c] : after.freq)
        if (c >= 2 && before.count(pair) < 2)
            ++created;
    return gain + alpha * created;
}

inline std::optional<CanonicalPair> select_greedy_potential(const LinearSystem& sys, const PairStats& stats, double alpha) {
    const auto cands = stats.candidates();
    if (cands.empty())
        return std::nullopt;
    std::optional<CanonicalPair> best;
    double best_score = 0.0;
    for (const auto& pc : cands) {
        double score = double(pc.count - 1);
        if (alpha != 0.0) {
            LinearSystem trial = sys;
            apply_substitution(trial, pc.pair);
            const PairStats after = count_pairs(trial);
            int created = 0;
            for (const auto& [pair, c] : after.freq)
                if (c >= 2 && stats.count(pair) < 2)
                    ++created;
            score += alpha * created;
        }
        if (!best || score > best_score) {
            best = pc.pair;
            best_score = score;
        }
    }
    return best;
}

namespace detail {

inline constexpr std::array<StrategyKind, 4> mixed_substrategies{
    StrategyKind::greedy_intersections,
    StrategyKind::greedy_alternative,
    StrategyKind::greedy_random,
    StrategyKind::weighted_random,
};

}  // namespace detail

// Sub-strategy draw for the mixed strategy, proportional to mix_weights over
// (gi, ga, gr, wr). A single positive weight delegates without consuming
// randomness, so degenerate weight vectors match the direct strategy exactly.
inline StrategyKind pick_mixed_substrategy(const ProcessConfig& cfg, std::mt19937_64& rng) {
    double total = 0.0;
    int positive = 0;
    std::size_t only = 0;
    for (std::size_t k = 0; k < cfg.mix_weights.size(); ++k) {
        if (cfg.mix_weights[k] < 0.0)
            throw error("mixed strategy: negative weight");
        if (cfg.mix_weights[k] > 0.0) {
            ++positive;
            only = k;
        }
        total += cfg.mix_weights[k];
    }
    if (positive == 0)
        throw error("mixed strategy: all weights are zero");
    if (positive == 1)
        return detail::mixed_substrategies[only];
    double target = detail::uniform01(rng) * total;
    for (std::size_t k = 0; k < cfg.mix_weights.size(); ++k) {
        target -= cfg.mix_weights[k];
        if (target < 0.0)
            return detail::mixed_substrategies[k];
    }
    return detail::mixed_substrategies.back();
}

inline std::optional<CanonicalPair> select_mixed(const PairStats& stats, const ProcessConfig& cfg, std::mt19937_64& rng) {
    switch (pick_mixed_substrategy(cfg, rng)) {
        case StrategyKind::greedy_intersections: return select_greedy_intersections(stats, cfg, rng);
        case StrategyKind::greedy_alternative: return select_greedy_alternative(stats, rng);
        case StrategyKind::greedy_random: return select_greedy_random(stats, cfg, rng);
        default: return select_weighted_random(stats, rng);
    }
}

// Dispatch on the configured strategy. All selectors return a pair with
// frequency >= 2 or nothing when the CSE loop should stop.
inline std::optional<CanonicalPair> select_pair(const LinearSystem& sys, const PairStats& stats,
                                                const ProcessConfig& cfg, std::mt19937_64& rng) {
    switch (cfg.strategy) {
        case StrategyKind::greedy: return select_greedy(stats);
        case StrategyKind::greedy_alternative: return select_greedy_alternative(stats, rng);
        case StrategyKind::weighted_random: return select_weighted_random(stats, rng);
        case StrategyKind::greedy_random: return select_greedy_random(stats, cfg, rng);
        case StrategyKind::greedy_intersections: return select_greedy_intersections(stats, cfg, rng);
        case StrategyKind::mixed: return select_mixed(stats, cfg, rng);
        case StrategyKind::greedy_potential: return select_greedy_potential(sys, stats, cfg.alpha);
    }
    throw error("select_pair: unknown strategy");
}

}  // namespace terncse
