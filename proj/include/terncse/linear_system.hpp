#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace terncse {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two-term pattern x_i + rel_sign*x_j, normalized so that i < j and the
// coefficient of x_i is +1.
struct CanonicalPair {
    int i = 0;
    int j = 0;
    int rel_sign = 1;

    friend bool operator==(const CanonicalPair&, const CanonicalPair&) = default;
};

// Ordering used for every deterministic tie-break: (i, j, sign) with '+'
// before '-'.
inline bool operator<(const CanonicalPair& a, const CanonicalPair& b) {
    const int sa = a.rel_sign < 0 ? 1 : 0;
    const int sb = b.rel_sign < 0 ? 1 : 0;
    return std::tie(a.i, a.j, sa) < std::tie(b.i, b.j, sb);
}

struct PairHash {
    std::size_t operator()(const CanonicalPair& q) const {
        std::uint64_t h = (std::uint64_t(std::uint32_t(q.i)) << 33)
                        ^ (std::uint64_t(std::uint32_t(q.j)) << 1)
                        ^ std::uint64_t(q.rel_sign < 0);
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return std::size_t(h);
    }
};

// Normalizes the two-term combination given by signed indices a, b. Returns
// the canonical pair plus the occurrence sign occ such that
// occ * (x_i + rel_sign*x_j) reproduces the input.
inline std::pair<CanonicalPair, int> canonicalize(int a, int b) {
    if (a == 0 || b == 0 || std::abs(a) == std::abs(b))
        throw error("canonicalize: invalid pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    if (std::abs(a) > std::abs(b))
        std::swap(a, b);
    const int occ = a > 0 ? 1 : -1;
    const int rel = (a > 0) == (b > 0) ? 1 : -1;
    return {CanonicalPair{std::abs(a), std::abs(b), rel}, occ};
}

// An expression is a set of signed variable indices: +i means coefficient +1
// on x_i, -i means -1. Indices start at 1.
using Expression = std::unordered_set<int>;

struct FreshDef {
    int id = 0;
    CanonicalPair pair;
};

// A set of ternary linear expressions plus the fresh-variable definitions
// accumulated by CSE. Base variables are 1..n_x; fresh variable t gets id
// n_x + t in definition order, so a substitution sequence alone replays the
// whole state.
struct LinearSystem {
    int n_x = 0;
    std::vector<Expression> expressions;
    std::vector<FreshDef> fresh_defs;

    LinearSystem() = default;

    LinearSystem(int base_vars, const std::vector<std::vector<int>>& exprs) : n_x(base_vars) {
        if (base_vars < 0)
            throw error("linear system: negative variable count");
        expressions.reserve(exprs.size());
        for (std::size_t row = 0; row < exprs.size(); ++row) {
            Expression e;
            for (int term : exprs[row]) {
                if (term == 0 || std::abs(term) > n_x)
                    throw error("linear system: index " + std::to_string(term) + " out of range in expression " + std::to_string(row));
                if (e.count(-term))
                    throw error("linear system: expression " + std::to_string(row) + " contains both signs of x" + std::to_string(std::abs(term)));
                if (!e.insert(term).second)
                    throw error("linear system: duplicate term in expression " + std::to_string(row));
            }
            expressions.push_back(std::move(e));
        }
    }

    int fresh_count() const { return int(fresh_defs.size()); }
    int var_count() const { return n_x + fresh_count(); }
    int next_id() const { return var_count() + 1; }

    void check() const {
        for (std::size_t t = 0; t < fresh_defs.size(); ++t) {
            const auto& def = fresh_defs[t];
            if (def.id != n_x + int(t) + 1)
                throw error("linear system: fresh ids are not dense");
            if (def.pair.i >= def.id || def.pair.j >= def.id)
                throw error("linear system: fresh definition references a later id");
        }
        for (const auto& e : expressions) {
            for (int term : e) {
                if (term == 0 || std::abs(term) > var_count())
                    throw error("linear system: index out of range");
                if (e.count(-term))
                    throw error("linear system: expression contains both signs of one variable");
            }
        }
    }
};

struct PairCount {
    CanonicalPair pair;
    int count = 0;
};

// Pair frequencies over a system. A pair occurs at most once per expression
// (expressions are sets), so the frequency is the number of expressions
// containing the pattern or its full negation.
struct PairStats {
    std::unordered_map<CanonicalPair, int, PairHash> freq;

    int count(const CanonicalPair& q) const {
        auto it = freq.find(q);
        return it == freq.end() ? 0 : it->second;
    }

    // Substitutable pairs (frequency >= 2) in canonical (i, j, sign) order.
    std::vector<PairCount> candidates() const {
        std::vector<PairCount> out;
        for (const auto& [pair, c] : freq)
            if (c >= 2)
                out.push_back({pair, c});
        std::sort(out.begin(), out.end(), [](const PairCount& a, const PairCount& b) { return a.pair < b.pair; });
        return out;
    }
};

inline PairStats count_pairs(const LinearSystem& sys) {
    PairStats stats;
    std::vector<int> terms;
    for (const auto& expr : sys.expressions) {
        terms.assign(expr.begin(), expr.end());
        for (std::size_t a = 0; a + 1 < terms.size(); ++a)
            for (std::size_t b = a + 1; b < terms.size(); ++b)
                ++stats.freq[canonicalize(terms[a], terms[b]).first];
    }
    return stats;
}

// Defines a fresh variable x_k = x_i + rel_sign*x_j and replaces every
// occurrence of the pattern (or its negation) by +-x_k. Touches only the
// expressions containing the pattern; each replacement shortens that
// expression by one term. Returns k.
inline int apply_substitution(LinearSystem& sys, const CanonicalPair& q) {
    const int k = sys.next_id();
    const int first = q.i;
    const int second = q.rel_sign * q.j;
    int replaced = 0;
    for (auto& expr : sys.expressions) {
        if (expr.count(first) && expr.count(second)) {
            expr.erase(first);
            expr.erase(second);
            expr.insert(k);
            ++replaced;
        } else if (expr.count(-first) && expr.count(-second)) {
            expr.erase(-first);
            expr.erase(-second);
            expr.insert(-k);
            ++replaced;
        }
    }
    if (replaced == 0)
        throw error("apply_substitution: pair (" + std::to_string(q.i) + "," + std::to_string(q.rel_sign * q.j) + ") has no occurrence");
    sys.fresh_defs.push_back({k, q});
    return k;
}

// Additions needed to evaluate the expressions directly: sum of
// (term count - 1) with empty and single-term rows contributing 0.
inline int naive_cost(const LinearSystem& sys) {
    int cost = 0;
    for (const auto& expr : sys.expressions)
        if (!expr.empty())
            cost += int(expr.size()) - 1;
    return cost;
}

// One addition per fresh definition plus the final naive cost.
inline int total_cost(const LinearSystem& sys) {
    return sys.fresh_count() + naive_cost(sys);
}

// Substitutes the fresh definitions back with exact integer arithmetic and
// checks that every expression expands to the corresponding original one.
inline bool expand_and_verify(const LinearSystem& original, const LinearSystem& optimized) {
    if (original.n_x != optimized.n_x || original.expressions.size() != optimized.expressions.size())
        return false;
    const int n_x = original.n_x;

    // base-variable expansion of every fresh variable, built in definition order
    std::vector<std::unordered_map<int, long long>> expansions;
    expansions.reserve(optimized.fresh_defs.size());
    auto accumulate = [&](std::unordered_map<int, long long>& acc, int id, long long coeff) {
        if (id <= 0)
            throw error("expand_and_verify: bad variable id");
        if (id <= n_x) {
            acc[id] += coeff;
            return;
        }
        const std::size_t t = std::size_t(id - n_x - 1);
        if (t >= expansions.size())
            throw error("expand_and_verify: reference to undefined fresh id " + std::to_string(id));
        for (const auto& [base, c] : expansions[t])
            acc[base] += coeff * c;
    };

    for (std::size_t t = 0; t < optimized.fresh_defs.size(); ++t) {
        const auto& def = optimized.fresh_defs[t];
        if (def.id != n_x + int(t) + 1)
            throw error("expand_and_verify: fresh ids are not dense");
        std::unordered_map<int, long long> acc;
        accumulate(acc, def.pair.i, 1);
        accumulate(acc, def.pair.j, def.pair.rel_sign);
        expansions.push_back(std::move(acc));
    }

    for (std::size_t row = 0; row < original.expressions.size(); ++row) {
        std::unordered_map<int, long long> acc;
        for (int term : optimized.expressions[row])
            accumulate(acc, std::abs(term), term > 0 ? 1 : -1);
        std::size_t nonzero = 0;
        for (const auto& [base, c] : acc) {
            if (c == 0)
                continue;
            ++nonzero;
            if (c != 1 && c != -1)
                return false;
            if (!original.expressions[row].count(c > 0 ? base : -base))
                return false;
        }
        if (nonzero != original.expressions[row].size())
            return false;
    }
    return true;
}

}  // namespace terncse
