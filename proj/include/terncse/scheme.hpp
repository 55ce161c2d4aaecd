#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "linear_system.hpp"

namespace terncse {

// A matrix multiplication scheme (m, n, p : r) with ternary coefficients.
// u holds r rows of m*n entries ((i,j), j fastest), v holds r rows of n*p
// entries ((j,k), k fastest), w holds m*p rows of r entries (rows (i,j), j
// fastest). Values are immutable after construction in all search paths, so
// they are shared read-only across processes.
struct Scheme {
    int m = 0, n = 0, p = 0, r = 0;
    std::vector<std::vector<int8_t>> u;
    std::vector<std::vector<int8_t>> v;
    std::vector<std::vector<int8_t>> w;

    friend bool operator==(const Scheme&, const Scheme&) = default;
};

enum class CheckMethod { exact_brent, randomized_product };

struct SchemeCheckReport {
    bool valid = false;
    std::optional<std::string> first_violation;
    CheckMethod method = CheckMethod::exact_brent;
};

namespace detail {

inline void check_tensor(const std::vector<std::vector<int8_t>>& t, const char* name,
                         std::size_t rows, std::size_t cols) {
    if (t.size() != rows)
        throw error(std::string("scheme: tensor ") + name + " has " + std::to_string(t.size())
                    + " rows, expected " + std::to_string(rows));
    for (std::size_t row = 0; row < rows; ++row) {
        if (t[row].size() != cols)
            throw error(std::string("scheme: tensor ") + name + " row " + std::to_string(row)
                        + " has " + std::to_string(t[row].size()) + " entries, expected " + std::to_string(cols));
        for (std::size_t col = 0; col < cols; ++col)
            if (t[row][col] < -1 || t[row][col] > 1)
                throw error(std::string("scheme: coefficient out of range at ") + name + "["
                            + std::to_string(row) + "][" + std::to_string(col) + "]");
    }
}

}  // namespace detail

// Throws on dimension mismatches or non-ternary coefficients.
inline void check_structure(const Scheme& s) {
    if (s.m < 1 || s.n < 1 || s.p < 1 || s.r < 1)
        throw error("scheme: dimensions and rank must be positive");
    detail::check_tensor(s.u, "u", std::size_t(s.r), std::size_t(s.m) * s.n);
    detail::check_tensor(s.v, "v", std::size_t(s.r), std::size_t(s.n) * s.p);
    detail::check_tensor(s.w, "w", std::size_t(s.m) * s.p, std::size_t(s.r));
}

// Exact integer check of every Brent identity:
// sum_q u^q_(i,j) v^q_(k,l) w^q_(i',j') = [j==k][i==i'][l==j'].
inline SchemeCheckReport verify_brent(const Scheme& s) {
    check_structure(s);
    SchemeCheckReport report;
    report.method = CheckMethod::exact_brent;
    for (int i = 0; i < s.m; ++i)
        for (int j = 0; j < s.n; ++j)
            for (int k = 0; k < s.n; ++k)
                for (int l = 0; l < s.p; ++l)
                    for (int i2 = 0; i2 < s.m; ++i2)
                        for (int j2 = 0; j2 < s.p; ++j2) {
                            long long sum = 0;
                            const int uc = i * s.n + j;
                            const int vc = k * s.p + l;
                            const int wrow = i2 * s.p + j2;
                            for (int q = 0; q < s.r; ++q)
                                sum += (long long)s.u[q][uc] * s.v[q][vc] * s.w[wrow][q];
                            const long long expected = (j == k && i == i2 && l == j2) ? 1 : 0;
                            if (sum != expected) {
                                report.valid = false;
                                report.first_violation = "brent(" + std::to_string(i) + "," + std::to_string(j)
                                    + "," + std::to_string(k) + "," + std::to_string(l) + ","
                                    + std::to_string(i2) + "," + std::to_string(j2) + ")";
                                return report;
                            }
                        }
    report.valid = true;
    return report;
}

// Probabilistic check for large ranks: multiplies random integer matrices
// through the scheme's bilinear form and compares with the exact product.
inline SchemeCheckReport verify_by_product(const Scheme& s, int trials, std::uint64_t seed) {
    check_structure(s);
    if (trials < 1)
        throw error("verify_by_product: trials must be >= 1");
    SchemeCheckReport report;
    report.method = CheckMethod::randomized_product;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> entry(-8, 8);
    std::vector<long long> a(std::size_t(s.m) * s.n), b(std::size_t(s.n) * s.p);
    std::vector<long long> products(std::size_t(s.r));
    for (int trial = 0; trial < trials; ++trial) {
        for (auto& x : a) x = entry(rng);
        for (auto& x : b) x = entry(rng);
        for (int q = 0; q < s.r; ++q) {
            long long left = 0, right = 0;
            for (std::size_t t = 0; t < a.size(); ++t) left += s.u[q][t] * a[t];
            for (std::size_t t = 0; t < b.size(); ++t) right += s.v[q][t] * b[t];
            products[std::size_t(q)] = left * right;
        }
        for (int i = 0; i < s.m; ++i)
            for (int j = 0; j < s.p; ++j) {
                long long expected = 0;
                for (int k = 0; k < s.n; ++k)
                    expected += a[std::size_t(i) * s.n + k] * b[std::size_t(k) * s.p + j];
                long long got = 0;
                const auto& wrow = s.w[std::size_t(i) * s.p + j];
                for (int q = 0; q < s.r; ++q)
                    got += wrow[q] * products[std::size_t(q)];
                if (got != expected) {
                    report.valid = false;
                    report.first_violation = "trial " + std::to_string(trial) + " mismatch at c["
                        + std::to_string(i) + "][" + std::to_string(j) + "]";
                    return report;
                }
            }
    }
    report.valid = true;
    return report;
}

// The three expression sets whose additions the scheme costs: E_U (r rows
// over m*n variables), E_V (r rows over n*p variables), E_W (m*p rows over r
// variables). Zero coefficients produce no term.
inline std::array<LinearSystem, 3> extract_systems(const Scheme& s) {
    check_structure(s);
    auto rows_of = [](const std::vector<std::vector<int8_t>>& t) {
        std::vector<std::vector<int>> rows(t.size());
        for (std::size_t row = 0; row < t.size(); ++row)
            for (std::size_t col = 0; col < t[row].size(); ++col)
                if (t[row][col] != 0)
                    rows[row].push_back(t[row][col] > 0 ? int(col) + 1 : -(int(col) + 1));
        return rows;
    };
    return {
        LinearSystem(s.m * s.n, rows_of(s.u)),
        LinearSystem(s.n * s.p, rows_of(s.v)),
        LinearSystem(s.r, rows_of(s.w)),
    };
}

// The standard scheme with rank m*n*p: product (i,j,k) multiplies a_ij by
// b_jk into c_ik. Useful as a flip-graph starting point.
inline Scheme naive_scheme(int m, int n, int p) {
    Scheme s;
    s.m = m; s.n = n; s.p = p; s.r = m * n * p;
    s.u.assign(std::size_t(s.r), std::vector<int8_t>(std::size_t(m) * n, 0));
    s.v.assign(std::size_t(s.r), std::vector<int8_t>(std::size_t(n) * p, 0));
    s.w.assign(std::size_t(m) * p, std::vector<int8_t>(std::size_t(s.r), 0));
    int q = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < p; ++k, ++q) {
                s.u[q][std::size_t(i) * n + j] = 1;
                s.v[q][std::size_t(j) * p + k] = 1;
                s.w[std::size_t(i) * p + k][q] = 1;
            }
    return s;
}

namespace detail {

inline bool add_rows_ternary(std::vector<int8_t>& dst, const std::vector<int8_t>& src, int sign) {
    std::vector<int8_t> out(dst.size());
    bool nonzero = false;
    for (std::size_t t = 0; t < dst.size(); ++t) {
        const int value = dst[t] + sign * src[t];
        if (value < -1 || value > 1)
            return false;
        out[t] = int8_t(value);
        nonzero |= value != 0;
    }
    if (!nonzero)
        return false;  // a dead product would silently drop the rank
    dst = std::move(out);
    return true;
}

}  // namespace detail

// One random move on the flip graph: two products with equal rows in one
// tensor exchange mass in the other two (row sum on one side, row difference
// on the other), which preserves the tensor decomposition. Candidate pairs
// and role assignments are tried in random order; moves leaving the ternary
// set or zeroing a row are rejected. Falls back to an unchanged copy when no
// admissible move exists.
inline Scheme random_flip(const Scheme& s, std::mt19937_64& rng) {
    struct Candidate {
        int tensor;  // 0: u rows equal, 1: v rows equal, 2: w columns equal
        int q1, q2;
    };
    std::vector<Candidate> candidates;
    std::vector<std::vector<int8_t>> wcols(std::size_t(s.r), std::vector<int8_t>(s.w.size()));
    for (std::size_t row = 0; row < s.w.size(); ++row)
        for (int q = 0; q < s.r; ++q)
            wcols[std::size_t(q)][row] = s.w[row][std::size_t(q)];
    auto wcol = [&](int q) -> const std::vector<int8_t>& { return wcols[std::size_t(q)]; };
    for (int q1 = 0; q1 < s.r; ++q1)
        for (int q2 = q1 + 1; q2 < s.r; ++q2) {
            if (s.u[std::size_t(q1)] == s.u[std::size_t(q2)])
                candidates.push_back({0, q1, q2});
            if (s.v[std::size_t(q1)] == s.v[std::size_t(q2)])
                candidates.push_back({1, q1, q2});
            if (wcol(q1) == wcol(q2))
                candidates.push_back({2, q1, q2});
        }
    if (candidates.empty())
        return s;
    std::shuffle(candidates.begin(), candidates.end(), rng);

    for (const auto& cand : candidates) {
        // the two tensors that change; within each variant one product takes
        // the row sum and the other the row difference
        std::array<int, 2> others{};
        switch (cand.tensor) {
            case 0: others = {1, 2}; break;
            case 1: others = {0, 2}; break;
            default: others = {0, 1}; break;
        }
        std::array<std::array<int, 2>, 4> variants{{
            {cand.q1, cand.q2}, {cand.q2, cand.q1}, {cand.q1, cand.q2}, {cand.q2, cand.q1},
        }};
        std::array<int, 4> order{0, 1, 2, 3};
        std::shuffle(order.begin(), order.end(), rng);
        for (int variant : order) {
            const bool swap_roles = variant >= 2;
            const int sum_tensor = others[swap_roles ? 1 : 0];
            const int diff_tensor = others[swap_roles ? 0 : 1];
            const int qa = variants[std::size_t(variant)][0];  // takes the sum
            const int qb = variants[std::size_t(variant)][1];  // takes the difference

            auto row_of = [&](int tensor, int q) {
                if (tensor == 0) return s.u[std::size_t(q)];
                if (tensor == 1) return s.v[std::size_t(q)];
                return wcol(q);
            };
            std::vector<int8_t> sum_row = row_of(sum_tensor, qa);
            std::vector<int8_t> diff_row = row_of(diff_tensor, qb);
            if (!detail::add_rows_ternary(sum_row, row_of(sum_tensor, qb), +1))
                continue;
            if (!detail::add_rows_ternary(diff_row, row_of(diff_tensor, qa), -1))
                continue;

            Scheme out = s;
            auto store = [&](int tensor, int q, const std::vector<int8_t>& row) {
                if (tensor == 0) out.u[std::size_t(q)] = row;
                else if (tensor == 1) out.v[std::size_t(q)] = row;
                else
                    for (std::size_t wr = 0; wr < out.w.size(); ++wr)
                        out.w[wr][std::size_t(q)] = row[wr];
            };
            store(sum_tensor, qa, sum_row);
            store(diff_tensor, qb, diff_row);
            assert(verify_brent(out).valid);
            return out;
        }
    }
    return s;
}

}  // namespace terncse
