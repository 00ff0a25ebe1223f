#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/nat.hpp"
#include "korselt/smoothset.hpp"

namespace korselt {

inline constexpr std::size_t kDivisorEnumerationLimit = 24; // 2^24 products without a cap

// All squarefree products of subsets of P (including 1), ascending. With a
// cap, exactly the cap smallest, found by best-first expansion so truncation
// keeps the low end of D_P intact.
inline std::vector<Nat> enumerate_divisors(const SmoothPrimeSet& s,
                                           std::optional<std::size_t> cap = std::nullopt) {
    const auto& primes = s.primes;
    if (!cap && primes.size() > kDivisorEnumerationLimit)
        throw budget_error("enumerate_divisors: |P| > " + std::to_string(kDivisorEnumerationLimit) +
                           " requires a cap");

    if (!cap) {
        std::vector<Nat> out{Nat(1)};
        out.reserve(std::size_t(1) << primes.size());
        for (std::uint64_t p : primes) {
            std::size_t n = out.size();
            Nat pn = nat_from_u64(p);
            for (std::size_t i = 0; i < n; ++i) out.push_back(out[i] * pn);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    // best-first: a subset with max index i expands to "append i+1" and
    // "shift i -> i+1"; both strictly increase the product, and every subset
    // is reached exactly once.
    struct State {
        Nat product;
        int last; // index of the largest prime used, -1 for the empty product
    };
    auto cmp = [](const State& a, const State& b) { return a.product > b.product; };
    std::priority_queue<State, std::vector<State>, decltype(cmp)> heap(cmp);
    heap.push({Nat(1), -1});
    std::vector<Nat> out;
    while (!heap.empty() && out.size() < *cap) {
        State st = heap.top();
        heap.pop();
        out.push_back(st.product);
        int next = st.last + 1;
        if (next < static_cast<int>(primes.size())) {
            Nat pn = nat_from_u64(primes[next]);
            heap.push({st.product * pn, next});
            if (st.last >= 0) {
                Nat shifted = st.product / nat_from_u64(primes[st.last]) * pn;
                heap.push({shifted, next});
            }
        }
    }
    return out;
}

// min / max of |log s1 - log s2| over distinct pairs.
inline double log_spread(const std::vector<Nat>& set) {
    if (set.size() < 2) throw validation_error("log_spread requires at least 2 elements");
    std::vector<double> logs;
    for (const Nat& v : set) logs.push_back(log_nat(v));
    std::sort(logs.begin(), logs.end());
    double spread = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < logs.size(); ++i)
        spread = std::min(spread, logs[i] - logs[i - 1]);
    return spread;
}

inline double log_diameter(const std::vector<Nat>& set) {
    if (set.size() < 2) throw validation_error("log_diameter requires at least 2 elements");
    auto [mn, mx] = std::minmax_element(set.begin(), set.end());
    return log_nat(*mx) - log_nat(*mn);
}

// D_P sorted and split into 2M contiguous segments D_1..D_2M, with S_j taking
// the j-th element of each even segment. Whether each S_j attains logarithmic
// spread > 1 is recorded rather than assumed: the guarantee is asymptotic and
// can fail at small y.
struct DivisorFamily {
    SmoothPrimeSet source;
    std::vector<Nat> divisors; // ascending; all of D_P or a documented truncation
    std::size_t M = 0;
    std::vector<std::vector<Nat>> subsets; // each ascending, exactly M elements
    std::vector<bool> spread_ok;
};

// Segment-size remainders go one element at a time to the trailing segments;
// S_j is formed only for j up to the smallest even-segment size.
inline DivisorFamily partition_divisors(const SmoothPrimeSet& source, std::vector<Nat> divisors,
                                        std::size_t M) {
    if (M < 1 || (M & (M - 1)) != 0) throw validation_error("M must be a positive power of two");
    const std::size_t n = divisors.size();
    const std::size_t two_m = 2 * M;
    if (n < two_m * M)
        throw validation_error("partition_divisors requires |divisors| >= 2M*M");
    std::sort(divisors.begin(), divisors.end());

    const std::size_t base = n / two_m;
    const std::size_t rem = n % two_m;
    std::vector<std::size_t> offset(two_m + 1, 0);
    for (std::size_t s = 0; s < two_m; ++s)
        offset[s + 1] = offset[s] + base + (s >= two_m - rem ? 1 : 0);

    std::size_t min_even = SIZE_MAX;
    for (std::size_t s = 1; s < two_m; s += 2)
        min_even = std::min(min_even, offset[s + 1] - offset[s]);

    DivisorFamily family;
    family.source = source;
    family.M = M;
    for (std::size_t j = 0; j < min_even; ++j) {
        std::vector<Nat> subset;
        for (std::size_t s = 1; s < two_m; s += 2) subset.push_back(divisors[offset[s] + j]);
        bool ok = subset.size() >= 2 ? (log_spread(subset) > 1.0) : true;
        family.subsets.push_back(std::move(subset));
        family.spread_ok.push_back(ok);
    }
    family.divisors = std::move(divisors);
    return family;
}

} // namespace korselt
