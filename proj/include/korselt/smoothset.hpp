#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/nat.hpp"
#include "korselt/ntcore.hpp"

namespace korselt {

// The set P of primes p in [y/log y, y] whose shift p-1 is y^(1-E)-smooth,
// minus a caller-supplied exclusion list.
struct SmoothPrimeSet {
    double y = 0.0;
    double E = 0.0;
    std::set<std::uint64_t> exclusions;
    std::vector<std::uint64_t> primes; // ascending
    double eta_observed = 0.0;         // |P| log y / y
};

// Window membership p >= y/log y is evaluated as p*log y >= y in double
// precision with a one-ulp guard band; likewise the smoothness comparison
// P+(p-1) <= y^(1-E). Boundary ties fall on the inclusive side.
inline SmoothPrimeSet build_smooth_primes(double y, double E,
                                          const std::set<std::uint64_t>& exclusions = {},
                                          const NtBudget& budget = default_budget()) {
    if (!(y >= 10.0) || !std::isfinite(y)) throw validation_error("build_smooth_primes: y >= 10 required");
    if (!(E > 0.0) || !(E < 1.0)) throw validation_error("build_smooth_primes: 0 < E < 1 required");

    SmoothPrimeSet out;
    out.y = y;
    out.E = E;
    out.exclusions = exclusions;

    const double log_y = std::log(y);
    const double smooth_bound = std::pow(y, 1.0 - E);
    const std::uint64_t hi = static_cast<std::uint64_t>(std::floor(y));

    for (const Nat& pn : primes_in_range(2, nat_from_u64(hi), budget)) {
        std::uint64_t p = to_u64(pn);
        double lhs = static_cast<double>(p) * log_y;
        if (!(lhs >= y || std::nextafter(lhs, lhs + 1.0) >= y)) continue; // below window
        if (static_cast<double>(p) > y) continue;
        if (exclusions.count(p)) continue;
        if (p == 2) continue; // p-1 = 1 has no prime factors; y/log y > 2 in practice anyway
        std::uint64_t pp = to_u64(largest_prime_factor(nat_from_u64(p - 1), budget));
        double pd = static_cast<double>(pp);
        if (pd <= smooth_bound || std::nextafter(pd, 0.0) <= smooth_bound)
            out.primes.push_back(p);
    }
    out.eta_observed = static_cast<double>(out.primes.size()) * log_y / y;
    return out;
}

inline std::pair<std::size_t, double> density_report(const SmoothPrimeSet& s) {
    return {s.primes.size(), s.eta_observed};
}

} // namespace korselt
