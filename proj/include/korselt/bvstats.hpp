#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/forms.hpp"
#include "korselt/nat.hpp"
#include "korselt/ntcore.hpp"

namespace korselt {

// zeta(2) zeta(3) / zeta(6)
inline constexpr double kInvTotientC1 = 1.9435964368;

// Exact values of pi, theta, psi restricted to the class a mod q.
// q = 1, a = 0 gives the unrestricted counts. Logs are natural.
struct APCounts {
    std::uint64_t x = 0;
    std::uint64_t q = 1;
    std::uint64_t a = 0;
    std::uint64_t pi_qa = 0;
    double theta_qa = 0.0;
    double psi_qa = 0.0;
};

inline APCounts prime_counts(std::uint64_t x, std::uint64_t q, std::uint64_t a,
                             const NtBudget& budget = default_budget()) {
    if (x < 2) throw validation_error("prime_counts requires x >= 2");
    if (q < 1) throw validation_error("prime_counts requires q >= 1");
    APCounts out;
    out.x = x;
    out.q = q;
    out.a = a % q;
    for (std::uint64_t p : primes_upto_u64(x, budget)) {
        double lp = std::log(static_cast<double>(p));
        if (p % q == out.a) {
            ++out.pi_qa;
            out.theta_qa += lp;
        }
        // prime powers p^k <= x contribute log p to psi
        for (std::uint64_t pk = p; pk <= x; ) {
            if (pk % q == out.a) out.psi_qa += lp;
            if (pk > x / p) break;
            pk *= p;
        }
    }
    return out;
}

namespace detail {

inline std::uint64_t phi_u64(std::uint64_t q) {
    std::uint64_t result = q, n = q;
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            result -= result / p;
            while (n % p == 0) n /= p;
        }
    }
    if (n > 1) result -= result / n;
    return result;
}

} // namespace detail

// E(x; q, a) = | pi(x; q, a) - pi(x) / phi(q) |, counts exact, division in double.
inline double error_term(std::uint64_t x, std::uint64_t q, std::uint64_t a,
                         const NtBudget& budget = default_budget()) {
    if (x < 2) throw validation_error("error_term requires x >= 2");
    if (q < 1) throw validation_error("error_term requires q >= 1");
    if (std::gcd(a, q) != 1) throw validation_error("error_term requires gcd(a, q) = 1");
    std::uint64_t pi_x = 0, pi_qa = 0;
    for (std::uint64_t p : primes_upto_u64(x, budget)) {
        ++pi_x;
        if (p % q == a % q) ++pi_qa;
    }
    double phi = static_cast<double>(detail::phi_u64(q));
    return std::fabs(static_cast<double>(pi_qa) - static_cast<double>(pi_x) / phi);
}

struct ErrorSumRow {
    std::uint64_t q = 1;
    std::uint64_t argmax_z = 2;
    std::uint64_t argmax_a = 0;
    double error = 0.0;
};

// Empirical tabulation of the Bombieri-Vinogradov style error sum: for each
// modulus q <= x^(2/5) (optionally excluding multiples of one modulus), the
// max over 2 <= z <= x and residues a coprime to q of E(z; q, a).
struct ErrorSumReport {
    std::uint64_t x = 0;
    std::uint64_t q_ceiling = 1;
    std::optional<std::uint64_t> excluded_modulus;
    double total = 0.0;
    std::vector<ErrorSumRow> per_q_max;
};

// E(z; q, a) is piecewise constant between consecutive primes (both counts
// jump only at primes), so the z-maximization evaluates at z in
// {primes <= x} only; the x endpoint lands in the last such interval.
// The max is located with exact integer arithmetic: |cnt*phi - pi_z|.
inline ErrorSumReport bv_error_sum(std::uint64_t x, std::optional<std::uint64_t> exclude,
                                   const NtBudget& budget = default_budget()) {
    if (x < 2) throw validation_error("bv_error_sum requires x >= 2");
    ErrorSumReport report;
    report.x = x;
    report.excluded_modulus = exclude;
    // largest q with q^5 <= x^2, exact in integers
    std::uint64_t qc = 1;
    while (true) {
        unsigned __int128 q5 = 1;
        std::uint64_t cand = qc + 1;
        for (int i = 0; i < 5; ++i) q5 *= cand;
        if (q5 <= static_cast<unsigned __int128>(x) * x) qc = cand; else break;
    }
    report.q_ceiling = qc;

    const auto primes = primes_upto_u64(x, budget);
    for (std::uint64_t q = 1; q <= qc; ++q) {
        if (exclude && *exclude > 0 && q % *exclude == 0) continue;
        const std::uint64_t phi = detail::phi_u64(q);
        std::vector<std::uint64_t> cnt(q, 0);
        std::vector<bool> coprime(q, false);
        for (std::uint64_t a = 0; a < q; ++a) coprime[a] = (std::gcd(a, q) == 1);
        if (q == 1) coprime[0] = true;

        unsigned __int128 best_num = 0;
        ErrorSumRow row{q, 2, q == 1 ? 0ULL : 1ULL, 0.0};
        std::uint64_t pi_z = 0;
        bool have = false;
        for (std::uint64_t p : primes) {
            ++pi_z;
            ++cnt[p % q];
            for (std::uint64_t a = 0; a < q; ++a) {
                if (!coprime[a]) continue;
                unsigned __int128 lhs = static_cast<unsigned __int128>(cnt[a]) * phi;
                unsigned __int128 num = lhs > pi_z ? lhs - pi_z : pi_z - lhs;
                if (!have || num > best_num) {
                    best_num = num;
                    row.argmax_z = p;
                    row.argmax_a = a;
                    have = true;
                }
            }
        }
        row.error = static_cast<double>(best_num) / static_cast<double>(phi);
        report.per_q_max.push_back(row);
        report.total += row.error;
    }
    return report;
}

// (sum of 1/phi(k) for k <= x, deviation from C1 * log x).
inline std::pair<double, double> sum_inv_totient(std::uint64_t x,
                                                 const NtBudget& budget = default_budget()) {
    if (x < 1) throw validation_error("sum_inv_totient requires x >= 1");
    if (x > 50'000'000ULL || x > budget.sieve_ceiling)
        throw budget_error("sum_inv_totient: x exceeds the totient sieve ceiling");
    // linear sieve of phi
    std::vector<std::uint32_t> phi(x + 1);
    std::vector<std::uint32_t> primes;
    phi[1] = 1;
    std::vector<std::uint32_t> lp(x + 1, 0);
    for (std::uint32_t i = 2; i <= x; ++i) {
        if (lp[i] == 0) {
            lp[i] = i;
            phi[i] = i - 1;
            primes.push_back(i);
        }
        for (std::uint32_t p : primes) {
            if (p > lp[i] || static_cast<std::uint64_t>(p) * i > x) break;
            lp[p * i] = p;
            phi[p * i] = (i % p == 0) ? phi[i] * p : phi[i] * (p - 1);
        }
    }
    double sum = 0.0;
    for (std::uint64_t k = 1; k <= x; ++k) sum += 1.0 / static_cast<double>(phi[k]);
    double deviation = sum - kInvTotientC1 * std::log(static_cast<double>(x));
    return {sum, deviation};
}

// #{lo <= n < hi : at least m of the forms take prime values at n}.
inline std::uint64_t count_prime_tuples_range(const LinearFormTuple& t, const Nat& lo,
                                              const Nat& hi, unsigned m,
                                              const NtBudget& budget = default_budget()) {
    if (t.forms.empty()) throw validation_error("count_prime_tuples requires forms");
    if (hi - lo > Nat(100'000'000)) throw budget_error("count_prime_tuples: range too large");
    std::uint64_t count = 0;
    for (Nat n = lo; n < hi; ++n) {
        unsigned hit = 0;
        for (const auto& [d, c] : t.forms) {
            Nat v = d * n + c;
            if (is_prime(v, budget)) ++hit;
            if (hit >= m) break;
        }
        if (hit >= m) ++count;
    }
    return count;
}

// #{x <= n < 2x : at least m of the forms take prime values at n}.
inline std::uint64_t count_prime_tuples(const LinearFormTuple& t, const Nat& x, unsigned m,
                                        const NtBudget& budget = default_budget()) {
    return count_prime_tuples_range(t, x, 2 * x, m, budget);
}

} // namespace korselt
