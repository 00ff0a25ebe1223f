#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/nat.hpp"
#include "korselt/ntcore.hpp"

namespace korselt {

struct CongruenceBlock {
    Nat k0;
    Nat L;
    Nat n_mod_k0l; // must be 1
};

struct WindowBlock {
    Nat z;
    double width = 0.0;
    bool inside = false;
};

// Korselt verification transcript: n is a Carmichael number iff it is
// squarefree, composite, and p-1 | n-1 for every prime p | n.
struct CarmichaelCertificate {
    Nat n;
    Factorization factors;
    bool squarefree = false;
    bool korselt_ok = false;
    std::vector<std::pair<Nat, Nat>> divisibility_transcript; // (p, (n-1) mod (p-1))
    std::optional<CongruenceBlock> congruence_checks;
    std::optional<WindowBlock> window;
    std::string primality_mode; // witness mode used on the factors
};

inline CarmichaelCertificate korselt_check(const Nat& n,
                                           const NtBudget& budget = default_budget()) {
    if (n < 2) throw validation_error("korselt_check requires n >= 2");
    CarmichaelCertificate cert;
    cert.n = n;
    cert.factors = factorize(n, budget);
    cert.squarefree = cert.factors.squarefree();
    cert.primality_mode = primality_mode(n);
    bool composite = cert.factors.factors.size() >= 2 ||
                     (cert.factors.factors.size() == 1 && cert.factors.factors[0].second >= 2);
    bool all_divide = true;
    for (const auto& [p, e] : cert.factors.factors) {
        Nat rem = p == 2 ? Nat(0) : Nat((n - 1) % (p - 1));
        cert.divisibility_transcript.emplace_back(p, rem);
        if (rem != 0) all_divide = false;
    }
    cert.korselt_ok = cert.squarefree && composite && all_divide;
    return cert;
}

// (6k+1)(12k+1)(18k+1) whenever all three factors are prime.
inline std::optional<CarmichaelCertificate> chernick(const Nat& k,
                                                     const NtBudget& budget = default_budget()) {
    if (k < 1) throw validation_error("chernick requires k >= 1");
    Nat a = 6 * k + 1, b = 12 * k + 1, c = 18 * k + 1;
    if (!is_prime(a, budget) || !is_prime(b, budget) || !is_prime(c, budget)) return std::nullopt;
    CarmichaelCertificate cert = korselt_check(a * b * c, budget);
    if (!cert.korselt_ok)
        throw consistency_error("chernick: Korselt failed on " + to_decimal(cert.n));
    return cert;
}

// Multiply out a pipeline subset into Pi and certify it. The preconditions
// (every prime of the form d*k0+1 with d from the divisor family, at least
// three of them) make korselt_ok a guarantee; a false here, or a product that
// misses 1 mod k0*L, is an internal inconsistency, not a validation failure.
inline CarmichaelCertificate assemble_pi(const std::vector<Nat>& primes, const Nat& k0,
                                         const Nat& l_mod,
                                         std::optional<WindowBlock> window = std::nullopt,
                                         const NtBudget& budget = default_budget()) {
    if (primes.size() < 3)
        throw validation_error("assemble_pi: a Carmichael number needs >= 3 prime factors");
    Nat pi_value = 1;
    for (const Nat& q : primes) {
        if (!is_prime(q, budget))
            throw validation_error("assemble_pi: " + to_decimal(q) + " is not prime");
        if ((q - 1) % k0 != 0)
            throw validation_error("assemble_pi: " + to_decimal(q) + " is not 1 mod k0");
        pi_value *= q;
    }
    Nat modulus = k0 * l_mod;
    if (pi_value % modulus != 1)
        throw consistency_error("assemble_pi: Pi is not 1 mod k0*L");
    CarmichaelCertificate cert = korselt_check(pi_value, budget);
    if (!cert.korselt_ok)
        throw consistency_error("assemble_pi: Korselt failed on a constructed product");
    cert.congruence_checks = CongruenceBlock{k0, l_mod, pi_value % modulus};
    cert.window = std::move(window);
    return cert;
}

inline constexpr std::uint64_t kScanBudget = 2'000'000'000ULL;

namespace detail {

// Depth-first generation of odd squarefree products with >= 3 prime factors.
// The closing prime is drawn from the even divisors d of m-1 (p = d+1), which
// realizes the p-1 | n-1 pruning; earlier factors are re-checked afterwards.
inline void scan_close(const Nat& m, std::uint64_t last, const std::vector<Nat>& chosen,
                       const Nat& z, const Nat& top, std::vector<Nat>& found,
                       const NtBudget& budget) {
    Factorization f = factorize(m - 1, budget);
    std::vector<Nat> divs{Nat(1)};
    for (const auto& [p, e] : f.factors) {
        std::size_t sz = divs.size();
        Nat pk = 1;
        for (unsigned i = 0; i < e; ++i) {
            pk *= p;
            for (std::size_t t = 0; t < sz; ++t) divs.push_back(divs[t] * pk);
        }
    }
    for (const Nat& d : divs) {
        if (d % 2 != 0) continue; // p = d+1 must be an odd prime
        Nat p = d + 1;
        if (p <= nat_from_u64(last)) continue;
        Nat n = m * p;
        if (n <= z || n > top) continue;
        if (!is_prime(p, budget)) continue;
        bool ok = true;
        for (const Nat& q : chosen) {
            if ((n - 1) % (q - 1) != 0) { ok = false; break; }
        }
        if (ok) found.push_back(n);
    }
}

inline void scan_extend(const Nat& m, std::uint64_t last, std::vector<Nat>& chosen, const Nat& z,
                        const Nat& top, const std::vector<std::uint64_t>& primes,
                        std::vector<Nat>& found, const NtBudget& budget) {
    if (chosen.size() >= 2) scan_close(m, last, chosen, z, top, found, budget);
    for (std::uint64_t p : primes) {
        if (p <= last) continue;
        Nat mp = m * nat_from_u64(p);
        // after p we need at least one more, larger prime
        if (mp * nat_from_u64(p + 2) > top) break;
        chosen.push_back(nat_from_u64(p));
        scan_extend(mp, p, chosen, z, top, primes, found, budget);
        chosen.pop_back();
    }
}

} // namespace detail

// All Carmichael numbers in (z, z + z / (log z)^(1/(2+delta))], exact.
inline std::pair<std::uint64_t, std::vector<Nat>> scan_interval(
    const Nat& z, double delta, std::uint64_t budget_ceiling = kScanBudget,
    const NtBudget& budget = default_budget()) {
    if (z < 2) throw validation_error("scan_interval requires z >= 2");
    if (!(delta > 0.0)) throw validation_error("scan_interval requires delta > 0");
    double zd = mpz_get_d(z.get_mpz_t());
    double width = zd / std::pow(std::log(zd), 1.0 / (2.0 + delta));
    Nat top = z + Nat(static_cast<unsigned long>(std::floor(width)));
    if (!fits_u64(top) || to_u64(top) > budget_ceiling)
        throw budget_error("scan_interval: interval end exceeds the enumeration budget");

    // non-closing factors can reach sqrt(top/3): the smallest co-factor of
    // the final prime is at least 3, and the final prime itself comes from
    // the divisor enumeration, not this pool
    double pool_top = std::sqrt(mpz_get_d(top.get_mpz_t()) / 3.0);
    auto small = primes_upto_u64(static_cast<std::uint64_t>(pool_top) + 2, budget);
    std::vector<std::uint64_t> odd_primes(small.begin(), small.end());
    if (!odd_primes.empty() && odd_primes.front() == 2)
        odd_primes.erase(odd_primes.begin());

    std::vector<Nat> found;
    std::vector<Nat> chosen;
    detail::scan_extend(Nat(1), 2, chosen, z, top, odd_primes, found, budget);

    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    // cross-check every candidate through the full Korselt certificate
    for (const Nat& n : found) {
        if (!korselt_check(n, budget).korselt_ok)
            throw consistency_error("scan_interval: generator emitted a non-Carmichael value");
    }
    return {found.size(), found};
}

} // namespace korselt
