#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/nat.hpp"
#include "korselt/ntcore.hpp"

namespace korselt {

struct FormProvenance {
    Nat L;
    Nat a_L;
    std::size_t subset_id = 0;
};

// A tuple of linear forms d*n + c with d, c >= 1 and distinct (d, c) pairs.
struct LinearFormTuple {
    std::vector<std::pair<Nat, Nat>> forms; // (coefficient d, constant c)
    std::optional<FormProvenance> provenance;
};

// Units a mod p with p never dividing d*a + 1 for any listed d.
inline std::vector<std::uint64_t> omega_p(std::uint64_t p, const std::vector<Nat>& ds) {
    if (!detail::is_prime_u64(p)) throw validation_error("omega_p requires a prime modulus");
    std::vector<std::uint64_t> d_mod;
    d_mod.reserve(ds.size());
    for (const Nat& d : ds) d_mod.push_back(mpz_fdiv_ui(d.get_mpz_t(), p));
    std::vector<std::uint64_t> out;
    for (std::uint64_t a = 1; a < p; ++a) {
        bool ok = true;
        for (std::uint64_t dm : d_mod) {
            if ((dm * a + 1) % p == 0) { ok = false; break; }
        }
        if (ok) out.push_back(a);
    }
    return out;
}

// Omega = prod over p | L of Omega_p, with L squarefree. Elements are lifted
// lazily through the CRT rather than materialized.
struct ResidueSelection {
    Nat L;
    std::map<std::uint64_t, std::vector<std::uint64_t>> per_prime; // p -> Omega_p
    double size_ratio = 1.0;                                       // prod |Omega_p| / p

    // true when some Omega_p is empty, i.e. no residue can be lifted
    bool empty() const {
        for (const auto& [p, omega] : per_prime)
            if (omega.empty()) return true;
        return false;
    }
};

inline ResidueSelection make_residue_selection(const std::vector<std::uint64_t>& l_primes,
                                               const std::vector<Nat>& ds) {
    ResidueSelection sel;
    sel.L = 1;
    for (std::uint64_t p : l_primes) {
        sel.L *= nat_from_u64(p);
        auto omega = omega_p(p, ds);
        sel.size_ratio *= static_cast<double>(omega.size()) / static_cast<double>(p);
        sel.per_prime.emplace(p, std::move(omega));
    }
    return sel;
}

// The unique 1 <= a_L < L with a_L = choice(p) (mod p) for every p | L.
inline Nat lift_residue(const ResidueSelection& sel,
                        const std::map<std::uint64_t, std::uint64_t>& choice) {
    if (sel.per_prime.empty()) throw validation_error("lift_residue: empty selection");
    Nat x = 0, mod = 1;
    for (const auto& [p, omega] : sel.per_prime) {
        auto it = choice.find(p);
        if (it == choice.end())
            throw validation_error("lift_residue: no choice for prime " + std::to_string(p));
        std::uint64_t r = it->second;
        if (std::find(omega.begin(), omega.end(), r) == omega.end())
            throw validation_error("lift_residue: residue " + std::to_string(r) +
                                   " is not in Omega_" + std::to_string(p));
        // combine x (mod `mod`) with r (mod p)
        Nat pn = nat_from_u64(p);
        Nat minv;
        if (mpz_invert(minv.get_mpz_t(), mod.get_mpz_t(), pn.get_mpz_t()) == 0)
            throw validation_error("lift_residue: moduli not coprime");
        Nat delta = ((nat_from_u64(r) - x % pn) % pn + pn) % pn;
        x += mod * ((delta * minv) % pn);
        mod *= pn;
    }
    return x; // nonzero: every chosen residue is a unit

}

// Forms (d_i * L) n + (d_i * a_L + 1), in S_j order.
inline LinearFormTuple build_forms(const std::vector<Nat>& subset, const Nat& L, const Nat& a_L,
                                   std::size_t subset_id = 0) {
    if (a_L < 1 || a_L >= L) throw validation_error("build_forms requires 1 <= a_L < L");
    LinearFormTuple t;
    for (const Nat& d : subset) t.forms.emplace_back(d * L, d * a_L + 1);
    t.provenance = FormProvenance{L, a_L, subset_id};
    return t;
}

// True iff no prime divides prod_i (d_i n + c_i) at every integer n. It
// suffices to test p <= #forms together with the primes dividing some d_i:
// for any larger p with all coefficients nonzero mod p, the forms occupy at
// most #forms < p residues, so a free residue remains. An optional ceiling
// extends the tested range (used by oracle-style checks).
inline bool is_admissible(const LinearFormTuple& t,
                          std::optional<std::uint64_t> prime_ceiling = std::nullopt,
                          const NtBudget& budget = default_budget()) {
    if (t.forms.empty()) throw validation_error("is_admissible requires a nonempty tuple");
    std::set<std::uint64_t> test_primes;
    for (std::uint64_t p = 2; p <= t.forms.size(); ++p)
        if (detail::is_prime_u64(p)) test_primes.insert(p);
    for (const auto& [d, c] : t.forms) {
        if (d < 1 || c < 1) throw validation_error("is_admissible: coefficients must be >= 1");
        for (const auto& [p, e] : factorize(d, budget).factors) {
            if (!fits_u64(p)) throw budget_error("is_admissible: coefficient prime too large");
            test_primes.insert(to_u64(p));
        }
    }
    if (prime_ceiling) {
        for (std::uint64_t p = 2; p <= *prime_ceiling; ++p)
            if (detail::is_prime_u64(p)) test_primes.insert(p);
    }

    for (std::uint64_t p : test_primes) {
        std::set<std::uint64_t> roots;
        bool covers_all = false;
        for (const auto& [d, c] : t.forms) {
            std::uint64_t dm = mpz_fdiv_ui(d.get_mpz_t(), p);
            std::uint64_t cm = mpz_fdiv_ui(c.get_mpz_t(), p);
            if (dm == 0) {
                if (cm == 0) { covers_all = true; break; } // p divides this form everywhere
                continue;                                  // never zero mod p
            }
            std::uint64_t inv = powmod_u64(dm, p - 2, p); // Fermat inverse, p prime
            roots.insert((p - mulmod_u64(cm, inv, p)) % p);
            if (roots.size() == p) { covers_all = true; break; }
        }
        if (covers_all || roots.size() == p) return false;
    }
    return true;
}

} // namespace korselt
