#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "korselt/errors.hpp"

namespace korselt {

// All integer quantities in the pipeline (n, p, q, k, d, L, Pi, ...).
// Serialized as decimal strings everywhere; round-trips exactly.
using Nat = mpz_class;

inline std::string to_decimal(const Nat& n) { return n.get_str(10); }

inline Nat nat_from_decimal(const std::string& s) {
    Nat n;
    if (s.empty() || mpz_set_str(n.get_mpz_t(), s.c_str(), 10) != 0 || n < 0)
        throw validation_error("not a decimal natural number: '" + s + "'");
    return n;
}

inline bool fits_u64(const Nat& n) {
    return n >= 0 && mpz_sizeinbase(n.get_mpz_t(), 2) <= 64;
}

inline std::uint64_t to_u64(const Nat& n) {
    std::uint64_t lo = mpz_get_ui(n.get_mpz_t());
    if (mpz_sizeinbase(n.get_mpz_t(), 2) > 32) {
        Nat hi = n >> 32;
        lo = (static_cast<std::uint64_t>(mpz_get_ui(hi.get_mpz_t())) << 32) |
             (mpz_get_ui(n.get_mpz_t()) & 0xffffffffULL);
    }
    return lo;
}

inline Nat nat_from_u64(std::uint64_t v) {
    Nat n;
    mpz_import(n.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    return n;
}

// Natural log of an arbitrary-size Nat, safe past the double range.
inline double log_nat(const Nat& n) {
    if (n <= 0) throw validation_error("log of non-positive value");
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, n.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
    if (m == 1) return 0;
    std::uint64_t r = 1;
    base %= m;
    while (exp) {
        if (exp & 1) r = mulmod_u64(r, base, m);
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    return r;
}

} // namespace korselt
