#pragma once

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/nat.hpp"
#include "korselt/ntcore.hpp"

namespace korselt {

// Log-window |log d - log Q / 2 - B| < 1/(2A).
struct WindowSpec {
    double B = 0.0; // center offset in nats
    double A = 1.0;
    double half_width() const { return 1.0 / (2.0 * A); }
};

struct SubsetSolution {
    std::vector<std::size_t> chosen; // indices into the input prime list, ascending
    Nat d;                           // product of the chosen primes
    Nat group_residue;               // d mod L, equals 1 by construction
    double log_offset = 0.0;         // log d - log Q / 2 - B
};

struct MitmResult {
    std::uint64_t count = 0; // exact number of qualifying subsets
    std::vector<SubsetSolution> solutions;
};

inline constexpr std::size_t kMitmCeiling = 50;

namespace detail {

// High-precision window predicate used near the double-precision boundary:
// is |sum_{i in idx} log q_i - (sum_all log q_i)/2 - B| < hw, at 256 bits.
inline bool window_predicate_exact(const std::vector<Nat>& primes,
                                   const std::vector<std::size_t>& idx, double B, double hw) {
    mpfr_t acc, tmp, total;
    mpfr_init2(acc, 256);
    mpfr_init2(tmp, 256);
    mpfr_init2(total, 256);
    mpfr_set_ui(acc, 0, MPFR_RNDN);
    mpfr_set_ui(total, 0, MPFR_RNDN);
    for (std::size_t i = 0; i < primes.size(); ++i) {
        mpfr_set_z(tmp, primes[i].get_mpz_t(), MPFR_RNDN);
        mpfr_log(tmp, tmp, MPFR_RNDN);
        mpfr_add(total, total, tmp, MPFR_RNDN);
        if (std::find(idx.begin(), idx.end(), i) != idx.end())
            mpfr_add(acc, acc, tmp, MPFR_RNDN);
    }
    mpfr_div_ui(total, total, 2, MPFR_RNDN);
    mpfr_sub(acc, acc, total, MPFR_RNDN);
    mpfr_sub_d(acc, acc, B, MPFR_RNDN);
    mpfr_abs(acc, acc, MPFR_RNDN);
    bool inside = mpfr_cmp_d(acc, hw) < 0;
    mpfr_clears(acc, tmp, total, static_cast<mpfr_ptr>(nullptr));
    return inside;
}

struct HalfEntry {
    double logsum;
    std::uint64_t mask;
};

} // namespace detail

// Exact count (and up to `limit` materialized witnesses) of subsets of the
// prime list whose product is 1 mod L and whose log lands in the window.
// Half-subsets are enumerated 2^(N/2) per side, bucketed by residue mod L and
// range-scanned on sorted log-sums. Log-sums accumulate double-precision
// logs; candidates within a guard band of the window boundary are resolved by
// high-precision recomputation.
inline MitmResult mitm_subset_products(const std::vector<Nat>& primes, const Nat& L,
                                       const WindowSpec& window,
                                       std::optional<std::size_t> limit = std::nullopt,
                                       std::size_t mitm_ceiling = kMitmCeiling) {
    const std::size_t n = primes.size();
    if (n > mitm_ceiling) throw budget_error("mitm_subset_products: N exceeds the MITM ceiling");
    if (L < 1) throw validation_error("mitm_subset_products: L must be >= 1");
    for (std::size_t i = 0; i < n; ++i) {
        if (L > 1 && mpz_divisible_p(L.get_mpz_t(), primes[i].get_mpz_t()))
            throw validation_error("mitm_subset_products: prime " + to_decimal(primes[i]) +
                                   " divides L");
        for (std::size_t j = i + 1; j < n; ++j)
            if (primes[i] == primes[j])
                throw validation_error("mitm_subset_products: primes must be distinct");
    }

    const double hw = window.half_width();
    const double guard = 1e-9 * static_cast<double>(std::max<std::size_t>(n, 1));
    std::vector<double> logs(n);
    double total_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        logs[i] = log_nat(primes[i]);
        total_log += logs[i];
    }
    const double target = total_log / 2.0 + window.B;

    const std::size_t n_a = (n + 1) / 2; // first half gets the extra element
    const std::size_t n_b = n - n_a;

    // A-half buckets: residue -> entries sorted by (logsum, mask)
    std::map<Nat, std::vector<detail::HalfEntry>> buckets;
    for (std::uint64_t mask = 0; mask < (1ULL << n_a); ++mask) {
        Nat res = 1;
        double s = 0.0;
        for (std::size_t i = 0; i < n_a; ++i) {
            if (mask >> i & 1) {
                res = (res * primes[i]) % L;
                s += logs[i];
            }
        }
        buckets[res].push_back({s, mask});
    }
    for (auto& [res, vec] : buckets)
        std::sort(vec.begin(), vec.end(), [](const detail::HalfEntry& a, const detail::HalfEntry& b) {
            return a.logsum != b.logsum ? a.logsum < b.logsum : a.mask < b.mask;
        });

    auto indices_of = [&](std::uint64_t mask_a, std::uint64_t mask_b) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n_a; ++i)
            if (mask_a >> i & 1) idx.push_back(i);
        for (std::size_t i = 0; i < n_b; ++i)
            if (mask_b >> i & 1) idx.push_back(n_a + i);
        return idx;
    };

    MitmResult result;
    const std::size_t max_solutions = limit.value_or(std::numeric_limits<std::size_t>::max());

    for (std::uint64_t mask_b = 0; mask_b < (1ULL << n_b); ++mask_b) {
        Nat res_b = 1;
        double s_b = 0.0;
        for (std::size_t i = 0; i < n_b; ++i) {
            if (mask_b >> i & 1) {
                res_b = (res_b * primes[n_a + i]) % L;
                s_b += logs[n_a + i];
            }
        }
        Nat need; // res_a with res_a * res_b = 1 (mod L)
        if (L == 1) {
            need = 0;
        } else if (mpz_invert(need.get_mpz_t(), res_b.get_mpz_t(), L.get_mpz_t()) == 0) {
            continue; // res_b shares a factor with L; cannot complete to 1
        }
        auto it = buckets.find(need % L);
        if (it == buckets.end()) continue;
        const auto& vec = it->second;

        const double lo = target - s_b - hw;
        const double hi = target - s_b + hw;
        auto cmp = [](const detail::HalfEntry& e, double v) { return e.logsum < v; };
        auto first_any = std::lower_bound(vec.begin(), vec.end(), lo - guard, cmp);
        auto last_any = std::lower_bound(vec.begin(), vec.end(), hi + guard, cmp);

        for (auto p = first_any; p != last_any; ++p) {
            bool inside;
            if (p->logsum > lo + guard && p->logsum < hi - guard) {
                inside = true; // clear of both boundaries
            } else {
                inside = detail::window_predicate_exact(primes, indices_of(p->mask, mask_b),
                                                        window.B, hw);
            }
            if (!inside) continue;
            ++result.count;
            if (result.solutions.size() < max_solutions) {
                SubsetSolution sol;
                sol.chosen = indices_of(p->mask, mask_b);
                sol.d = 1;
                for (std::size_t i : sol.chosen) sol.d *= primes[i];
                sol.group_residue = L == 1 ? Nat(0) : Nat(sol.d % L);
                if (L > 1 && sol.group_residue != 1)
                    throw consistency_error("mitm: solution residue is not 1 mod L");
                sol.log_offset = log_nat(sol.d) - total_log / 2.0 - window.B;
                result.solutions.push_back(std::move(sol));
            }
        }
    }
    return result;
}

struct BoundReport {
    std::uint64_t n_primes = 0;
    double a_value = 1.0;
    Nat q0;
    std::uint64_t count_exact = 0;
    double paper_bound = 0.0;      // 2^(N - sqrt(N)) / (A^2 log^2 q0)
    bool exceeds_bound = false;    // count_exact >= paper_bound
    bool hypotheses_met = false;   // N > max(log q0, lambda(L) log phi(L))^5
    std::string hypotheses_note;
};

// Informational comparison of the exact count against the paper's lower
// bound. The hypotheses are never met at desk scale; that is reported, not
// treated as an error.
inline BoundReport bound_report(std::uint64_t n_primes, double a_value, const Nat& q0,
                                std::uint64_t count_exact,
                                std::optional<double> lambda_l = std::nullopt,
                                std::optional<double> log_phi_l = std::nullopt) {
    if (n_primes < 1) throw validation_error("bound_report requires N >= 1");
    BoundReport r;
    r.n_primes = n_primes;
    r.a_value = a_value;
    r.q0 = q0;
    r.count_exact = count_exact;
    const double nd = static_cast<double>(n_primes);
    const double lq = log_nat(q0);
    r.paper_bound = std::exp2(nd - std::sqrt(nd)) / (a_value * a_value * lq * lq);
    r.exceeds_bound = static_cast<double>(count_exact) >= r.paper_bound;
    double crit = lq;
    if (lambda_l && log_phi_l) {
        crit = std::max(crit, *lambda_l * *log_phi_l);
        r.hypotheses_note = "checked against max(log q0, lambda(L) log phi(L))^5";
    } else {
        r.hypotheses_note = "lambda(L) log phi(L) not supplied; checked log q0 term only";
    }
    r.hypotheses_met = nd > std::pow(crit, 5.0);
    return r;
}

struct NonclusterReport {
    double threshold = 0.0; // 8 sqrt(log Xi / N)
    double max_fraction = 0.0;
    double omega_at = 0.0;
    double alpha_at = 0.0;
    std::uint64_t omega_samples = 0;
    std::uint64_t alpha_samples = 0;
};

// Diagnostic for the non-clustering hypothesis: sample omega over a uniform
// grid of [1/(lambda(L) log q0), 4A log Xi] and alpha over multiples of
// 2 pi / lambda(L); report the largest fraction of primes q_i with
// |omega log q_i - k alpha| below the threshold for some integer k.
inline NonclusterReport noncluster_check(const std::vector<Nat>& primes, const Nat& lambda_l,
                                         const Nat& q0, double a_value, double xi,
                                         std::uint64_t omega_samples,
                                         std::uint64_t alpha_cap = 128) {
    if (primes.empty()) throw validation_error("noncluster_check requires primes");
    if (!(xi > 1.0)) throw validation_error("noncluster_check requires Xi > 1");
    if (omega_samples < 1) throw validation_error("noncluster_check requires omega_samples >= 1");

    NonclusterReport r;
    const double n = static_cast<double>(primes.size());
    const double log_xi = std::log(xi);
    r.threshold = 8.0 * std::sqrt(log_xi / n);
    const double lam = std::max(1.0, mpz_get_d(lambda_l.get_mpz_t()));
    const double omega_lo = 1.0 / (lam * log_nat(q0));
    const double omega_hi = 4.0 * a_value * log_xi;
    r.omega_samples = omega_samples;

    std::vector<double> logs;
    for (const Nat& q : primes) logs.push_back(log_nat(q));

    const std::uint64_t t_max =
        fits_u64(lambda_l) ? std::min<std::uint64_t>(to_u64(lambda_l), alpha_cap) : alpha_cap;
    r.alpha_samples = t_max;
    const double two_pi = 2.0 * std::acos(-1.0);

    for (std::uint64_t s = 0; s < omega_samples; ++s) {
        double omega = omega_samples == 1
                           ? omega_lo
                           : omega_lo + (omega_hi - omega_lo) * static_cast<double>(s) /
                                            static_cast<double>(omega_samples - 1);
        for (std::uint64_t t = 1; t <= t_max; ++t) {
            double alpha = two_pi * static_cast<double>(t) / lam;
            std::size_t close = 0;
            for (double lq : logs) {
                double x = omega * lq;
                double dist = std::fabs(x - alpha * std::round(x / alpha));
                if (dist < r.threshold) ++close;
            }
            double frac = static_cast<double>(close) / n;
            if (frac > r.max_fraction) {
                r.max_fraction = frac;
                r.omega_at = omega;
                r.alpha_at = alpha;
            }
        }
    }
    return r;
}

// Every section 3-4 parameter formula evaluated as reals, with quantities
// beyond the representable range carried in log scale.
struct PipelineParams {
    double y = 0.0, E = 0.0, eta = 0.0, delta = 0.0;
    double Delta = 0.0; // delta^2 / 24
    std::size_t M = 0;
    std::uint64_t N_minus = 0, N_plus = 0;
    bool n_range_degenerate = false;
    double V = 0.0, W = 0.0, A = 0.0;
    double upsilon_log = 0.0; // log Upsilon = y^(2 + 2 Delta)
    double xi_log = std::numeric_limits<double>::quiet_NaN();
    double kappa_log = std::numeric_limits<double>::quiet_NaN(); // 2 sum log p, when known
    std::string kappa_description;
    double z_minus_log = 0.0, z_plus_log = 0.0;
};

inline PipelineParams compute_params(double y, double E, double eta, double delta, std::size_t M,
                                     std::uint64_t n_forms,
                                     std::optional<double> log_phi_l = std::nullopt,
                                     std::optional<double> log_q0 = std::nullopt) {
    if (!(y >= 10.0)) throw validation_error("compute_params requires y >= 10");
    if (!(E > 0.0 && E < 1.0)) throw validation_error("compute_params requires 0 < E < 1");
    if (!(delta > 0.0)) throw validation_error("compute_params requires delta > 0");

    PipelineParams p;
    p.y = y;
    p.E = E;
    p.eta = eta;
    p.delta = delta;
    p.M = M;
    p.Delta = delta * delta / 24.0;
    const double ly = std::log(y);
    p.upsilon_log = std::pow(y, 2.0 + 2.0 * p.Delta);
    p.V = std::exp(eta * y / ((4.0 + 2.0 * p.Delta) * ly));
    p.W = std::exp(eta * y / ((4.0 + 4.0 * p.Delta) * ly));
    p.A = std::exp(eta * y / ((4.0 + 6.0 * p.Delta) * ly));

    const double n_scale = std::exp(eta * y / (2.0 * ly));
    // smallest even integer strictly above n_scale / 8
    auto even_above = [](double x) {
        std::uint64_t v = static_cast<std::uint64_t>(std::floor(x)) + 1;
        return v % 2 == 0 ? v : v + 1;
    };
    // largest even integer strictly below x (0 when none exists)
    auto even_below = [](double x) {
        double c = std::ceil(x) - 1.0;
        if (c < 2.0) return std::uint64_t{0};
        std::uint64_t v = static_cast<std::uint64_t>(c);
        return v % 2 == 0 ? v : v - 1;
    };
    p.N_minus = even_above(n_scale / 8.0);
    p.N_plus = even_below(n_scale);
    if (p.N_plus < p.N_minus) { // the paper's range is empty at this scale
        p.N_plus = p.N_minus;
        p.n_range_degenerate = true;
    }

    if (log_phi_l && log_q0)
        p.xi_log = 2.0 * (std::log(p.A) + std::log(static_cast<double>(n_forms)) + *log_phi_l +
                          std::log(*log_q0));
    p.kappa_description =
        "product of p^2 over primes p in [y/log y, y] with P+(p-1) <= y^(1-E); never multiplied out";
    // log Z_-+ uses log(ceil(e^(y^(2+2D)))) = y^(2+2D) up to a vanishing ceiling correction
    p.z_minus_log = n_scale / 3.0 * p.upsilon_log;
    p.z_plus_log = 11.0 * n_scale / 12.0 * p.upsilon_log;
    return p;
}

} // namespace korselt
