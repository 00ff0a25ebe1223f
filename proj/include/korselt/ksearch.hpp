#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "korselt/errors.hpp"
#include "korselt/nat.hpp"
#include "korselt/ntcore.hpp"

namespace korselt {

struct KWindow {
    Nat Y;      // scan window is [Y, 2Y)
    Nat L;      // multipliers must be coprime to L
    double V = 1.0;
    double W = 1.0;
};

struct KHit {
    Nat k;
    std::vector<std::pair<Nat, Nat>> witnesses; // (d, prime d*k+1), d ascending
};

inline constexpr std::uint64_t kFindTRangeBudget = 200'000'000ULL;

namespace detail {

// one contiguous block of the k scan; witnesses come out in ascending k order
inline std::vector<KHit> find_t_block(const KWindow& window, const std::vector<Nat>& ds,
                                      const Nat& lo, const Nat& hi, const NtBudget& budget) {
    // u64 fast path when every d*k+1 in the block fits
    bool fast = fits_u64(hi) && fits_u64(window.L);
    std::uint64_t l64 = fast ? to_u64(window.L) : 0;
    std::vector<std::uint64_t> ds64;
    if (fast) {
        for (const Nat& d : ds) {
            if (!fits_u64(d)) { fast = false; break; }
            std::uint64_t dv = to_u64(d);
            if (dv != 0 && to_u64(hi) > (UINT64_MAX - 1) / dv) { fast = false; break; }
            ds64.push_back(dv);
        }
    }

    std::vector<KHit> hits;
    if (fast) {
        std::uint64_t lo64 = to_u64(lo), hi64 = to_u64(hi);
        for (std::uint64_t k = lo64; k < hi64; ++k) {
            if (l64 > 1 && std::gcd(k, l64) != 1) continue;
            KHit hit;
            for (std::size_t i = 0; i < ds64.size(); ++i) {
                std::uint64_t q = ds64[i] * k + 1;
                if (is_prime_u64(q)) hit.witnesses.emplace_back(ds[i], nat_from_u64(q));
            }
            if (hit.witnesses.size() >= 2) {
                hit.k = nat_from_u64(k);
                hits.push_back(std::move(hit));
            }
        }
    } else {
        for (Nat k = lo; k < hi; ++k) {
            Nat g;
            mpz_gcd(g.get_mpz_t(), k.get_mpz_t(), window.L.get_mpz_t());
            if (window.L > 1 && g != 1) continue;
            KHit hit;
            for (const Nat& d : ds) {
                Nat q = d * k + 1;
                if (is_prime(q, budget)) hit.witnesses.emplace_back(d, q);
            }
            if (hit.witnesses.size() >= 2) {
                hit.k = k;
                hits.push_back(std::move(hit));
            }
        }
    }
    return hits;
}

} // namespace detail

// All k in [k_lo, k_hi) with gcd(k, L) = 1 and at least two primes among
// {d*k+1 : d in S_j}; every (d, prime) witness is recorded. With threads > 1
// the range splits into disjoint blocks scanned concurrently and merged in
// block order, so the result never depends on the thread count.
inline std::vector<KHit> find_T(const KWindow& window, const std::vector<Nat>& subset,
                                std::optional<Nat> k_lo = std::nullopt,
                                std::optional<Nat> k_hi = std::nullopt,
                                const NtBudget& budget = default_budget(),
                                std::size_t threads = 1) {
    if (subset.size() < 2) throw validation_error("find_T requires |S_j| >= 2");
    Nat lo = k_lo.value_or(window.Y);
    Nat hi = k_hi.value_or(2 * window.Y);
    if (lo < 1 || hi < lo) throw validation_error("find_T: bad k range");
    if (hi - lo > Nat(nat_from_u64(kFindTRangeBudget)))
        throw budget_error("find_T: k range exceeds budget");

    std::vector<Nat> ds = subset;
    std::sort(ds.begin(), ds.end());

    if (threads <= 1 || hi - lo < 4096)
        return detail::find_t_block(window, ds, lo, hi, budget);

    Nat span = hi - lo;
    Nat block = span / static_cast<unsigned long>(threads) + 1;
    std::vector<std::future<std::vector<KHit>>> futs;
    for (Nat start = lo; start < hi; start += block) {
        Nat end = start + block;
        if (end > hi) end = hi;
        futs.push_back(std::async(std::launch::async, [&, start, end] {
            return detail::find_t_block(window, ds, start, end, budget);
        }));
    }
    std::vector<KHit> hits;
    for (auto& f : futs) {
        auto part = f.get();
        hits.insert(hits.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    }
    return hits;
}

enum class UStatus { outside, inside, indeterminate };

namespace detail {

// One-sided test: does some omega in (0, W) put omega*log(dk+1) within 1/V of
// an integer m >= 1 and omega*log(d'k+1) within 1/V of an integer m' >= 1?
// `slack` widens (+eps) or shrinks (-eps) every interval endpoint.
inline bool u_resonance_hit(double r1, double r2, double V, double W, double slack) {
    const double tol = 1.0 / V + slack;
    if (tol <= 0) return false;
    const double w_hi = W + slack;
    const double m_max = std::floor(w_hi * r1 + tol);
    for (double m = 1.0; m <= m_max; m += 1.0) {
        double lo = (m - tol) / r1;
        double hi = (m + tol) / r1;
        lo = std::max(lo, 0.0);
        hi = std::min(hi, w_hi);
        if (lo > hi) continue;
        double j_lo = lo * r2, j_hi = hi * r2;
        double mp_lo = std::ceil(j_lo - tol);
        double mp_hi = std::floor(j_hi + tol);
        if (std::max(1.0, mp_lo) <= mp_hi) return true;
    }
    return false;
}

} // namespace detail

// Membership of k in U(V, W) for the pair structure of S_j: true when some
// omega with |omega| < W puts log(dk+1) and log(d'k+1) simultaneously within
// 1/V of nonzero integers, for distinct d, d'. Sign symmetry reduces to the
// positive branch. Borderline cases within eps are indeterminate and treated
// as inside (the filter only ever removes candidates).
inline UStatus classify_u(const Nat& k, const std::vector<Nat>& subset, double V, double W,
                          double eps = 1e-12) {
    if (!(V > 0)) throw validation_error("classify_u requires V > 0");
    if (!(W >= 1)) throw validation_error("classify_u requires W >= 1");
    bool relaxed_hit = false;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = 0; j < subset.size(); ++j) {
            if (i == j) continue;
            double r1 = log_nat(subset[i] * k + 1);
            double r2 = log_nat(subset[j] * k + 1);
            if (detail::u_resonance_hit(r1, r2, V, W, -eps)) return UStatus::inside;
            if (detail::u_resonance_hit(r1, r2, V, W, +eps)) relaxed_hit = true;
        }
    }
    return relaxed_hit ? UStatus::indeterminate : UStatus::outside;
}

inline bool in_U(const Nat& k, const std::vector<Nat>& subset, double V, double W,
                 double eps = 1e-12) {
    return classify_u(k, subset, V, W, eps) != UStatus::outside;
}

struct QEntry {
    Nat prime;
    Nat d;
    std::size_t j = 0;
};

struct KSearchResult {
    KWindow window;
    std::map<std::size_t, std::vector<KHit>> per_j_hits; // hits surviving the filter
    Nat k0;
    std::vector<QEntry> q_set; // ordered by (j, d), primes pairwise distinct
    std::size_t j_count_at_k0 = 0;
};

struct JSearchInput {
    std::size_t j = 0;
    std::vector<Nat> subset;
    std::vector<KHit> hits;
};

// Pigeonhole selection: the k appearing in the most distinct j's wins, ties
// broken by the smallest k. With the filter on, (k, j) pairs with k in
// U(V, W) for that j are removed first.
inline KSearchResult pick_k0(const KWindow& window, const std::vector<JSearchInput>& searches,
                             bool filter) {
    KSearchResult result;
    result.window = window;

    for (const auto& js : searches) {
        std::vector<KHit> surviving;
        for (const auto& hit : js.hits) {
            if (filter && in_U(hit.k, js.subset, window.V, window.W)) continue;
            surviving.push_back(hit);
        }
        if (!surviving.empty()) result.per_j_hits[js.j] = std::move(surviving);
    }

    struct KJ {
        std::size_t j;
        const KHit* hit;
    };
    std::map<Nat, std::vector<KJ>> candidates;
    for (const auto& [j, hits] : result.per_j_hits)
        for (const auto& hit : hits) candidates[hit.k].push_back({j, &hit});

    if (candidates.empty()) throw validation_error("pick_k0: no hits survive the filter");

    const Nat* best_k = nullptr;
    std::size_t best_count = 0;
    for (const auto& [k, kjs] : candidates) { // ascending k: first max wins ties
        if (kjs.size() > best_count) {
            best_count = kjs.size();
            best_k = &k;
        }
    }
    result.k0 = *best_k;
    result.j_count_at_k0 = best_count;

    std::set<Nat> seen;
    auto kjs = candidates[result.k0];
    std::sort(kjs.begin(), kjs.end(), [](const KJ& a, const KJ& b) { return a.j < b.j; });
    for (const auto& kj : kjs) {
        for (const auto& [d, prime] : kj.hit->witnesses) {
            if (seen.insert(prime).second) result.q_set.push_back({prime, d, kj.j});
        }
    }

    // independent re-verification of the assembled result
    Nat g;
    mpz_gcd(g.get_mpz_t(), result.k0.get_mpz_t(), window.L.get_mpz_t());
    if (window.L > 1 && g != 1) throw consistency_error("pick_k0: k0 shares a factor with L");
    for (const auto& entry : result.q_set) {
        if (entry.d * result.k0 + 1 != entry.prime || !is_prime(entry.prime))
            throw consistency_error("pick_k0: witness re-verification failed");
    }
    return result;
}

} // namespace korselt
