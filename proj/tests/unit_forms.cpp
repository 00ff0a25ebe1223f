#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "korselt/divisors.hpp"
#include "korselt/forms.hpp"
#include "korselt/smoothset.hpp"

using namespace korselt;

namespace {

// independent admissibility oracle: for each prime p <= ceiling, scan all
// residues n mod p and ask whether some form vanishes at every one of them
bool admissible_oracle(const LinearFormTuple& t, std::uint64_t ceiling) {
    for (std::uint64_t p = 2; p <= ceiling; ++p) {
        if (!detail::is_prime_u64(p)) continue;
        bool free_residue = false;
        for (std::uint64_t n = 0; n < p && !free_residue; ++n) {
            bool some_zero = false;
            for (const auto& [d, c] : t.forms) {
                if ((mpz_fdiv_ui(d.get_mpz_t(), p) * n + mpz_fdiv_ui(c.get_mpz_t(), p)) % p == 0) {
                    some_zero = true;
                    break;
                }
            }
            if (!some_zero) free_residue = true;
        }
        if (!free_residue) return false;
    }
    return true;
}

} // namespace

TEST_CASE("omega_p examples") {
    CHECK(omega_p(5, {Nat(1), Nat(2)}) == std::vector<std::uint64_t>{1, 3});
    CHECK(omega_p(2, {Nat(1)}).empty());
    CHECK(omega_p(3, {}) == std::vector<std::uint64_t>{1, 2});
    CHECK_THROWS_AS(omega_p(6, {}), validation_error);
}

TEST_CASE("omega_p equals an independent residue scan") {
    std::mt19937_64 rng(42);
    for (std::uint64_t p : {3ULL, 5ULL, 7ULL, 11ULL, 41ULL, 97ULL}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<Nat> ds;
            std::uniform_int_distribution<std::uint64_t> dist(1, 500);
            for (int i = 0; i < 4; ++i) ds.push_back(nat_from_u64(dist(rng)));
            auto fast = omega_p(p, ds);
            std::vector<std::uint64_t> slow;
            for (std::uint64_t a = 1; a < p; ++a) {
                bool ok = true;
                for (const Nat& d : ds)
                    if ((to_u64(Nat(d % p)) * a + 1) % p == 0) { ok = false; break; }
                if (ok) slow.push_back(a);
            }
            REQUIRE(fast == slow);
        }
    }
}

TEST_CASE("lift_residue CRT examples") {
    ResidueSelection sel = make_residue_selection({3, 5}, {});
    CHECK(lift_residue(sel, {{3, 1}, {5, 1}}) == 1);
    CHECK(lift_residue(sel, {{3, 2}, {5, 3}}) == 8);
    ResidueSelection single = make_residue_selection({5}, {});
    CHECK(lift_residue(single, {{5, 3}}) == 3);
    CHECK_THROWS_AS(lift_residue(sel, {{3, 0}, {5, 1}}), validation_error);
    CHECK_THROWS_AS(lift_residue(sel, {{3, 1}}), validation_error);
}

TEST_CASE("lift_residue rejects residues outside Omega_p") {
    // d = 1 removes a = p - 1 from Omega_p
    ResidueSelection sel = make_residue_selection({5}, {Nat(1)});
    CHECK_THROWS_AS(lift_residue(sel, {{5, 4}}), validation_error);
    CHECK(lift_residue(sel, {{5, 3}}) == 3);
}

TEST_CASE("build_forms arithmetic") {
    auto t1 = build_forms({Nat(1)}, 5, 3);
    REQUIRE(t1.forms.size() == 1);
    CHECK(t1.forms[0] == std::pair<Nat, Nat>{5, 4});

    auto t2 = build_forms({Nat(7), Nat(13)}, 91, 1);
    CHECK(t2.forms[0] == std::pair<Nat, Nat>{637, 8});
    CHECK(t2.forms[1] == std::pair<Nat, Nat>{1183, 14});

    auto t3 = build_forms({Nat(7), Nat(13)}, 91, 64);
    CHECK(t3.forms[0].second == 449);  // 7 * 64 + 1
    CHECK(t3.forms[1].second == 833);  // 13 * 64 + 1

    CHECK_THROWS_AS(build_forms({Nat(7)}, 91, 91), validation_error);
    CHECK_THROWS_AS(build_forms({Nat(7)}, 91, 0), validation_error);
}

TEST_CASE("is_admissible on the classic examples") {
    LinearFormTuple bad;
    bad.forms = {{1, 1}, {1, 3}, {1, 5}};
    CHECK_FALSE(is_admissible(bad)); // mod 3, every n kills one form

    LinearFormTuple chernick;
    chernick.forms = {{6, 1}, {12, 1}, {18, 1}};
    CHECK(is_admissible(chernick));

    LinearFormTuple lone;
    lone.forms = {{2, 1}};
    CHECK(is_admissible(lone));

    LinearFormTuple empty;
    CHECK_THROWS_AS(is_admissible(empty), validation_error);
}

TEST_CASE("is_admissible agrees with the residue-scan oracle on random tuples") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::uint64_t> coef(1, 1000);
    std::uniform_int_distribution<int> len(1, 8);
    int done = 0;
    while (done < 1000) {
        LinearFormTuple t;
        int n = len(rng);
        bool shared_large_prime = false;
        for (int i = 0; i < n; ++i) {
            std::uint64_t d = coef(rng), c = coef(rng);
            // the oracle only scans p <= 50; keep shared prime factors small
            std::uint64_t g = std::gcd(d, c);
            for (const auto& [p, e] : factorize(nat_from_u64(g)).factors)
                if (p > 50) shared_large_prime = true;
            t.forms.emplace_back(nat_from_u64(d), nat_from_u64(c));
        }
        if (shared_large_prime) continue;
        ++done;
        REQUIRE(is_admissible(t) == admissible_oracle(t, 50));
    }
}

TEST_CASE("tuples built from valid residue lifts are always admissible") {
    for (double y : {20.0, 30.0}) {
        auto s = build_smooth_primes(y, 0.5);
        if (s.primes.size() < 3) continue;
        auto fam = partition_divisors(s, enumerate_divisors(s), 2);
        Nat big = 1;
        for (auto p : s.primes) big *= nat_from_u64(p);
        for (std::size_t i = 0; i < fam.subsets.size(); ++i) {
            ResidueSelection sel = make_residue_selection(s.primes, fam.subsets[i]);
            if (sel.empty()) continue;
            // walk a few lifts in lexicographic order of per-prime choices
            for (int variant = 0; variant < 3; ++variant) {
                std::map<std::uint64_t, std::uint64_t> choice;
                bool valid = true;
                for (const auto& [p, omega] : sel.per_prime) {
                    std::size_t pick = std::min<std::size_t>(variant, omega.size() - 1);
                    choice[p] = omega[pick];
                    if (omega.empty()) valid = false;
                }
                if (!valid) break;
                Nat a_l = lift_residue(sel, choice);
                auto tuple = build_forms(fam.subsets[i], big, a_l, i + 1);
                REQUIRE(is_admissible(tuple));
                REQUIRE(admissible_oracle(tuple, 50));
            }
        }
    }
}

TEST_CASE("size_ratio respects the (1 - (M+1)/p) product bound") {
    auto s = build_smooth_primes(20, 0.5); // P = {7, 13, 17, 19}
    auto fam = partition_divisors(s, enumerate_divisors(s), 2);
    const std::size_t m_val = 2;
    for (const auto& subset : fam.subsets) {
        ResidueSelection sel = make_residue_selection(s.primes, subset);
        bool hypothesis = true;
        double bound = 1.0;
        for (const auto& [p, omega] : sel.per_prime) {
            if (omega.size() + m_val + 1 < p) hypothesis = false;
            bound *= 1.0 - static_cast<double>(m_val + 1) / static_cast<double>(p);
        }
        if (hypothesis) CHECK(sel.size_ratio >= bound - 1e-12);
    }
}
