#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "korselt/ksearch.hpp"

using namespace korselt;

namespace {

// naive per-k oracle for find_T
std::vector<KHit> naive_find_t(const Nat& l_mod, const std::vector<Nat>& subset, const Nat& lo,
                               const Nat& hi) {
    std::vector<KHit> out;
    std::vector<Nat> ds = subset;
    std::sort(ds.begin(), ds.end());
    for (Nat k = lo; k < hi; ++k) {
        Nat g;
        mpz_gcd(g.get_mpz_t(), k.get_mpz_t(), l_mod.get_mpz_t());
        if (l_mod > 1 && g != 1) continue;
        KHit hit;
        hit.k = k;
        for (const Nat& d : ds) {
            Nat q = d * k + 1;
            if (is_prime(q)) hit.witnesses.emplace_back(d, q);
        }
        if (hit.witnesses.size() >= 2) out.push_back(hit);
    }
    return out;
}

bool hits_equal(const std::vector<KHit>& a, const std::vector<KHit>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].k != b[i].k || a[i].witnesses != b[i].witnesses) return false;
    }
    return true;
}

} // namespace

TEST_CASE("find_T spec examples") {
    KWindow w{2, 1, 2.0, 1.0};
    auto hits = find_T(w, {Nat(1), Nat(2)}, Nat(2), Nat(4));
    REQUIRE(hits.size() == 1); // k=2: 3 and 5 prime; k=3: 4 is composite
    CHECK(hits[0].k == 2);
    REQUIRE(hits[0].witnesses.size() == 2);
    CHECK(hits[0].witnesses[0].second == 3);
    CHECK(hits[0].witnesses[1].second == 5);

    KWindow w2{1, 1, 2.0, 1.0};
    auto hits2 = find_T(w2, {Nat(6), Nat(12)}, Nat(1), Nat(2));
    REQUIRE(hits2.size() == 1); // k=1 gives 7 and 13
    CHECK(hits2[0].k == 1);
}

TEST_CASE("find_T requires two subset elements and a sane range") {
    KWindow w{2, 1, 2.0, 1.0};
    CHECK_THROWS_AS(find_T(w, {Nat(1)}), validation_error);
    CHECK_THROWS_AS(find_T(w, {Nat(1), Nat(2)}, Nat(5), Nat(4)), validation_error);
    KWindow huge{nat_from_u64(1) << 40, 1, 2.0, 1.0};
    CHECK_THROWS_AS(find_T(huge, {Nat(1), Nat(2)}), budget_error);
}

TEST_CASE("find_T equals the naive per-k scan") {
    // the S_j = {7, 13}, L = 91, Y = 100 instance plus randomized ones
    KWindow w{100, 91, 2.0, 1.0};
    auto fast = find_T(w, {Nat(7), Nat(13)});
    auto slow = naive_find_t(91, {Nat(7), Nat(13)}, 100, 200);
    REQUIRE(hits_equal(fast, slow));
    CHECK(!fast.empty()); // this window does contain paired primes

    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::uint64_t> dpick(1, 400);
    std::uniform_int_distribution<std::uint64_t> lpick(1, 3000);
    std::uniform_int_distribution<std::uint64_t> ypick(50, 5000);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Nat> subset;
        for (int i = 0; i < 3; ++i) subset.push_back(nat_from_u64(dpick(rng)));
        std::sort(subset.begin(), subset.end());
        subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
        if (subset.size() < 2) continue;
        Nat l_mod = nat_from_u64(lpick(rng));
        Nat y = nat_from_u64(ypick(rng));
        KWindow window{y, l_mod, 2.0, 1.0};
        auto a = find_T(window, subset, y, Nat(y + 2000));
        auto b = naive_find_t(l_mod, subset, y, Nat(y + 2000));
        REQUIRE(hits_equal(a, b));
    }
}

TEST_CASE("find_T output is independent of the thread count") {
    KWindow w{10'000, 91, 2.0, 1.0};
    auto sequential = find_T(w, {Nat(7), Nat(13)}, Nat(10'000), Nat(60'000));
    for (std::size_t threads : {2u, 3u, 7u}) {
        auto parallel = find_T(w, {Nat(7), Nat(13)}, Nat(10'000), Nat(60'000),
                               default_budget(), threads);
        REQUIRE(hits_equal(sequential, parallel));
    }
    CHECK(!sequential.empty());
}

TEST_CASE("in_U is vacuous at V = 1") {
    CHECK(in_U(100, {Nat(7), Nat(13)}, 1.0, 1.0));
    CHECK(in_U(5, {Nat(1), Nat(2)}, 1.0, 2.0));
}

TEST_CASE("in_U detects exact resonance at any tolerance") {
    // at k = 2: 24k+1 = 49 and 3k+1 = 7, so log(49)/log(7) = 2 exactly;
    // omega = 1/log 7 hits m = 2 and m' = 1 with zero error
    CHECK(in_U(2, {Nat(3), Nat(24)}, 1e9, 1.5));
    CHECK(in_U(2, {Nat(3), Nat(24)}, 1e3, 1.5));
}

TEST_CASE("in_U frozen grid-oracle value") {
    // frozen against a dense-omega grid scan (step well below 1/(V log(dk+1)))
    CHECK_FALSE(in_U(100, {Nat(7), Nat(13)}, 1000.0, 2.0));
    CHECK(classify_u(100, {Nat(7), Nat(13)}, 1000.0, 2.0) == UStatus::outside);
}

TEST_CASE("in_U monotonicity: smaller V and larger W preserve membership") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> kpick(10, 100000);
    std::uniform_int_distribution<std::uint64_t> dpick(1, 300);
    for (int trial = 0; trial < 200; ++trial) {
        Nat k = nat_from_u64(kpick(rng));
        std::vector<Nat> subset{nat_from_u64(dpick(rng)), nat_from_u64(dpick(rng) + 300)};
        double v_val = std::uniform_real_distribution<double>(1.0, 50.0)(rng);
        double w_val = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
        if (in_U(k, subset, v_val, w_val)) {
            CHECK(in_U(k, subset, v_val / 2.0, w_val));
            CHECK(in_U(k, subset, v_val, w_val * 2.0));
        }
    }
}

TEST_CASE("pick_k0 basics, pigeonhole and tie-break") {
    KWindow w{1, 1, 2.0, 1.0};

    // one j, one hit
    auto h1 = find_T(w, {Nat(1), Nat(2)}, Nat(2), Nat(3)); // k=2
    REQUIRE(h1.size() == 1);
    auto r1 = pick_k0(w, {{1, {Nat(1), Nat(2)}, h1}}, false);
    CHECK(r1.k0 == 2);
    CHECK(r1.j_count_at_k0 == 1);
    REQUIRE(r1.q_set.size() == 2);

    // pigeonhole: j1 hits {2, 6}, j2 hits {5, 6} -> k0 = 6 with both j's
    auto j1 = find_T(w, {Nat(1), Nat(2)}, Nat(2), Nat(7));
    auto j2 = find_T(w, {Nat(2), Nat(12)}, Nat(5), Nat(7));
    bool j1_has_6 = false, j2_has_6 = false;
    for (auto& h : j1) j1_has_6 |= (h.k == 6);
    for (auto& h : j2) j2_has_6 |= (h.k == 6);
    REQUIRE(j1_has_6);
    REQUIRE(j2_has_6);
    auto r2 = pick_k0(w, {{1, {Nat(1), Nat(2)}, j1}, {2, {Nat(2), Nat(12)}, j2}}, false);
    CHECK(r2.k0 == 6);
    CHECK(r2.j_count_at_k0 == 2);
    // Q is ordered by (j, d); the shared witness 13 = 2*6+1 appears once
    REQUIRE(r2.q_set.size() == 3);
    CHECK(r2.q_set[0].j == 1);
    CHECK(r2.q_set[0].prime == 7);   // 1*6+1
    CHECK(r2.q_set[1].prime == 13);  // 2*6+1
    CHECK(r2.q_set[2].j == 2);
    CHECK(r2.q_set[2].prime == 73);  // 12*6+1

    // tie at count 1 goes to the smallest k
    auto r3 = pick_k0(w, {{1, {Nat(1), Nat(2)}, j1}}, false);
    CHECK(r3.k0 == 2);

    CHECK_THROWS_AS(pick_k0(w, {}, false), validation_error);
    CHECK_THROWS_AS(pick_k0(w, {{1, {Nat(1), Nat(2)}, {}}}, false), validation_error);
}

TEST_CASE("duplicate witness primes are deduplicated in Q") {
    KWindow w{1, 1, 2.0, 1.0};
    // two j's sharing the divisor 2 at k=6 both witness the prime 13
    auto j1 = find_T(w, {Nat(1), Nat(2)}, Nat(6), Nat(7));
    auto j2 = find_T(w, {Nat(2), Nat(12)}, Nat(6), Nat(7));
    auto r = pick_k0(w, {{1, {Nat(1), Nat(2)}, j1}, {2, {Nat(2), Nat(12)}, j2}}, false);
    std::set<std::string> primes;
    for (const auto& e : r.q_set) CHECK(primes.insert(to_decimal(e.prime)).second);
    CHECK(r.q_set.size() == 3); // 7, 13 from j1; 73 from j2; 13 deduplicated
}

TEST_CASE("with the filter on, no surviving hit is in U for its j") {
    KWindow w{2, 1, 1.5, 1.0}; // V = 1.5 removes some but not all
    auto hits = find_T(w, {Nat(1), Nat(2)}, Nat(2), Nat(60));
    REQUIRE(!hits.empty());
    KSearchResult r;
    bool all_filtered = false;
    try {
        r = pick_k0(w, {{1, {Nat(1), Nat(2)}, hits}}, true);
    } catch (const validation_error&) {
        all_filtered = true;
    }
    if (!all_filtered) {
        for (const auto& [j, surviving] : r.per_j_hits)
            for (const auto& h : surviving)
                CHECK_FALSE(in_U(h.k, {Nat(1), Nat(2)}, w.V, w.W));
    }
}
