#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "korselt/bvstats.hpp"

using namespace korselt;

TEST_CASE("prime_counts examples") {
    auto c = prime_counts(10, 1, 0);
    CHECK(c.pi_qa == 4);
    CHECK_THAT(c.theta_qa, Catch::Matchers::WithinAbs(std::log(210.0), 1e-12));

    CHECK(prime_counts(10, 4, 1).pi_qa == 1); // just 5
    CHECK(prime_counts(100, 1, 0).pi_qa == 25);
}

TEST_CASE("psi minus theta equals the log sum over higher prime powers") {
    for (std::uint64_t x : {100ULL, 1000ULL, 10'000ULL}) {
        auto c = prime_counts(x, 1, 0);
        // independent enumeration of prime powers p^k <= x, k >= 2
        double expected = 0.0;
        for (std::uint64_t p = 2; p * p <= x; ++p) {
            if (!detail::is_prime_u64(p)) continue;
            for (std::uint64_t pk = p * p; ; pk *= p) {
                expected += std::log(static_cast<double>(p));
                if (pk > x / p) break;
            }
        }
        CHECK_THAT(c.psi_qa - c.theta_qa, Catch::Matchers::WithinAbs(expected, 1e-9));
    }
}

TEST_CASE("error_term examples and domain") {
    CHECK(error_term(10, 1, 0) == 0.0);
    CHECK_THAT(error_term(10, 2, 1), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(error_term(100, 3, 1), Catch::Matchers::WithinAbs(1.5, 1e-12));
    CHECK_THROWS_AS(error_term(100, 6, 3), validation_error);
}

TEST_CASE("residue counts over coprime classes sum to pi(z) minus primes dividing q") {
    for (std::uint64_t q : {3ULL, 8ULL, 15ULL, 30ULL, 49ULL, 50ULL}) {
        for (std::uint64_t z : {50ULL, 500ULL, 10'000ULL}) {
            std::uint64_t coprime_sum = 0;
            for (std::uint64_t a = 0; a < q; ++a) {
                if (std::gcd(a, q) != 1) continue;
                coprime_sum += prime_counts(z, q, a).pi_qa;
            }
            std::uint64_t pi_z = prime_counts(z, 1, 0).pi_qa;
            std::uint64_t dividing = 0;
            for (std::uint64_t p = 2; p <= std::min(q, z); ++p)
                if (detail::is_prime_u64(p) && q % p == 0) ++dividing;
            REQUIRE(coprime_sum == pi_z - dividing);
        }
    }
}

TEST_CASE("bv_error_sum row structure") {
    auto r = bv_error_sum(10, std::nullopt);
    CHECK(r.q_ceiling == 2); // 10^(2/5) ~ 2.51
    CHECK(r.per_q_max.size() == 2);
    CHECK(r.per_q_max[0].q == 1);
    CHECK(r.per_q_max[0].error == 0.0);

    auto r2 = bv_error_sum(10, 2);
    CHECK(r2.per_q_max.size() == 1);
    CHECK(r2.per_q_max[0].q == 1);
}

TEST_CASE("bv_error_sum regression anchor at x = 1e4") {
    // frozen from this implementation's first exact run
    auto r = bv_error_sum(10'000, std::nullopt);
    CHECK(r.q_ceiling == 39);
    CHECK(r.per_q_max.size() == 39);
    CHECK_THAT(r.total, Catch::Matchers::WithinAbs(313.2242243867, 1e-6));
}

TEST_CASE("bv_error_sum matches a direct per-q maximization oracle") {
    const std::uint64_t x = 300;
    auto report = bv_error_sum(x, std::nullopt);
    for (const auto& row : report.per_q_max) {
        double best = 0.0;
        for (std::uint64_t z = 2; z <= x; ++z) { // every z, not just primes
            for (std::uint64_t a = 0; a < row.q; ++a) {
                if (std::gcd(a, row.q) != 1 && row.q != 1) continue;
                best = std::max(best, error_term(z, row.q, row.q == 1 ? 0 : a));
            }
        }
        REQUIRE_THAT(row.error, Catch::Matchers::WithinAbs(best, 1e-9));
    }
}

TEST_CASE("sum_inv_totient examples and the Lemma bounds") {
    auto [s1, d1] = sum_inv_totient(1);
    CHECK(s1 == 1.0);
    CHECK(d1 == 1.0);
    auto [s3, d3] = sum_inv_totient(3);
    CHECK_THAT(s3, Catch::Matchers::WithinAbs(2.5, 1e-12));

    double prev_dev = 0.0;
    bool first = true;
    for (std::uint64_t x : {1000ULL, 10'000ULL, 100'000ULL, 1'000'000ULL}) {
        auto [sum, dev] = sum_inv_totient(x);
        CHECK(sum < 2.0 * std::log(static_cast<double>(x)));
        CHECK(std::fabs(dev) < 2.0);
        if (!first) CHECK(std::fabs(dev - prev_dev) < 0.5);
        prev_dev = dev;
        first = false;
    }
}

TEST_CASE("count_prime_tuples examples") {
    LinearFormTuple single;
    single.forms = {{1, 1}}; // n + 1
    CHECK(count_prime_tuples(single, 4, 1) == 2); // n = 4, 6

    LinearFormTuple twin;
    twin.forms = {{2, 1}, {2, 3}};
    CHECK(count_prime_tuples(twin, 2, 2) == 1); // n = 2 gives (5, 7)

    LinearFormTuple chernick;
    chernick.forms = {{6, 1}, {12, 1}, {18, 1}};
    // frozen from this implementation's own brute-force scan
    CHECK(count_prime_tuples_range(chernick, 1, 10'000, 3) == 159);
}

TEST_CASE("count_prime_tuples is monotone non-increasing in m") {
    LinearFormTuple t;
    t.forms = {{2, 1}, {4, 3}, {6, 5}};
    std::uint64_t prev = UINT64_MAX;
    for (unsigned m = 1; m <= 3; ++m) {
        std::uint64_t c = count_prime_tuples(t, 50, m);
        CHECK(c <= prev);
        prev = c;
    }
}
