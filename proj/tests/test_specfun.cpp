// Special-function layer: gamma, digamma, Pochhammer, and the Gauss
// hypergeometric function with its identity suite. Reference values are
// frozen from an independent high-precision evaluation (25-digit arithmetic)
// and appear inline next to each check.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "aggdiff/specfun.hpp"

using namespace aggdiff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("gamma: classical values and poles", "[specfun]") {
    CHECK_THAT(gamma_fn(1.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(gamma_fn(0.5), WithinRel(std::sqrt(M_PI), 1e-13));
    CHECK_THAT(gamma_fn(5.0), WithinRel(24.0, 1e-13));
    // recursion oracle: Gamma(4.2) = 3.2 * 2.2 * 1.2 * Gamma(1.2)
    CHECK_THAT(gamma_fn(4.2),
               WithinRel(3.2 * 2.2 * 1.2 * gamma_fn(1.2), 1e-13));
    CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_fn(-3.0), std::domain_error);
}

TEST_CASE("gamma: frozen high-precision references", "[specfun]") {
    CHECK_THAT(gamma_fn(10.5), WithinRel(1133278.3889487856, 1e-12));
    CHECK_THAT(gamma_fn(25.0), WithinRel(6.2044840173323944e+23, 1e-12));
    CHECK_THAT(gamma_fn(-3.7), WithinRel(0.25164399590242268, 1e-12));
    CHECK_THAT(gamma_fn(0.1), WithinRel(9.5135076986687313, 1e-12));
    CHECK_THAT(gamma_fn(49.5), WithinRel(8.6676018431352723e+61, 1e-12));
}

TEST_CASE("digamma: frozen references, recurrence, poles", "[specfun]") {
    CHECK_THAT(digamma_fn(1.0), WithinRel(-0.57721566490153286, 1e-12));
    CHECK_THAT(digamma_fn(0.5), WithinRel(-1.9635100260214235, 1e-12));
    CHECK_THAT(digamma_fn(10.25), WithinRel(2.277704790686724, 1e-12));
    CHECK_THAT(digamma_fn(-2.5), WithinRel(1.1031566406452432, 1e-12));
    CHECK_THAT(digamma_fn(37.0), WithinRel(3.5973435318931062, 1e-12));
    CHECK_THAT(digamma_fn(0.001), WithinRel(-1000.5755719318103, 1e-12));
    for (double x : {0.3, 1.7, 6.9, 12.4})
        CHECK_THAT(digamma_fn(x + 1.0),
                   WithinRel(digamma_fn(x) + 1.0 / x, 1e-12));
    CHECK_THROWS_AS(digamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(digamma_fn(-7.0), std::domain_error);
}

TEST_CASE("pochhammer: base cases and recurrences", "[specfun]") {
    CHECK(pochhammer(3.7, 0) == 1.0);
    CHECK(pochhammer(-2.0, 0) == 1.0);
    CHECK(pochhammer(1.0, 5) == 120.0);
    CHECK(pochhammer(3.0, 2) == 12.0);
    // (q)_{n+1} = (q+n)(q)_n and (q+1)_n = ((q+n)/q)(q)_n
    for (double q : {0.4, 2.5, -1.3}) {
        for (int n = 0; n < 8; ++n) {
            CHECK_THAT(pochhammer(q, n + 1),
                       WithinRel((q + n) * pochhammer(q, n), 1e-13));
            CHECK_THAT(pochhammer(q + 1.0, n),
                       WithinRel((q + n) / q * pochhammer(q, n), 1e-13));
        }
    }
}

TEST_CASE("hyp2f1: special arguments", "[specfun]") {
    CHECK(hyp2f1(0.7, 1.9, 2.3, 0.0) == 1.0);
    // F(1,1;2;z) = -ln(1-z)/z
    CHECK_THAT(hyp2f1(1.0, 1.0, 2.0, 0.5),
               WithinRel(1.3862943611198906, 1e-12));
    // z = 1 with c > a+b: the Gauss value
    CHECK_THAT(hyp2f1(0.25, 0.75, 3.25, 1.0),
               WithinRel(1.0863718812312726, 1e-12));
    const double gauss = gamma_fn(3.25) * gamma_fn(3.25 - 1.0) /
                         (gamma_fn(3.0) * gamma_fn(2.5));
    CHECK_THAT(hyp2f1(0.25, 0.75, 3.25, 1.0), WithinRel(gauss, 1e-12));
    CHECK_THROWS_AS(hyp2f1(1.0, 1.5, 2.0, 1.0), std::domain_error);
    // terminating series is exact: F(-2,b;c;z) is a quadratic in z
    const double b = 1.3, c = 2.1, z = 0.77;
    const double quad =
        1.0 - 2.0 * b / c * z + b * (b + 1.0) / (c * (c + 1.0)) * z * z;
    CHECK_THAT(hyp2f1(-2.0, b, c, z), WithinRel(quad, 1e-14));
}

TEST_CASE("hyp2f1: frozen references across dispatch branches", "[specfun]") {
    // plain series
    CHECK_THAT(hyp2f1(0.5, 0.8, 2.3, 0.5),
               WithinRel(1.1119103510885574, 1e-12));
    CHECK_THAT(hyp2f1(1.25, 1.0, 1.5, 0.3),
               WithinRel(1.3437771404595543, 1e-12));
    // tiny-b expansion near z = 1
    CHECK_THAT(hyp2f1(0.5, 1e-6, 2.3, 0.97),
               WithinRel(1.0000002980817077, 1e-12));
    // integer c-a-b = 0 near z = 1 (logarithmic connection)
    CHECK_THAT(hyp2f1(1.25, 1.5, 2.75, 0.95),
               WithinRel(4.5890753198886104, 1e-11));
    // non-integer c-a-b near z = 1 (linear connection)
    CHECK_THAT(hyp2f1(1.3, 0.7, 2.55, 0.97),
               WithinRel(2.1183078524793747, 1e-11));
    CHECK_THAT(hyp2f1(-0.3, 0.7, 1.85, 0.97),
               WithinRel(0.84596961631357355, 1e-11));
    CHECK_THAT(hyp2f1(2.0, 3.0, 4.5, 0.99),
               WithinRel(74.610836924575145, 1e-11));
    // integer c-a-b = 2 and -1 near z = 1
    CHECK_THAT(hyp2f1(0.5, 0.7, 3.2, 0.995),
               WithinRel(1.1784461841455757, 1e-11));
    CHECK_THAT(hyp2f1(1.3, 2.2, 2.5, 0.98),
               WithinRel(65.528519457901206, 1e-11));
}

TEST_CASE("hyp2f1: logarithmic connection against frozen oracle",
          "[specfun]") {
    // w = 1-z down to 1e-18; direct high-precision references
    struct Row {
        double a, b, c, w, f;
    };
    const Row rows[] = {
        {0.5, 0.5, 1.0, 1.0e-18, 14.075383180440305713},
        {0.5, 0.5, 1.0, 2e-9, 7.2583271936836581607},
        {0.5, 0.5, 1.0, 1e-6, 5.2801571547718662757},
        {0.5, 0.5, 1.0, 0.05, 1.8515049970729286245},
        {1.5, 1.5, 2.0, 1.0e-18, 1273239544735162673.0},
        {1.5, 1.5, 2.0, 2e-9, 636619766.06418379695},
        {1.5, 1.5, 2.0, 0.001, 1271.110670722251532},
        {1.0, 0.5, 1.5, 2e-9, 10.708206518961384757},
        {1.0, 0.5, 1.5, 0.05, 2.2348601327173790809},
        {2.0, 0.5, 2.5, 0.001, 5.4756385061780335193},
        {2.0, 0.5, 2.5, 0.05, 2.6510346779991230588},
    };
    for (const Row& r : rows)
        CHECK_THAT(detail::hyp2f1_log_z1(r.a, r.b, r.c, r.w),
                   WithinRel(r.f, 5e-13));
    // exact w = 0 limits
    CHECK_THAT(detail::hyp2f1_log_z1(1.0, 1.0, 3.0, 0.0),
               WithinRel(2.0, 1e-13));
    CHECK(std::isinf(detail::hyp2f1_log_z1(0.5, 0.5, 1.0, 0.0)));
}

TEST_CASE("hyp2f1_integral: reductions and series agreement", "[specfun]") {
    // z = 0 and a = 0: the Beta integral cancels the normalization exactly
    CHECK_THAT(hyp2f1_integral(1.7, 1.2, 2.9, 0.0), WithinRel(1.0, 1e-10));
    CHECK_THAT(hyp2f1_integral(0.0, 1.2, 2.9, 0.64), WithinRel(1.0, 1e-10));
    // independent quadrature route agrees with the power series
    CHECK_THAT(hyp2f1_integral(1.25, 1.0, 1.5, 0.3),
               WithinRel(hyp2f1(1.25, 1.0, 1.5, 0.3), 1e-8));
    CHECK_THAT(hyp2f1_integral(0.6, 1.4, 2.2, 0.85),
               WithinRel(hyp2f1(0.6, 1.4, 2.2, 0.85), 1e-8));
    // z = 1 merged-endpoint path reproduces the Gauss value
    CHECK_THAT(hyp2f1_integral(0.25, 0.75, 3.25, 1.0),
               WithinRel(1.0863718812312726, 1e-9));
    CHECK_THROWS_AS(hyp2f1_integral(1.0, 2.0, 1.5, 0.3), std::domain_error);
    CHECK_THROWS_AS(hyp2f1_integral(1.0, -0.5, 1.5, 0.3), std::domain_error);
    CHECK_THROWS_AS(hyp2f1_integral(2.0, 0.5, 2.0, 1.0), std::domain_error);
}

TEST_CASE("hyp2f1: identity residuals at pinned points", "[specfun]") {
    // derivative identity vs central differences
    const auto r1 = identity_residuals({1.25, 1.5, 1.5, 0.4}, 1e-5);
    CHECK(r1.derivative <= 1e-6);
    // quadratic transformation
    const auto r2 = identity_residuals({1.25, 1.0, 2.0, 0.36});
    CHECK(r2.quadratic <= 1e-9);
    // contiguous relations
    CHECK(r2.contiguous_15_2_17 <= 1e-9);
    CHECK(r2.contiguous_15_2_18 <= 1e-9);
    // at z = 0 the 15.2.18 relation is (c-a-b) - (c-a) + b = 0 exactly
    const auto r3 = identity_residuals({0.8, 1.1, 2.4, 0.0});
    CHECK(r3.contiguous_15_2_18 <= 1e-14);
}

TEST_CASE("hyp2f1: random identity draws", "[specfun]") {
    std::mt19937_64 eng(20240817);
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * (double)(eng() >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 25; ++trial) {
        const double a = uni(0.1, 2.5), b = uni(0.1, 2.5);
        const double c = a + b + uni(0.1, 2.0);
        const double z = uni(0.05, 0.85);
        const auto r = identity_residuals({a, b, c, z}, 1e-5);
        CHECK(r.derivative <= 1e-6);
        CHECK(r.contiguous_15_2_17 <= 1e-9);
        CHECK(r.contiguous_15_2_18 <= 1e-9);
        const auto rq = identity_residuals({a, b, 2.0 * b, z});
        CHECK(rq.quadratic <= 1e-9);
    }
}

TEST_CASE("hyp2f1: monotone in z for positive parameters", "[specfun]") {
    for (double a : {0.4, 1.3})
        for (double b : {0.7, 2.1})
            for (double c : {1.9, 3.4}) {
                double prev = hyp2f1(a, b, c, 0.0);
                for (int i = 1; i <= 9; ++i) {
                    const double cur = hyp2f1(a, b, c, 0.1 * i);
                    CHECK(cur >= prev);
                    prev = cur;
                }
            }
}

TEST_CASE("hyp2f1: validation rejects out-of-domain input", "[specfun]") {
    CHECK_THROWS_AS(hyp2f1(1.0, 1.0, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(hyp2f1(1.0, 1.0, -2.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(hyp2f1(1.0, 1.0, 2.0, 1.5), std::domain_error);
    CHECK_THROWS_AS(hyp2f1(1.0, 1.0, 2.0, -1.0), std::domain_error);
}
