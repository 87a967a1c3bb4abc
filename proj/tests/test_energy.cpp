// Free-energy functional: breakdown terms, the closed-form stationary
// identity, the virial identity, and scaling laws.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aggdiff/energy.hpp"
#include "aggdiff/steady.hpp"

using namespace aggdiff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
ModelParams make(int N, double k, double m, int chi = 0, double M = 1.0) {
    ModelParams p;
    p.N = N;
    p.k = k;
    p.m = m;
    p.chi = chi;
    p.M = M;
    return p;
}

RadialDensity ball_on_grid(int N, double M, double R, int J, double r_max) {
    std::vector<double> faces = uniform_faces(r_max, J);
    std::vector<double> vals((std::size_t)J, 0.0);
    for (int j = 0; j < J; ++j)
        if (faces[j + 1] <= R) vals[j] = 1.0;
    RadialDensity rho(N, faces, vals);
    rho.normalize_mass(M);
    return rho;
}
}  // namespace

TEST_CASE("evaluate: zero density gives zero energy", "[energy]") {
    RadialDensity z(3, uniform_faces(1.0, 8), std::vector<double>(8, 0.0));
    const auto e = evaluate(z, make(3, -1.5, 2.0, 1));
    CHECK(e.entropy == 0.0);
    CHECK(e.interaction == 0.0);
    CHECK(e.confinement == 0.0);
    CHECK(e.total == 0.0);
}

TEST_CASE("evaluate: sign structure and exact term sum", "[energy]") {
    const auto p = make(3, -1.5, 2.0, 1);
    const auto rho = tent_profile(3, 1.0, 1.0, 48, 1.3);
    const auto e = evaluate(rho, p);
    CHECK(e.entropy > 0.0);
    CHECK(e.interaction < 0.0);
    CHECK(e.confinement > 0.0);
    CHECK(e.total == e.entropy + e.interaction + e.confinement);
}

TEST_CASE("evaluate: uniform-ball entropy closed form", "[energy]") {
    const double M = 2.0, R = 1.25, m = 2.5;
    const auto rho = uniform_ball(3, M, R, 64);
    const auto p = make(3, -1.0, m);
    const double vol = surface_area(3) * std::pow(R, 3) / 3.0;
    const double expect = std::pow(M, m) * std::pow(vol, 1.0 - m) / (m - 1.0);
    CHECK_THAT(evaluate(rho, p).entropy, WithinRel(expect, 1e-12));
}

TEST_CASE("evaluate: operator fast path matches one-shot route", "[energy]") {
    const auto p = make(3, -1.5, 2.0, 1);
    const auto rho = tent_profile(3, 1.0, 1.0, 32, 1.3);
    ConvolutionOperator op(p, rho.faces(), true);
    const auto a = evaluate(rho, p);
    const auto b = evaluate(rho, op);
    CHECK_THAT(a.entropy, WithinRel(b.entropy, 1e-12));
    CHECK_THAT(a.interaction, WithinRel(b.interaction, 1e-9));
    CHECK_THAT(a.confinement, WithinRel(b.confinement, 1e-12));
    const auto other = tent_profile(3, 1.0, 1.0, 16, 1.3);
    CHECK_THROWS_AS(evaluate(other, op), std::invalid_argument);
}

TEST_CASE("interaction: one-sided omega form vs symmetric double integral",
          "[energy]") {
    const auto p = make(3, -1.5, 2.0);
    const auto rho = tent_profile(3, 1.0, 1.0, 48, 1.3);
    const double one_sided = interaction_energy(rho, p);
    const double symmetric = interaction_energy_symmetric(rho, p);
    CHECK(one_sided < 0.0);
    CHECK_THAT(one_sided, WithinRel(symmetric, 1e-6));
}

TEST_CASE("evaluate: dilation homogeneity at critical diffusion", "[energy]") {
    const auto p = make(3, -1.5, 1.0 + 1.5 / 3.0, 0);
    const auto rho = tent_profile(3, 1.0, 1.0, 48, 1.3);
    const double base = evaluate(rho, p).total;
    for (double lam : {0.5, 2.0}) {
        const double scaled = evaluate(rho.dilate(lam), p).total;
        CHECK_THAT(scaled, WithinRel(std::pow(lam, -p.k) * base, 1e-10));
    }
}

TEST_CASE("stationary identity: agreement on computed steady states",
          "[energy]") {
    // fair-competition regime with confinement
    const auto pb = make(3, -1.5, 1.0 + 1.5 / 3.0, 1, 0.5);
    const auto ssb = solve(pb, ball_on_grid(3, pb.M, 1.0, 256, 2.5));
    const auto eb = evaluate(ssb.density, pb);
    const double fb = stationary_energy_identity(ssb.density, pb);
    CHECK_THAT(eb.total, WithinRel(fb, 1e-4));

    // Newtonian branch of the coefficient (k = 2-N)
    const auto pa = make(3, -1.0, 2.0, 0);
    const auto ssa = solve(pa, ball_on_grid(3, pa.M, 1.0, 256, 2.0));
    const auto ea = evaluate(ssa.density, pa);
    const double fa = stationary_energy_identity(ssa.density, pa);
    CHECK_THAT(ea.total, WithinRel(fa, 2e-4));

    SECTION("virial identity on the same outputs") {
        CHECK(virial_identity_residual(ssb.density, pb) <= 1e-4);
        CHECK(virial_identity_residual(ssa.density, pa) <= 2e-4);
        // deliberate negative control: a uniform ball is not stationary
        const auto ub = uniform_ball(3, pb.M, 1.0, 64);
        CHECK(virial_identity_residual(ub, pb) > 1e-2);
    }

    SECTION("energy minimality against admissible perturbations") {
        ConvolutionOperator op(pb, ssb.density.faces(), true);
        const double fbar = evaluate(ssb.density, op).total;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto probe = random_decreasing(seed, pb, 256, 2.5);
            const double f = evaluate(probe, op).total;
            CHECK(f >= fbar - (1e-6 * std::abs(fbar) + 1e-8));
        }
    }
}

TEST_CASE("stationary identity: critical-mass degeneracy", "[energy]") {
    // chi = 0, m = m_c: the identity's entropy coefficient
    // 1/(N(m-1)) + 1/k vanishes, so the closed form is identically zero
    const auto p = make(3, -1.5, 1.0 + 1.5 / 3.0, 0);
    const auto rho = tent_profile(3, 1.0, 1.0, 32, 1.3);
    CHECK_THAT(stationary_energy_identity(rho, p), WithinAbs(0.0, 1e-12));
}
