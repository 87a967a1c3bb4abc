#pragma once

// Radial reduction of the power-law interaction kernel |x|^k/k:
// surface constants, the angular profile theta_{k,N}(s) and its derivative,
// the two-argument kernel Theta_{k,N}(r, eta), and a direct angular
// quadrature oracle every downstream layer can cross-validate against.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "aggdiff/quadrature.hpp"
#include "aggdiff/specfun.hpp"

namespace aggdiff {

struct ModelParams {
    int N = 3;       // space dimension, >= 2
    double k = -1.0; // kernel exponent, in (-N, 0)
    double m = 2.0;  // diffusion exponent, > 1
    int chi = 0;     // confinement switch, 0 or 1
    double M = 1.0;  // total mass, > 0

    double m_c() const { return 1.0 - k / N; }
    // Upper exponent of the global-minimiser window; +inf for k >= 1-N.
    double m_star() const {
        if (k < 1.0 - N) return (2.0 - k - N) / (1.0 - k - N);
        return std::numeric_limits<double>::infinity();
    }

    void validate() const {
        if (N < 2) throw std::domain_error("ModelParams: N must be >= 2");
        if (!(k > -N) || !(k < 0.0))
            throw std::domain_error("ModelParams: k must lie in (-N, 0)");
        if (!(m > 1.0)) throw std::domain_error("ModelParams: m must be > 1");
        if (chi != 0 && chi != 1)
            throw std::domain_error("ModelParams: chi must be 0 or 1");
        if (!(M > 0.0)) throw std::domain_error("ModelParams: M must be > 0");
    }
};

// Surface area of the unit sphere in R^N.
inline double surface_area(int N) {
    if (N < 1) throw std::domain_error("surface_area: N must be >= 1");
    return 2.0 * std::pow(M_PI, 0.5 * N) / gamma_fn(0.5 * N);
}

// d_N = 2^{N-2} sigma_{N-1} Gamma((N-1)/2)^2 / Gamma(N-1)  (equals sigma_N).
inline double d_constant(int N) {
    if (N < 2) throw std::domain_error("d_constant: N must be >= 2");
    const double g = gamma_fn(0.5 * (N - 1));
    return std::pow(2.0, N - 2) * surface_area(N - 1) * g * g /
           gamma_fn(N - 1.0);
}

// theta_{k,N}(s) = d_N F(-k/2, 1-(k+N)/2; N/2; s^2) on [0,1); at s = 1 the
// finite limit exists iff k > 1-N.
inline double theta(const ModelParams& p, double s) {
    if (!(s >= 0.0) || s > 1.0)
        throw std::domain_error("theta: s must lie in [0, 1]");
    if (s == 1.0 && !(p.k > 1.0 - p.N))
        throw std::domain_error("theta: singular at s = 1 for k <= 1-N");
    return d_constant(p.N) *
           hyp2f1(-0.5 * p.k, 1.0 - 0.5 * (p.k + p.N), 0.5 * p.N, s * s);
}

// d theta / ds via the hypergeometric derivative identity; nonnegative
// exactly when k <= 2-N.
inline double theta_prime(const ModelParams& p, double s) {
    if (!(s >= 0.0) || s >= 1.0)
        throw std::domain_error("theta_prime: s must lie in [0, 1)");
    if (s == 0.0) return 0.0;
    const double a = -0.5 * p.k;
    const double b = 1.0 - 0.5 * (p.k + p.N);
    const double c = 0.5 * p.N;
    return d_constant(p.N) * 2.0 * s * (a * b / c) *
           hyp2f1(a + 1.0, b + 1.0, c + 1.0, s * s);
}

// Theta_{k,N}(r, eta) = max(r,eta)^k theta(min/max); symmetric, singular on
// the diagonal.
inline double big_theta(const ModelParams& p, double r, double eta) {
    if (!(r > 0.0) || !(eta > 0.0))
        throw std::domain_error("big_theta: radii must be positive");
    if (r == eta)
        throw std::domain_error("big_theta: singular on the diagonal r = eta");
    const double hi = std::max(r, eta);
    const double lo = std::min(r, eta);
    return std::pow(hi, p.k) * theta(p, lo / hi);
}

// --- Direct angular quadrature oracle -------------------------------------
// Theta_{k,N}(r,eta) = sigma_{N-1} int_0^pi (r^2+eta^2-2 r eta cos h)^{k/2}
// sin^{N-2}h dh. The substitution t = cos^2(h/2) gives
//   2^{N-2} sigma_{N-1} int_0^1 (t(1-t))^{(N-3)/2} ((r+eta)^2 - 4 r eta t)^{k/2} dt,
// and t = u^2 / 1-t = v^2 absorb the endpoint weights for N = 2.

namespace detail {

// the angular integral parameterized by D = (r-eta)^2 and B = 4 r eta, i.e.
// (r+eta)^2 - 4 r eta t = D + B(1-t): the naive form cancels catastrophically
// for eta near r and t near 1, so D is supplied exactly by the caller
inline double big_theta_oracle_db(int N, double k, double D, double B,
                                  double rel_tol) {
    const double e = 0.5 * (N - 3.0);
    // left half, t = u^2 (so 1 - t = 1 - u^2, safe for u^2 <= 1/2)
    auto fl = [&](double u) {
        const double t = u * u;
        return 2.0 * std::pow(u, N - 2.0) * std::pow(1.0 - t, e) *
               std::pow(D + B * (1.0 - t), 0.5 * k);
    };
    // right half, 1 - t = v^2 exactly
    auto fr = [&](double v) {
        const double omt = v * v;
        return 2.0 * std::pow(v, N - 2.0) * std::pow(1.0 - omt, e) *
               std::pow(D + B * omt, 0.5 * k);
    };
    const double half = std::sqrt(0.5);
    const double I = adaptive_gk15(fl, 0.0, half, rel_tol, 0.0) +
                     adaptive_gk15(fr, 0.0, half, rel_tol, 0.0);
    return std::pow(2.0, N - 2.0) * surface_area(N - 1) * I;
}

}  // namespace detail

inline double big_theta_oracle(int N, double k, double r, double eta,
                               double rel_tol = 1e-11) {
    if (!(r >= 0.0) || !(eta >= 0.0) || r + eta <= 0.0)
        throw std::domain_error("big_theta_oracle: radii must be nonnegative");
    if (r == eta)
        throw std::domain_error("big_theta_oracle: singular diagonal");
    return detail::big_theta_oracle_db(N, k, (r - eta) * (r - eta),
                                       4.0 * r * eta, rel_tol);
}

// Theta at eta = r - u (side < 0) or eta = r + u (side > 0) with the offset
// u supplied exactly, so near-diagonal values stay accurate even when u is
// below one ulp of r.
inline double big_theta_oracle_near(int N, double k, double r, double u,
                                    int side, double rel_tol = 1e-11) {
    if (!(u > 0.0))
        throw std::domain_error("big_theta_oracle_near: offset must be > 0");
    const double eta = (side < 0) ? r - u : r + u;
    if (!(eta > 0.0) || !(r > 0.0))
        throw std::domain_error("big_theta_oracle_near: radii must be > 0");
    return detail::big_theta_oracle_db(N, k, u * u, 4.0 * r * eta, rel_tol);
}

inline double theta_oracle(int N, double k, double s, double rel_tol = 1e-11) {
    if (s == 0.0) {
        // the angular integral loses its kernel factor; a Beta value in
        // disguise, but quadrature keeps this path independent of Gamma
        const double e = 0.5 * (N - 3.0);
        auto fl = [&](double u) {
            const double t = u * u;
            return 2.0 * std::pow(u, N - 2.0) * std::pow(1.0 - t, e);
        };
        auto fr = [&](double v) {
            const double t = 1.0 - v * v;
            return 2.0 * std::pow(v, N - 2.0) * std::pow(t, e);
        };
        const double half = std::sqrt(0.5);
        const double I = adaptive_gk15(fl, 0.0, half, rel_tol, 0.0) +
                         adaptive_gk15(fr, 0.0, half, rel_tol, 0.0);
        return std::pow(2.0, N - 2.0) * surface_area(N - 1) * I;
    }
    return big_theta_oracle(N, k, 1.0, s, rel_tol);
}

}  // namespace aggdiff
