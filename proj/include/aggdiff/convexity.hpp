#pragma once

// Executable form of the comparison-from-below inequality for theta_{k,N}:
// for k in (-N, 2-N) and any (t,c) in (0,1)^2,
//   theta(t)/k >= alpha(c) + beta(c) (1 - t^N)^{k/N},
//   alpha(c) = theta(c)/k + (1/k^2) c^{1-N} (1-c^N) theta'(c)        <= 0,
//   beta(c)  =            -(1/k^2) c^{1-N} (1-c^N)^{1-k/N} theta'(c) <= 0,
// i.e. theta/k is convex relative to (1-t^N)^{k/N}: every tangent in the
// phi-coordinate lies below the curve. The scan evaluates the residual on a
// lattice; the companion routines verify the proof ingredients: the
// relative-convexity differential criterion, the term-by-term series
// coefficient bound, the sharp elementary N-inequality, and the
// two-dimensional convex-decoupling bound.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aggdiff/kernel.hpp"
#include "aggdiff/potential.hpp"
#include "aggdiff/specfun.hpp"

namespace aggdiff {

namespace detail {

inline void require_subharmonic(const ModelParams& p, const char* who) {
    if (!(p.k > -p.N) || !(p.k < 2.0 - p.N))
        throw std::domain_error(std::string(who) +
                                ": requires k in (-N, 2-N)");
}

inline std::pair<double, double> alpha_beta(const ThetaCapped& th,
                                            const ThetaPrimeCapped& thp,
                                            double c) {
    const ModelParams& p = th.params();
    if (!(c > 0.0) || !(c < 1.0))
        throw std::domain_error("alpha_beta: c must lie in (0,1)");
    const double k = p.k;
    const double cn = std::pow(c, (double)p.N);
    const double pref = std::pow(c, 1.0 - p.N) / (k * k);
    const double tp = thp(c);
    const double alpha = th(c) / k + pref * (1.0 - cn) * tp;
    const double beta = -pref * std::pow(1.0 - cn, 1.0 - k / p.N) * tp;
    return {alpha, beta};
}

}  // namespace detail

inline std::pair<double, double> alpha_beta(const ModelParams& params,
                                            double c) {
    params.validate();
    const detail::ThetaCapped th(params);
    const detail::ThetaPrimeCapped thp(params);
    return detail::alpha_beta(th, thp, c);
}

struct ScanViolation {
    double t = 0.0;
    double c = 0.0;
    double residual = 0.0;
};

struct ScanReport {
    int N = 0;
    double k = 0.0;
    std::vector<double> t_grid;
    std::vector<double> c_grid;
    std::vector<double> residuals;  // row-major, residuals[i*nc + j] at
                                    // (t_grid[i], c_grid[j])
    std::vector<ScanViolation> violations;
    double tol = 0.0;
    double min_residual = 0.0;
    double exclusion_band = 0.0;  // t > 1 - exclusion_band was not scanned

    double residual_at(int i, int j) const {
        return residuals[(std::size_t)i * c_grid.size() + j];
    }
};

// Residual lattice of the comparison inequality on the interior lattice
// t_i = c_i = i/(resolution+1). Points with t > 1 - 1/(4 resolution) are
// excluded (the bound diverges to -infinity there, so the inequality is
// trivial while the power overflows).
inline ScanReport scan(const ModelParams& params, int resolution, double tol) {
    params.validate();
    if (resolution < 16)
        throw std::invalid_argument("scan: resolution must be >= 16");
    if (!(tol >= 0.0)) throw std::invalid_argument("scan: tol must be >= 0");
    const int N = params.N;
    const double k = params.k;

    ScanReport rep;
    rep.N = N;
    rep.k = k;
    rep.tol = tol;
    rep.exclusion_band = 1.0 / (4.0 * resolution);

    const detail::ThetaCapped th(params);
    const detail::ThetaPrimeCapped thp(params);
    for (int i = 1; i <= resolution; ++i) {
        const double x = (double)i / (resolution + 1);
        if (x <= 1.0 - rep.exclusion_band) rep.t_grid.push_back(x);
        rep.c_grid.push_back(x);
    }
    const std::size_t nt = rep.t_grid.size(), nc = rep.c_grid.size();

    std::vector<double> lhs(nt), powt(nt), alpha(nc), beta(nc);
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = rep.t_grid[i];
        lhs[i] = th(t) / k;
        powt[i] = std::pow(1.0 - std::pow(t, (double)N), k / N);
    }
    for (std::size_t j = 0; j < nc; ++j) {
        const auto ab = detail::alpha_beta(th, thp, rep.c_grid[j]);
        alpha[j] = ab.first;
        beta[j] = ab.second;
    }

    rep.residuals.resize(nt * nc);
    rep.min_residual = std::numeric_limits<double>::infinity();
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            const double r = lhs[i] - alpha[j] - beta[j] * powt[i];
            rep.residuals[i * nc + j] = r;
            rep.min_residual = std::min(rep.min_residual, r);
            // violation floor: tol plus the roundoff of the evaluated
            // difference itself. Near the small-c tangency diagonal alpha
            // and beta grow like c^{1-N} while the residual is exactly
            // zero, so the subtraction noise scales with the terms.
            const double noise =
                64.0 * eps *
                (std::abs(lhs[i]) + std::abs(alpha[j]) +
                 std::abs(beta[j]) * powt[i]);
            if (r < -(tol + noise))
                rep.violations.push_back({rep.t_grid[i], rep.c_grid[j], r});
        }
    }
    return rep;
}

// Differential criterion equivalent to the comparison inequality:
//   (1-z) g''(z) - (1 - k/N) g'(z) >= 0,   g(z) = (d_N/k) F(abar,bbar;cbar;z)
// with abar = -k/2, bbar = 1-(k+N)/2, cbar = N/2. Derivatives use the
// hypergeometric derivative identity twice (no finite differences).
inline double relative_convexity_residual(const ModelParams& params,
                                          double z) {
    params.validate();
    detail::require_subharmonic(params, "relative_convexity_residual");
    if (!(z > 0.0) || !(z < 1.0))
        throw std::domain_error(
            "relative_convexity_residual: z must lie in (0,1)");
    const double k = params.k;
    const int N = params.N;
    const double ab = -0.5 * k;
    const double bb = 1.0 - 0.5 * (k + N);
    const double cb = 0.5 * N;
    const double dN = d_constant(N);
    const double g1 =
        (dN / k) * (ab * bb / cb) * hyp2f1(ab + 1.0, bb + 1.0, cb + 1.0, z);
    const double g2 = (dN / k) * (ab * bb / cb) *
                      ((ab + 1.0) * (bb + 1.0) / (cb + 1.0)) *
                      hyp2f1(ab + 2.0, bb + 2.0, cb + 2.0, z);
    return (1.0 - z) * g2 - (1.0 - k / N) * g1;
}

// g'(z) of the same g; strictly negative on (0,1) for k in (-N, 2-N).
inline double relative_convexity_gprime(const ModelParams& params, double z) {
    params.validate();
    detail::require_subharmonic(params, "relative_convexity_gprime");
    if (!(z >= 0.0) || !(z < 1.0))
        throw std::domain_error(
            "relative_convexity_gprime: z must lie in [0,1)");
    const double k = params.k;
    const int N = params.N;
    const double ab = -0.5 * k;
    const double bb = 1.0 - 0.5 * (k + N);
    const double cb = 0.5 * N;
    return (d_constant(N) / k) * (ab * bb / cb) *
           hyp2f1(ab + 1.0, bb + 1.0, cb + 1.0, z);
}

// Term-by-term sufficient condition for the differential criterion:
//   (abar+1+n)(bbar+1+n) <= (1 - k/N + n)(cbar+1+n)   for all 0 <= n <= n_max
// together with the two closed-form sign facts that make it hold for every n:
//   abar+bbar-cbar+k/N = (N+k)(1-N)/N < 0,
//   (abar+1)(bbar+1)-(cbar+1)(1-k/N) = (N+k)(k/4 + 1/N - 1) < 0.
inline bool series_coefficient_check(const ModelParams& params, long n_max) {
    params.validate();
    detail::require_subharmonic(params, "series_coefficient_check");
    if (n_max < 0)
        throw std::invalid_argument(
            "series_coefficient_check: n_max must be >= 0");
    const double k = params.k;
    const int N = params.N;
    const double ab = -0.5 * k;
    const double bb = 1.0 - 0.5 * (k + N);
    const double cb = 0.5 * N;

    const double slope = (N + k) * (1.0 - N) / N;
    const double offset = (N + k) * (0.25 * k + 1.0 / N - 1.0);
    if (!(slope < 0.0) || !(offset < 0.0)) return false;
    // the closed forms must reproduce the direct expressions
    if (std::abs((ab + bb - cb + k / N) - slope) > 1e-12) return false;
    if (std::abs(((ab + 1.0) * (bb + 1.0) - (cb + 1.0) * (1.0 - k / N)) -
                 offset) > 1e-12)
        return false;

    for (long n = 0; n <= n_max; ++n) {
        const double lhs = (ab + 1.0 + n) * (bb + 1.0 + n);
        const double rhs = (1.0 - k / N + n) * (cb + 1.0 + n);
        if (!(lhs <= rhs)) return false;
    }
    return true;
}

// Sharp elementary inequality N/(1-t^N) >= 2/(1-t^2) + (N-2)/2 on (0,1);
// returns the residual (identically zero for N = 2).
inline double sharp_n_inequality(int N, double t) {
    if (N < 2) throw std::domain_error("sharp_n_inequality: N must be >= 2");
    if (!(t > 0.0) || !(t < 1.0))
        throw std::domain_error("sharp_n_inequality: t must lie in (0,1)");
    return N / (1.0 - std::pow(t, (double)N)) - 2.0 / (1.0 - t * t) -
           0.5 * (N - 2);
}

// The companion polynomial u(t) = N(1-t^2) - 2(1-t^N) - (N-2)/2 (1-t^2)(1-t^N)
// whose nonnegativity is equivalent to the sharp inequality; u(0) = (N-2)/2,
// u(1) = 0.
inline double sharp_n_u(int N, double t) {
    if (N < 2) throw std::domain_error("sharp_n_u: N must be >= 2");
    if (!(t >= 0.0) || t > 1.0)
        throw std::domain_error("sharp_n_u: t must lie in [0,1]");
    const double tn = std::pow(t, (double)N);
    return N * (1.0 - t * t) - 2.0 * (1.0 - tn) -
           0.5 * (N - 2) * (1.0 - t * t) * (1.0 - tn);
}

// Two-dimensional decoupling bound (convexity of x^{k/2} with the weight
// tuned so equality holds at t = c): for k in (-2,0) and u,t,c in (0,1),
//   (1 - t^2 u)^{k/2} <= (1-u)(1-c^2 u)^{k/2-1}
//                      + (1-c^2)^{1-k/2} u (1-c^2 u)^{k/2-1} (1-t^2)^{k/2}.
// Returns bound minus value (>= 0, zero at t = c).
inline double decoupling_gap_2d(double k, double u, double t, double c) {
    if (!(k > -2.0) || !(k < 0.0))
        throw std::domain_error("decoupling_gap_2d: requires k in (-2,0)");
    if (!(u > 0.0) || !(u < 1.0) || !(t > 0.0) || !(t < 1.0) || !(c > 0.0) ||
        !(c < 1.0))
        throw std::domain_error(
            "decoupling_gap_2d: u, t, c must lie in (0,1)");
    const double base = std::pow(1.0 - c * c * u, 0.5 * k - 1.0);
    const double bound = (1.0 - u) * base +
                         std::pow(1.0 - c * c, 1.0 - 0.5 * k) * u * base *
                             std::pow(1.0 - t * t, 0.5 * k);
    return bound - std::pow(1.0 - t * t * u, 0.5 * k);
}

}  // namespace aggdiff
