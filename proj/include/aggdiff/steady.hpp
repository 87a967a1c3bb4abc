#pragma once

// Radial steady states of the aggregation-diffusion equation and the
// identities they satisfy. A stationary state obeys, on its support,
//   (m/(m-1)) rho^{m-1} + W_k * rho + chi r^2/2 = C,
// which the solver treats as a damped fixed point: invert the relation for
// rho with the Lagrange level C chosen so the mass is M, mix with the
// previous iterate, repeat. The characterization residual checks the
// independent integral representation
//   rho^m(r) = int_r^inf rho(s) [ (d/ds)(W_k * rho)(s) + chi s ] ds
// (with the shell-theorem form of the bracket when k = 2-N), and the
// weighted identity generalizes it against an arbitrary weight g.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/density.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/potential.hpp"

namespace aggdiff {

struct SteadyState {
    RadialDensity density;
    double lagrange_constant = 0.0;  // Euler-Lagrange level C
    double support_radius = 0.0;
    int iterations = 0;
    double residual = 0.0;  // final fixed-point L1 gap
};

namespace detail {

inline void check_regime(const ModelParams& p) {
    const double mc = p.m_c();
    const double slack = 1e-12 * std::max(1.0, std::abs(mc));
    if (p.m < mc - slack)
        throw std::domain_error(
            "steady: attraction-dominated regime m < m_c is not admissible");
    if (p.m > mc + slack && p.chi != 0)
        throw std::domain_error(
            "steady: diffusion-dominated regime requires chi = 0");
}

// d/ds (W_k * rho)(s) for piecewise-constant rho:
//   int_0^s [ s^{k-1} theta(t/s) - (s^{k-2}/k) t theta'(t/s) ] rho t^{N-1} dt
// + int_s^inf (t^{k-1}/k) theta'(s/t) rho t^{N-1} dt,
// with the same offset-coordinate treatment of the diagonal as the
// potential quadrature.
inline double dds_potential(const ThetaCapped& th, const ThetaPrimeCapped& thp,
                            const RadialDensity& rho, double s,
                            int gl_order = 8) {
    const ModelParams& p = th.params();
    const int N = p.N;
    const double k = p.k;
    const double sk1 = std::pow(s, k - 1.0);
    const double sk2 = std::pow(s, k - 2.0) / k;
    const int levels = thp.levels();

    auto inner_u = [&](double u) {  // t = s - u
        const double t = s - u;
        const double w = u * (2.0 * s - u) / (s * s);
        return (sk1 * th.at_w(w) - sk2 * t * thp.at_w(w)) *
               std::pow(t, N - 1.0);
    };
    auto inner_far = [&](double t) {
        const double w = (s - t) * (s + t) / (s * s);
        return (sk1 * th.at_w(w) - sk2 * t * thp.at_w(w)) *
               std::pow(t, N - 1.0);
    };
    auto outer_u = [&](double u) {  // t = s + u
        const double t = s + u;
        const double w = u * (2.0 * s + u) / (t * t);
        return thp.at_w(w) * std::pow(t, k - 1.0) / k * std::pow(t, N - 1.0);
    };
    auto outer_far = [&](double t) {
        const double w = (t - s) * (t + s) / (t * t);
        return thp.at_w(w) * std::pow(t, k - 1.0) / k * std::pow(t, N - 1.0);
    };

    double acc = 0.0;
    for (int j = 0; j < rho.cells(); ++j) {
        if (rho.value(j) == 0.0) continue;
        const double lo = rho.face(j), hi = rho.face(j + 1);
        const double width = hi - lo;
        double piece = 0.0;
        if (hi <= s) {
            piece = (s - hi < width)
                        ? graded_gl(inner_u, s - hi, s - lo, false, levels, 8)
                        : fixed_gl(inner_far, lo, hi, gl_order);
        } else if (lo >= s) {
            piece = (lo - s < width)
                        ? graded_gl(outer_u, lo - s, hi - s, false, levels, 8)
                        : fixed_gl(outer_far, lo, hi, gl_order);
        } else {
            piece = graded_gl(inner_u, 0.0, s - lo, false, levels, 8) +
                    graded_gl(outer_u, 0.0, hi - s, false, levels, 8);
        }
        acc += rho.value(j) * piece;
    }
    return acc;
}

// Newtonian bracket (shell theorem): d/ds (W_{2-N} * rho)(s) = M_rho(s) s^{1-N}
inline double dds_potential_newtonian(const RadialDensity& rho, double s) {
    return rho.cumulative_mass(s) * std::pow(s, 1.0 - rho.dim());
}

}  // namespace detail

// Fixed-point solver on a prebuilt operator (its grid must be the grid of
// `init`); tol is the L1 gap between an iterate and its fixed-point image.
inline SteadyState solve(const ConvolutionOperator& op,
                         const RadialDensity& init, double tol = 1e-11,
                         int max_iter = 400) {
    const ModelParams& params = op.params();
    params.validate();
    detail::check_regime(params);
    if (params.N != init.dim())
        throw std::invalid_argument("solve: params.N != density dimension");
    if (!(init.mass() > 0.0))
        throw std::domain_error("solve: initial density must carry mass");
    if (op.faces() != init.faces())
        throw std::invalid_argument("solve: operator grid != density grid");

    const int J = init.cells();
    const auto& faces = init.faces();
    const double M = params.M;
    const double mm1 = params.m - 1.0;
    const double expo = 1.0 / mm1;

    std::vector<double> centers((std::size_t)J), vols((std::size_t)J);
    for (int j = 0; j < J; ++j) {
        centers[j] = 0.5 * (faces[j] + faces[j + 1]);
        vols[j] = (std::pow(faces[j + 1], params.N) -
                   std::pow(faces[j], params.N)) /
                  params.N;
    }
    const double sigma = surface_area(params.N);

    std::vector<double> rho = init.values();
    // normalize the starting mass so C-bisection begins well-scaled
    {
        double m0 = 0.0;
        for (int j = 0; j < J; ++j) m0 += rho[j] * vols[j];
        m0 *= sigma;
        for (auto& v : rho) v *= M / m0;
    }

    std::vector<double> cand((std::size_t)J), prev_update;
    double tau = 0.5;
    double C = 0.0;
    double gap = 0.0;
    int iter = 0;
    for (iter = 1; iter <= max_iter; ++iter) {
        std::vector<double> pt = op.potential(rho);  // S at centers
        for (int j = 0; j < J; ++j)
            pt[j] += 0.5 * params.chi * centers[j] * centers[j];

        auto mass_at = [&](double level) {
            double s = 0.0;
            for (int j = 0; j < J; ++j) {
                const double arg = mm1 / params.m * (level - pt[j]);
                if (arg > 0.0) s += std::pow(arg, expo) * vols[j];
            }
            return sigma * s;
        };
        double c_lo = *std::min_element(pt.begin(), pt.end());
        double c_hi = c_lo + 1.0;
        while (mass_at(c_hi) < M) {
            c_hi = c_lo + 2.0 * (c_hi - c_lo);
            if (!std::isfinite(c_hi))
                throw std::runtime_error("solve: Lagrange bisection diverged");
        }
        for (int b = 0; b < 200; ++b) {
            C = 0.5 * (c_lo + c_hi);
            const double dm = mass_at(C) - M;
            if (std::abs(dm) <= 1e-12 * M) break;
            (dm < 0.0 ? c_lo : c_hi) = C;
        }

        int support = 0;
        for (int j = 0; j < J; ++j) {
            const double arg = mm1 / params.m * (C - pt[j]);
            cand[j] = (arg > 0.0) ? std::pow(arg, expo) : 0.0;
            if (cand[j] > 0.0) ++support;
        }
        if (support < 2)
            throw std::runtime_error(
                "solve: support collapsed below two cells (attraction "
                "dominance or supercritical mass)");

        std::vector<double> update((std::size_t)J);
        gap = 0.0;
        for (int j = 0; j < J; ++j) {
            update[j] = cand[j] - rho[j];
            gap += std::abs(update[j]) * vols[j];
        }
        gap *= sigma;

        if (!prev_update.empty()) {
            double corr = 0.0;
            for (int j = 0; j < J; ++j)
                corr += update[j] * prev_update[j] * vols[j];
            if (corr < 0.0) tau = std::max(0.05, 0.5 * tau);
        }
        prev_update = update;

        for (int j = 0; j < J; ++j) rho[j] += tau * update[j];
        if (gap <= tol) break;
    }
    if (gap > tol)
        throw std::runtime_error(
            "solve: no convergence within max_iter (final L1 gap " +
            std::to_string(gap) + ")");

    RadialDensity out(params.N, faces, rho);
    const double rsup = out.support_radius();
    return SteadyState{std::move(out), C, rsup, std::min(iter, max_iter), gap};
}

inline SteadyState solve(const ModelParams& params, const RadialDensity& init,
                         double tol = 1e-11, int max_iter = 400) {
    const ConvolutionOperator op(params, init.faces(),
                                 /*with_interaction=*/false);
    return solve(op, init, tol, max_iter);
}

// sup-norm residual of the integral characterization, normalized by
// sup rho^m; evaluated at cell centers.
inline double characterization_residual(const RadialDensity& rho_bar,
                                        const ModelParams& params) {
    params.validate();
    if (params.N != rho_bar.dim())
        throw std::invalid_argument(
            "characterization_residual: params.N != density dimension");
    const bool newtonian = params.k == 2.0 - params.N;
    if (!newtonian && !(params.k > 1.0 - params.N))
        throw std::domain_error(
            "characterization_residual: the non-harmonic branch needs "
            "k > 1-N for an integrable theta'");

    const detail::ThetaCapped th(params);
    const detail::ThetaPrimeCapped thp(params);
    auto bracket = [&](double s) {
        return newtonian ? detail::dds_potential_newtonian(rho_bar, s)
                         : detail::dds_potential(th, thp, rho_bar, s);
    };
    auto integrand = [&](int cell, double s) {
        return rho_bar.value(cell) * (bracket(s) + params.chi * s);
    };

    const int J = rho_bar.cells();
    const GLRule& rule = gauss_legendre(4);
    auto seg = [&](int cell, double a, double b) {
        if (!(b > a) || rho_bar.value(cell) == 0.0) return 0.0;
        const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
        double s = 0.0;
        for (int g = 0; g < 4; ++g)
            s += hw * rule.w[g] * integrand(cell, mid + hw * rule.x[g]);
        return s;
    };

    // tail[j] = integral over [face_j, r_max); residual compares at centers
    std::vector<double> tail((std::size_t)J + 1, 0.0);
    std::vector<double> right_half((std::size_t)J, 0.0);
    for (int j = J - 1; j >= 0; --j) {
        const double c = 0.5 * (rho_bar.face(j) + rho_bar.face(j + 1));
        right_half[j] = seg(j, c, rho_bar.face(j + 1));
        tail[j] = tail[j + 1] + right_half[j] + seg(j, rho_bar.face(j), c);
    }

    double worst = 0.0, scale = 0.0;
    for (int j = 0; j < J; ++j) {
        const double lhs = std::pow(rho_bar.value(j), params.m);
        const double rhs = right_half[j] + tail[j + 1];
        worst = std::max(worst, std::abs(lhs - rhs));
        scale = std::max(scale, lhs);
    }
    return worst / std::max(scale, 1e-300);
}

inline double characterization_residual(const SteadyState& ss,
                                        const ModelParams& params) {
    return characterization_residual(ss.density, params);
}

// Residual of the weighted stationary-state identity
//   int g(a) rho^m(a) a^{N-1} da
//     = int G(b) [ (d/db)(W_k * rho)(b) + chi b ] rho(b) db,
// G(b) = int_0^b g(a) a^{N-1} da (the triple-integral form after exchanging
// the order of integration), normalized by the larger side.
inline double g_weighted_identity_residual(
    const RadialDensity& rho_bar, const std::function<double(double)>& g,
    const ModelParams& params) {
    params.validate();
    if (params.N != rho_bar.dim())
        throw std::invalid_argument(
            "g_weighted_identity_residual: params.N != density dimension");
    const bool newtonian = params.k == 2.0 - params.N;
    if (!newtonian && !(params.k > 1.0 - params.N))
        throw std::domain_error(
            "g_weighted_identity_residual: the non-harmonic branch needs "
            "k > 1-N for an integrable theta'");

    const int J = rho_bar.cells();
    const int N = params.N;
    const GLRule& rule = gauss_legendre(8);
    auto gl8 = [&](auto&& f, double a, double b) {
        const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
        double s = 0.0;
        for (int g2 = 0; g2 < 8; ++g2)
            s += hw * rule.w[g2] * f(mid + hw * rule.x[g2]);
        return s;
    };
    auto gw = [&](double a) { return g(a) * std::pow(a, N - 1.0); };

    // prefix integrals of g(a) a^{N-1} at faces
    std::vector<double> prefix((std::size_t)J + 1, 0.0);
    for (int j = 0; j < J; ++j)
        prefix[j + 1] =
            prefix[j] + gl8(gw, rho_bar.face(j), rho_bar.face(j + 1));

    double lhs = 0.0;
    for (int j = 0; j < J; ++j)
        if (rho_bar.value(j) > 0.0)
            lhs += std::pow(rho_bar.value(j), params.m) *
                   (prefix[j + 1] - prefix[j]);

    const detail::ThetaCapped th(params);
    const detail::ThetaPrimeCapped thp(params);
    auto bracket = [&](double b) {
        return (newtonian ? detail::dds_potential_newtonian(rho_bar, b)
                          : detail::dds_potential(th, thp, rho_bar, b)) +
               params.chi * b;
    };
    double rhs = 0.0;
    for (int j = 0; j < J; ++j) {
        if (rho_bar.value(j) == 0.0) continue;
        auto f = [&](double b) {
            const double G =
                prefix[j] + gl8(gw, rho_bar.face(j), b);
            return G * bracket(b);
        };
        const GLRule& r4 = gauss_legendre(4);
        const double lo = rho_bar.face(j), hi = rho_bar.face(j + 1);
        const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        double cell = 0.0;
        for (int g2 = 0; g2 < 4; ++g2)
            cell += hw * r4.w[g2] * f(mid + hw * r4.x[g2]);
        rhs += rho_bar.value(j) * cell;
    }

    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    return std::abs(lhs - rhs) / scale;
}

inline double g_weighted_identity_residual(
    const SteadyState& ss, const std::function<double(double)>& g,
    const ModelParams& params) {
    return g_weighted_identity_residual(ss.density, g, params);
}

// Mass-weighted variance of the Euler-Lagrange quantity
// (m/(m-1)) rho^{m-1} + W_k*rho + chi r^2/2 over the support.
inline double el_variance(const RadialDensity& rho_bar,
                          const ConvolutionOperator& op) {
    const ModelParams& params = op.params();
    if (params.N != rho_bar.dim())
        throw std::invalid_argument(
            "el_variance: params.N != density dimension");
    if (op.faces() != rho_bar.faces())
        throw std::invalid_argument("el_variance: operator grid mismatch");
    const auto S = op.potential(rho_bar.values());
    double wsum = 0.0, mean = 0.0;
    std::vector<double> el((std::size_t)rho_bar.cells(), 0.0),
        wt((std::size_t)rho_bar.cells(), 0.0);
    for (int j = 0; j < rho_bar.cells(); ++j) {
        if (rho_bar.value(j) <= 0.0) continue;
        const double c = 0.5 * (rho_bar.face(j) + rho_bar.face(j + 1));
        el[j] = params.m / (params.m - 1.0) *
                    std::pow(rho_bar.value(j), params.m - 1.0) +
                S[j] + 0.5 * params.chi * c * c;
        wt[j] = rho_bar.value(j) * rho_bar.cell_volume(j);
        wsum += wt[j];
        mean += wt[j] * el[j];
    }
    if (wsum == 0.0) return 0.0;
    mean /= wsum;
    double var = 0.0;
    for (int j = 0; j < rho_bar.cells(); ++j)
        if (wt[j] > 0.0) var += wt[j] * (el[j] - mean) * (el[j] - mean);
    return var / wsum;
}

inline double el_variance(const RadialDensity& rho_bar,
                          const ModelParams& params) {
    const ConvolutionOperator op(params, rho_bar.faces(),
                                 /*with_interaction=*/false);
    return el_variance(rho_bar, op);
}

}  // namespace aggdiff
