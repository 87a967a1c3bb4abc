#pragma once

// Free energy in radial coordinates,
//   F[rho] = (1/(m-1)) int rho^m + (1/2) iint W_k(x-y) rho rho + (chi/2) int |x|^2 rho,
// with the interaction term in the one-sided omega-form
// sigma_N int omega(r) rho(r) r^{N-1} dr (equal to the symmetric double
// integral, and free of diagonal double-counting), plus the closed-form
// energy identity and virial identity satisfied by stationary states.

#include <cmath>
#include <stdexcept>

#include "aggdiff/density.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/potential.hpp"

namespace aggdiff {

struct EnergyBreakdown {
    double entropy = 0.0;      // (1/(m-1)) int rho^m
    double interaction = 0.0;  // (1/2) iint W_k rho rho
    double confinement = 0.0;  // (chi/2) int |x|^2 rho
    double total = 0.0;
};

// sigma_N int omega(r) rho(r) r^{N-1} dr with a single theta evaluator and
// Gauss-Legendre in r per cell (the one-shot counterpart of
// ConvolutionOperator::interaction)
inline double interaction_energy(const RadialDensity& rho,
                                 const ModelParams& params) {
    if (params.N != rho.dim())
        throw std::invalid_argument(
            "interaction_energy: params.N != density dimension");
    const detail::ThetaCapped th(params);
    const int J = rho.cells();
    const int gl_out = (J >= 256) ? 4 : 8;
    const GLRule& rule = gauss_legendre(gl_out);
    double acc = 0.0;
    for (int i = 0; i < J; ++i) {
        if (rho.value(i) == 0.0) continue;
        const double lo = rho.face(i), hi = rho.face(i + 1);
        const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        double cell = 0.0;
        for (int g = 0; g < gl_out; ++g) {
            const double r = mid + hw * rule.x[g];
            const auto v = detail::inner_weights(th, rho.faces(), r);
            double inner = 0.0;
            for (int j = 0; j < J; ++j) inner += v[j] * rho.value(j);
            cell += hw * rule.w[g] *
                    std::pow(r, params.k + params.N - 1.0) / params.k * inner;
        }
        acc += rho.value(i) * cell;
    }
    return surface_area(params.N) * acc;
}

inline EnergyBreakdown evaluate(const RadialDensity& rho,
                                const ModelParams& params) {
    params.validate();
    EnergyBreakdown e;
    e.entropy = rho.power_integral(params.m) / (params.m - 1.0);
    e.interaction = interaction_energy(rho, params);
    e.confinement = 0.5 * params.chi * rho.second_moment();
    e.total = e.entropy + e.interaction + e.confinement;
    return e;
}

// fast path against a prebuilt operator (fuzzing many densities on one grid)
inline EnergyBreakdown evaluate(const RadialDensity& rho,
                                const ConvolutionOperator& op) {
    const ModelParams& params = op.params();
    if (params.N != rho.dim() || rho.faces() != op.faces())
        throw std::invalid_argument(
            "evaluate: density grid does not match operator grid");
    EnergyBreakdown e;
    e.entropy = rho.power_integral(params.m) / (params.m - 1.0);
    e.interaction = op.interaction(rho.values());
    e.confinement = 0.5 * params.chi * rho.second_moment();
    e.total = e.entropy + e.interaction + e.confinement;
    return e;
}

// Symmetric factor-1/2 form (1/2) sigma_N int rho(r) (W_k * rho)(r) r^{N-1} dr
// through the pointwise potential: an independent route to the interaction
// term used to cross-check the omega-form.
inline double interaction_energy_symmetric(const RadialDensity& rho,
                                           const ModelParams& params,
                                           int gl_order = 6) {
    if (params.N != rho.dim())
        throw std::invalid_argument(
            "interaction_energy_symmetric: params.N != density dimension");
    const detail::ThetaCapped th(params);
    const GLRule& rule = gauss_legendre(gl_order);
    const int J = rho.cells();
    double acc = 0.0;
    for (int i = 0; i < J; ++i) {
        if (rho.value(i) == 0.0) continue;
        const double lo = rho.face(i), hi = rho.face(i + 1);
        const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        double cell = 0.0;
        for (int g = 0; g < gl_order; ++g) {
            const double r = mid + hw * rule.x[g];
            const auto wgt = detail::riesz_weights(th, rho.faces(), r);
            double s = 0.0;
            for (int j = 0; j < J; ++j) s += wgt[j] * rho.value(j);
            cell += hw * rule.w[g] * (s / params.k) *
                    std::pow(r, params.N - 1.0);
        }
        acc += rho.value(i) * cell;
    }
    return 0.5 * surface_area(params.N) * acc;
}

// Closed-form energy of a stationary state:
//   F[rho_bar] = N sigma_N [ (1/(N(m-1)) + 1/k) int rho_bar^m a^{N-1} da
//                + (chi/N)(1/2 - 1/k) int a^2 rho_bar a^{N-1} da ],
// valid for all k in (-N, 0) including the harmonic k = 2-N.
inline double stationary_energy_identity(const RadialDensity& rho_bar,
                                         const ModelParams& params) {
    params.validate();
    if (params.N != rho_bar.dim())
        throw std::invalid_argument(
            "stationary_energy_identity: params.N != density dimension");
    const double N = params.N;
    const double coeff_m = 1.0 / (N * (params.m - 1.0)) + 1.0 / params.k;
    const double coeff_chi = params.chi / N * (0.5 - 1.0 / params.k);
    return N * (coeff_m * rho_bar.power_integral(params.m) +
                coeff_chi * rho_bar.second_moment());
}

// Virial identity (the constant-weight case of the stationary-state
// identity):
//   int rho_bar^m a^{N-1} da
//     = (1/N) ( iint_{s<b} b^k theta(s/b) dsbar dbbar + chi int b^2 dbbar ),
// returned as a residual normalized by the larger side. The double integral
// is k/sigma_N times the interaction energy.
inline double virial_identity_residual(const RadialDensity& rho_bar,
                                       const ModelParams& params,
                                       double interaction) {
    const double sigma = surface_area(params.N);
    const double lhs = rho_bar.power_integral(params.m) / sigma;
    const double rhs = (params.k * interaction / sigma +
                        params.chi * rho_bar.second_moment() / sigma) /
                       params.N;
    const double scale =
        std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    return std::abs(lhs - rhs) / scale;
}

inline double virial_identity_residual(const RadialDensity& rho_bar,
                                       const ModelParams& params) {
    return virial_identity_residual(rho_bar, params,
                                    interaction_energy(rho_bar, params));
}

inline double virial_identity_residual(const RadialDensity& rho_bar,
                                       const ConvolutionOperator& op) {
    return virial_identity_residual(rho_bar, op.params(),
                                    op.interaction(rho_bar.values()));
}

}  // namespace aggdiff
