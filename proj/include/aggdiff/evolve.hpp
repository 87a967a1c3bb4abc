#pragma once

// Radial finite-volume gradient-flow simulator: explicit conservative update
// of the radial form
//   d/dt (r^{N-1} rho) = d/dr ( r^{N-1} [ d/dr rho^m + rho d/dr S_k
//                                         + chi r rho ] ),
// no-flux at r = 0 and at the outer face, adaptive time step under a
// diffusion CFL. The flux is discretized in its gradient-flow grouping
// rho d/dr xi with xi = m/(m-1) rho^{m-1} + S_k + chi r^2/2 and the donor
// cell upwinded by the sign of d xi/dr: the same continuum flux, but its
// discrete fixed points satisfy the cell-centered Euler-Lagrange equations
// (xi constant on the support) exactly, so the terminal profile matches the
// characterization-based solver instead of carrying an O(dr) scheme bias.
// Deliberately first-order and explicit -- simplicity and testability over
// speed at desk scale.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aggdiff/density.hpp"
#include "aggdiff/energy.hpp"
#include "aggdiff/potential.hpp"
#include "aggdiff/steady.hpp"

namespace aggdiff {

struct SimState {
    RadialDensity density;
    double time = 0.0;
    double dt = 0.0;
    // (time, total free energy) after every accepted step, starting with the
    // initial datum
    std::vector<std::pair<double, double>> energy_history;
};

struct EvolveOptions {
    double cfl = 0.4;        // constant in dt <= cfl min(dr)^2 / (m max rho^{m-1})
    int refresh_every = 1;   // recompute S_k = W_k * rho every this many steps
    long max_steps = 5000000;  // runaway guard (dt collapse); throws beyond
};

namespace detail {

// One conservative update of the cell averages. S holds W_k * rho at cell
// centers; the advective velocity at an interior face is the centered
// difference of S plus the confinement pull chi r. Returns the dt taken
// (the CFL value, shortened to dt_cap if that lands first).
inline double fv_step(std::vector<double>& rho, const std::vector<double>& S,
                      const ModelParams& p, const std::vector<double>& faces,
                      double cfl, double dt_cap) {
    const int J = (int)rho.size();
    const int N = p.N;
    const double m = p.m;

    double min_dr = std::numeric_limits<double>::infinity();
    double max_rho = 0.0;
    for (int j = 0; j < J; ++j) {
        min_dr = std::min(min_dr, faces[j + 1] - faces[j]);
        max_rho = std::max(max_rho, rho[j]);
    }
    if (!(max_rho > 0.0))
        throw std::runtime_error("evolve: density vanished identically");

    // diffusivity bound m rho^{m-1}: attained at max rho for m >= 1; for
    // m < 1 it blows up in vacuum, so it is evaluated no lower than a small
    // fraction of the peak (explicit stability heuristic for fast diffusion)
    double max_diff;
    if (m >= 1.0) {
        max_diff = m * std::pow(max_rho, m - 1.0);
    } else {
        double lo = max_rho;
        for (int j = 0; j < J; ++j)
            if (rho[j] > 1e-6 * max_rho) lo = std::min(lo, rho[j]);
        max_diff = m * std::pow(lo, m - 1.0);
    }

    // phase potential xi_j = m/(m-1) rho_j^{m-1} + S_j + chi c_j^2/2 at cell
    // centers. The power term is floored away from vacuum for m <= 1, where
    // it diverges (fast diffusion propagates at unbounded speed anyway); the
    // covered regimes always have m > 1.
    std::vector<double> xi((std::size_t)J);
    for (int j = 0; j < J; ++j) {
        const double c = 0.5 * (faces[j] + faces[j + 1]);
        double press;
        if (m > 1.0) {
            press = m / (m - 1.0) * std::pow(std::max(rho[j], 0.0), m - 1.0);
        } else {
            const double re = std::max(rho[j], 1e-12 * max_rho);
            press = (m == 1.0) ? std::log(re)
                               : m / (m - 1.0) * std::pow(re, m - 1.0);
        }
        xi[j] = press + S[j] + 0.5 * p.chi * c * c;
    }

    // face velocities v_f = d xi/dr at interior faces f = 1..J-1; the cap
    // scan skips faces with two empty neighbors, whose flux vanishes
    std::vector<double> v((std::size_t)J + 1, 0.0);
    double max_v = 0.0;
    for (int f = 1; f < J; ++f) {
        const double dc = 0.5 * (faces[f + 1] - faces[f - 1]);
        v[f] = (xi[f] - xi[f - 1]) / dc;
        if (std::max(rho[f], rho[f - 1]) > 0.0)
            max_v = std::max(max_v, std::abs(v[f]));
    }

    double dt = cfl * min_dr * min_dr / max_diff;
    if (max_v > 0.0) dt = std::min(dt, cfl * min_dr / max_v);
    if (!(dt > 0.0))
        throw std::runtime_error("evolve: time step collapsed to zero");
    if (dt > dt_cap) dt = dt_cap;

    // Phi_f = r_f^{N-1} rho_up v_f; cell balance d mu_j/dt = Phi_{j+1} -
    // Phi_j with mu_j = rho_j (r_{j+1}^N - r_j^N)/N. v_f > 0 moves mass
    // toward the origin, so the donor is the outer cell. At a steady state
    // xi is constant across the support and the obstacle condition makes
    // v >= 0 at the free boundary with an empty donor, so every flux
    // vanishes identically.
    std::vector<double> flux((std::size_t)J + 1, 0.0);
    for (int f = 1; f < J; ++f) {
        const double up = (v[f] > 0.0) ? rho[f] : rho[f - 1];
        flux[f] = std::pow(faces[f], N - 1.0) * up * v[f];
    }

    for (int j = 0; j < J; ++j) {
        const double vn =
            (std::pow(faces[j + 1], (double)N) - std::pow(faces[j], (double)N)) /
            N;
        const double mu = rho[j] * vn + dt * (flux[j + 1] - flux[j]);
        rho[j] = mu / vn;
        if (rho[j] < -1e-12)
            throw std::runtime_error(
                "evolve: instability, negative cell value " +
                std::to_string(rho[j]) + " at cell " + std::to_string(j));
    }
    return dt;
}

}  // namespace detail

// One explicit step against a prebuilt operator (must carry the interaction
// matrix: the energy history records the total free energy per step).
inline SimState step(const SimState& state, const ConvolutionOperator& op,
                     double cfl = 0.4) {
    if (state.density.faces() != op.faces())
        throw std::invalid_argument(
            "step: state grid does not match operator grid");
    const ModelParams& p = op.params();
    SimState next = state;
    std::vector<double> rho = state.density.values();
    const std::vector<double> S = op.potential(rho);
    const double dt = detail::fv_step(rho, S, p, state.density.faces(), cfl,
                                      std::numeric_limits<double>::infinity());
    next.density =
        RadialDensity(state.density.dim(), state.density.faces(), rho);
    next.time = state.time + dt;
    next.dt = dt;
    if (next.energy_history.empty())
        next.energy_history.emplace_back(state.time,
                                         evaluate(state.density, op).total);
    next.energy_history.emplace_back(next.time, evaluate(next.density, op).total);
    return next;
}

inline SimState step(const SimState& state, const ModelParams& params) {
    const ConvolutionOperator op(params, state.density.faces());
    return step(state, op);
}

// Evolve until the relative L1 change per unit time drops under stall_tol or
// t_max is reached. t_max = 0 returns the initial datum unchanged.
inline SimState run_to_equilibrium(const RadialDensity& init,
                                   const ModelParams& params, double t_max,
                                   double stall_tol,
                                   const EvolveOptions& opts = {}) {
    params.validate();
    detail::check_regime(params);
    if (params.N != init.dim())
        throw std::invalid_argument(
            "run_to_equilibrium: params.N != density dimension");
    if (!(t_max >= 0.0) || !(stall_tol > 0.0))
        throw std::invalid_argument(
            "run_to_equilibrium: t_max must be >= 0 and stall_tol > 0");
    if (!(opts.cfl > 0.0) || opts.refresh_every < 1)
        throw std::invalid_argument(
            "run_to_equilibrium: cfl must be > 0, refresh_every >= 1");

    SimState st{init, 0.0, 0.0, {}};
    if (t_max == 0.0) return st;

    const ConvolutionOperator op(params, init.faces());
    st.energy_history.emplace_back(0.0, evaluate(init, op).total);

    const double M = init.mass();
    const std::vector<double>& faces = init.faces();
    const int J = init.cells();
    std::vector<double> cellvol((std::size_t)J);
    for (int j = 0; j < J; ++j) cellvol[j] = init.cell_volume(j);

    std::vector<double> rho = init.values();
    std::vector<double> S;
    std::vector<double> prev((std::size_t)J);
    long n = 0;
    while (st.time < t_max) {
        if (n % opts.refresh_every == 0) S = op.potential(rho);
        prev = rho;
        const double dt = detail::fv_step(rho, S, params, faces, opts.cfl,
                                          t_max - st.time);
        st.time += dt;
        st.dt = dt;
        ++n;
        st.density = RadialDensity(init.dim(), faces, rho);
        st.energy_history.emplace_back(st.time, evaluate(st.density, op).total);
        double l1 = 0.0;
        for (int j = 0; j < J; ++j) l1 += std::abs(rho[j] - prev[j]) * cellvol[j];
        if (l1 / (dt * M) < stall_tol) break;
        if (n >= opts.max_steps)
            throw std::runtime_error(
                "run_to_equilibrium: step budget exhausted at t = " +
                std::to_string(st.time) + " (dt = " + std::to_string(dt) +
                ", L1 rate = " + std::to_string(l1 / (dt * M)) + ")");
    }
    return st;
}

}  // namespace aggdiff
