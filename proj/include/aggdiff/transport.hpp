#pragma once

// Monotone radial transport between compactly supported radial densities.
// The map psi' carries rho_src(a) a^{N-1} da onto rho_tgt(r) r^{N-1} dr and
// is built by inverting cumulative masses, which are piecewise linear in r^N
// for piecewise-constant densities -- so the inversion is exact and the
// push-forward identity M_tgt(psi'(a)) = M_src(a) holds to rounding at every
// node. The Jacobian factor
//   phi(a) = (1/(N a^{N-1})) d/da (psi')^N(a) = rho_src(a) / rho_tgt(psi'(a))
// is constant on each interval of the merged partition, which makes the
// weighted Jensen bounds on psi' and the push-forward form of the free
// energy exactly integrable interval by interval.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/density.hpp"
#include "aggdiff/energy.hpp"
#include "aggdiff/potential.hpp"
#include "aggdiff/steady.hpp"

namespace aggdiff {

struct TransportMap {
    int dim = 0;
    std::vector<double> nodes;      // merged source radii, nodes[0] = 0
    std::vector<double> psi_prime;  // psi'(nodes[p]), psi_prime[0] = 0
    std::vector<double> phi;        // constant on [nodes[p], nodes[p+1])

    int intervals() const { return (int)phi.size(); }

    int interval_of(double a) const {
        if (!(a >= 0.0))
            throw std::domain_error("TransportMap: radius must be >= 0");
        const auto it = std::upper_bound(nodes.begin(), nodes.end(), a);
        const int p = (int)(it - nodes.begin()) - 1;
        return std::clamp(p, 0, intervals() - 1);
    }

    // d (psi')^N = phi d(a^N) with phi constant per interval, so the
    // in-interval evaluation is exact.
    double psi_prime_at(double a) const {
        const int p = interval_of(a);
        const double v = std::pow(psi_prime[p], dim) +
                         phi[p] * (std::pow(a, dim) - std::pow(nodes[p], dim));
        return std::pow(std::max(v, 0.0), 1.0 / dim);
    }

    double phi_at(double a) const { return phi[interval_of(a)]; }
};

namespace detail {

// Length of the leading run of positive cells; the support must be an
// interval [0, R] for the cumulative mass to be invertible.
inline int support_prefix(const RadialDensity& rho, const char* who) {
    int run = 0;
    bool ended = false;
    for (int j = 0; j < rho.cells(); ++j) {
        if (rho.value(j) > 0.0) {
            if (ended)
                throw std::invalid_argument(
                    std::string(who) +
                    ": density must be positive on an interval [0, R]");
            ++run;
        } else {
            ended = true;
        }
    }
    if (run == 0)
        throw std::invalid_argument(std::string(who) +
                                    ": density has empty support");
    return run;
}

}  // namespace detail

inline TransportMap build_map(const RadialDensity& source,
                              const RadialDensity& target) {
    if (source.dim() != target.dim())
        throw std::invalid_argument("build_map: dimension mismatch");
    const int N = source.dim();
    const double Ms = source.mass();
    const double Mt = target.mass();
    if (std::abs(Ms - Mt) > 1e-10 * std::max({Ms, Mt, 1.0}))
        throw std::invalid_argument(
            "build_map: source and target masses differ beyond 1e-10");
    const int ns = detail::support_prefix(source, "build_map (source)");
    const int nt = detail::support_prefix(target, "build_map (target)");
    const double sigma = surface_area(N);

    // cumulative masses at support faces; rescale the target so the total
    // masses agree exactly and the top levels merge
    std::vector<double> sm((std::size_t)ns + 1, 0.0),
        tm((std::size_t)nt + 1, 0.0);
    for (int j = 0; j < ns; ++j)
        sm[j + 1] = sm[j] + sigma * source.value(j) * source.cell_volume(j);
    for (int j = 0; j < nt; ++j)
        tm[j + 1] = tm[j] + sigma * target.value(j) * target.cell_volume(j);
    const double factor = sm[ns] / tm[nt];
    std::vector<double> tv((std::size_t)nt);
    for (int j = 0; j < nt; ++j) {
        tm[j + 1] *= factor;
        tv[j] = target.value(j) * factor;
    }

    TransportMap map;
    map.dim = N;
    map.nodes.push_back(0.0);
    map.psi_prime.push_back(0.0);
    const double tolm = 1e-13 * sm[ns];
    const double inf = std::numeric_limits<double>::infinity();
    int p = 1, q = 1;
    while (p <= ns || q <= nt) {
        const double ms = (p <= ns) ? sm[p] : inf;
        const double mt = (q <= nt) ? tm[q] : inf;
        double a, r;
        const double sv = source.value(std::min(p, ns) - 1);
        const double tw = tv[std::min(q, nt) - 1];
        if (std::abs(ms - mt) <= tolm) {
            a = source.face(p);
            r = target.face(q);
            ++p, ++q;
        } else if (ms < mt) {
            a = source.face(p);
            r = std::pow(std::pow(target.face(q - 1), N) +
                             (ms - tm[q - 1]) * N / (sigma * tw),
                         1.0 / N);
            ++p;
        } else {
            r = target.face(q);
            a = std::pow(std::pow(source.face(p - 1), N) +
                             (mt - sm[p - 1]) * N / (sigma * sv),
                         1.0 / N);
            ++q;
        }
        // drop slivers whose coordinates collide with the previous node
        if (!(a > map.nodes.back()) || !(r > map.psi_prime.back())) continue;
        map.nodes.push_back(a);
        map.psi_prime.push_back(r);
        map.phi.push_back(sv / tw);
    }
    if (map.intervals() == 0)
        throw std::runtime_error("build_map: degenerate merged partition");
    return map;
}

// max over map nodes of |M_target(psi'(a)) - M_source(a)|
inline double pushforward_defect(const TransportMap& map,
                                 const RadialDensity& source,
                                 const RadialDensity& target) {
    double worst = 0.0;
    for (std::size_t p = 0; p < map.nodes.size(); ++p)
        worst = std::max(worst,
                         std::abs(target.cumulative_mass(map.psi_prime[p]) -
                                  source.cumulative_mass(map.nodes[p])));
    return worst;
}

// Free energy of the push-forward density written through the map:
//   sigma_N/(m-1) int phi^{1-m} rho_src^m a^{N-1} da
// + sigma_N/k int_a int_{b<a} psi'(a)^k theta(psi'(b)/psi'(a)) dmu(b) dmu(a)
// + chi sigma_N/2 int psi'(a)^2 dmu(a),        dmu = rho_src a^{N-1} da.
// The inner interaction integral is contracted against the image density on
// the image grid (the push-forward is exact per merged interval).
inline EnergyBreakdown pushforward_energy(const TransportMap& map,
                                          const RadialDensity& source,
                                          const ModelParams& params,
                                          int gl_order = 8) {
    params.validate();
    if (params.N != source.dim() || params.N != map.dim)
        throw std::invalid_argument(
            "pushforward_energy: dimension mismatch between map, source, "
            "params");
    const int n = map.intervals();
    if (n == 0)
        throw std::invalid_argument("pushforward_energy: empty transport map");
    for (int p = 0; p < n; ++p) {
        if (!(map.psi_prime[p + 1] > map.psi_prime[p]))
            throw std::domain_error(
                "pushforward_energy: psi' must be strictly increasing "
                "(theta argument would leave [0,1))");
        if (!(map.phi[p] > 0.0))
            throw std::domain_error("pushforward_energy: phi must be > 0");
    }

    const int N = params.N;
    const double k = params.k;
    const double sigma = surface_area(N);

    // source value per merged interval (each interval sits in one source cell)
    std::vector<double> sv((std::size_t)n);
    for (int p = 0; p < n; ++p) {
        const double mid = 0.5 * (map.nodes[p] + map.nodes[p + 1]);
        const auto& f = source.faces();
        int j = (int)(std::upper_bound(f.begin(), f.end(), mid) - f.begin()) -
                1;
        j = std::clamp(j, 0, source.cells() - 1);
        sv[p] = source.value(j);
    }

    // image density on the image grid
    const std::vector<double>& tfaces = map.psi_prime;
    std::vector<double> tvals((std::size_t)n);
    for (int p = 0; p < n; ++p) tvals[p] = sv[p] / map.phi[p];

    double entropy = 0.0;
    for (int p = 0; p < n; ++p)
        if (sv[p] > 0.0)
            entropy += std::pow(map.phi[p], 1.0 - params.m) *
                       std::pow(sv[p], params.m) *
                       (std::pow(map.nodes[p + 1], N) -
                        std::pow(map.nodes[p], N)) /
                       N;
    entropy *= sigma / (params.m - 1.0);

    const detail::ThetaCapped th(params);
    const GLRule& rule = gauss_legendre(gl_order);
    double interaction = 0.0;
    double confinement = 0.0;
    for (int p = 0; p < n; ++p) {
        if (sv[p] == 0.0) continue;
        const double lo = map.nodes[p], hi = map.nodes[p + 1];
        const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        const double baseN = std::pow(map.psi_prime[p], N);
        const double loN = std::pow(lo, N);
        double cell_int = 0.0, cell_conf = 0.0;
        for (int g = 0; g < gl_order; ++g) {
            const double a = mid + hw * rule.x[g];
            const double R = std::pow(
                std::max(baseN + map.phi[p] * (std::pow(a, N) - loN), 0.0),
                1.0 / N);
            const double wq = hw * rule.w[g] * std::pow(a, N - 1.0);
            const auto v = detail::inner_weights(th, tfaces, R);
            double inner = 0.0;
            for (int j = 0; j < n; ++j) inner += v[j] * tvals[j];
            cell_int += wq * std::pow(R, k) * inner;
            cell_conf += wq * R * R;
        }
        interaction += sv[p] * cell_int;
        confinement += sv[p] * cell_conf;
    }
    interaction *= sigma / k;
    confinement *= 0.5 * params.chi * sigma;

    EnergyBreakdown out;
    out.entropy = entropy;
    out.interaction = interaction;
    out.confinement = confinement;
    out.total = entropy + interaction + confinement;
    return out;
}

inline EnergyBreakdown pushforward_energy(const TransportMap& map,
                                          const SteadyState& source_ss,
                                          const ModelParams& params,
                                          int gl_order = 8) {
    return pushforward_energy(map, source_ss.density, params, gl_order);
}

// Minimal sampled gaps (bound minus value, in the direction that should be
// nonnegative) of the three weighted Jensen bounds satisfied by any monotone
// map with positive Jacobian factor:
//   single:      N a^{k-N} int_0^a phi^{k/N} s^{N-1} ds - psi'(a)^k
//   pair:        N (a^N-b^N)^{k/N-1} int_b^a phi^{k/N} s^{N-1} ds
//                  - (psi'(a)^N - psi'(b)^N)^{k/N},     b < a
//   confinement: psi'(a)^2 - N a^{2-N} int_0^a phi^{2/N} s^{N-1} ds
// All integrals are exact interval sums (phi is piecewise constant); equality
// holds exactly when phi is constant, i.e. for dilation maps.
struct JensenGaps {
    double single = 0.0;
    double pair = 0.0;
    double confinement = 0.0;
};

inline JensenGaps jensen_gap(const TransportMap& map,
                             const ModelParams& params) {
    params.validate();
    if (params.N != map.dim)
        throw std::invalid_argument("jensen_gap: dimension mismatch");
    const int n = map.intervals();
    if (n == 0) throw std::invalid_argument("jensen_gap: empty transport map");
    const int N = params.N;
    const double k = params.k;

    // All three bounds reduce, in the volume coordinate v = s^N, to the bare
    // Jensen statement for means of phi over [v_b, v_a]:
    //   single:      a^k   * ( mean(phi^{k/N}) - mean(phi)^{k/N} )
    //   pair:        A^{k/N} * ( mean(phi^{k/N}) - mean(phi)^{k/N} ),
    //                A = v_a - v_b
    //   confinement: a^2   * ( mean(phi)^{2/N} - mean(phi^{2/N}) )
    // Evaluating the mean difference first keeps the subtraction at O(1)
    // scale; the raw bound and value both diverge like A^{k/N} near the
    // diagonal and their direct difference drowns in rounding. The means are
    // accumulated in extended precision because the divergent prefactor still
    // amplifies the prefix-sum rounding of close pairs at small radii.

    // prefix integrals over v at nodes: phi^{k/N} dv, phi dv, phi^{2/N} dv
    std::vector<long double> fk((std::size_t)n + 1, 0.0L),
        f1((std::size_t)n + 1, 0.0L), f2((std::size_t)n + 1, 0.0L);
    for (int p = 0; p < n; ++p) {
        const long double dv =
            std::pow((long double)map.nodes[p + 1], N) -
            std::pow((long double)map.nodes[p], N);
        fk[p + 1] = fk[p] + std::pow((long double)map.phi[p],
                                     (long double)(k / N)) * dv;
        f1[p + 1] = f1[p] + (long double)map.phi[p] * dv;
        f2[p + 1] = f2[p] + std::pow((long double)map.phi[p],
                                     (long double)(2.0 / N)) * dv;
    }

    // sample radii: nodes and interval midpoints, strided to a bounded count
    struct Sample {
        double a;
        long double v, sk, s1, s2;
    };
    std::vector<Sample> samples;
    const int stride = std::max(1, n / 128);
    auto add = [&](int p, double a) {
        if (!(a > 0.0)) return;
        const long double v = std::pow((long double)a, N);
        const long double dv = v - std::pow((long double)map.nodes[p], N);
        samples.push_back(
            {a, v,
             fk[p] + std::pow((long double)map.phi[p],
                              (long double)(k / N)) * dv,
             f1[p] + (long double)map.phi[p] * dv,
             f2[p] + std::pow((long double)map.phi[p],
                              (long double)(2.0 / N)) * dv});
    };
    for (int p = 0; p < n; p += stride) {
        add(p, 0.5 * (map.nodes[p] + map.nodes[p + 1]));
        add(p, map.nodes[p + 1]);
    }
    add(n - 1, map.nodes[n]);

    JensenGaps gaps;
    gaps.single = std::numeric_limits<double>::infinity();
    gaps.pair = std::numeric_limits<double>::infinity();
    gaps.confinement = std::numeric_limits<double>::infinity();
    const long double ekn = (long double)(k / N);
    for (const Sample& s : samples) {
        const long double pk = s.sk / s.v;  // mean of phi^{k/N} on [0, v]
        const long double q = s.s1 / s.v;   // mean of phi
        const long double p2 = s.s2 / s.v;  // mean of phi^{2/N}
        gaps.single = std::min(
            gaps.single,
            (double)(std::pow((long double)s.a, (long double)k) *
                     (pk - std::pow(q, ekn))));
        gaps.confinement = std::min(
            gaps.confinement,
            (double)((long double)s.a * s.a *
                     (std::pow(q, (long double)(2.0 / N)) - p2)));
    }
    for (const Sample& sa : samples) {
        for (const Sample& sb : samples) {
            if (!(sb.a < sa.a * (1.0 - 1e-6))) continue;
            const long double A = sa.v - sb.v;
            // skip slivers where the A^{k/N} prefactor amplifies rounding
            // past the reporting scale
            if (!(A >= 1e-4L * sa.v)) continue;
            const long double pk = (sa.sk - sb.sk) / A;
            const long double q = (sa.s1 - sb.s1) / A;
            gaps.pair = std::min(
                gaps.pair,
                (double)(std::pow(A, ekn) * (pk - std::pow(q, ekn))));
        }
    }
    return gaps;
}

// Scalar inequalities that remove the map dependence from the lower bound:
// each gap is >= 0 on z > 0 with equality exactly at z = 1.
//   z^{1-m}/(m-1) - z^{1-mc}/(mc-1) >= 1/(m-1) - 1/(mc-1),   m >= mc
inline double entropy_z_gap(double z, double m, double m_c) {
    if (!(z > 0.0)) throw std::domain_error("entropy_z_gap: z must be > 0");
    if (!(m >= m_c))
        throw std::domain_error("entropy_z_gap: requires m >= m_c");
    return std::pow(z, 1.0 - m) / (m - 1.0) -
           std::pow(z, 1.0 - m_c) / (m_c - 1.0) -
           (1.0 / (m - 1.0) - 1.0 / (m_c - 1.0));
}

//   z^{2/N}/2 - z^{k/N}/k >= 1/2 - 1/k,   k < 0
inline double confinement_z_gap(double z, int N, double k) {
    if (!(z > 0.0))
        throw std::domain_error("confinement_z_gap: z must be > 0");
    if (!(k < 0.0))
        throw std::domain_error("confinement_z_gap: requires k < 0");
    return 0.5 * std::pow(z, 2.0 / N) - std::pow(z, k / N) / k -
           (0.5 - 1.0 / k);
}

}  // namespace aggdiff
