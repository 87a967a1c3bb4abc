#pragma once

// Quadrature building blocks shared by the kernel/potential/energy layers:
//   * fixed-order Gauss-Legendre panels (nodes computed once, cached per order)
//   * adaptive Gauss-Kronrod 7/15 with global worst-segment refinement
//   * geometrically graded composite panels toward an integrable endpoint
//     singularity (ratio 2, per-panel Gauss-Legendre)

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace aggdiff {

struct GLRule {
    std::vector<double> x;  // nodes on (-1, 1)
    std::vector<double> w;  // weights, sum = 2
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n; machine precision
// for any order without stored tables.
inline GLRule make_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GLRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-like initial guess for the i-th root (descending order)
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 64; ++iter) {
            // evaluate P_n(x) and P_n'(x) via the three-term recurrence
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 2e-16 * (1.0 + std::abs(x)) && iter >= 2) break;
        }
        rule.x[i] = -x;
        rule.x[n - 1 - i] = x;
        double wi = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.w[i] = wi;
        rule.w[n - 1 - i] = wi;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    return rule;
}

inline const GLRule& gauss_legendre(int n) {
    // thread_local: lock-free reuse from concurrent scans/fuzz workers
    static thread_local std::map<int, GLRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

// Single Gauss-Legendre panel on [a, b].
template <class F>
double fixed_gl(F&& f, double a, double b, int n = 8) {
    const GLRule& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.w[i] * f(mid + hw * rule.x[i]);
    return hw * sum;
}

namespace detail {

// Gauss 7 / Kronrod 15 panel (QUADPACK constants). Returns the K15 value and
// a conservative error estimate from the embedded G7 rule.
template <class F>
inline std::pair<double, double> gk15_panel(F& f, double a, double b) {
    static const double nodes[8] = {
        0.000000000000000, 0.405845151377397, 0.741531185599394,
        0.949107912342759, 0.207784955007898, 0.586087235467691,
        0.864864423359769, 0.991455371120813};
    static const double wg[4] = {0.417959183673469, 0.381830050505119,
                                 0.279705391489277, 0.129484966168870};
    static const double wk[8] = {0.209482141084728, 0.190350578064785,
                                 0.140653259715525, 0.063092092629979,
                                 0.204432940075298, 0.169004726639267,
                                 0.104790010322250, 0.022935322010529};
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    const double f0 = f(mid);
    double g7 = wg[0] * f0;
    double k15 = wk[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = hw * nodes[i];
        const double fi = f(mid + dx) + f(mid - dx);
        k15 += wk[i] * fi;
        if (i < 4) g7 += wg[i] * fi;
    }
    g7 *= hw;
    k15 *= hw;
    double err = std::abs(k15 - g7);
    // QUADPACK-style sharpening of the raw difference
    double scaled = std::pow(200.0 * err, 1.5);
    if (scaled < err) err = scaled;
    return {k15, err};
}

struct Segment {
    double a, b, value, error;
};

}  // namespace detail

// Globally adaptive G7K15: repeatedly bisect the segment with the largest
// error estimate until sum(err) <= max(abs_tol, rel_tol*|integral|).
template <class F>
double adaptive_gk15(F&& f, double a, double b, double rel_tol = 1e-11,
                     double abs_tol = 0.0, int max_segments = 4000) {
    if (!(b > a)) {
        if (b == a) return 0.0;
        throw std::invalid_argument("adaptive_gk15: empty interval (b < a)");
    }
    std::vector<detail::Segment> segs;
    segs.reserve(64);
    auto [v0, e0] = detail::gk15_panel(f, a, b);
    segs.push_back({a, b, v0, e0});
    double total = v0, total_err = e0;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if ((int)segs.size() >= max_segments)
            throw std::runtime_error(
                "adaptive_gk15: segment budget exhausted before reaching "
                "tolerance");
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        detail::Segment s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b)
            break;  // interval at rounding limit; accept what we have
        auto [vl, el] = detail::gk15_panel(f, s.a, mid);
        auto [vr, er] = detail::gk15_panel(f, mid, s.b);
        total += vl + vr - s.value;
        total_err += el + er - s.error;
        segs[worst] = {s.a, mid, vl, el};
        segs.push_back({mid, s.b, vr, er});
    }
    return total;
}

// Composite rule on [a, b] for integrands with an integrable endpoint
// singularity (or unbounded derivatives) at `a` or `b`: geometric panels with
// ratio 2 toward the singular end, fixed Gauss-Legendre on each panel. The
// innermost sliver is still integrated by open GL nodes (never touches the
// endpoint). `levels` panels resolve down to width (b-a)*2^-levels.
template <class F>
double graded_gl(F&& f, double a, double b, bool singular_at_b,
                 int levels = 40, int gl_n = 8) {
    if (!(b > a)) return 0.0;
    const double w = b - a;
    double sum = 0.0;
    double outer = w;  // distance from singular end of current panel boundary
    for (int i = 1; i <= levels; ++i) {
        const double inner = (i == levels) ? 0.0 : w * std::pow(0.5, i);
        double lo, hi;
        if (singular_at_b) {
            lo = b - outer;
            hi = b - inner;
        } else {
            lo = a + inner;
            hi = a + outer;
        }
        if (hi > lo) sum += fixed_gl(f, lo, hi, gl_n);
        outer = inner;
        if (outer == 0.0) break;
    }
    return sum;
}

}  // namespace aggdiff
