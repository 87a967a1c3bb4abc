#pragma once

// Real-argument special functions: Gamma, Pochhammer, and the Gauss
// hypergeometric function F(a,b;c;z) on z in (-1,1], together with the
// identity residuals (derivative, quadratic transformation, contiguous
// relations) used throughout the verification suite.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "aggdiff/quadrature.hpp"

namespace aggdiff {

inline bool is_nonpositive_integer(double x) {
    return x <= 0.0 && x == std::floor(x);
}

// Gamma via the Lanczos approximation (g = 7, 9 terms), reflection for
// x < 0.5. Relative error well below 1e-12 on |x| <= 50 away from poles.
inline double gamma_fn(double x) {
    if (is_nonpositive_integer(x))
        throw std::domain_error("gamma: pole at nonpositive integer x = " +
                                std::to_string(x));
    static const double g = 7.0;
    static const double coef[9] = {
        0.99999999999980993,     676.5203681218851,   -1259.1392167224028,
        771.32342877765313,      -176.61502916214059, 12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6,
        1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return M_PI / (std::sin(M_PI * x) * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    double acc = coef[0];
    for (int i = 1; i < 9; ++i) acc += coef[i] / (z + i);
    const double t = z + g + 0.5;
    return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

// Rising factorial (q)_n = q (q+1) ... (q+n-1); (q)_0 = 1.
inline double pochhammer(double q, int n) {
    if (n < 0) throw std::invalid_argument("pochhammer: n must be >= 0");
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= q + i;
    return p;
}

// Digamma psi(x) = Gamma'(x)/Gamma(x): reflection for x < 0.5, recurrence up
// to x >= 10, then the Bernoulli asymptotic series (error < 1e-13 there).
inline double digamma_fn(double x) {
    if (is_nonpositive_integer(x))
        throw std::domain_error("digamma: pole at nonpositive integer x = " +
                                std::to_string(x));
    if (x < 0.5) return digamma_fn(1.0 - x) - M_PI / std::tan(M_PI * x);
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    // psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n})
    double series = -1.0 / 132.0;
    series = series * inv2 + 1.0 / 240.0;
    series = series * inv2 - 1.0 / 252.0;
    series = series * inv2 + 1.0 / 120.0;
    series = series * inv2 - 1.0 / 12.0;
    return acc + std::log(x) - 0.5 * inv + series * inv2;
}

struct HypergeomParams {
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;
    double z = 0.0;

    void validate() const {
        if (is_nonpositive_integer(c))
            throw std::domain_error(
                "hypergeometric: c must not be a nonpositive integer");
        if (!(z > -1.0) || !(z <= 1.0))
            throw std::domain_error("hypergeometric: z must lie in (-1, 1]");
    }
};

namespace detail {

// Power series sum_n (a)_n (b)_n / (c)_n z^n / n! with term recurrence.
// Stops once |t_n| <= eps*|S| for three consecutive terms and n >= 8.
inline double hyp2f1_series(double a, double b, double c, double z,
                            long cap) {
    const double eps = std::numeric_limits<double>::epsilon();
    double term = 1.0, sum = 1.0;
    int small_run = 0;
    for (long n = 0; n < cap; ++n) {
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if (term == 0.0 || std::abs(term) <= eps * std::abs(sum)) {
            if (++small_run >= 3 && n >= 8) return sum;
        } else {
            small_run = 0;
        }
    }
    throw std::runtime_error(
        "hyp2f1: series did not converge within the term cap (z too close "
        "to 1?)");
}

// F(a,b;c;z) for |b| small via expansion in b:
//   F = 1 + sum_{n>=1} (a)_n/((c)_n n) z^n * b * (1 + b*H_{n-1}) + O(b^3),
// using (b)_n = b (n-1)! (1 + b H_{n-1} + O(b^2)), H_m the harmonic number.
// Accurate to ~|b|^3 with a truncation tail that is negligible after the
// b-prefactor; used near the Newtonian boundary where the plain series
// stalls for z close to 1.
inline double hyp2f1_small_b(double a, double b, double c, double z) {
    const double eps = std::numeric_limits<double>::epsilon();
    double g = 1.0;      // (a)_n / ((c)_n n) z^n, built incrementally
    double harmonic = 0.0;
    double sum = 0.0;
    const long cap = 200000;
    for (long n = 1; n <= cap; ++n) {
        if (n == 1) {
            g = a / c * z;
        } else {
            g *= (a + n - 1.0) / (c + n - 1.0) * z * ((n - 1.0) / n);
            harmonic += 1.0 / (n - 1.0);
        }
        sum += g * (1.0 + b * harmonic);
        // conservative geometric tail estimate
        if (std::abs(g) * z / (1.0 - z) <= eps * std::max(1.0, std::abs(sum)) &&
            n >= 8)
            break;
    }
    return 1.0 + b * sum;
}

}  // namespace detail

// Independent evaluation of F(a,b;c;z) through the Euler integral
//   F = Gamma(c) / (Gamma(b) Gamma(c-b))
//       * int_0^1 (1-zt)^{-a} (1-t)^{c-b-1} t^{b-1} dt,
// defined for c > b > 0 and z < 1 (z = 1 additionally needs c > a+b, the
// endpoint exponents then merging into (1-t)^{c-a-b-1}). Endpoint
// singularities are absorbed by substitutions t = u^p and 1-t = v^q.
inline double hyp2f1_integral(double a, double b, double c, double z) {
    if (!(c > b) || !(b > 0.0))
        throw std::domain_error("hyp2f1_integral: requires c > b > 0");
    if (z > 1.0 || (z == 1.0 && !(c - a - b > 0.0)))
        throw std::domain_error(
            "hyp2f1_integral: requires z < 1 (or z = 1 with c > a + b)");
    const bool merged = (z == 1.0);
    const double er = merged ? (c - a - b - 1.0) : (c - b - 1.0);

    // factor of the integrand that is smooth at the endpoint being absorbed
    auto rest_left = [&](double t) {
        // t near 0: carries (1-t)^er and (1-zt)^{-a}
        if (merged) return std::pow(1.0 - t, er);
        return std::pow(1.0 - z * t, -a) * std::pow(1.0 - t, er);
    };
    auto rest_right = [&](double t) {
        // t near 1: carries t^{b-1} and, unless merged, (1-zt)^{-a}
        if (merged) return std::pow(t, b - 1.0);
        return std::pow(1.0 - z * t, -a) * std::pow(t, b - 1.0);
    };

    const int p = std::max(2, (int)std::ceil(1.0 / b));
    const int q = std::max(2, (int)std::ceil(1.0 / (er + 1.0)));

    // left piece: t in [0, 1/2], t = u^p
    auto fl = [&](double u) {
        const double t = std::pow(u, p);
        return p * std::pow(u, p * b - 1.0) * rest_left(t);
    };
    const double ul = std::pow(0.5, 1.0 / p);
    const double left = adaptive_gk15(fl, 0.0, ul, 1e-12, 0.0);

    // right piece: t in [1/2, 1], 1 - t = v^q
    auto fr = [&](double v) {
        const double t = 1.0 - std::pow(v, q);
        return q * std::pow(v, q * (er + 1.0) - 1.0) * rest_right(t);
    };
    const double vr = std::pow(0.5, 1.0 / q);
    const double right = adaptive_gk15(fr, 0.0, vr, 1e-12, 0.0);

    return (left + right) * gamma_fn(c) / (gamma_fn(b) * gamma_fn(c - b));
}

inline double hyp2f1_integral(const HypergeomParams& p) {
    return hyp2f1_integral(p.a, p.b, p.c, p.z);
}

namespace detail {

// Linear transformation z -> 1-z (classical connection formula), valid when
// c-a-b is not an integer; both inner series run at argument 1-z < 0.1.
inline double hyp2f1_linear_z1(double a, double b, double c, double z) {
    const double s = c - a - b;
    const double w = 1.0 - z;
    const double t1 = gamma_fn(c) * gamma_fn(s) /
                      (gamma_fn(c - a) * gamma_fn(c - b)) *
                      hyp2f1_series(a, b, 1.0 - s, w, 100000);
    const double t2 = std::pow(w, s) * gamma_fn(c) * gamma_fn(-s) /
                      (gamma_fn(a) * gamma_fn(b)) *
                      hyp2f1_series(c - a, c - b, s + 1.0, w, 100000);
    return t1 + t2;
}

// z -> 1-z connection in the logarithmic case c-a-b = m, an integer: the
// classical expansion in w = 1-z with digamma coefficients. Negative m is
// first lifted to -m > 0 by the Euler transformation
// F(a,b;c;z) = w^{c-a-b} F(c-a,c-b;c;z). Converges geometrically in w; the
// digamma arguments advance by exact unit-shift recurrences.
inline double hyp2f1_log_z1(double a, double b, double c, double w) {
    long m = std::lround(c - a - b);
    double wpow = 1.0;
    if (m < 0) {
        wpow = std::pow(w, (double)m);
        const double na = c - a, nb = c - b;
        a = na;
        b = nb;
        m = -m;
    }
    if (is_nonpositive_integer(a) || is_nonpositive_integer(b))
        return wpow * hyp2f1_series(a, b, c, 1.0 - w, 100000);
    if (w == 0.0) {
        // exact z = 1 limits: w^m ln w -> 0 kills the log series for m > 0,
        // leaving the head's k = 0 term; for m = 0 the function diverges
        // logarithmically; for original m < 0 it blows up like w^m
        if (m > 0)
            return wpow * gamma_fn((double)m) * gamma_fn(c) /
                   (gamma_fn(a + (double)m) * gamma_fn(b + (double)m));
        const double coef = gamma_fn(c) / (gamma_fn(a) * gamma_fn(b));
        return std::copysign(std::numeric_limits<double>::infinity(), coef);
    }
    double head = 0.0;
    if (m > 0) {
        double t = 1.0;  // (a)_k (b)_k / (k! (1-m)_k) w^k
        double s1 = 0.0;
        for (long k = 0; k < m; ++k) {
            s1 += t;
            if (k + 1 < m)
                t *= (a + k) * (b + k) / ((k + 1.0) * (1.0 - m + k)) * w;
        }
        head = gamma_fn((double)m) * gamma_fn(c) /
               (gamma_fn(a + (double)m) * gamma_fn(b + (double)m)) * s1;
    }
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const double pre = -sign * std::pow(w, (double)m) * gamma_fn(c) /
                       (gamma_fn(a) * gamma_fn(b));
    const double lnw = std::log(w);
    const double md = (double)m;
    double term = 1.0 / gamma_fn(md + 1.0);  // (a+m)_k (b+m)_k w^k/(k!(k+m)!)
    double p1 = digamma_fn(1.0), p2 = digamma_fn(md + 1.0);
    double pa = digamma_fn(a + md), pb = digamma_fn(b + md);
    double s2 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    int small_run = 0;
    for (long k = 0; k < 100000; ++k) {
        const double piece = term * (lnw - p1 - p2 + pa + pb);
        s2 += piece;
        if (std::abs(piece) <= eps * std::abs(s2)) {
            if (++small_run >= 3 && k >= 4) return wpow * (head + pre * s2);
        } else {
            small_run = 0;
        }
        term *= (a + md + k) * (b + md + k) / ((k + 1.0) * (k + md + 1.0)) * w;
        p1 += 1.0 / (k + 1.0);
        p2 += 1.0 / (k + md + 1.0);
        pa += 1.0 / (a + md + k);
        pb += 1.0 / (b + md + k);
    }
    throw std::runtime_error(
        "hyp2f1: log-connection series did not converge (w too close to 1?)");
}

}  // namespace detail

// Gauss hypergeometric function F(a,b;c;z) for z in (-1, 1].
//   * terminating series (a or b a nonpositive integer): exact finite sum;
//   * z = 1: Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b)), needs c > a+b;
//   * z <= 0.9: power series (term cap 100000);
//   * z > 0.9 in order of preference: small-|b| expansion, the logarithmic
//     z -> 1-z connection when c-a-b is an integer (robust for z arbitrarily
//     close to 1), Euler integral when c > b > 0 (or, by symmetry,
//     c > a > 0), the z -> 1-z connection formula when c-a-b is away from
//     the integers, else the series with a 10x term cap.
inline double hyp2f1(double a, double b, double c, double z) {
    HypergeomParams{a, b, c, z}.validate();
    static const long kSeriesCap = 100000;
    if (z == 0.0) return 1.0;
    if (is_nonpositive_integer(a) || is_nonpositive_integer(b)) {
        // polynomial case; the term recurrence hits an exact zero, so the
        // finite sum is valid on all of (-1, 1]
        return detail::hyp2f1_series(a, b, c, z, kSeriesCap);
    }
    if (z == 1.0) {
        if (!(c - a - b > 0.0))
            throw std::domain_error(
                "hyp2f1: divergent at z = 1 unless c > a + b");
        return gamma_fn(c) * gamma_fn(c - a - b) /
               (gamma_fn(c - a) * gamma_fn(c - b));
    }
    if (z > 0.9) {
        if (std::abs(b) <= 1e-4) return detail::hyp2f1_small_b(a, b, c, z);
        if (std::abs(a) <= 1e-4) return detail::hyp2f1_small_b(b, a, c, z);
        const double s = c - a - b;
        if (std::abs(s - std::round(s)) <= 1e-9)
            return detail::hyp2f1_log_z1(a, b, c, 1.0 - z);
        if (c > b && b > 0.0) return hyp2f1_integral(a, b, c, z);
        if (c > a && a > 0.0) return hyp2f1_integral(b, a, c, z);
        if (std::abs(s - std::round(s)) > 0.05) {
            try {
                return detail::hyp2f1_linear_z1(a, b, c, z);
            } catch (const std::domain_error&) {
                // gamma pole in a prefactor; fall through to the capped series
            }
        }
        return detail::hyp2f1_series(a, b, c, z, 10 * kSeriesCap);
    }
    return detail::hyp2f1_series(a, b, c, z, kSeriesCap);
}

inline double hyp2f1(const HypergeomParams& p) {
    return hyp2f1(p.a, p.b, p.c, p.z);
}

struct IdentityResiduals {
    double derivative;         // d/dz F - (ab/c) F(a+1,b+1;c+1;z)
    double quadratic;          // 15.3.17 with c := 2b
    double contiguous_15_2_17; // (c-a-1)F + aF(a+1) - (c-1)F(c-1)
    double contiguous_15_2_18; // (c-a-b)F - (c-a)F(a-1) + b(1-z)F(b+1)
    double fd_step;
};

// Residuals |lhs - rhs| of the four identities at (a,b,c,z). The derivative
// is approximated by central differences with step fd_step; the quadratic
// transformation ignores the supplied c (it fixes c = 2b).
inline IdentityResiduals identity_residuals(const HypergeomParams& p,
                                            double fd_step = 1e-5) {
    const double a = p.a, b = p.b, c = p.c, z = p.z;
    if (!(z > -1.0 + fd_step) || !(z < 1.0 - fd_step))
        throw std::domain_error(
            "identity_residuals: z must lie inside (-1, 1) with room for the "
            "finite-difference step");
    IdentityResiduals r{};
    r.fd_step = fd_step;

    const double fd =
        (hyp2f1(a, b, c, z + fd_step) - hyp2f1(a, b, c, z - fd_step)) /
        (2.0 * fd_step);
    r.derivative = std::abs(fd - (a * b / c) * hyp2f1(a + 1, b + 1, c + 1, z));

    // 15.3.17: F(a,b;2b;z) = (1/2 + sqrt(1-z)/2)^{-2a}
    //                        * F(a, a-b+1/2; b+1/2; ((1-s)/(1+s))^2), s = sqrt(1-z)
    if (z >= 0.0 && z < 1.0 && !is_nonpositive_integer(2.0 * b) &&
        !is_nonpositive_integer(b + 0.5)) {
        const double s = std::sqrt(1.0 - z);
        const double w = (1.0 - s) / (1.0 + s);
        const double lhs = hyp2f1(a, b, 2.0 * b, z);
        const double rhs = std::pow(0.5 + 0.5 * s, -2.0 * a) *
                           hyp2f1(a, a - b + 0.5, b + 0.5, w * w);
        r.quadratic = std::abs(lhs - rhs);
    } else {
        r.quadratic = std::numeric_limits<double>::quiet_NaN();
    }

    if (!is_nonpositive_integer(c - 1.0)) {
        r.contiguous_15_2_17 =
            std::abs((c - a - 1.0) * hyp2f1(a, b, c, z) +
                     a * hyp2f1(a + 1, b, c, z) -
                     (c - 1.0) * hyp2f1(a, b, c - 1.0, z));
    } else {
        r.contiguous_15_2_17 = std::numeric_limits<double>::quiet_NaN();
    }

    r.contiguous_15_2_18 = std::abs(
        (c - a - b) * hyp2f1(a, b, c, z) - (c - a) * hyp2f1(a - 1.0, b, c, z) +
        b * (1.0 - z) * hyp2f1(a, b + 1.0, c, z));
    return r;
}

}  // namespace aggdiff
