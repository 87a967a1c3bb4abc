#pragma once

// Mean-field potential S_k = W_k * rho and interaction weight omega(r) for
// piecewise-constant radial densities. The radial convolution splits at
// eta = r: for r > 0
//   (|x|^k * rho)(r) = r^k int_0^r theta(eta/r) rho eta^{N-1} d.eta
//                      + int_r^inf eta^k theta(r/eta) rho eta^{N-1} d.eta,
// and W_k * rho = (|x|^k * rho)/k. The integrable near-diagonal singularity
// (exponent k+N-1 > -1) is resolved by ratio-2 graded panels toward eta = r.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aggdiff/chebyshev.hpp"
#include "aggdiff/density.hpp"
#include "aggdiff/kernel.hpp"
#include "aggdiff/quadrature.hpp"

namespace aggdiff {

namespace detail {

// Fast evaluator for scale * F(a,b;c;z): Chebyshev fit on z in [0, 0.81]
// plus the z -> 1-z connection decomposition P(w) + w^e Q(w) (w = 1-z,
// e = c-a-b) with P, Q fitted on w in [0, 0.19] when e is safely
// non-integer; direct evaluation otherwise. The direct path is still exact
// for arbitrarily small w when e is an integer (logarithmic connection) or
// the series terminates, so only near-degenerate parameter combinations are
// left without an exact tail.
class HypProfile {
  public:
    HypProfile() = default;

    HypProfile(double a, double b, double c, double scale)
        : a_(a), b_(b), c_(c), scale_(scale) {
        low_ = Chebyshev::fit(
            [&](double z) { return scale_ * hyp2f1(a_, b_, c_, z); }, 0.0,
            0.81, 56);
        const double e = c - a - b;
        exp_ = e;
        const bool poly =
            is_nonpositive_integer(a) || is_nonpositive_integer(b);
        pq_ok_ = std::abs(e - std::round(e)) > 0.02 &&
                 !is_nonpositive_integer(c - a) &&
                 !is_nonpositive_integer(c - b) && !poly &&
                 std::abs(b) > 1e-4 && std::abs(a) > 1e-4;
        log_ok_ = !poly && std::abs(e - std::round(e)) <= 1e-9;
        exact_ = pq_ok_ || poly || log_ok_;
        if (pq_ok_) {
            const double g1 = gamma_fn(c) * gamma_fn(e) /
                              (gamma_fn(c - a) * gamma_fn(c - b));
            const double g2 =
                gamma_fn(c) * gamma_fn(-e) / (gamma_fn(a) * gamma_fn(b));
            P_ = Chebyshev::fit(
                [&](double w) {
                    return scale_ * g1 * hyp2f1_series(a_, b_, 1.0 - e, w,
                                                       100000);
                },
                0.0, 0.19 + 1e-12, 56);
            Q_ = Chebyshev::fit(
                [&](double w) {
                    return scale_ * g2 * hyp2f1_series(c_ - a_, c_ - b_,
                                                       e + 1.0, w, 100000);
                },
                0.0, 0.19 + 1e-12, 56);
        }
    }

    double at_z(double z) const {
        if (z <= 0.81) return low_(z);
        return at_w(1.0 - z);
    }

    // same value parameterized by w = 1-z; callers near z = 1 compute w
    // directly to avoid cancellation, and the P + w^e Q form then evaluates
    // the true (possibly singular) profile for arbitrarily small w > 0
    double at_w(double w) const {
        if (w >= 0.19) return low_(1.0 - w);
        if (pq_ok_) return P_(w) + std::pow(w, exp_) * Q_(w);
        // the logarithmic connection takes w directly, avoiding the
        // round-trip through z = 1-w that loses the tiny-w information
        if (log_ok_) return scale_ * detail::hyp2f1_log_z1(a_, b_, c_, w);
        return scale_ * hyp2f1(a_, b_, c_, 1.0 - w);
    }

    bool exact_tail() const { return exact_; }

  private:
    double a_ = 0, b_ = 0, c_ = 1, scale_ = 1;
    double exp_ = 0;
    bool pq_ok_ = false;
    bool log_ok_ = false;
    bool exact_ = false;
    Chebyshev low_, P_, Q_;
};

// theta(s) evaluator tuned for quadrature near s = 1. When the profile has
// an exact tail (c-a-b away from the integers via the power decomposition,
// or an integer via the logarithmic connection) the exact value -- including
// a divergent (1-s^2)^{N+k-1} tail for k < 1-N -- is evaluated for
// arbitrarily small 1-s via at_w. Otherwise (near-degenerate parameters)
// arguments are capped at s_cap = 1-1e-9 (k <= 2-N) or 1-1e-4 (k > 2-N,
// theta then C^1 at s = 1), using the finite s = 1 limit beyond the cap
// when it exists.
class ThetaCapped {
  public:
    explicit ThetaCapped(const ModelParams& p)
        : p_(p),
          deep_(p.k <= 2.0 - p.N),
          w_cap_(deep_ ? 2e-9 : 2e-4),
          newtonian_(p.k == 2.0 - p.N) {
        if (!newtonian_) {
            prof_ = HypProfile(-0.5 * p.k, 1.0 - 0.5 * (p.k + p.N), 0.5 * p.N,
                               d_constant(p.N));
            if (!prof_.exact_tail())
                cap_value_ = (p.k > 1.0 - p.N) ? theta(p, 1.0)
                                               : prof_.at_w(w_cap_);
        }
    }

    double operator()(double s) const {
        if (newtonian_) return d_constant(p_.N);
        // parameterize by z = s^2 away from s = 1: exact for small s, where
        // the w = 1-s^2 route would round s^2 into the ulp of 1
        if (s < 0.9) return prof_.at_z(s * s);
        return at_w((1.0 - s) * (1.0 + s));
    }

    // w = 1 - s^2, supplied in a cancellation-free form by the quadrature
    double at_w(double w) const {
        if (newtonian_) return d_constant(p_.N);
        if (!prof_.exact_tail() && w < w_cap_) return cap_value_;
        return prof_.at_w(w);
    }

    // graded-panel depth: deep enough that the untreated sliver below the
    // last panel is negligible even for singular profiles
    int levels() const { return deep_ ? 60 : 12; }
    const ModelParams& params() const { return p_; }

  private:
    ModelParams p_;
    bool deep_;
    double w_cap_;
    bool newtonian_;
    double cap_value_ = 0.0;
    HypProfile prof_;
};

// theta'(s) under the same policy (used by the stationary-state
// characterization integrals).
class ThetaPrimeCapped {
  public:
    explicit ThetaPrimeCapped(const ModelParams& p)
        : p_(p),
          deep_(p.k <= 2.0 - p.N),
          w_cap_(deep_ ? 2e-9 : 2e-4),
          newtonian_(p.k == 2.0 - p.N) {
        const double a = -0.5 * p.k;
        const double b = 1.0 - 0.5 * (p.k + p.N);
        const double c = 0.5 * p.N;
        pref_ = d_constant(p.N) * 2.0 * (a * b / c);
        if (!newtonian_) {
            prof_ = HypProfile(a + 1.0, b + 1.0, c + 1.0, 1.0);
            if (!prof_.exact_tail()) cap_value_ = prof_.at_w(w_cap_);
        }
    }

    double operator()(double s) const {
        if (s <= 0.0) return 0.0;
        if (newtonian_) return 0.0;
        // theta' ~ s near 0, so the relative error of s = sqrt(1-w) (lossy
        // once s^2 falls under the ulp of 1) would survive into the value;
        // parameterize by z = s^2 directly instead
        if (s < 0.9) return pref_ * s * prof_.at_z(s * s);
        return at_w((1.0 - s) * (1.0 + s));
    }

    double at_w(double w) const {
        if (newtonian_) return 0.0;
        if (w >= 1.0) return 0.0;
        const double s = std::sqrt(1.0 - w);
        if (!prof_.exact_tail() && w < w_cap_)
            return pref_ * s * cap_value_;
        return pref_ * s * prof_.at_w(w);
    }

    int levels() const { return deep_ ? 60 : 12; }
    const ModelParams& params() const { return p_; }

  private:
    ModelParams p_;
    bool deep_;
    double w_cap_;
    bool newtonian_;
    double pref_ = 0.0;
    double cap_value_ = 0.0;
    HypProfile prof_;
};

// integral over [lo, hi] (subset of {eta <= r}) of theta(eta/r) eta^{N-1}.
// Pieces that touch or closely approach the diagonal are integrated in the
// offset coordinate u = r - eta with geometric panels graded toward u = 0:
// panel boundaries and nodes are then exact however deep the grading, and
// w = 1 - (eta/r)^2 = u (2r-u)/r^2 is cancellation-free. Distant pieces use
// fixed Gauss-Legendre (integrand analytic, nearest singularity at eta = r,
// so distance >= width keeps GL12 at machine precision).
inline double inner_piece(const ThetaCapped& th, double lo, double hi,
                          double r, int gl_order) {
    if (!(hi > lo)) return 0.0;
    const int N = th.params().N;
    if (r - hi < hi - lo) {
        auto g = [&](double u) {
            const double w = u * (2.0 * r - u) / (r * r);
            return th.at_w(w) * std::pow(r - u, N - 1.0);
        };
        return graded_gl(g, r - hi, r - lo, /*singular_at_b=*/false,
                         th.levels(), 8);
    }
    auto f = [&](double eta) {
        const double w = (r - eta) * (r + eta) / (r * r);
        return th.at_w(w) * std::pow(eta, N - 1.0);
    };
    return fixed_gl(f, lo, hi, gl_order);
}

// integral over [lo, hi] (subset of {eta >= r}) of eta^k theta(r/eta) eta^{N-1}
inline double outer_piece(const ThetaCapped& th, double lo, double hi,
                          double r, int gl_order) {
    if (!(hi > lo)) return 0.0;
    const int N = th.params().N;
    const double k = th.params().k;
    if (lo - r < hi - lo) {
        auto g = [&](double u) {
            const double eta = r + u;
            const double w = u * (2.0 * r + u) / (eta * eta);
            return th.at_w(w) * std::pow(eta, k + N - 1.0);
        };
        return graded_gl(g, lo - r, hi - r, /*singular_at_b=*/false,
                         th.levels(), 8);
    }
    auto f = [&](double eta) {
        const double w = (eta - r) * (eta + r) / (eta * eta);
        return th.at_w(w) * std::pow(eta, k + N - 1.0);
    };
    return fixed_gl(f, lo, hi, gl_order);
}

// Per-cell weights w_j with (|x|^k * rho)(r) = sum_j w_j rho_j (no 1/k).
inline std::vector<double> riesz_weights(const ThetaCapped& th,
                                         const std::vector<double>& faces,
                                         double r, int gl_order = 12) {
    const ModelParams& params = th.params();
    const int N = params.N;
    const double k = params.k;
    const int J = (int)faces.size() - 1;
    std::vector<double> w((std::size_t)J, 0.0);
    if (r == 0.0) {
        // theta(0/eta) = theta(0) = d_N exactly: closed-form cell moments
        const double dN = d_constant(N);
        for (int j = 0; j < J; ++j)
            w[j] = dN *
                   (std::pow(faces[j + 1], k + N) - std::pow(faces[j], k + N)) /
                   (k + N);
        return w;
    }
    const double rk = std::pow(r, k);
    for (int j = 0; j < J; ++j) {
        const double lo = faces[j], hi = faces[j + 1];
        if (hi <= r) {
            w[j] = rk * inner_piece(th, lo, hi, r, gl_order);
        } else if (lo >= r) {
            w[j] = outer_piece(th, lo, hi, r, gl_order);
        } else {
            w[j] = rk * inner_piece(th, lo, r, r, gl_order) +
                   outer_piece(th, r, hi, r, gl_order);
        }
    }
    return w;
}

// Inner-only weights v_j with int_0^r theta(eta/r) rho eta^{N-1} d.eta
// = sum_j v_j rho_j (used by omega and the interaction energy).
inline std::vector<double> inner_weights(const ThetaCapped& th,
                                         const std::vector<double>& faces,
                                         double r, int gl_order = 8) {
    const int J = (int)faces.size() - 1;
    std::vector<double> v((std::size_t)J, 0.0);
    if (r <= 0.0) return v;
    for (int j = 0; j < J; ++j) {
        const double lo = faces[j], hi = faces[j + 1];
        if (lo >= r) break;
        v[j] = inner_piece(th, lo, std::min(hi, r), r, gl_order);
    }
    return v;
}

}  // namespace detail

inline std::vector<double> riesz_weights(const ModelParams& params,
                                         const std::vector<double>& faces,
                                         double r, int gl_order = 12) {
    params.validate();
    const detail::ThetaCapped th(params);
    return detail::riesz_weights(th, faces, r, gl_order);
}

// (W_k * rho)(r) = (|x|^k * rho)(r) / k; negative wherever rho has mass.
inline double convolve(const RadialDensity& rho, const ModelParams& params,
                       double r) {
    if (!(r >= 0.0)) throw std::domain_error("convolve: r must be >= 0");
    if (params.N != rho.dim())
        throw std::invalid_argument("convolve: params.N != density dimension");
    const auto w = riesz_weights(params, rho.faces(), r);
    double s = 0.0;
    for (int j = 0; j < rho.cells(); ++j) s += w[j] * rho.value(j);
    return s / params.k;
}

// omega(r): Newtonian k = 2-N uses the shell-theorem form
// M_rho(r) r^{2-N}/(2-N); otherwise (r^k/k) int_0^r theta(s/r) rho s^{N-1} ds.
inline double omega(const RadialDensity& rho, const ModelParams& params,
                    double r) {
    if (!(r >= 0.0)) throw std::domain_error("omega: r must be >= 0");
    if (params.N != rho.dim())
        throw std::invalid_argument("omega: params.N != density dimension");
    if (r == 0.0) return 0.0;
    if (params.k == 2.0 - params.N)
        return rho.cumulative_mass(r) * std::pow(r, 2.0 - params.N) /
               (2.0 - params.N);
    const detail::ThetaCapped th(params);
    const auto v = detail::inner_weights(th, rho.faces(), r);
    double s = 0.0;
    for (int j = 0; j < rho.cells(); ++j) s += v[j] * rho.value(j);
    return std::pow(r, params.k) / params.k * s;
}

// Independent oracle: direct double quadrature through the angular integral
// (never touches the hypergeometric reduction). Near-diagonal pieces are
// integrated in the offset u = |eta - r| with the offset-exact oracle.
inline double convolve_oracle(const RadialDensity& rho,
                              const ModelParams& params, double r,
                              double rel_tol = 1e-9) {
    const int N = params.N;
    const double tol = rel_tol * 0.1;
    auto below = [&](double u) {  // eta = r - u
        return big_theta_oracle_near(N, params.k, r, u, -1, tol) *
               std::pow(r - u, N - 1.0);
    };
    auto above = [&](double u) {  // eta = r + u
        return big_theta_oracle_near(N, params.k, r, u, +1, tol) *
               std::pow(r + u, N - 1.0);
    };
    auto far = [&](double eta) {
        return big_theta_oracle(N, params.k, r, eta, tol) *
               std::pow(eta, N - 1.0);
    };
    double acc = 0.0;
    if (r == 0.0) {
        // Theta(0, eta) = eta^k theta(0): only the eta^{k+N-1} endpoint needs
        // grading, on the first cell
        for (int j = 0; j < rho.cells(); ++j) {
            if (rho.value(j) == 0.0) continue;
            const double lo = rho.face(j), hi = rho.face(j + 1);
            acc += rho.value(j) * ((lo == 0.0)
                                       ? graded_gl(far, lo, hi, false, 54, 8)
                                       : fixed_gl(far, lo, hi, 16));
        }
        return acc / params.k;
    }
    for (int j = 0; j < rho.cells(); ++j) {
        if (rho.value(j) == 0.0) continue;
        const double lo = rho.face(j), hi = rho.face(j + 1);
        const double width = hi - lo;
        double piece;
        if (r > lo && r < hi) {
            piece = graded_gl(below, 0.0, r - lo, false, 54, 8) +
                    graded_gl(above, 0.0, hi - r, false, 54, 8);
        } else if (hi <= r) {
            piece = (r - hi < width)
                        ? graded_gl(below, r - hi, r - lo, false, 54, 8)
                        : fixed_gl(far, lo, hi, 16);
        } else {  // lo >= r
            piece = (lo - r < width)
                        ? graded_gl(above, lo - r, hi - r, false, 54, 8)
                        : fixed_gl(far, lo, hi, 16);
        }
        acc += rho.value(j) * piece;
    }
    return acc / params.k;
}

// Precomputed dense operators for a fixed (params, grid): potential values at
// cell centers and the interaction energy become matrix products; this is
// what makes the steady-state iteration and the simulator affordable.
class ConvolutionOperator {
  public:
    ConvolutionOperator(const ModelParams& params,
                        const std::vector<double>& faces,
                        bool with_interaction = true)
        : p_(params), faces_(faces), J_((int)faces.size() - 1), theta_(params) {
        p_.validate();
        K_.assign((std::size_t)J_ * J_, 0.0);
        for (int i = 0; i < J_; ++i) {
            const double c = 0.5 * (faces_[i] + faces_[i + 1]);
            const auto w = detail::riesz_weights(theta_, faces_, c);
            for (int j = 0; j < J_; ++j)
                K_[(std::size_t)i * J_ + j] = w[j] / p_.k;
        }
        if (with_interaction) build_interaction();
    }

    const ModelParams& params() const { return p_; }
    const std::vector<double>& faces() const { return faces_; }
    int cells() const { return J_; }
    const detail::ThetaCapped& theta_eval() const { return theta_; }

    // S_k at cell centers
    std::vector<double> potential(const std::vector<double>& rho) const {
        std::vector<double> s((std::size_t)J_, 0.0);
        for (int i = 0; i < J_; ++i) {
            const double* row = &K_[(std::size_t)i * J_];
            double acc = 0.0;
            for (int j = 0; j < J_; ++j) acc += row[j] * rho[j];
            s[i] = acc;
        }
        return s;
    }

    // sigma_N int omega(r) rho(r) r^{N-1} dr; by symmetry of the double
    // integral this equals the interaction energy (1/2) iint rho W_k rho.
    double interaction(const std::vector<double>& rho) const {
        if (G_.empty())
            throw std::logic_error(
                "ConvolutionOperator: built without interaction matrix");
        double acc = 0.0;
        for (int i = 0; i < J_; ++i) {
            const double* row = &G_[(std::size_t)i * J_];
            double inner = 0.0;
            for (int j = 0; j < J_; ++j) inner += row[j] * rho[j];
            acc += rho[i] * inner;
        }
        return surface_area(p_.N) * acc;
    }

  private:
    void build_interaction() {
        // G[i][j]: integral over cell i of (r^k/k) r^{N-1} [inner weight of
        // cell j at r] dr, by Gauss-Legendre in r per cell
        G_.assign((std::size_t)J_ * J_, 0.0);
        const int gl_out = (J_ >= 256) ? 4 : 8;
        const GLRule& rule = gauss_legendre(gl_out);
        const int N = p_.N;
        for (int i = 0; i < J_; ++i) {
            const double lo = faces_[i], hi = faces_[i + 1];
            const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
            double* row = &G_[(std::size_t)i * J_];
            for (int g = 0; g < gl_out; ++g) {
                const double r = mid + hw * rule.x[g];
                const double wq =
                    hw * rule.w[g] * std::pow(r, p_.k + N - 1.0) / p_.k;
                const auto v = detail::inner_weights(theta_, faces_, r);
                for (int j = 0; j < J_; ++j) row[j] += wq * v[j];
            }
        }
    }

    ModelParams p_;
    std::vector<double> faces_;
    int J_;
    detail::ThetaCapped theta_;
    std::vector<double> K_;
    std::vector<double> G_;
};

}  // namespace aggdiff
