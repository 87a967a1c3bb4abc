#pragma once

// Minimal Chebyshev interpolant on [lo, hi]: fit once from function values at
// Chebyshev points, evaluate by Clenshaw recurrence. Used to amortize
// hypergeometric evaluations inside quadrature loops (the profiles being
// fitted are analytic on the fit interval, so ~50 coefficients reach machine
// precision).

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace aggdiff {

class Chebyshev {
  public:
    Chebyshev() = default;

    template <class F>
    static Chebyshev fit(F&& f, double lo, double hi, int n) {
        if (!(hi > lo) || n < 2)
            throw std::invalid_argument("Chebyshev::fit: bad interval/order");
        Chebyshev c;
        c.lo_ = lo;
        c.hi_ = hi;
        std::vector<double> fv(n);
        for (int j = 0; j < n; ++j) {
            const double x = std::cos(M_PI * (j + 0.5) / n);
            fv[j] = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * x);
        }
        c.coef_.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += fv[j] * std::cos(M_PI * i * (j + 0.5) / n);
            c.coef_[i] = 2.0 * s / n;
        }
        c.coef_[0] *= 0.5;
        return c;
    }

    bool empty() const { return coef_.empty(); }

    double operator()(double x) const {
        // Clenshaw on t in [-1, 1]
        const double t = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
        double b1 = 0.0, b2 = 0.0;
        for (int i = (int)coef_.size() - 1; i >= 1; --i) {
            const double b0 = 2.0 * t * b1 - b2 + coef_[i];
            b2 = b1;
            b1 = b0;
        }
        return t * b1 - b2 + coef_[0];
    }

  private:
    double lo_ = 0.0, hi_ = 1.0;
    std::vector<double> coef_;
};

}  // namespace aggdiff
