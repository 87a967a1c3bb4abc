#pragma once

// Compactly supported radial densities, represented piecewise-constant on a
// face grid 0 = r_0 < r_1 < ... < r_J. All moments against r^{N-1} dr are
// exact polynomial cell sums, which removes one quadrature-error source from
// the inequality fuzzing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "aggdiff/kernel.hpp"

namespace aggdiff {

// 53-bit uniform in [0,1); explicit mapping so output streams are identical
// across standard libraries.
inline double uniform01(std::mt19937_64& eng) {
    return (eng() >> 11) * 0x1.0p-53;
}

class RadialDensity {
  public:
    RadialDensity(int dim, std::vector<double> faces,
                  std::vector<double> values)
        : dim_(dim), faces_(std::move(faces)), values_(std::move(values)) {
        if (dim_ < 2)
            throw std::invalid_argument("RadialDensity: dimension must be >= 2");
        if (faces_.size() < 2 || values_.size() + 1 != faces_.size())
            throw std::invalid_argument(
                "RadialDensity: need J+1 faces for J cell values");
        if (faces_.front() != 0.0)
            throw std::invalid_argument("RadialDensity: grid must start at 0");
        for (std::size_t j = 0; j + 1 < faces_.size(); ++j)
            if (!(faces_[j + 1] > faces_[j]))
                throw std::invalid_argument(
                    "RadialDensity: faces must be strictly increasing");
        for (double v : values_)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument(
                    "RadialDensity: values must be finite and nonnegative");
    }

    int dim() const { return dim_; }
    int cells() const { return (int)values_.size(); }
    const std::vector<double>& faces() const { return faces_; }
    const std::vector<double>& values() const { return values_; }
    double value(int j) const { return values_[j]; }
    double face(int j) const { return faces_[j]; }
    double r_max() const { return faces_.back(); }

    double center(int j) const { return 0.5 * (faces_[j] + faces_[j + 1]); }

    // volume of cell j divided by sigma_N: (r_{j+1}^N - r_j^N)/N
    double cell_volume(int j) const {
        const int N = dim_;
        return (std::pow(faces_[j + 1], N) - std::pow(faces_[j], N)) / N;
    }

    double mass() const {
        double s = 0.0;
        for (int j = 0; j < cells(); ++j) s += values_[j] * cell_volume(j);
        return surface_area(dim_) * s;
    }

    double cumulative_mass(double r) const {
        if (!(r >= 0.0))
            throw std::domain_error("cumulative_mass: r must be >= 0");
        const int N = dim_;
        double s = 0.0;
        for (int j = 0; j < cells(); ++j) {
            if (r >= faces_[j + 1]) {
                s += values_[j] * cell_volume(j);
            } else {
                if (r > faces_[j])
                    s += values_[j] *
                         (std::pow(r, N) - std::pow(faces_[j], N)) / N;
                break;
            }
        }
        return surface_area(dim_) * s;
    }

    double second_moment() const {
        const int N = dim_;
        double s = 0.0;
        for (int j = 0; j < cells(); ++j)
            s += values_[j] *
                 (std::pow(faces_[j + 1], N + 2) - std::pow(faces_[j], N + 2)) /
                 (N + 2);
        return surface_area(dim_) * s;
    }

    // integral of rho^p against sigma_N r^{N-1} dr (exact cell sums)
    double power_integral(double p) const {
        double s = 0.0;
        for (int j = 0; j < cells(); ++j)
            if (values_[j] > 0.0) s += std::pow(values_[j], p) * cell_volume(j);
        return surface_area(dim_) * s;
    }

    bool nonincreasing() const {
        for (int j = 0; j + 1 < cells(); ++j)
            if (values_[j + 1] > values_[j]) return false;
        return true;
    }

    // outermost face bounding the positive part
    double support_radius() const {
        for (int j = cells() - 1; j >= 0; --j)
            if (values_[j] > 0.0) return faces_[j + 1];
        return 0.0;
    }

    int support_cells() const {
        int n = 0;
        for (int j = 0; j < cells(); ++j)
            if (values_[j] > 0.0) ++n;
        return n;
    }

    double max_value() const {
        double v = 0.0;
        for (double x : values_) v = std::max(v, x);
        return v;
    }

    void scale_values(double factor) {
        for (double& v : values_) v *= factor;
    }

    void normalize_mass(double target) {
        const double m0 = mass();
        if (!(m0 > 0.0))
            throw std::domain_error("normalize_mass: zero-mass density");
        scale_values(target / m0);
    }

    // rho_lambda(r) = lambda^N rho(lambda r): same mass, support scaled 1/lambda
    RadialDensity dilate(double lambda) const {
        if (!(lambda > 0.0))
            throw std::domain_error("dilate: lambda must be positive");
        std::vector<double> f(faces_), v(values_);
        const double vol = std::pow(lambda, dim_);
        for (double& x : f) x /= lambda;
        for (double& x : v) x *= vol;
        return RadialDensity(dim_, std::move(f), std::move(v));
    }

  private:
    int dim_;
    std::vector<double> faces_;
    std::vector<double> values_;
};

inline std::vector<double> uniform_faces(double r_max, int J) {
    if (J < 1 || !(r_max > 0.0))
        throw std::invalid_argument("uniform_faces: need J >= 1, r_max > 0");
    std::vector<double> f(J + 1);
    for (int j = 0; j <= J; ++j) f[j] = r_max * j / J;
    f[0] = 0.0;
    return f;
}

// Uniform ball of mass M and radius R resolved by J cells (support edge lands
// exactly on the outer face).
inline RadialDensity uniform_ball(int dim, double M, double R, int J) {
    const double rho0 = M * dim / (surface_area(dim) * std::pow(R, dim));
    return RadialDensity(dim, uniform_faces(R, J),
                         std::vector<double>((std::size_t)J, rho0));
}

// Tent profile rho ~ (1 - r/R)_+ on [0, R], normalized to mass M.
inline RadialDensity tent_profile(int dim, double M, double R, int J,
                                  double r_max) {
    auto faces = uniform_faces(r_max, J);
    std::vector<double> vals((std::size_t)J, 0.0);
    for (int j = 0; j < J; ++j) {
        const double c = 0.5 * (faces[j] + faces[j + 1]);
        vals[j] = std::max(0.0, 1.0 - c / R);
    }
    RadialDensity rho(dim, std::move(faces), std::move(vals));
    rho.normalize_mass(M);
    return rho;
}

// Seeded admissible fuzz density: sorted uniform draws give a nonincreasing
// profile on a randomized support prefix (between half and all of the grid),
// normalized to mass M. Deterministic per (seed, J).
inline RadialDensity random_decreasing(std::uint64_t seed,
                                       const ModelParams& params, int J,
                                       double r_max = 1.0) {
    if (J < 4)
        throw std::invalid_argument("random_decreasing: J must be >= 4");
    params.validate();
    std::mt19937_64 eng(seed);
    const int live = J / 2 + (int)(uniform01(eng) * (double)(J - J / 2));
    std::vector<double> vals((std::size_t)J, 0.0);
    for (int j = 0; j < live; ++j) {
        do {
            vals[j] = uniform01(eng);
        } while (vals[j] <= 1e-12);
    }
    std::sort(vals.begin(), vals.begin() + live, std::greater<double>());
    RadialDensity rho(params.N, uniform_faces(r_max, J), std::move(vals));
    rho.normalize_mass(params.M);
    return rho;
}

// sigma_N-weighted L1 distance on a shared grid.
inline double l1_distance(const RadialDensity& a, const RadialDensity& b) {
    if (a.dim() != b.dim() || a.faces() != b.faces())
        throw std::invalid_argument("l1_distance: densities on different grids");
    double s = 0.0;
    for (int j = 0; j < a.cells(); ++j)
        s += std::abs(a.value(j) - b.value(j)) * a.cell_volume(j);
    return surface_area(a.dim()) * s;
}

// --- spec-shaped free functions -------------------------------------------

inline double mass(const RadialDensity& rho, const ModelParams& params) {
    if (params.N != rho.dim())
        throw std::invalid_argument("mass: params.N != density dimension");
    return rho.mass();
}

inline double cumulative_mass(const RadialDensity& rho, double r) {
    return rho.cumulative_mass(r);
}

inline double second_moment(const RadialDensity& rho,
                            const ModelParams& params) {
    if (params.N != rho.dim())
        throw std::invalid_argument(
            "second_moment: params.N != density dimension");
    return rho.second_moment();
}

}  // namespace aggdiff
