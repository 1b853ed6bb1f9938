#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prodiso/measure.hpp"

namespace prodiso {

struct Grid {
    double a = -1.0;
    double b = 1.0;
    int n = 3;

    Grid() = default;
    Grid(double a_, double b_, int n_);

    static Grid symmetric(double b, int n);
    // Symmetric grid with spacing close to h and an odd node count.
    static Grid symmetric_spacing(double b, double h);

    double h() const { return (b - a) / (n - 1); }
    double x(int i) const { return a + i * h(); }
    std::vector<double> nodes() const;
    // Cell volumes: h inside, h/2 at the two end nodes.
    std::vector<double> cells() const;
    // Refined grid with 2n - 1 nodes on the same interval.
    Grid refined() const { return Grid(a, b, 2 * n - 1); }
    int center() const { return (n - 1) / 2; }
    bool is_symmetric() const;
};

struct TabulatedDensity {
    Grid grid;
    std::vector<double> values;
    double mass = 0.0;

    double at(double x) const;  // cubic interpolation, zero outside the grid
    double mean() const;
    double variance() const;
    void normalize();
};

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-15;
    int max_depth = 15;
    std::vector<double> breakpoints;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod (7/15) integration; a and b may be infinite.
double integrate(const Integrand& f, double a, double b, const QuadOptions& opts = {});

double trapezoid(std::span<const double> values, double h);

TabulatedDensity tabulate(const MeasureSpec& m, const Grid& g);
TabulatedDensity tabulate(const std::function<double(double)>& f, const Grid& g);

// value(x) <- value(x / w) / |w| on the same grid.
TabulatedDensity rescale(const TabulatedDensity& d, double w);

// Density of X + Y on the grid of a (both inputs must share the grid).
TabulatedDensity convolve(const TabulatedDensity& a, const TabulatedDensity& b);

enum class ConvolveMode { Direct, Doubling };

// Density of sum_i w_i X_i for N = weights.size() independent copies.
TabulatedDensity self_convolve_scaled(const TabulatedDensity& d, std::span<const double> weights,
                                      ConvolveMode mode = ConvolveMode::Direct);

// Density of sum_i X_i for independent densities on a shared grid.
TabulatedDensity convolve_all(const std::vector<TabulatedDensity>& parts);

std::string to_csv(const TabulatedDensity& d);

}  // namespace prodiso
