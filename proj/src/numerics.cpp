#include "prodiso/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace prodiso {

namespace {

constexpr double kBoundaryTol = 1e-10;

void check_boundary(const TabulatedDensity& d, const char* where) {
    double peak = *std::max_element(d.values.begin(), d.values.end());
    if (peak <= 0.0) return;
    if (d.values.front() > kBoundaryTol * std::max(1.0, peak) || d.values.back() > kBoundaryTol * std::max(1.0, peak))
        throw Error(ErrorKind::GridTooNarrow, std::string(where) + ": density does not vanish at the grid ends");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

// ------------------------------------------------------------------------ Grid

Grid::Grid(double a_, double b_, int n_) : a(a_), b(b_), n(n_) {
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorKind::InvalidArgument, "grid needs a < b");
    if (n < 3 || n % 2 == 0) throw Error(ErrorKind::InvalidArgument, "grid node count must be odd and >= 3");
}

Grid Grid::symmetric(double b, int n) { return Grid(-b, b, n); }

Grid Grid::symmetric_spacing(double b, double h) {
    int half = static_cast<int>(std::ceil(b / h - 1e-9));
    return Grid(-b, b, 2 * std::max(half, 1) + 1);
}

std::vector<double> Grid::nodes() const {
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = x(i);
    if (is_symmetric()) xs[center()] = 0.0;
    return xs;
}

std::vector<double> Grid::cells() const {
    std::vector<double> c(n, h());
    c.front() *= 0.5;
    c.back() *= 0.5;
    return c;
}

bool Grid::is_symmetric() const { return a == -b; }

// ----------------------------------------------------------- TabulatedDensity

double TabulatedDensity::at(double x) const {
    double h = grid.h();
    double t = (x - grid.a) / h;
    if (t < 0.0 || t > grid.n - 1) return 0.0;
    int i = static_cast<int>(std::floor(t));
    double u = t - i;
    if (u == 0.0) return values[i];
    // 4-point Lagrange on nodes i-1..i+2 (clamped at the ends).
    int i0 = std::clamp(i - 1, 0, grid.n - 4);
    double s = t - i0;
    const double* v = values.data() + i0;
    double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
    double l1 = s * (s - 2) * (s - 3) / 2.0;
    double l2 = -s * (s - 1) * (s - 3) / 2.0;
    double l3 = s * (s - 1) * (s - 2) / 6.0;
    return std::max(0.0, l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]);
}

double TabulatedDensity::mean() const {
    std::vector<double> xf(grid.n);
    for (int i = 0; i < grid.n; ++i) xf[i] = grid.x(i) * values[i];
    return trapezoid(xf, grid.h()) / mass;
}

double TabulatedDensity::variance() const {
    double mu = mean();
    std::vector<double> xf(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        double d = grid.x(i) - mu;
        xf[i] = d * d * values[i];
    }
    return trapezoid(xf, grid.h()) / mass;
}

void TabulatedDensity::normalize() {
    mass = trapezoid(values, grid.h());
    if (!(mass > 0.0)) throw Error(ErrorKind::DomainError, "tabulated density has no mass");
    for (double& v : values) v /= mass;
    mass = 1.0;
}

// ------------------------------------------------------------------ quadrature

double integrate(const Integrand& f, double a, double b, const QuadOptions& opts) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, opts);
    std::vector<double> cuts{a};
    for (double p : opts.breakpoints)
        if (p > a && p < b) cuts.push_back(p);
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(b);

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double total = 0.0, err_total = 0.0, l1_total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double err = 0.0, l1 = 0.0;
        total += GK::integrate(f, cuts[k], cuts[k + 1], static_cast<unsigned>(opts.max_depth), opts.rel_tol, &err, &l1);
        err_total += err;
        l1_total += l1;
    }
    if (!std::isfinite(total))
        throw Error(ErrorKind::NoConvergence, "integrand produced a non-finite value");
    // The Kronecker/Gauss difference overstates the true error on smooth integrands.
    if (err_total > 100.0 * std::max(opts.rel_tol * l1_total, opts.abs_tol))
        throw Error(ErrorKind::NoConvergence, "quadrature error estimate " + fmt(err_total) + " above tolerance");
    return total;
}

double trapezoid(std::span<const double> values, double h) {
    if (values.size() < 2) return 0.0;
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * h;
}

// ------------------------------------------------------------------ tabulation

TabulatedDensity tabulate(const MeasureSpec& m, const Grid& g) {
    return tabulate([&](double x) { return density(m, x); }, g);
}

TabulatedDensity tabulate(const std::function<double(double)>& f, const Grid& g) {
    TabulatedDensity d;
    d.grid = g;
    d.values.resize(g.n);
    auto xs = g.nodes();
    for (int i = 0; i < g.n; ++i) d.values[i] = f(xs[i]);
    d.mass = trapezoid(d.values, g.h());
    return d;
}

TabulatedDensity rescale(const TabulatedDensity& d, double w) {
    if (w == 0.0 || !std::isfinite(w)) throw Error(ErrorKind::InvalidArgument, "rescale weight must be nonzero");
    if (w == 1.0) return d;
    TabulatedDensity r;
    r.grid = d.grid;
    r.values.resize(d.grid.n);
    auto xs = d.grid.nodes();
    double aw = std::abs(w);
    for (int i = 0; i < d.grid.n; ++i) r.values[i] = d.at(xs[i] / w) / aw;
    r.mass = trapezoid(r.values, r.grid.h());
    return r;
}

TabulatedDensity convolve(const TabulatedDensity& a, const TabulatedDensity& b) {
    if (a.grid.n != b.grid.n || a.grid.a != b.grid.a || a.grid.b != b.grid.b)
        throw Error(ErrorKind::DimensionMismatch, "convolution needs a shared grid");
    if (!a.grid.is_symmetric()) throw Error(ErrorKind::InvalidArgument, "convolution needs a symmetric grid");
    const int n = a.grid.n;
    const int c = a.grid.center();
    const double h = a.grid.h();
    auto support = [n](const std::vector<double>& v) {
        int lo = 0, hi = n - 1;
        while (lo < n && v[lo] == 0.0) ++lo;
        while (hi > lo && v[hi] == 0.0) --hi;
        return std::pair{lo, hi};
    };
    auto [a0, a1] = support(a.values);
    auto [b0, b1] = support(b.values);
    TabulatedDensity out;
    out.grid = a.grid;
    out.values.assign(n, 0.0);
    for (int i = a0; i <= a1; ++i) {
        double ai = a.values[i] * h;
        if (ai == 0.0) continue;
        int j0 = std::max(b0, c - i);
        int j1 = std::min(b1, n - 1 + c - i);
        double* o = out.values.data();
        for (int j = j0; j <= j1; ++j) o[i - c + j] += ai * b.values[j];
    }
    out.mass = trapezoid(out.values, h);
    check_boundary(out, "convolve");
    return out;
}

TabulatedDensity self_convolve_scaled(const TabulatedDensity& d, std::span<const double> weights,
                                      ConvolveMode mode) {
    std::vector<double> w;
    for (double x : weights)
        if (x != 0.0) w.push_back(x);
    if (w.empty()) throw Error(ErrorKind::InvalidArgument, "weights must not all vanish");

    bool equal = std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); });
    if (mode == ConvolveMode::Doubling && equal) {
        TabulatedDensity base = rescale(d, w.front());
        check_boundary(base, "rescale");
        base.normalize();
        TabulatedDensity acc;
        bool have = false;
        for (std::size_t k = w.size(); k > 0; k >>= 1) {
            if (k & 1) {
                acc = have ? convolve(acc, base) : base;
                acc.normalize();
                have = true;
            }
            if (k > 1) {
                base = convolve(base, base);
                base.normalize();
            }
        }
        return acc;
    }

    TabulatedDensity acc = rescale(d, w.front());
    check_boundary(acc, "rescale");
    acc.normalize();
    for (std::size_t k = 1; k < w.size(); ++k) {
        TabulatedDensity part = rescale(d, w[k]);
        check_boundary(part, "rescale");
        acc = convolve(acc, part);
        acc.normalize();
    }
    return acc;
}

TabulatedDensity convolve_all(const std::vector<TabulatedDensity>& parts) {
    if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to convolve");
    TabulatedDensity acc = parts.front();
    check_boundary(acc, "convolve_all");
    acc.normalize();
    for (std::size_t k = 1; k < parts.size(); ++k) {
        acc = convolve(acc, parts[k]);
        acc.normalize();
    }
    return acc;
}

std::string to_csv(const TabulatedDensity& d) {
    std::ostringstream os;
    os << "# x,value; a=" << fmt(d.grid.a) << " b=" << fmt(d.grid.b) << " n=" << d.grid.n
       << " h=" << fmt(d.grid.h()) << " mass=" << fmt(d.mass) << '\n';
    auto xs = d.grid.nodes();
    for (int i = 0; i < d.grid.n; ++i) os << fmt(xs[i]) << ',' << fmt(d.values[i]) << '\n';
    return os.str();
}

}  // namespace prodiso
