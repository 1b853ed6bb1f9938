#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "prodiso/numerics.hpp"

using namespace prodiso;

TEST_SUITE("numerics") {

TEST_CASE("grid layout") {
    Grid g = Grid::symmetric(2.0, 5);
    CHECK(g.h() == 1.0);
    CHECK(g.nodes() == std::vector<double>{-2, -1, 0, 1, 2});
    CHECK(g.cells() == std::vector<double>{0.5, 1, 1, 1, 0.5});
    CHECK(g.refined().n == 9);
    CHECK(Grid::symmetric_spacing(1.0, 0.1).n == 21);
    CHECK_THROWS_AS(Grid(0.0, 1.0, 4), Error);
    CHECK_THROWS_AS(Grid(1.0, 1.0, 5), Error);
}

TEST_CASE("logistic moments by quadrature") {
    auto f = oracle::logistic_pdf;
    const double inf = std::numeric_limits<double>::infinity();
    // With u = F(x), int f^2 = int u(1-u) du and int f^3 = int u^2 (1-u)^2 du.
    CHECK(integrate([&](double x) { return f(x) * f(x); }, -inf, inf) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
    CHECK(integrate([&](double x) { return std::pow(f(x), 3); }, -inf, inf) ==
          doctest::Approx(1.0 / 30.0).epsilon(1e-10));
    CHECK(integrate(f, -inf, inf) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("polynomials integrate exactly") {
    for (int k = 0; k <= 20; ++k) {
        double v = integrate([k](double x) { return std::pow(x, k); }, 0.0, 1.0);
        CAPTURE(k);
        CHECK(std::abs(v - 1.0 / (k + 1)) < 1e-13);
    }
}

TEST_CASE("breakpoints help kinks") {
    QuadOptions q;
    q.breakpoints = {0.3};
    double v = integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, q);
    CHECK(v == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-14));
}

TEST_CASE("tabulation") {
    auto lo = MeasureSpec::logistic();
    CHECK(std::abs(tabulate(lo, Grid::symmetric(30.0, 6001)).mass - 1.0) < 1e-9);
    TabulatedDensity g = tabulate(MeasureSpec::gaussian(), Grid::symmetric(8.0, 4001));
    CHECK(g.values[g.grid.center()] == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
    double part = tabulate(lo, Grid::symmetric(1.0, 201)).mass;
    CHECK(std::abs(part - (oracle::logistic_cdf(1.0) - oracle::logistic_cdf(-1.0))) < 1e-5);
    CHECK(std::abs(part - 0.462117) < 1e-5);
}

TEST_CASE("self convolution reference values") {
    auto lo = MeasureSpec::logistic();
    TabulatedDensity d = tabulate(lo, Grid::symmetric(40.0, 8001));
    std::vector<double> one{1.0};
    TabulatedDensity s1 = self_convolve_scaled(d, one);
    CHECK(s1.values[s1.grid.center()] == doctest::Approx(0.25).epsilon(1e-9));

    std::vector<double> half(2, 1.0 / std::numbers::sqrt2);
    TabulatedDensity s2 = self_convolve_scaled(d, half);
    CHECK(std::abs(s2.values[s2.grid.center()] - std::numbers::sqrt2 / 6.0) < 1e-4);

    std::vector<double> w64(64, 0.125), w128(128, 1.0 / std::sqrt(128.0));
    TabulatedDensity s64 = self_convolve_scaled(d, w64, ConvolveMode::Doubling);
    TabulatedDensity s128 = self_convolve_scaled(d, w128, ConvolveMode::Doubling);
    double limit = std::sqrt(3.0) / std::numbers::pi / std::sqrt(2 * std::numbers::pi);
    double v64 = s64.values[s64.grid.center()], v128 = s128.values[s128.grid.center()];
    CHECK(std::abs(v64 - limit) < 0.01 * limit);
    CHECK(std::abs(v64 - v128) < 0.01 * v128);
    CHECK(std::abs(v128 - limit) < std::abs(v64 - limit));
}

TEST_CASE("convolution adds means and variances") {
    auto lo = MeasureSpec::logistic();
    auto ga = MeasureSpec::gaussian(1.5);
    for (int n : {4001, 8001}) {
        Grid g = Grid::symmetric(60.0, n);
        TabulatedDensity a = tabulate(lo, g), b = tabulate(ga, g);
        a.normalize();
        b.normalize();
        TabulatedDensity c = convolve(a, b);
        c.normalize();
        CHECK(std::abs(c.mean()) < 1e-10);
        CHECK(c.variance() == doctest::Approx(a.variance() + b.variance()).epsilon(1e-8));
    }
}

TEST_CASE("rescaling multiplies the variance") {
    TabulatedDensity d = tabulate(MeasureSpec::logistic(), Grid::symmetric(60.0, 12001));
    d.normalize();
    std::vector<double> w{0.5};
    TabulatedDensity r = self_convolve_scaled(d, w);
    CHECK(r.variance() == doctest::Approx(0.25 * d.variance()).epsilon(1e-6));
}

TEST_CASE("narrow grids are rejected") {
    TabulatedDensity d = tabulate(MeasureSpec::logistic(), Grid::symmetric(10.0, 1001));
    CHECK_THROWS_AS(convolve(d, d), Error);
    try {
        convolve(d, d);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::GridTooNarrow);
    }
    TabulatedDensity other = tabulate(MeasureSpec::logistic(), Grid::symmetric(10.0, 1003));
    CHECK_THROWS_AS(convolve(d, other), Error);
}

TEST_CASE("csv export") {
    TabulatedDensity d = tabulate(MeasureSpec::gaussian(), Grid::symmetric(1.0, 3));
    std::string csv = to_csv(d);
    CHECK(csv.rfind("# x,value; a=-1 b=1 n=3", 0) == 0);
    CHECK(csv.find("\n0,0.3989422804014327") != std::string::npos);
}

}  // TEST_SUITE
