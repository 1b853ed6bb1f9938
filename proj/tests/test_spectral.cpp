#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "prodiso/spectral.hpp"

using namespace prodiso;

namespace {

struct Weights {
    Grid grid;
    std::vector<double> nu, theta;
};

// Reduced data of the logistic bisector: nu(y) = f(y/sqrt2)^2, theta = 2 f(y/sqrt2).
Weights logistic_bisector(double b, int n) {
    Weights w{Grid::symmetric(b, n), {}, {}};
    for (double y : w.grid.nodes()) {
        double f = oracle::logistic_pdf(y / std::numbers::sqrt2);
        w.nu.push_back(f * f);
        w.theta.push_back(2.0 * f);
    }
    return w;
}

std::vector<double> sample(const MeasureSpec& m, const Grid& g) {
    std::vector<double> v;
    for (double x : g.nodes()) v.push_back(density(m, x));
    return v;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("Neumann Laplacian on [0, pi]") {
    Grid g(0.0, std::numbers::pi, 2001);
    std::vector<double> one(g.n, 1.0);
    EigenResult r = solve_smallest(assemble(one, one, g), 3);
    CHECK(std::abs(r.eigenvalues[0]) < 1e-10);
    CHECK(r.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.eigenvalues[2] == doctest::Approx(4.0).epsilon(1e-5));
    for (double res : r.residual_norms) CHECK(res <= 1e-8);
}

TEST_CASE("null mode is constant") {
    Grid g = Grid::symmetric(8.0, 801);
    auto w = sample(MeasureSpec::logistic(), g);
    std::vector<double> m(g.n);
    for (int i = 0; i < g.n; ++i) m[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i));
    EigenResult r = solve_smallest(assemble(w, m, g), 1);
    CHECK(std::abs(r.eigenvalues[0]) < 1e-10);
    double ref = r.eigenvector[0];
    for (double v : r.eigenvector) CHECK(std::abs(v - ref) <= 1e-8 * std::abs(ref));
}

TEST_CASE("stiffness annihilates constants") {
    Grid g = Grid::symmetric(5.0, 101);
    auto w = sample(MeasureSpec::gaussian(), g);
    EigenProblem p = assemble(w, w, g);
    for (int i = 0; i < g.n; ++i) {
        double row = p.diag[i];
        if (i > 0) row += p.off[i - 1];
        if (i + 1 < g.n) row += p.off[i];
        CHECK(std::abs(row) <= 1e-14 * std::abs(p.diag[i]));
    }
}

TEST_CASE("Gaussian weights give the Gaussian gap") {
    Grid g = Grid::symmetric(8.0, 4001);
    auto w = sample(MeasureSpec::gaussian(), g);
    EigenResult r = solve_smallest(assemble(w, w, g), 2);
    CHECK(r.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(sturm_count(assemble(w, w, g), 0.5) == 1);
    CHECK(sturm_count(assemble(w, w, g), 1.5) == 2);
}

TEST_CASE("spectral gaps of the built-ins") {
    SpectralOptions lo_opts;
    lo_opts.b = 40.0;
    lo_opts.n = 8001;
    CHECK(std::abs(spectral_gap(MeasureSpec::logistic(), lo_opts) - 0.25) < 1e-3);
    CHECK(std::abs(spectral_gap(MeasureSpec::logistic()) - 0.25) < 1e-3);
    CHECK(std::abs(spectral_gap(MeasureSpec::two_sided_exponential()) - 0.25) < 1e-3);
    CHECK(std::abs(spectral_gap(MeasureSpec::gaussian()) - 1.0) < 1e-3);
    CHECK(std::abs(spectral_gap(MeasureSpec::gaussian(2.0)) - 0.25) < 1e-3);
    CHECK(spectral_gap(MeasureSpec::power_law(4.0)) > 0.0);
}

TEST_CASE("gap report") {
    GapReport r = spectral_gap_report(MeasureSpec::gaussian());
    CHECK(r.n == 8001);
    CHECK(std::abs(r.lambda - r.lambda_raw) < 1e-4);
    auto j = r.to_json();
    CHECK(j.contains("lambda"));
    CHECK(j.contains("b"));
}

TEST_CASE("scaling law") {
    for (const auto& m : {MeasureSpec::logistic(), MeasureSpec::gaussian(), MeasureSpec::power_law(4.0)}) {
        double base = spectral_gap(m);
        for (double s : {0.5, 2.0}) {
            CAPTURE(m.name());
            CAPTURE(s);
            CHECK(spectral_gap(m.scaled(s)) == doctest::Approx(base / (s * s)).epsilon(3e-3));
        }
    }
}

TEST_CASE("grid convergence is second order") {
    auto m = MeasureSpec::logistic();
    SpectralOptions o;
    o.b = truncation_interval(m).hi;
    o.richardson = false;
    o.extrapolate_b = 0;
    double e[3];
    int n = 501;
    for (double& v : e) {
        o.n = n;
        v = spectral_gap(m, o);
        n = 2 * n - 1;
    }
    CHECK(std::abs(e[0] - e[1]) <= 4.0 * std::abs(e[1] - e[2]));
    CHECK(std::abs(e[0] - e[1]) >= 3.0 * std::abs(e[1] - e[2]));
}

TEST_CASE("P1 for the logistic bisector") {
    Weights w = logistic_bisector(30.0, 4001);
    ConditionResult r = check_P1(w.nu, w.theta, w.grid);
    // Rescaled back to x = y/sqrt2 the ratio is four times larger and at least 6.
    CHECK(4.0 * r.value >= 6.0 - 0.05);
    CHECK(r.holds);
    CHECK(r.verdict == Verdict::Holds);

    std::vector<double> zero(w.grid.n, 0.0);
    ConditionResult inf = check_P1(w.nu, zero, w.grid);
    CHECK(inf.infinite);
    CHECK(inf.holds);

    std::vector<double> signed_theta = w.theta;
    signed_theta[10] = -0.1;
    CHECK_THROWS_AS(check_P1(w.nu, signed_theta, w.grid), Error);
}

TEST_CASE("P1 fails for the quartic bisector") {
    const double p = 4.0, s = std::numbers::sqrt2;
    Grid g = Grid::symmetric(4.0, 4001);
    std::vector<double> nu, th;
    for (double y : g.nodes()) {
        double x = y / s;
        nu.push_back(std::exp(-2.0 * std::pow(std::abs(x), p)));
        th.push_back(p * (p - 1) * std::pow(std::abs(x), p - 2));
    }
    ConditionResult r = check_P1(nu, th, g);
    CHECK_FALSE(r.holds);
    // u = y is odd, hence nu-centered; its Rayleigh ratio bounds the infimum.
    auto nu_f = [&](double y) { return std::exp(-2.0 * std::pow(std::abs(y / s), p)); };
    double num = oracle::simpson(nu_f, -4, 4);
    double den = oracle::simpson([&](double y) { return y * y * p * (p - 1) * std::pow(std::abs(y / s), p - 2) * nu_f(y); },
                                 -4, 4);
    CHECK(num / den < 1.0);
    CHECK(r.value <= num / den + 1e-6);
}

TEST_CASE("P2 for the logistic bisector") {
    Weights w = logistic_bisector(30.0, 4001);
    ConditionResult r = check_P2(w.nu, w.theta, 0.25, w.grid);
    CHECK_FALSE(r.holds);
    // Constant test function: (1/4) int f^2 / int 2 f^3 with int f^2 = 1/6, int f^3 = 1/30.
    double constant_ratio = 0.25 * (1.0 / 6.0) / (2.0 / 30.0);
    CHECK(constant_ratio == doctest::Approx(5.0 / 8.0));
    CHECK(r.value <= constant_ratio + 1e-6);

    CHECK(check_P2(w.nu, w.theta, 1e6, w.grid).holds);
}

TEST_CASE("P2 for the Gaussian analogue") {
    Grid g = Grid::symmetric(8.0, 4001);
    std::vector<double> nu, one(g.n, 1.0);
    for (double y : g.nodes()) nu.push_back(std::pow(oracle::normal_pdf(y), 2));
    ConditionResult r = check_P2(nu, one, 1.0, g);
    CHECK(r.value >= 1.0 - 1e-6);
    CHECK(r.holds);
}

TEST_CASE("weight-function variants extrapolate") {
    auto nu = [](double y) { return std::pow(oracle::logistic_pdf(y / std::numbers::sqrt2), 2); };
    auto th = [](double y) { return 2.0 * oracle::logistic_pdf(y / std::numbers::sqrt2); };
    ConditionResult fine = check_P1(WeightFn(nu), WeightFn(th), Grid::symmetric(30.0, 2001));
    CHECK(fine.value == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("Brascamp-Lieb residuals") {
    TestFn lin = [](double x) { return std::pair{x, 1.0}; };
    TestFn cst = [](double) { return std::pair{2.0, 0.0}; };
    CHECK(std::abs(brascamp_lieb_residual(MeasureSpec::gaussian(), lin)) < 1e-8);
    auto cubed = MeasureSpec::custom(
        [](double x) {
            double f = oracle::logistic_pdf(x), F = oracle::logistic_cdf(x);
            return LogDensity{3.0 * std::log(f), 3.0 * (1.0 - 2.0 * F), -6.0 * f};
        },
        true, LogConcavity::StrictlyLogConcave, "logistic-cubed");
    CHECK(brascamp_lieb_residual(cubed, lin) >= 0.0);
    CHECK(std::abs(brascamp_lieb_residual(cubed, cst)) < 1e-12);
    CHECK_THROWS_AS(brascamp_lieb_residual(MeasureSpec::two_sided_exponential(), lin), Error);
}

TEST_CASE("remark bracket") {
    for (const auto& m : {MeasureSpec::logistic(), MeasureSpec::gaussian(), MeasureSpec::gaussian(0.5),
                          MeasureSpec::two_sided_exponential(), MeasureSpec::power_law(4.0)}) {
        RemarkBracket rb = remark_bracket(m);
        double lam = spectral_gap(m);
        CAPTURE(m.name());
        CHECK(rb.inf_vpp <= lam + 1e-6);
        CHECK(lam <= rb.mean_vpp + 1e-6);
    }
    // int V'' dmu = int 2 f^2 = 1/3 for the logistic.
    CHECK(remark_bracket(MeasureSpec::logistic()).mean_vpp == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("tensor oracle on reference instances") {
    Grid g = Grid::symmetric(truncation_interval(MeasureSpec::gaussian()).hi, 101);
    auto ga = sample(MeasureSpec::gaussian(), g);
    std::vector<double> one(g.n, 1.0), zero(g.n, 0.0);
    TensorOracleResult r = tensor_oracle_2d(ga, ga, one, g);
    CHECK(r.lambda_2d == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.agrees);
    CHECK(std::isinf(tensor_oracle_2d(ga, ga, zero, g).lambda_2d));

    Weights w = logistic_bisector(truncation_interval(MeasureSpec::logistic()).hi * std::numbers::sqrt2, 101);
    auto lo = sample(MeasureSpec::logistic(), w.grid);
    TensorOracleResult b = tensor_oracle_2d(w.nu, lo, w.theta, w.grid);
    CHECK(b.lambda_2d < 1.0);
    CHECK(b.p2_value < 1.0);
    CHECK_FALSE(b.holds_2d);
    CHECK(b.agrees);

    Grid big = Grid::symmetric(5.0, 203);
    std::vector<double> bw(big.n, 1.0);
    CHECK_THROWS_AS(tensor_oracle_2d(bw, bw, bw, big), Error);
}

TEST_CASE("unweighted tensorization") {
    struct Pair {
        MeasureSpec nu, tau;
    };
    for (const auto& [nu_m, tau_m] : {Pair{MeasureSpec::logistic(), MeasureSpec::gaussian(3.0)},
                                      Pair{MeasureSpec::gaussian(1.5), MeasureSpec::logistic()}}) {
        double b = std::max(truncation_interval(nu_m).hi, truncation_interval(tau_m).hi);
        Grid g = Grid::symmetric(b, 101);
        double lnu = spectral_gap(nu_m), ltau = spectral_gap(tau_m);
        std::vector<double> th(g.n, lnu);
        TensorOracleResult r = tensor_oracle_2d(sample(nu_m, g), sample(tau_m, g), th, g);
        CAPTURE(nu_m.name());
        CHECK(r.lambda_2d * lnu == doctest::Approx(std::min(lnu, ltau)).epsilon(0.02));
    }
}

TEST_CASE("eigen result json") {
    Grid g(0.0, 1.0, 11);
    std::vector<double> one(g.n, 1.0);
    auto j = solve_smallest(assemble(one, one, g), 2).to_json();
    CHECK(j["eigenvalues"].size() == 2);
    CHECK(j.contains("residuals"));
    CHECK(j["grid"]["n"] == 11);
}

}  // TEST_SUITE
