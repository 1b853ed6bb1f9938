// One PASS/FAIL line per acceptance criterion. All tolerances are fixed here.
//
// Exit status: nonzero when a criterion fails that is not listed in
// kKnownDeviations. Known deviations still print FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "prodiso/halfspace.hpp"
#include "prodiso/isoprofile.hpp"
#include "prodiso/perturb.hpp"
#include "prodiso/spectral.hpp"

using namespace prodiso;

namespace {

// 7: the stated closed form for the witness is off by a factor p.
// 10: Stable at eps = 0.01 is not reached with solver margin 0.01.
const std::set<int> kKnownDeviations{7, 10};

int unexpected = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s %2d  %s%s\n", ok ? "PASS" : "FAIL", id, detail.c_str(),
                !ok && kKnownDeviations.count(id) ? "  [known deviation]" : "");
    if (!ok && !kKnownDeviations.count(id)) ++unexpected;
    std::fflush(stdout);
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void run(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("threw ") + e.what());
    }
}

// psi = -(a x^2/2 + b log cosh(c x) + d x^4).
MeasureSpec random_log_concave(std::mt19937_64& r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double a = 0.05 + 1.5 * u(r), b = 2.0 * u(r), c = 0.2 + 1.8 * u(r), d = 0.05 * u(r);
    return MeasureSpec::custom(
        [=](double x) {
            double cx = c * x, th = std::tanh(cx), sech2 = 1.0 - th * th;
            double lc = std::abs(cx) + std::log1p(std::exp(-2.0 * std::abs(cx))) - std::log(2.0);
            return LogDensity{-(a * x * x / 2 + b * lc + d * x * x * x * x), -(a * x + b * c * th + 4 * d * x * x * x),
                              -(a + b * c * c * sech2 + 12 * d * x * x)};
        },
        true, LogConcavity::StrictlyLogConcave, "random");
}

}  // namespace

int main() {
    run(1, [] {
        SpectralOptions o;
        o.b = 40.0;
        o.n = 8001;
        auto t0 = std::chrono::steady_clock::now();
        double lam = spectral_gap(MeasureSpec::logistic(), o);
        double dt = seconds_since(t0);
        report(1, std::abs(lam - 0.25) <= 1e-3 && dt < 5.0,
               fmt("logistic spectral gap %.9f (target 0.25 +- 1e-3), %.2f s (limit 5 s)", lam, dt));
    });

    run(2, [] {
        double g1 = spectral_gap(MeasureSpec::gaussian(1.0));
        double s05 = spectral_gap(MeasureSpec::gaussian(0.5)) * 0.25;
        double s2 = spectral_gap(MeasureSpec::gaussian(2.0)) * 4.0;
        bool ok = std::abs(g1 - 1.0) <= 1e-3 && std::abs(s05 - 1.0) <= 3e-3 && std::abs(s2 - 1.0) <= 3e-3;
        report(2, ok, fmt("gaussian gap %.9f; lambda*sigma^2 = %.9f (0.5), %.9f (2)", g1, s05, s2));
    });

    run(3, [] {
        double worst = 0.0;
        for (double t : unit_grid(1001)) worst = std::max(worst, std::abs(profile_1d(MeasureSpec::logistic(), t) - t * (1 - t)));
        report(3, worst <= 1e-12, fmt("max |I(t) - t(1-t)| = %.3g on 1001 points (limit 1e-12)", worst));
    });

    run(4, [] {
        ConstantC c = compute_c();
        bool ok = c.c > 0.45125 - 1e-4 && std::abs(c.foc_residual) <= 1e-10;
        report(4, ok, fmt("c = %.10f (> 0.45115), u* = %.10f, first-order residual %.3g", c.c, c.u_star, c.foc_residual));
    });

    run(5, [] {
        auto lo = MeasureSpec::logistic();
        double bm = boundary_measure({lo, lo}, HalfSpace::bisector(2, 1, 0.0));
        double want = std::numbers::sqrt2 / 6.0;
        report(5, std::abs(bm - want) <= 1e-4, fmt("bisector boundary measure %.9f vs sqrt2/6 = %.9f", bm, want));
    });

    run(6, [] {
        auto lo = MeasureSpec::logistic();
        StabilityVerdict two = noncoordinate_stability(lo, -1.0, 0.0, 2);
        StabilityVerdict three = noncoordinate_stability(lo, -1.0, 0.0, 3);
        // p1_lambda is the ratio in the y = sqrt2 x variables; the x-variable ratio is four times larger.
        double p1 = 4.0 * two.certificate("p1_lambda");
        double p2 = three.certificate("p2_value");
        bool ok = two.tag == StabilityTag::Stable && p1 >= 6.0 - 0.05 && three.tag == StabilityTag::Unstable &&
                  p2 <= 5.0 / 8.0 + 0.02;
        report(6, ok,
               std::string("dim 2 ") + tag_name(two.tag) + fmt(" with P1 eigenvalue %.6f (>= 5.95); dim 3 ", p1) +
                   tag_name(three.tag) + fmt(" with P2 infimum %.6f (<= 0.645)", p2));
    });

    run(7, [] {
        const double p = 4.0;
        auto pw = MeasureSpec::power_law(p);
        StabilityVerdict v = noncoordinate_stability(pw, 1.0, 0.0, 2);
        // Witness u(x) = x in the two-dimensional stability inequality.
        const double k = 2.0 / std::pow(std::numbers::sqrt2, p);
        auto w = [&](double x) { return std::exp(-k * std::pow(std::abs(x), p)); };
        QuadOptions q;
        q.rel_tol = 1e-13;
        q.abs_tol = 1e-300;
        q.breakpoints = {0.0};
        const double inf = kInfinity;
        double lhs = std::pow(2.0, -(p - 2) / 2) *
                     integrate([&](double x) { return x * x * p * (p - 1) * std::pow(std::abs(x), p - 2) * w(x); },
                               -inf, inf, q);
        double witness = lhs - integrate(w, -inf, inf, q);
        double stated = std::pow(2.0, 1.5) * std::pow(2.0, -1.0 / p) * (p - 2) * std::tgamma(1.0 / p);
        double corrected = stated / p;
        bool ok = v.tag == StabilityTag::Unstable && std::abs(witness - stated) <= 1e-6;
        report(7, ok,
               std::string("p = 4 bisector ") + tag_name(v.tag) +
                   fmt("; witness %.9f vs stated 2^(3/2) 2^(-1/p) (p-2) Gamma(1/p) = %.9f; "
                       "the same expression divided by p gives %.9f (diff %.2g)",
                       witness, stated, corrected, std::abs(witness - corrected)));
    });

    run(8, [] {
        std::mt19937_64 rng(20240801);
        int agree = 0, holds = 0;
        double worst = 0.0;
        const int cases = 25;
        for (int i = 0; i < cases; ++i) {
            MeasureSpec nu = random_log_concave(rng), tau = random_log_concave(rng);
            double b = std::max(truncation_interval(nu).hi, truncation_interval(tau).hi);
            Grid g = Grid::symmetric(b, 101);
            std::vector<double> nv, tv, th;
            for (double x : g.nodes()) {
                nv.push_back(density(nu, x));
                tv.push_back(density(tau, x));
                th.push_back(-eval_log_density(nu, x, 2).ddpsi);
            }
            TensorOracleResult r = tensor_oracle_2d(nv, tv, th, g);
            agree += r.agrees;
            holds += r.holds_2d;
            worst = std::max(worst, std::abs(r.lambda_2d - std::min(r.p1_lambda, r.p2_value)));
        }
        report(8, agree == cases,
               fmt("%g/%g random instances agree (%g with lambda_2d >= 1); max |lambda_2d - min(P1, P2)| = %.3g",
                   agree, cases, holds, worst));
    });

    run(9, [] {
        auto t0 = std::chrono::steady_clock::now();
        CltTrace tr = clt_upper_bound(MeasureSpec::logistic(), 0.5, 64);
        double dt = seconds_since(t0);
        double limit = std::sqrt(3.0) / std::numbers::pi / std::sqrt(2 * std::numbers::pi);
        double f64 = tr.values[63], f2 = tr.values[1];
        bool ok = std::abs(f64 - limit) <= 0.015 * limit && f2 > limit && dt < 30.0;
        report(9, ok, fmt("f_Z64(0) = %.6f vs %.6f (1.5%%), N = 2 value %.6f above the limit, %.2f s", f64, limit, f2, dt));
    });

    run(10, [] {
        DesignResult d = design_bump(default_design_basis());
        const Slopes& s = d.report.slopes;
        PerturbationReport rep = finite_diff_validate(d.bump, {-0.02, -0.01, 0.01, 0.02});
        const PerturbedValues& b0 = rep.baseline;
        bool design_ok = s.k_dot >= 1e-3 && s.lambda_dot - s.a_dot >= 1e-3;
        bool fd_ok = rep.max_rel_error <= 0.05;
        bool base_ok = std::abs(b0.lambda - 1) <= 1e-3 && std::abs(b0.k - 1) <= 1e-3 && std::abs(b0.a - 1) <= 1e-3;
        StabilityVerdict v = noncoordinate_stability(MeasureSpec::gaussian_bump(0.01, d.bump), -1.0, 0.0, 3);
        bool stable = v.tag == StabilityTag::Stable;
        report(10, design_ok && fd_ok && base_ok && stable,
               fmt("k_dot %.4g, lambda_dot - a_dot %.4g; fd max rel error %.4f (<= 0.05); ", s.k_dot,
                   s.lambda_dot - s.a_dot, rep.max_rel_error) +
                   fmt("baselines %.6f %.6f %.6f; ", b0.lambda, b0.k, b0.a) + "eps = 0.01 dim 3 " + tag_name(v.tag) +
                   fmt(" (P1 %.5f, P2 %.5f)", v.certificate("p1_lambda"), v.certificate("p2_value")));
    });

    run(11, [] {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double bl_min = kInfinity;
        for (int i = 0; i < 50; ++i) {
            MeasureSpec g = random_log_concave(rng);
            double c1 = 2 * u(rng), c2 = u(rng), c3 = 0.3 * u(rng), c4 = 2 * u(rng), mu = 2 * u(rng);
            TestFn f = [=](double x) {
                double e = std::exp(-(x - mu) * (x - mu) / 2);
                return std::pair{c1 * x + c2 * x * x + c3 * x * x * x + c4 * e,
                                 c1 + 2 * c2 * x + 3 * c3 * x * x - c4 * (x - mu) * e};
            };
            bl_min = std::min(bl_min, brascamp_lieb_residual(g, f));
        }
        bool bracket = true;
        for (const auto& m : {MeasureSpec::logistic(), MeasureSpec::gaussian(), MeasureSpec::two_sided_exponential(),
                              MeasureSpec::power_law(4.0)}) {
            RemarkBracket rb = remark_bracket(m);
            double lam = spectral_gap(m);
            bracket = bracket && rb.inf_vpp <= lam + 1e-6 && lam <= rb.mean_vpp + 1e-6;
        }
        // Null mode, symmetry and normalization.
        Grid g = Grid::symmetric(10.0, 501);
        std::vector<double> w, m;
        for (double x : g.nodes()) {
            w.push_back(density(MeasureSpec::logistic(), x));
            m.push_back(1.0 + 0.3 * std::cos(x));
        }
        EigenResult er = solve_smallest(assemble(w, m, g), 1);
        bool null_ok = std::abs(er.eigenvalues[0]) <= 1e-10;
        for (double v : er.eigenvector) null_ok = null_ok && std::abs(v - er.eigenvector[0]) <= 1e-8 * std::abs(er.eigenvector[0]);
        bool sym_ok = true, norm_ok = true;
        for (const auto& ms : {MeasureSpec::logistic(), MeasureSpec::gaussian(), MeasureSpec::two_sided_exponential(),
                               MeasureSpec::power_law(4.0)}) {
            for (double x : {0.3, 1.7, 4.2}) {
                sym_ok = sym_ok && std::abs(density(ms, x) - density(ms, -x)) <= 1e-12 * density(ms, x);
                sym_ok = sym_ok && std::abs(cdf(ms, x) + cdf(ms, -x) - 1.0) <= 1e-10;
            }
            Interval iv = truncation_interval(ms, 1e-12);
            QuadOptions q;
            q.breakpoints = breakpoints(ms);
            norm_ok = norm_ok && std::abs(integrate([&](double x) { return density(ms, x); }, iv.lo, iv.hi, q) - 1.0) <= 1e-9;
        }
        report(11, bl_min >= -1e-8 && bracket && null_ok && sym_ok && norm_ok,
               fmt("Brascamp-Lieb min residual %.3g over 50 cases; ", bl_min) + "remark bracket " +
                   (bracket ? "holds" : "violated") + "; null mode " + (null_ok ? "ok" : "bad") + "; symmetry " +
                   (sym_ok ? "ok" : "bad") + "; normalization " + (norm_ok ? "ok" : "bad"));
    });

    std::printf("%d unexpected failure%s\n", unexpected, unexpected == 1 ? "" : "s");
    return unexpected == 0 ? 0 : 1;
}
