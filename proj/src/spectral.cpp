#include "prodiso/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace prodiso {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Tridiagonal pencil with K = (d, e) and diagonal M.
struct Pencil {
    std::vector<double> d, e, m, c;

    int size() const { return static_cast<int>(d.size()); }

    int count_below(double lambda) const {
        int neg = 0;
        double q = 1.0;
        const int n = size();
        for (int i = 0; i < n; ++i) {
            double a = d[i] - lambda * m[i];
            q = i == 0 ? a : a - e[i - 1] * e[i - 1] / q;
            if (q == 0.0) q = -1e-300;
            if (q < 0.0) ++neg;
        }
        return neg;
    }

    // Solve (K - lambda M) x = r by Gaussian elimination with partial pivoting.
    std::vector<double> solve(double lambda, std::vector<double> b) const {
        const int n = size();
        std::vector<double> dd(n), dl(e), du(e);
        for (int i = 0; i < n; ++i) dd[i] = d[i] - lambda * m[i];
        if (n == 1) {
            b[0] /= dd[0] == 0.0 ? 1e-300 : dd[0];
            return b;
        }
        // Pivots below eps * |K - lambda M| are pushed to that size, so a solve at an
        // exact eigenvalue returns a large but finite vector.
        double scale = 0.0;
        for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(dd[i]) + (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0));
        const double tiny = std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
        auto guard = [tiny](double& p) {
            if (std::abs(p) < tiny) p = p < 0.0 ? -tiny : tiny;
        };
        for (int i = 0; i < n - 1; ++i) {
            if (std::abs(dd[i]) >= std::abs(dl[i])) {
                guard(dd[i]);
                double f = dl[i] / dd[i];
                dd[i + 1] -= f * du[i];
                b[i + 1] -= f * b[i];
                dl[i] = 0.0;
            } else {
                double f = dd[i] / dl[i];
                dd[i] = dl[i];
                double t = dd[i + 1];
                dd[i + 1] = du[i] - f * t;
                if (i < n - 2) {
                    dl[i] = du[i + 1];
                    du[i + 1] = -f * dl[i];
                } else {
                    dl[i] = 0.0;
                }
                du[i] = t;
                double tb = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tb - f * b[i + 1];
            }
        }
        guard(dd[n - 1]);
        b[n - 1] /= dd[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
        for (int i = n - 3; i >= 0; --i) b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / dd[i];
        return b;
    }

    std::vector<double> apply(double lambda, std::span<const double> x) const {
        const int n = size();
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            double s = (d[i] - lambda * m[i]) * x[i];
            if (i > 0) s += e[i - 1] * x[i - 1];
            if (i + 1 < n) s += e[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    double secular(double lambda) const { return dot(c, solve(lambda, c)); }

    // j-th smallest eigenvalue (0-based) by bisection.
    double eigenvalue(int j) const {
        double lo = 0.0, hi = 1.0;
        while (count_below(lo) > j) lo = lo == 0.0 ? -1.0 : 2.0 * lo;
        while (count_below(hi) <= j) {
            hi *= 2.0;
            if (hi > 1e300) return kInfinity;
        }
        for (int it = 0; it < 2000; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (count_below(mid) > j ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    }

    std::vector<double> inverse_iteration(double lambda) const {
        const int n = size();
        std::vector<double> x(n);
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (double& v : x) v = u(rng);
        double shift = lambda + 1e-13 * std::max(1.0, std::abs(lambda));
        for (int it = 0; it < 4; ++it) {
            std::vector<double> mx(n);
            for (int i = 0; i < n; ++i) mx[i] = m[i] * x[i];
            x = solve(shift, mx);
            if (!c.empty()) {
                double s = dot(c, x) / dot(c, c);
                for (int i = 0; i < n; ++i) x[i] -= s * c[i];
            }
            double nx = norm2(x);
            for (double& v : x) v /= nx;
        }
        return x;
    }

    double residual(double lambda, std::span<const double> x) const {
        auto r = apply(lambda, x);
        if (!c.empty()) {
            double s = dot(c, r) / dot(c, c);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s * c[i];
        }
        std::vector<double> mx(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mx[i] = m[i] * x[i];
        double den = norm2(mx);
        return den > 0.0 ? norm2(r) / den : norm2(r);
    }
};

Pencil make_pencil(const EigenProblem& p) {
    Pencil q;
    q.d = p.effective_diag();
    q.e = p.off;
    q.m = p.mass;
    q.c = p.constraint;
    if (!q.c.empty() && norm2(q.c) == 0.0) q.c.clear();
    return q;
}

// Odd vectors on a symmetric grid: u_c = 0, u_{c-j} = -u_{c+j}.
Pencil odd_reduction(const Pencil& f, int c) {
    const int h = c;
    Pencil r;
    r.d.resize(h);
    r.m.resize(h);
    r.e.resize(h > 0 ? h - 1 : 0);
    for (int j = 1; j <= h; ++j) {
        r.d[j - 1] = f.d[c + j] + f.d[c - j];
        r.m[j - 1] = f.m[c + j] + f.m[c - j];
        if (j < h) r.e[j - 1] = f.e[c + j] + f.e[c - j - 1];
    }
    if (!f.c.empty()) {
        std::vector<double> cc(h);
        for (int j = 1; j <= h; ++j) cc[j - 1] = f.c[c + j] - f.c[c - j];
        if (norm2(cc) > 1e-14 * norm2(f.c)) r.c = std::move(cc);
    }
    return r;
}

struct Modes {
    std::vector<double> values;
    std::vector<double> residuals;
    std::vector<double> vector;
};

Modes solve_pencil(const Pencil& p, int k) {
    Modes out;
    const int n = p.size();
    k = std::min(k, n - (p.c.empty() ? 0 : 1));
    if (p.c.empty()) {
        for (int j = 0; j < k; ++j) {
            double lam = p.eigenvalue(j);
            out.values.push_back(lam);
            if (!std::isfinite(lam)) {
                out.residuals.push_back(0.0);
                continue;
            }
            auto x = p.inverse_iteration(lam);
            out.residuals.push_back(p.residual(lam, x));
            if (j == 0) out.vector = std::move(x);
        }
        return out;
    }
    // Constrained inertia: neg(Z^T (K - mu M) Z) = neg(K - mu M) + [g(mu) > 0] - 1.
    auto count_c = [&](double mu) { return p.count_below(mu) + (p.secular(mu) > 0.0 ? 1 : 0) - 1; };
    for (int j = 0; j < k; ++j) {
        double lo = p.eigenvalue(j), hi = p.eigenvalue(j + 1);
        if (!std::isfinite(lo)) {
            out.values.push_back(kInfinity);
            out.residuals.push_back(0.0);
            continue;
        }
        if (!std::isfinite(hi)) hi = lo + std::max(1.0, std::abs(lo)) * 1e6;
        double pad = 1e-6 * std::max({1.0, std::abs(lo), std::abs(hi)});
        lo -= pad;
        hi += pad;
        while (count_c(lo) > j) lo -= 2.0 * (hi - lo);
        while (count_c(hi) <= j) {
            hi += 2.0 * (hi - lo);
            if (hi > 1e300) break;
        }
        if (hi > 1e300) {
            out.values.push_back(kInfinity);
            out.residuals.push_back(0.0);
            continue;
        }
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi || hi - lo <= 4e-16 * std::max(std::abs(lo), std::abs(hi))) break;
            (count_c(mid) > j ? hi : lo) = mid;
        }
        double mu = 0.5 * (lo + hi);
        // Secular vector, or an eigenvector of the pencil already orthogonal to c.
        auto x = p.solve(mu, p.c);
        double nx = norm2(x);
        for (double& v : x) v /= nx;
        double r = p.residual(mu, x);
        auto y = p.inverse_iteration(mu);
        double ry = p.residual(mu, y);
        if (!(r <= ry)) {
            x = std::move(y);
            r = ry;
        }
        out.values.push_back(mu);
        out.residuals.push_back(r);
        if (j == 0) out.vector = std::move(x);
    }
    return out;
}

std::vector<double> checked_theta(std::span<const double> theta) {
    double big = 0.0;
    for (double t : theta) big = std::max(big, std::abs(t));
    std::vector<double> out(theta.begin(), theta.end());
    for (double& t : out) {
        if (t < -1e-12 * std::max(big, 1e-300)) throw Error(ErrorKind::SignedWeight, "theta takes negative values");
        t = std::max(t, 0.0);
    }
    return out;
}

Verdict classify(double value, double margin) {
    if (std::abs(value - 1.0) < margin) return Verdict::Inconclusive;
    return value >= 1.0 ? Verdict::Holds : Verdict::Fails;
}

ConditionResult finish(double value, const ConditionOptions& opts) {
    ConditionResult r;
    r.value = value;
    r.infinite = !std::isfinite(value);
    r.holds = value >= 1.0 - opts.solver_margin;
    r.verdict = r.infinite ? Verdict::Holds : classify(value, opts.solver_margin);
    return r;
}

std::vector<double> sample(const WeightFn& f, const Grid& g) {
    auto xs = g.nodes();
    std::vector<double> v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) v[i] = f(xs[i]);
    return v;
}

double richardson(double coarse, double fine) {
    if (!std::isfinite(coarse) || !std::isfinite(fine)) return fine;
    return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

// ------------------------------------------------------------------- assembly

std::vector<double> EigenProblem::effective_diag() const {
    std::vector<double> d = diag;
    if (shift != 0.0)
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += shift * shift_mass[i];
    return d;
}

nlohmann::json EigenResult::to_json() const {
    nlohmann::json ev = nlohmann::json::array();
    for (double v : eigenvalues) ev.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"));
    return {{"eigenvalues", ev},
            {"residuals", residual_norms},
            {"grid", {{"a", grid.a}, {"b", grid.b}, {"n", grid.n}, {"h", grid.h()}}}};
}

EigenProblem assemble(std::span<const double> w, std::span<const double> m, const Grid& grid) {
    const int n = grid.n;
    if (static_cast<int>(w.size()) != n || static_cast<int>(m.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "weights must have one value per grid node");
    EigenProblem p;
    p.grid = grid;
    p.diag.assign(n, 0.0);
    p.off.assign(n - 1, 0.0);
    p.mass.resize(n);
    const double h = grid.h();
    auto cells = grid.cells();
    for (int i = 0; i < n; ++i) {
        if (w[i] < 0.0 || m[i] < 0.0) throw Error(ErrorKind::SignedWeight, "weights must be nonnegative");
        p.mass[i] = m[i] * cells[i];
    }
    for (int i = 0; i + 1 < n; ++i) {
        double wh = std::sqrt(w[i] * w[i + 1]) / h;
        p.off[i] = -wh;
        p.diag[i] += wh;
        p.diag[i + 1] += wh;
    }
    return p;
}

std::vector<double> mean_zero_constraint(std::span<const double> weights, const Grid& grid) {
    auto cells = grid.cells();
    std::vector<double> c(weights.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = weights[i] * cells[i];
    return c;
}

int sturm_count(const EigenProblem& p, double lambda) { return make_pencil(p).count_below(lambda); }

EigenResult solve_smallest(const EigenProblem& p, int k, Parity parity) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
    Pencil full = make_pencil(p);
    EigenResult res;
    res.grid = p.grid;
    if (parity == Parity::OddOnly) {
        if (!p.grid.is_symmetric()) throw Error(ErrorKind::InvalidArgument, "odd restriction needs a symmetric grid");
        const int c = p.grid.center();
        Modes md = solve_pencil(odd_reduction(full, c), k);
        res.eigenvalues = md.values;
        res.residual_norms = md.residuals;
        if (!md.vector.empty()) {
            res.eigenvector.assign(p.grid.n, 0.0);
            for (int j = 1; j <= c; ++j) {
                res.eigenvector[c + j] = md.vector[j - 1];
                res.eigenvector[c - j] = -md.vector[j - 1];
            }
        }
    } else {
        Modes md = solve_pencil(full, k);
        res.eigenvalues = md.values;
        res.residual_norms = md.residuals;
        res.eigenvector = md.vector;
    }
    for (double r : res.residual_norms)
        if (!(r <= 1e-6)) throw Error(ErrorKind::NoConvergence, "eigenpair residual too large");
    return res;
}

// --------------------------------------------------------------- spectral gap

nlohmann::json GapReport::to_json() const {
    return {{"lambda", lambda}, {"lambda_raw", lambda_raw}, {"b", b}, {"n", n}, {"b_extrapolated", b_extrapolated}};
}

GapReport spectral_gap_report(const MeasureSpec& m, const SpectralOptions& opts) {
    double b = opts.b > 0.0 ? opts.b : truncation_interval(m, opts.tail_mass).hi;
    auto gap_at = [&](double bb, int nn) {
        Grid g = Grid::symmetric(bb, nn);
        auto w = tabulate(m, g).values;
        EigenProblem p = assemble(w, w, g);
        p.constraint = mean_zero_constraint(w, g);
        return solve_smallest(p, 1).eigenvalues.front();
    };
    auto gap_h = [&](double bb, int nn) {
        double coarse = gap_at(bb, nn);
        return std::pair{coarse, opts.richardson ? richardson(coarse, gap_at(bb, 2 * nn - 1)) : coarse};
    };
    bool extrap = opts.extrapolate_b == 1;
    if (opts.extrapolate_b < 0) {
        // Exponential-type tails: psi' stays bounded, so the truncation error decays like 1/b^2.
        double s1 = std::abs(eval_log_density(m, b, 1).dpsi);
        double s2 = std::abs(eval_log_density(m, 2.0 * b, 1).dpsi);
        extrap = s2 <= 1.5 * s1;
    }
    GapReport rep;
    rep.b = b;
    rep.n = opts.n;
    auto [raw, lam_b] = gap_h(b, opts.n);
    rep.lambda_raw = raw;
    rep.lambda = lam_b;
    if (extrap) {
        double lam_2b = gap_h(2.0 * b, 2 * opts.n - 1).second;
        rep.lambda = (4.0 * lam_2b - lam_b) / 3.0;
        rep.b_extrapolated = true;
    }
    return rep;
}

double spectral_gap(const MeasureSpec& m, const SpectralOptions& opts) { return spectral_gap_report(m, opts).lambda; }

// ------------------------------------------------------------ (P1) and (P2)

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Holds: return "holds";
        case Verdict::Fails: return "fails";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

double p1_value(std::span<const double> nu, std::span<const double> theta, const Grid& grid, Parity parity) {
    auto th = checked_theta(theta);
    std::vector<double> tn(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) tn[i] = th[i] * nu[i];
    auto cells = grid.cells();
    double tmass = 0.0;
    for (std::size_t i = 0; i < tn.size(); ++i) tmass += tn[i] * cells[i];
    if (tmass < 1e-14) return kInfinity;
    EigenProblem p = assemble(nu, tn, grid);
    p.constraint = mean_zero_constraint(nu, grid);
    return solve_smallest(p, 1, parity).eigenvalues.front();
}

double p2_value(std::span<const double> nu, std::span<const double> theta, double lambda_tau, const Grid& grid,
                Parity parity) {
    if (lambda_tau < 0.0) throw Error(ErrorKind::InvalidArgument, "lambda_tau must be nonnegative");
    auto th = checked_theta(theta);
    std::vector<double> tn(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) tn[i] = th[i] * nu[i];
    auto cells = grid.cells();
    double tmass = 0.0;
    for (std::size_t i = 0; i < tn.size(); ++i) tmass += tn[i] * cells[i];
    if (tmass < 1e-14) return kInfinity;
    EigenProblem p = assemble(nu, tn, grid);
    p.shift = lambda_tau;
    p.shift_mass = mean_zero_constraint(nu, grid);
    return solve_smallest(p, 1, parity).eigenvalues.front();
}

}  // namespace

ConditionResult check_P1(std::span<const double> nu, std::span<const double> theta, const Grid& grid,
                         const ConditionOptions& opts) {
    if (nu.size() != theta.size() || static_cast<int>(nu.size()) != grid.n)
        throw Error(ErrorKind::DimensionMismatch, "weights must have one value per grid node");
    return finish(p1_value(nu, theta, grid, opts.parity), opts);
}

ConditionResult check_P2(std::span<const double> nu, std::span<const double> theta, double lambda_tau,
                         const Grid& grid, const ConditionOptions& opts) {
    if (nu.size() != theta.size() || static_cast<int>(nu.size()) != grid.n)
        throw Error(ErrorKind::DimensionMismatch, "weights must have one value per grid node");
    return finish(p2_value(nu, theta, lambda_tau, grid, opts.parity), opts);
}

ConditionResult check_P1(const WeightFn& nu, const WeightFn& theta, const Grid& grid, const ConditionOptions& opts) {
    Grid fine = grid.refined();
    double coarse = p1_value(sample(nu, grid), sample(theta, grid), grid, opts.parity);
    double f = p1_value(sample(nu, fine), sample(theta, fine), fine, opts.parity);
    return finish(richardson(coarse, f), opts);
}

ConditionResult check_P2(const WeightFn& nu, const WeightFn& theta, double lambda_tau, const Grid& grid,
                         const ConditionOptions& opts) {
    Grid fine = grid.refined();
    double coarse = p2_value(sample(nu, grid), sample(theta, grid), lambda_tau, grid, opts.parity);
    double f = p2_value(sample(nu, fine), sample(theta, fine), lambda_tau, fine, opts.parity);
    return finish(richardson(coarse, f), opts);
}

// ------------------------------------------------------------ Brascamp-Lieb

double brascamp_lieb_residual(const MeasureSpec& g, const TestFn& u) {
    Interval iv = truncation_interval(g, 1e-14);
    for (double x : golden_samples(iv.lo, iv.hi, 1001)) {
        double gpp = 0.0;
        try {
            gpp = -eval_log_density(g, x, 2).ddpsi;
        } catch (const Error&) {
            throw Error(ErrorKind::NonConvexPotential, "potential is not twice differentiable");
        }
        if (!(gpp > 0.0)) throw Error(ErrorKind::NonConvexPotential, "g'' <= 0 at a sampled point");
    }
    QuadOptions q;
    q.rel_tol = 1e-12;
    q.abs_tol = 1e-300;
    q.breakpoints = breakpoints(g);
    q.breakpoints.push_back(0.0);
    double mass = integrate([&](double x) { return density(g, x); }, iv.lo, iv.hi, q);
    double mu = integrate([&](double x) { return u(x).first * density(g, x); }, iv.lo, iv.hi, q) / mass;
    double var = integrate(
                     [&](double x) {
                         double d = u(x).first - mu;
                         return d * d * density(g, x);
                     },
                     iv.lo, iv.hi, q) /
                 mass;
    double rhs = integrate(
                     [&](double x) {
                         LogDensity ld = eval_log_density(g, x, 2);
                         double du = u(x).second;
                         return du * du * std::exp(ld.psi) / -ld.ddpsi;
                     },
                     iv.lo, iv.hi, q) /
                 mass;
    return rhs - var;
}

RemarkBracket remark_bracket(const MeasureSpec& m) {
    RemarkBracket rb;
    Interval iv = truncation_interval(m, 1e-12);
    rb.inf_vpp = kInfinity;
    Grid g = Grid::symmetric(iv.hi, 4001);
    for (double x : g.nodes()) {
        if (!m.is_c2() && x == 0.0) continue;
        rb.inf_vpp = std::min(rb.inf_vpp, -eval_log_density(m, x, 2).ddpsi);
    }
    QuadOptions q;
    q.rel_tol = 1e-11;
    q.abs_tol = 1e-300;
    q.breakpoints = breakpoints(m);
    rb.mean_vpp = integrate(
        [&](double x) {
            if (!m.is_c2() && x == 0.0) return 0.0;
            LogDensity ld = eval_log_density(m, x, 2);
            return -ld.ddpsi * std::exp(ld.psi);
        },
        iv.lo, iv.hi, q);
    if (m.kind() == Kind::TwoSidedExponential) {
        // V = |x| / s has V'' = (2/s) delta_0 in the distributional sense.
        rb.mean_vpp += 2.0 / m.scale() * density(m, 0.0);
        rb.inf_vpp = 0.0;
    }
    return rb;
}

// ------------------------------------------------------------ 2-D oracle

TensorOracleResult tensor_oracle_2d(std::span<const double> nu, std::span<const double> tau,
                                    std::span<const double> theta, const Grid& grid, const OracleOptions& opts) {
    const int n = grid.n;
    if (n > opts.max_nodes) throw Error(ErrorKind::OutOfBudget, "product grid exceeds the dense oracle budget");
    if (static_cast<int>(nu.size()) != n || static_cast<int>(tau.size()) != n ||
        static_cast<int>(theta.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "weights must have one value per grid node");

    TensorOracleResult res;
    ConditionOptions co;
    co.solver_margin = 0.0;
    EigenProblem pt = assemble(tau, tau, grid);
    pt.constraint = mean_zero_constraint(tau, grid);
    res.lambda_tau = solve_smallest(pt, 1).eigenvalues.front();
    res.p1_lambda = check_P1(nu, theta, grid, co).value;
    res.p2_value = check_P2(nu, theta, res.lambda_tau, grid, co).value;

    auto th = checked_theta(theta);
    EigenProblem pn = assemble(nu, nu, grid);
    auto cells = grid.cells();
    std::vector<double> mt(n), mn(n), mth(n);
    double tmass = 0.0;
    for (int i = 0; i < n; ++i) {
        mt[i] = tau[i] * cells[i];
        mn[i] = nu[i] * cells[i];
        mth[i] = th[i] * nu[i] * cells[i];
        tmass += mth[i];
    }
    double split = std::min(res.p1_lambda, res.p2_value);
    res.holds_split = split >= 1.0;
    if (tmass < 1e-14) {
        res.lambda_2d = kInfinity;
        res.holds_2d = true;
        res.agrees = true;
        return res;
    }

    const int N = n * n;
    auto idx = [n](int i, int j) { return i * n + j; };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * N);
    Eigen::VectorXd m2(N), c2(N);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            int k = idx(i, j);
            trip.emplace_back(k, k, pt.diag[i] * mn[j] + mt[i] * pn.diag[j]);
            if (i + 1 < n) {
                double v = pt.off[i] * mn[j];
                trip.emplace_back(k, idx(i + 1, j), v);
                trip.emplace_back(idx(i + 1, j), k, v);
            }
            if (j + 1 < n) {
                double v = mt[i] * pn.off[j];
                trip.emplace_back(k, idx(i, j + 1), v);
                trip.emplace_back(idx(i, j + 1), k, v);
            }
            m2[k] = mt[i] * mth[j];
            c2[k] = mt[i] * mn[j];
        }
    }
    Eigen::SparseMatrix<double> K(N, N);
    K.setFromTriplets(trip.begin(), trip.end());
    // Pin node 0: K restricted to the remaining nodes is positive definite.
    Eigen::SparseMatrix<double> Kr = K.bottomRightCorner(N - 1, N - 1);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kr);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "2-D stiffness factorization failed");
    const double csum = c2.sum();

    // T y = x with K x = M y + mu c, c^T x = 0.
    auto apply_T = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd r = m2.cwiseProduct(y);
        double mu = -r.sum() / csum;
        r += mu * c2;
        Eigen::VectorXd x(N);
        x[0] = 0.0;
        x.tail(N - 1) = ldlt.solve(r.tail(N - 1));
        x.array() -= c2.dot(x) / csum;
        return x;
    };
    auto kdot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(K * b); };

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    Eigen::VectorXd v(N);
    for (int k = 0; k < N; ++k) v[k] = ud(rng);
    v = apply_T(v);
    v /= std::sqrt(kdot(v, v));

    const int maxit = std::min(opts.max_iter, N - 1);
    std::vector<Eigen::VectorXd> Q{v};
    std::vector<double> alpha, beta;
    double theta_max = 0.0, prev = -1.0;
    Eigen::VectorXd ritz;
    for (int it = 0; it < maxit; ++it) {
        Eigen::VectorXd w = apply_T(Q.back());
        double a = kdot(w, Q.back());
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : Q) w -= kdot(w, q) * q;
        double b = std::sqrt(std::max(kdot(w, w), 0.0));
        const int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta_max = es.eigenvalues()[m - 1];
        double resid = std::abs(b * es.eigenvectors()(m - 1, m - 1));
        if (resid <= 1e-12 * std::abs(theta_max) || b <= 1e-300 ||
            (it > 5 && std::abs(theta_max - prev) <= 1e-14 * std::abs(theta_max))) {
            ritz = Eigen::VectorXd::Zero(N);
            for (int i = 0; i < m; ++i) ritz += es.eigenvectors()(i, m - 1) * Q[i];
            break;
        }
        prev = theta_max;
        beta.push_back(b);
        Q.push_back(w / b);
        if (it + 1 == maxit) {
            ritz = Eigen::VectorXd::Zero(N);
            for (int i = 0; i < m; ++i) ritz += es.eigenvectors()(i, m - 1) * Q[i];
        }
    }
    res.lambda_2d = theta_max > 0.0 ? 1.0 / theta_max : kInfinity;
    res.holds_2d = res.lambda_2d >= 1.0;
    bool same = res.holds_2d == res.holds_split;
    double diff = std::isfinite(split) ? std::abs(res.lambda_2d - split) : 0.0;
    res.agrees = same || diff <= opts.tolerance;
    if (!res.agrees || !same) res.witness.assign(ritz.data(), ritz.data() + ritz.size());
    return res;
}

}  // namespace prodiso
