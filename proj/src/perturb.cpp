#include "prodiso/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "prodiso/spectral.hpp"

namespace prodiso {

namespace {

void require_even(const BumpFunction& b) {
    double r = b.support_radius();
    if (r == 0.0) return;
    double scale = 0.0, asym = 0.0;
    for (double x : golden_samples(0.0, r, 400)) {
        scale = std::max(scale, std::abs(b.value(x)));
        asym = std::max(asym, std::abs(b.value(x) - b.value(-x)));
    }
    if (asym > 1e-14 * std::max(scale, 1e-300)) throw Error(ErrorKind::NonEvenBump, "bump is not even");
}

// Atom by atom, so the result is linear in the coefficients up to rounding.
double weighted(const BumpFunction& b, const std::function<double(double)>& kernel) {
    QuadOptions q;
    q.rel_tol = 1e-10;
    q.abs_tol = 1e-300;
    double total = 0.0;
    for (std::size_t j = 0; j < b.atoms().size(); ++j) {
        double c = b.coefficients()[j];
        if (c == 0.0) continue;
        const Atom& a = b.atoms()[j];
        BumpFunction single({a}, {1.0});
        double r = single.support_radius();
        q.breakpoints = single.breakpoints();
        total += c * integrate([&](double x) { return BumpFunction::atom_value(a, x) * kernel(x); }, -r, r, q);
    }
    return total;
}

double richardson(double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; }

// a = 1 - min over u of (int u'^2 nu + int u^2 (1 - theta) nu) / int u^2 nu.
double a_value(const BoundaryData& bd, const Grid& g) {
    auto xs = g.nodes();
    std::vector<double> nu(xs.size()), th(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        nu[i] = bd.nu(xs[i]);
        th[i] = bd.theta(xs[i]);
    }
    EigenProblem p = assemble(nu, nu, g);
    auto cells = g.cells();
    for (std::size_t i = 0; i < xs.size(); ++i) p.diag[i] += (1.0 - th[i]) * nu[i] * cells[i];
    return 1.0 - solve_smallest(p, 1).eigenvalues.front();
}

}  // namespace

nlohmann::json Slopes::to_json() const {
    return {{"lambda_dot", lambda_dot}, {"k_dot", k_dot}, {"a_dot", a_dot}};
}

Slopes perturbation_slopes(const BumpFunction& bump) {
    require_even(bump);
    const double pi = std::numbers::pi;
    Slopes s;
    s.lambda_dot = weighted(bump, [](double x) { return (x * x - 1.0) * std::exp(-0.5 * x * x); }) /
                   std::sqrt(2.0 * pi);
    s.k_dot = 2.0 / std::sqrt(pi) * weighted(bump, [](double x) {
                  double x2 = x * x;
                  return (-4.0 * x2 * x2 + 12.0 * x2 - 3.0) * std::exp(-x2);
              });
    s.a_dot = 2.0 / std::sqrt(pi) * weighted(bump, [](double x) { return (2.0 * x * x - 1.0) * std::exp(-x * x); });
    return s;
}

std::pair<double, double> design_functionals(const BumpFunction& bump) {
    Slopes s = perturbation_slopes(bump);
    return {s.k_dot, s.lambda_dot - s.a_dot};
}

PerturbedValues perturbed_values(const BumpFunction& bump, double eps, const PerturbOptions& opts) {
    require_even(bump);
    MeasureSpec m = MeasureSpec::gaussian_bump(eps, bump);
    double r = bump.support_radius();
    for (int i = 0; i <= 8000 && r > 0.0; ++i) {
        double x = -r + 2.0 * r * i / 8000.0;
        if (!(1.0 + eps * bump.d2(x) > 0.0))
            throw Error(ErrorKind::HypothesisViolated, "v_eps'' <= 0: epsilon too large for this bump");
    }
    PerturbedValues pv;
    pv.eps = eps;
    double b = truncation_interval(m, opts.tail_mass).hi;
    SpectralOptions so;
    so.b = b;
    so.n = Grid::symmetric_spacing(b, opts.h).n;
    so.extrapolate_b = 0;
    pv.lambda = spectral_gap(m, so);

    StabilityOptions st;
    st.tail_mass = opts.tail_mass;
    BoundaryData bd = boundary_data(m, -1.0, 0.0, st);
    bd.grid = Grid::symmetric_spacing(bd.grid.b, opts.h);
    ConditionOptions co;
    co.solver_margin = 0.0;
    pv.k = check_P1(bd.nu, bd.theta, bd.grid, co).value;
    pv.a = richardson(a_value(bd, bd.grid), a_value(bd, bd.grid.refined()));
    return pv;
}

nlohmann::json PerturbationReport::to_json() const {
    nlohmann::json vals = nlohmann::json::array();
    for (const auto& v : values) vals.push_back({{"eps", v.eps}, {"lambda", v.lambda}, {"k", v.k}, {"a", v.a}});
    return {{"slopes", slopes.to_json()},
            {"fd_slopes", fd_slopes.to_json()},
            {"epsilons", epsilons},
            {"values", vals},
            {"baseline", {{"lambda", baseline.lambda}, {"k", baseline.k}, {"a", baseline.a}}},
            {"feasible", feasible},
            {"max_rel_error", max_rel_error}};
}

PerturbationReport finite_diff_validate(const BumpFunction& bump, const std::vector<double>& eps_list,
                                        const PerturbOptions& opts) {
    if (eps_list.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one epsilon");
    PerturbationReport rep;
    rep.slopes = perturbation_slopes(bump);
    rep.feasible = rep.slopes.k_dot > 0.0 && rep.slopes.lambda_dot > rep.slopes.a_dot;
    rep.epsilons = eps_list;
    rep.baseline = perturbed_values(bump, 0.0, opts);

    std::map<double, PerturbedValues> by_eps;
    for (double e : eps_list) {
        if (e == 0.0) continue;
        by_eps[e] = perturbed_values(bump, e, opts);
        rep.values.push_back(by_eps[e]);
    }
    // Central differences per magnitude, then Richardson across the two smallest.
    std::vector<std::pair<double, Slopes>> central;
    for (const auto& [e, v] : by_eps) {
        if (e <= 0.0 || !by_eps.count(-e)) continue;
        const PerturbedValues& w = by_eps[-e];
        central.push_back({e, {(v.lambda - w.lambda) / (2 * e), (v.k - w.k) / (2 * e), (v.a - w.a) / (2 * e)}});
    }
    if (central.empty()) {
        // One-sided differences against the baseline.
        const auto& [e, v] = *by_eps.begin();
        rep.fd_slopes = {(v.lambda - rep.baseline.lambda) / e, (v.k - rep.baseline.k) / e, (v.a - rep.baseline.a) / e};
    } else if (central.size() == 1) {
        rep.fd_slopes = central.front().second;
    } else {
        auto [e1, d1] = central[0];
        auto [e2, d2] = central[1];
        double w1 = e2 * e2, w2 = e1 * e1, den = w1 - w2;
        rep.fd_slopes = {(w1 * d1.lambda_dot - w2 * d2.lambda_dot) / den, (w1 * d1.k_dot - w2 * d2.k_dot) / den,
                         (w1 * d1.a_dot - w2 * d2.a_dot) / den};
    }
    auto rel = [](double fd, double an) { return std::abs(fd - an) / (std::abs(an) + 1e-6); };
    rep.max_rel_error = std::max({rel(rep.fd_slopes.lambda_dot, rep.slopes.lambda_dot),
                                  rel(rep.fd_slopes.k_dot, rep.slopes.k_dot), rel(rep.fd_slopes.a_dot, rep.slopes.a_dot)});
    return rep;
}

std::vector<Atom> default_design_basis() {
    std::vector<Atom> basis;
    for (double w : {1.0, 2.0, 3.0, 4.0})
        for (int i = 0; i <= 12; ++i) basis.push_back({0.5 * i, w, true});
    return basis;
}

DesignResult design_bump(const std::vector<Atom>& basis, int budget, const DesignOptions& opts) {
    if (basis.empty()) throw Error(ErrorKind::InfeasibleBasis, "empty basis");
    if (static_cast<int>(basis.size()) > budget) throw Error(ErrorKind::OutOfBudget, "basis larger than the atom budget");
    const int k = static_cast<int>(basis.size());
    const double target = std::max(opts.target, opts.delta);
    Eigen::MatrixXd F(2, k);
    for (int j = 0; j < k; ++j) {
        BumpFunction single({basis[j]}, {1.0});
        auto [kd, gap] = design_functionals(single);
        F(0, j) = kd;
        F(1, j) = gap;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F);
    const auto sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    if (!(smax > 0.0)) throw Error(ErrorKind::InfeasibleBasis, "basis gives zero functionals");

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
    if (sv.size() < 2 || sv[1] <= 1e-10 * smax) {
        // Rank one: a single atom direction must already move both functionals the same way.
        int best = -1;
        double best_min = 0.0;
        for (int j = 0; j < k; ++j) {
            double lo = std::min(F(0, j), F(1, j)), hi = std::max(F(0, j), F(1, j));
            double gain = lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0);
            if (gain > best_min) {
                best_min = gain;
                best = j;
            }
        }
        if (best < 0 || best_min <= 1e-12 * smax)
            throw Error(ErrorKind::InfeasibleBasis, "functionals have opposite signs on every atom");
        coef[best] = (F(0, best) > 0.0 ? 1.0 : -1.0) * target / best_min;
    } else {
        // Minimum-norm solution of F c = (target, target). The norm weights b'' where the
        // Gaussian lives, which keeps the second-order terms of k(eps) small.
        double r = 0.0;
        for (const auto& a : basis) r = std::max(r, std::abs(a.center) + a.width);
        const int ns = 4001;
        const double hx = 2.0 * r / (ns - 1);
        const double reg = 3e-3;
        Eigen::MatrixXd B0(ns, k), B2(ns, k);
        Eigen::VectorXd w2(ns);
        for (int i = 0; i < ns; ++i) {
            double x = -r + hx * i;
            w2[i] = hx * (reg + (1.0 + x * x) * std::exp(-x * x));
            for (int j = 0; j < k; ++j) {
                B0(i, j) = BumpFunction::atom_value(basis[j], x);
                B2(i, j) = BumpFunction::atom_d2(basis[j], x);
            }
        }
        Eigen::MatrixXd Q = reg * hx * (B0.transpose() * B0) + B2.transpose() * w2.asDiagonal() * B2;
        Q.diagonal().array() += 1e-12 * Q.trace() / k;
        Eigen::MatrixXd QiFt = Q.ldlt().solve(F.transpose());
        Eigen::Matrix2d S = F * QiFt;
        coef = QiFt * S.fullPivLu().solve(Eigen::Vector2d(target, target));
    }
    DesignResult out;
    std::vector<double> cv(coef.data(), coef.data() + k);
    out.bump = BumpFunction(basis, cv);
    out.max_abs_d2 = out.bump.max_abs_d2();
    out.report.slopes = perturbation_slopes(out.bump);
    const Slopes& s = out.report.slopes;
    out.report.feasible = s.k_dot >= opts.delta && s.lambda_dot - s.a_dot >= opts.delta;
    if (!out.report.feasible) throw Error(ErrorKind::InfeasibleBasis, "no coefficient choice meets the slack");
    return out;
}

}  // namespace prodiso
