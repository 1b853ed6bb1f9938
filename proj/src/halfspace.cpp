#include "prodiso/halfspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>

namespace prodiso {

namespace {

double ddpsi(const MeasureSpec& m, double x) { return eval_log_density(m, x, 2).ddpsi; }

void require_c2(const MeasureSpec& m) {
    if (!m.is_c2()) throw Error(ErrorKind::HypothesisViolated, "measure '" + m.name() + "' is not C^2");
}

struct Spread {
    double lo = kInfinity, hi = -kInfinity, mean = 0.0;
    double width() const { return hi - lo; }
};

Spread ddpsi_spread(const MeasureSpec& m, const std::vector<double>& xs) {
    Spread s;
    for (double x : xs) {
        double v = ddpsi(m, x);
        s.lo = std::min(s.lo, v);
        s.hi = std::max(s.hi, v);
        s.mean += v;
    }
    s.mean /= static_cast<double>(xs.size());
    return s;
}

bool gaussian_like(const Spread& s) { return s.width() <= 1e-8 * (1.0 + std::abs(s.mean)); }

bool same_law(const MeasureSpec& a, const MeasureSpec& b) {
    Interval iv = truncation_interval(a, 1e-12);
    for (double x : golden_samples(iv.lo, iv.hi, 200)) {
        double pa = eval_log_density(a, x, 0).psi;
        double pb = eval_log_density(b, x, 0).psi;
        if (std::abs(pa - pb) > 1e-12 * (1.0 + std::abs(pa))) return false;
    }
    return true;
}

// Additive recurrence in d dimensions (generalized golden ratio).
std::vector<double> rd_alphas(int d) {
    double phi = 2.0;
    for (int i = 0; i < 60; ++i) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
    std::vector<double> a(d);
    for (int k = 0; k < d; ++k) a[k] = std::fmod(std::pow(1.0 / phi, k + 1), 1.0);
    return a;
}

StabilityTag tag_from(const std::vector<double>& margins, double sm) {
    bool all_pos = true;
    for (double m : margins) {
        if (m <= -sm) return StabilityTag::Unstable;
        if (m < sm) all_pos = false;
    }
    return all_pos ? StabilityTag::Stable : StabilityTag::Inconclusive;
}

}  // namespace

// ----------------------------------------------------------------- HalfSpace

HalfSpace HalfSpace::make(std::vector<double> v, double t) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "direction must be nonzero");
    for (double& x : v) x /= s;
    return {std::move(v), t};
}

HalfSpace HalfSpace::coordinate(int dim, int axis, double t) {
    if (axis < 0 || axis >= dim) throw Error(ErrorKind::DimensionMismatch, "axis out of range");
    std::vector<double> v(dim, 0.0);
    v[axis] = 1.0;
    return {std::move(v), t};
}

HalfSpace HalfSpace::bisector(int dim, int sign, double t) {
    if (dim < 2) throw Error(ErrorKind::DimensionMismatch, "bisector needs dim >= 2");
    std::vector<double> v(dim, 0.0);
    v[0] = std::numbers::sqrt2 / 2.0;
    v[1] = sign >= 0 ? v[0] : -v[0];
    return {std::move(v), t};
}

std::vector<int> HalfSpace::support() const {
    std::vector<int> s;
    for (int i = 0; i < dim(); ++i)
        if (std::abs(v[i]) > 1e-14) s.push_back(i);
    return s;
}

const char* tag_name(StationarityTag t) {
    switch (t) {
        case StationarityTag::Coordinate: return "Coordinate";
        case StationarityTag::TwoComponentMatched: return "TwoComponentMatched";
        case StationarityTag::GaussianAll: return "GaussianAll";
        case StationarityTag::PeriodicMinus: return "PeriodicMinus";
        case StationarityTag::SymmetricPlus: return "SymmetricPlus";
        case StationarityTag::NotStationary: return "NotStationary";
    }
    return "?";
}

const char* tag_name(StabilityTag t) {
    switch (t) {
        case StabilityTag::Stable: return "Stable";
        case StabilityTag::Unstable: return "Unstable";
        case StabilityTag::Inconclusive: return "Inconclusive";
    }
    return "?";
}

nlohmann::json StationarityVerdict::to_json() const {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [k, v] : details) d[k] = v;
    nlohmann::json j = {{"tag", tag_name(tag)}, {"residual", residual}, {"details", d}};
    if (tag == StationarityTag::NotStationary) j["violating_x"] = violating_x;
    return j;
}

double StabilityVerdict::certificate(const std::string& name) const {
    for (const auto& [k, v] : certificates)
        if (k == name) return v;
    throw Error(ErrorKind::InvalidArgument, "no certificate named " + name);
}

nlohmann::json StabilityVerdict::to_json() const {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [k, v] : certificates) c[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf");
    return {{"tag", tag_name(tag)}, {"certificates", c}, {"at_threshold", at_threshold}};
}

// --------------------------------------------------------------- stationarity

StationarityVerdict classify_stationary(const std::vector<MeasureSpec>& measures, const HalfSpace& hs, double tol) {
    if (static_cast<int>(measures.size()) != hs.dim() || hs.dim() < 2)
        throw Error(ErrorKind::DimensionMismatch, "need one measure per coordinate and dim >= 2");
    StationarityVerdict out;
    auto supp = hs.support();
    if (supp.size() == 1) {
        out.tag = StationarityTag::Coordinate;
        out.details = {{"axis", supp[0]}, {"offset", hs.t / hs.v[supp[0]]}};
        return out;
    }
    for (int i : supp) require_c2(measures[i]);

    std::vector<Spread> spreads;
    bool all_gauss = true;
    for (int i : supp) {
        Interval iv = truncation_interval(measures[i], 1e-12);
        spreads.push_back(ddpsi_spread(measures[i], golden_samples(iv.lo, iv.hi, 1000)));
        all_gauss = all_gauss && gaussian_like(spreads.back());
    }
    if (all_gauss) {
        double lo = kInfinity, hi = -kInfinity, mean = 0.0;
        for (const auto& s : spreads) {
            lo = std::min(lo, s.mean);
            hi = std::max(hi, s.mean);
            mean += s.mean / spreads.size();
        }
        if (hi - lo <= 1e-8 * (1.0 + std::abs(mean))) {
            out.tag = StationarityTag::GaussianAll;
            out.residual = hi - lo;
            out.details = {{"variance", -1.0 / mean}};
            return out;
        }
    }
    if (supp.size() >= 3) {
        out.tag = StationarityTag::NotStationary;
        for (const auto& s : spreads) out.residual = std::max(out.residual, s.width());
        if (all_gauss) out.residual = std::max(out.residual, 1e-8);
        return out;
    }

    // Two nonzero components: psi_i''(x) = psi_j''(tau - alpha x).
    const int i = supp[0], j = supp[1];
    const MeasureSpec& mi = measures[i];
    const MeasureSpec& mj = measures[j];
    const double alpha = hs.v[i] / hs.v[j];
    const double tau = hs.t / hs.v[j];
    Interval ii = truncation_interval(mi, 1e-12);
    Interval ij = truncation_interval(mj, 1e-12);
    double scale = 1.0;
    for (const auto& s : spreads) scale = std::max({scale, std::abs(s.lo), std::abs(s.hi)});
    for (double x : golden_samples(ii.lo, ii.hi, 1000)) {
        double y = tau - alpha * x;
        if (y < ij.lo || y > ij.hi) continue;
        double d = std::abs(ddpsi(mi, x) - ddpsi(mj, y));
        if (d > out.residual) {
            out.residual = d;
            out.violating_x = x;
        }
    }
    out.details = {{"tau", tau}, {"alpha", alpha}};
    const bool identical = same_law(mi, mj);
    const bool unit = std::abs(std::abs(alpha) - 1.0) <= 1e-12;
    if ((identical && !unit) || out.residual > tol * scale) {
        out.tag = StationarityTag::NotStationary;
        if (out.residual <= tol * scale) out.residual = std::abs(std::abs(alpha) - 1.0);
        return out;
    }
    if (identical && alpha < 0.0) {
        out.tag = StationarityTag::PeriodicMinus;
        out.details.emplace_back("period", std::abs(tau));
    } else if (identical) {
        out.tag = StationarityTag::SymmetricPlus;
        out.details.emplace_back("center", 0.5 * tau);
    } else {
        out.tag = StationarityTag::TwoComponentMatched;
    }
    return out;
}

double mean_curvature_residual(const std::vector<MeasureSpec>& measures, const HalfSpace& hs, int samples) {
    if (static_cast<int>(measures.size()) != hs.dim())
        throw Error(ErrorKind::DimensionMismatch, "need one measure per coordinate");
    if (samples < 2) throw Error(ErrorKind::InvalidArgument, "samples must be >= 2");
    auto supp = hs.support();
    if (supp.size() <= 1) return 0.0;
    int ref = supp[0];
    for (int k : supp)
        if (std::abs(hs.v[k]) > std::abs(hs.v[ref])) ref = k;
    std::vector<int> free;
    for (int k : supp)
        if (k != ref) free.push_back(k);
    std::vector<Interval> ivs;
    for (int k : free) ivs.push_back(truncation_interval(measures[k], 1e-8));
    Interval iref = truncation_interval(measures[ref], 1e-8);
    auto alphas = rd_alphas(static_cast<int>(free.size()));
    std::vector<double> u(free.size(), 0.5);
    double lo = kInfinity, hi = -kInfinity;
    for (int s = 0; s < samples * 4 && s < 100 * samples; ++s) {
        double acc = 0.0, h = 0.0;
        for (std::size_t q = 0; q < free.size(); ++q) {
            u[q] += alphas[q];
            u[q] -= std::floor(u[q]);
            double x = ivs[q].lo + u[q] * (ivs[q].hi - ivs[q].lo);
            acc += hs.v[free[q]] * x;
            h -= eval_log_density(measures[free[q]], x, 1).dpsi * hs.v[free[q]];
        }
        double xr = (hs.t - acc) / hs.v[ref];
        if (xr < iref.lo || xr > iref.hi) continue;
        h -= eval_log_density(measures[ref], xr, 1).dpsi * hs.v[ref];
        lo = std::min(lo, h);
        hi = std::max(hi, h);
    }
    return hi >= lo ? hi - lo : 0.0;
}

// ------------------------------------------------------------------ stability

StabilityVerdict coordinate_stability(const MeasureSpec& m, double t, const StabilityOptions& opts) {
    double lam = opts.lambda >= 0.0 ? opts.lambda : spectral_gap(m, opts.spectral);
    double neg = -ddpsi(m, t);
    double margin = lam - neg;
    StabilityVerdict out;
    out.certificates = {{"lambda", lam}, {"neg_ddpsi", neg}, {"margin", margin}};
    out.tag = tag_from({margin}, opts.solver_margin);
    if (m.is_gaussian() && out.tag == StabilityTag::Inconclusive) {
        // -psi'' equals the gap identically: every half-space is a minimizer.
        out.tag = StabilityTag::Stable;
        out.at_threshold = true;
    }
    return out;
}

std::vector<Interval> coordinate_stable_region(const MeasureSpec& m, const StabilityOptions& opts) {
    require_c2(m);
    if (m.is_gaussian()) return {{-kInfinity, kInfinity}};
    double lam = opts.lambda >= 0.0 ? opts.lambda : spectral_gap(m, opts.spectral);
    Interval iv = truncation_interval(m, opts.tail_mass);
    auto s = [&](double t) { return lam + ddpsi(m, t); };
    const int n = 4001;
    Grid g(iv.lo, iv.hi, n);
    auto xs = g.nodes();
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = s(xs[i]);

    std::vector<Interval> out;
    bool inside = vals[0] >= 0.0;
    double start = -kInfinity;
    auto root = [&](double a, double b) {
        std::uintmax_t it = 200;
        auto r = boost::math::tools::toms748_solve(s, a, b, boost::math::tools::eps_tolerance<double>(50), it);
        return 0.5 * (r.first + r.second);
    };
    for (int i = 1; i < n; ++i) {
        bool now = vals[i] >= 0.0;
        if (now == inside) continue;
        double r = (vals[i - 1] == 0.0) ? xs[i - 1] : (vals[i] == 0.0 ? xs[i] : root(xs[i - 1], xs[i]));
        if (inside) out.push_back({start, r});
        else start = r;
        inside = now;
    }
    if (inside) out.push_back({start, kInfinity});
    return out;
}

BoundaryData boundary_data(const MeasureSpec& m, double alpha, double tau, const StabilityOptions& opts) {
    if (std::abs(std::abs(alpha) - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, "alpha must be +1 or -1");
    if (!m.symmetric()) throw Error(ErrorKind::HypothesisViolated, "measure must be even");
    if (m.log_concavity() == LogConcavity::Unknown || !m.is_c2())
        throw Error(ErrorKind::HypothesisViolated, "measure must be C^2 and log-concave");
    Interval iv = truncation_interval(m, opts.tail_mass);
    // y / sqrt2 in [-B, B] and tau - alpha y / sqrt2 in [-B, B].
    double lo = std::max(iv.lo, alpha > 0 ? tau - iv.hi : iv.lo - tau);
    double hi = std::min(iv.hi, alpha > 0 ? tau - iv.lo : iv.hi - tau);
    if (!(hi > lo)) throw Error(ErrorKind::DomainError, "boundary density has empty support");
    const double r2 = std::numbers::sqrt2;
    BoundaryData bd;
    bd.grid = (std::abs(lo + hi) < 1e-12 * (hi - lo)) ? Grid::symmetric(r2 * hi, opts.n) : Grid(r2 * lo, r2 * hi, opts.n);
    bd.nu = [m, alpha, tau](double y) {
        double x = y / std::numbers::sqrt2;
        return std::exp(eval_log_density(m, x, 0).psi + eval_log_density(m, tau - alpha * x, 0).psi);
    };
    bd.theta = [m](double y) { return -eval_log_density(m, y / std::numbers::sqrt2, 2).ddpsi; };
    return bd;
}

StabilityVerdict noncoordinate_stability(const MeasureSpec& m, double alpha, double tau, int dim,
                                         const StabilityOptions& opts) {
    if (dim < 2) throw Error(ErrorKind::DimensionMismatch, "non-coordinate half-spaces need dim >= 2");
    BoundaryData bd = boundary_data(m, alpha, tau, opts);
    ConditionOptions co;
    co.solver_margin = opts.solver_margin;
    ConditionResult p1 = check_P1(bd.nu, bd.theta, bd.grid, co);
    StabilityVerdict out;
    out.certificates = {{"p1_lambda", p1.value}, {"p1_margin", p1.margin()}};
    std::vector<double> margins{p1.margin()};
    if (dim >= 3) {
        double lam = opts.lambda;
        if (lam < 0.0) {
            if (opts.boundary_gap) {
                Grid g = bd.grid;
                auto gap_on = [&](const Grid& gg) {
                    auto xs = gg.nodes();
                    std::vector<double> w(xs.size());
                    for (std::size_t i = 0; i < xs.size(); ++i) w[i] = bd.nu(xs[i]);
                    EigenProblem p = assemble(w, w, gg);
                    p.constraint = mean_zero_constraint(w, gg);
                    return solve_smallest(p, 1).eigenvalues.front();
                };
                double c = gap_on(g), f = gap_on(g.refined());
                lam = (4.0 * f - c) / 3.0;
            } else {
                lam = spectral_gap(m, opts.spectral);
            }
        }
        ConditionResult p2 = check_P2(bd.nu, bd.theta, lam, bd.grid, co);
        out.certificates.emplace_back("lambda_tau", lam);
        out.certificates.emplace_back("p2_value", p2.value);
        out.certificates.emplace_back("p2_margin", p2.margin());
        margins.push_back(p2.margin());
    }
    out.tag = tag_from(margins, opts.solver_margin);
    return out;
}

double boundary_measure(const std::vector<MeasureSpec>& measures, const HalfSpace& hs, const BoundaryOptions& opts) {
    if (static_cast<int>(measures.size()) != hs.dim())
        throw Error(ErrorKind::DimensionMismatch, "need one measure per coordinate");
    auto supp = hs.support();
    if (supp.empty()) throw Error(ErrorKind::InvalidArgument, "direction must be nonzero");
    if (supp.size() == 1) {
        double w = hs.v[supp[0]];
        return density(measures[supp[0]], hs.t / w) / std::abs(w);
    }
    double b = 0.0, h = kInfinity;
    for (int i : supp) {
        double w = std::abs(hs.v[i]);
        b += w * truncation_interval(measures[i], opts.tail_mass).hi;
        h = std::min(h, w * std::sqrt(variance(measures[i])) / opts.points_per_sigma);
    }
    b = std::max(b, std::abs(hs.t) * 1.01);
    h = std::max(h, 2.0 * b / (opts.max_nodes - 1));
    Grid g = Grid::symmetric_spacing(b, h);
    std::vector<TabulatedDensity> parts;
    for (int i : supp) {
        double w = hs.v[i];
        const MeasureSpec& m = measures[i];
        parts.push_back(tabulate([&](double x) { return density(m, x / w) / std::abs(w); }, g));
    }
    return convolve_all(parts).at(hs.t);
}

}  // namespace prodiso
