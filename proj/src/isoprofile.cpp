#include "prodiso/isoprofile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

namespace prodiso {

namespace {

void require_log_concave(const MeasureSpec& m) {
    if (m.log_concavity() == LogConcavity::Unknown)
        throw Error(ErrorKind::NotLogConcave, "measure '" + m.name() + "' is not flagged log-concave");
}

void require_unit(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::DomainError, "t must lie in [0, 1]");
}

double c_objective(double u) { return -std::expm1(-2.0 * u) / (2.0 * std::sqrt(u)); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double gaussian_profile(double t) {
    require_unit(t);
    if (t == 0.0 || t == 1.0) return 0.0;
    double x = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * t);
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double profile_1d(const MeasureSpec& m, double t) {
    require_log_concave(m);
    require_unit(t);
    if (t == 0.0 || t == 1.0) return 0.0;
    switch (m.kind()) {
        case Kind::Logistic:
            return t * (1.0 - t) / m.scale();
        case Kind::Gaussian:
            return gaussian_profile(t) / (m.sigma() * m.scale());
        default:
            return std::min(density(m, quantile(m, t)), density(m, quantile(m, 1.0 - t)));
    }
}

ConstantC compute_c() {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1e-6, b = 10.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = c_objective(x1), f2 = c_objective(x2);
    while (b - a > 1e-12) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = c_objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = c_objective(x1);
        }
    }
    double u = 0.5 * (a + b);
    // Newton polish on the first-order condition 4u e^{-2u} = 1 - e^{-2u}.
    auto foc = [](double v) { return 4.0 * v * std::exp(-2.0 * v) + std::expm1(-2.0 * v); };
    for (int it = 0; it < 20; ++it) {
        double d = (2.0 - 8.0 * u) * std::exp(-2.0 * u);
        double step = foc(u) / d;
        u -= step;
        if (std::abs(step) < 1e-16 * u) break;
    }
    return {c_objective(u), u, foc(u)};
}

double tensor_lower_bound(const MeasureSpec& m, double t, double lambda) {
    require_log_concave(m);
    require_unit(t);
    if (t == 0.0 || t == 1.0) return 0.0;
    if (lambda < 0.0) lambda = spectral_gap(m);
    return std::sqrt(lambda) * compute_c().c * t * (1.0 - t);
}

nlohmann::json CltTrace::to_json() const {
    return {{"t", t}, {"N", ns}, {"values", values}, {"y", ys}, {"one_dim", one_dim}, {"limit", limit}, {"bound", bound}};
}

CltTrace clt_upper_bound(const MeasureSpec& m, double t, int n_max, const CltOptions& opts) {
    require_unit(t);
    if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "N_max must be positive");
    CltTrace tr;
    tr.t = t;
    const double sigma = std::sqrt(variance(m));
    tr.one_dim = m.log_concavity() == LogConcavity::Unknown ? kInfinity : profile_1d(m, t);
    tr.limit = gaussian_profile(t) / sigma;
    if (t == 0.0 || t == 1.0) {
        for (int n = 1; n <= n_max; ++n) {
            tr.ns.push_back(n);
            tr.values.push_back(0.0);
            tr.ys.push_back(t == 0.0 ? -kInfinity : kInfinity);
        }
        tr.one_dim = 0.0;
        tr.bound = 0.0;
        return tr;
    }

    // Lattice k h anchored at the origin.
    const double h = sigma / opts.points_per_sigma;
    const double B = truncation_interval(m, 1e-15).hi;
    const int K = static_cast<int>(std::ceil(B / h));
    std::vector<double> x(2 * K + 1);
    for (int k = -K; k <= K; ++k) x[k + K] = density(m, k * h);
    auto trim = [&](std::vector<double>& v, long& off) {
        double peak = *std::max_element(v.begin(), v.end());
        std::size_t lo = 0, hi = v.size();
        while (lo < hi && v[lo] < opts.trim * peak) ++lo;
        while (hi > lo && v[hi - 1] < opts.trim * peak) --hi;
        v = std::vector<double>(v.begin() + lo, v.begin() + hi);
        off += static_cast<long>(lo);
    };
    long xoff = -K;
    trim(x, xoff);
    double xm = 0.0;
    for (double v : x) xm += v * h;
    for (double& v : x) v /= xm;

    std::vector<double> s = x;
    long soff = xoff;  // s[i] is the density at (soff + i) h
    const bool centered = m.symmetric() && t == 0.5;
    for (int n = 1; n <= n_max; ++n) {
        if (n > 1) {
            std::vector<double> r(s.size() + x.size() - 1, 0.0);
            for (std::size_t i = 0; i < s.size(); ++i) {
                double si = s[i] * h;
                for (std::size_t j = 0; j < x.size(); ++j) r[i + j] += si * x[j];
            }
            s = std::move(r);
            soff += xoff;
            trim(s, soff);
            double mass = 0.0;
            for (double v : s) mass += v * h;
            for (double& v : s) v /= mass;
        }
        double at = 0.0, pos = 0.0;
        if (centered) {
            long i0 = -soff;
            at = (i0 >= 0 && i0 < static_cast<long>(s.size())) ? s[i0] : 0.0;
        } else {
            // Cumulative trapezoid, then linear inversion and cubic interpolation of the density.
            double cum = 0.0;
            std::size_t k = 1;
            double prev = 0.0;
            for (; k < s.size(); ++k) {
                prev = cum;
                cum += 0.5 * (s[k - 1] + s[k]) * h;
                if (cum >= t) break;
            }
            k = std::min(k, s.size() - 1);
            double frac = cum > prev ? (t - prev) / (cum - prev) : 0.0;
            double u = static_cast<double>(k - 1) + frac;
            pos = (soff + u) * h;
            long i0 = std::clamp<long>(static_cast<long>(std::floor(u)) - 1, 0, static_cast<long>(s.size()) - 4);
            double q = u - i0;
            double l0 = -(q - 1) * (q - 2) * (q - 3) / 6.0, l1 = q * (q - 2) * (q - 3) / 2.0;
            double l2 = -q * (q - 1) * (q - 3) / 2.0, l3 = q * (q - 1) * (q - 2) / 6.0;
            at = l0 * s[i0] + l1 * s[i0 + 1] + l2 * s[i0 + 2] + l3 * s[i0 + 3];
        }
        double rn = std::sqrt(static_cast<double>(n));
        tr.ns.push_back(n);
        tr.values.push_back(rn * at);
        tr.ys.push_back(pos / rn);
    }
    tr.bound = std::min(tr.one_dim, *std::min_element(tr.values.begin(), tr.values.end()));
    return tr;
}

std::vector<double> unit_grid(int n) {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "need at least two t points");
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i) ts[i] = static_cast<double>(i) / (n - 1);
    ts.back() = 1.0;
    return ts;
}

ProfileBounds profile_envelope(const MeasureSpec& m, const std::vector<double>& ts, const EnvelopeOptions& opts) {
    require_log_concave(m);
    ProfileBounds pb;
    pb.ts = ts;
    pb.lambda = opts.lambda >= 0.0 ? opts.lambda : spectral_gap(m);
    pb.sigma = std::sqrt(variance(m));
    const double c = compute_c().c;
    for (double t : ts) {
        require_unit(t);
        double one = profile_1d(m, t);
        pb.one_dim.push_back(one);
        pb.lower.push_back(std::sqrt(pb.lambda) * c * t * (1.0 - t));
        pb.upper.push_back(std::min(one, gaussian_profile(t) / pb.sigma));
    }
    for (double t : opts.trace_ts) pb.clt_trace.push_back(clt_upper_bound(m, t, opts.n_max));
    return pb;
}

std::string ProfileBounds::to_csv() const {
    std::ostringstream os;
    os << "t,one_dim,lower,upper\n";
    for (std::size_t i = 0; i < ts.size(); ++i)
        os << fmt(ts[i]) << ',' << fmt(one_dim[i]) << ',' << fmt(lower[i]) << ',' << fmt(upper[i]) << '\n';
    return os.str();
}

nlohmann::json ProfileBounds::to_json() const {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& c : clt_trace) tr.push_back(c.to_json());
    return {{"t", ts},          {"one_dim", one_dim}, {"lower", lower}, {"upper", upper},
            {"clt_trace", tr}, {"lambda", lambda},   {"sigma", sigma}};
}

}  // namespace prodiso
