#include "prodiso/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "prodiso/numerics.hpp"

namespace prodiso {

const char* kind_name(ErrorKind k) noexcept {
    switch (k) {
        case ErrorKind::NonDifferentiablePoint: return "NonDifferentiablePoint";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::GridTooNarrow: return "GridTooNarrow";
        case ErrorKind::SingularShift: return "SingularShift";
        case ErrorKind::SignedWeight: return "SignedWeight";
        case ErrorKind::NonConvexPotential: return "NonConvexPotential";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::HypothesisViolated: return "HypothesisViolated";
        case ErrorKind::NotLogConcave: return "NotLogConcave";
        case ErrorKind::OutOfBudget: return "OutOfBudget";
        case ErrorKind::NonEvenBump: return "NonEvenBump";
        case ErrorKind::InfeasibleBasis: return "InfeasibleBasis";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// g(r) and its r-derivatives for the standard atom.
inline double g0(double r) {
    double s = 1.0 - r * r;
    if (s <= 0.0) return 0.0;
    return std::exp(1.0 - 1.0 / s);
}

inline double g1(double r) {
    double s = 1.0 - r * r;
    if (s <= 0.0) return 0.0;
    return g0(r) * (-2.0 * r / (s * s));
}

inline double g2(double r) {
    double s = 1.0 - r * r;
    if (s <= 0.0) return 0.0;
    double s2 = s * s;
    double r2 = r * r;
    return g0(r) * (6.0 * r2 * r2 - 2.0) / (s2 * s2);
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

// ---------------------------------------------------------------- BumpFunction

BumpFunction::BumpFunction(std::vector<Atom> atoms, std::vector<double> coefficients)
    : atoms_(std::move(atoms)), coeffs_(std::move(coefficients)) {
    if (atoms_.size() != coeffs_.size())
        throw Error(ErrorKind::DimensionMismatch, "atoms and coefficients differ in length");
    for (const auto& a : atoms_) {
        if (!(a.width > 0.0) || !std::isfinite(a.center))
            throw Error(ErrorKind::InvalidArgument, "atom width must be positive");
    }
}

double BumpFunction::atom_value(const Atom& a, double x) {
    if (a.mirrored && a.center != 0.0)
        return g0((x - a.center) / a.width) + g0((x + a.center) / a.width);
    return g0((x - a.center) / a.width);
}

double BumpFunction::atom_d1(const Atom& a, double x) {
    if (a.mirrored && a.center != 0.0)
        return (g1((x - a.center) / a.width) + g1((x + a.center) / a.width)) / a.width;
    return g1((x - a.center) / a.width) / a.width;
}

double BumpFunction::atom_d2(const Atom& a, double x) {
    double w2 = a.width * a.width;
    if (a.mirrored && a.center != 0.0)
        return (g2((x - a.center) / a.width) + g2((x + a.center) / a.width)) / w2;
    return g2((x - a.center) / a.width) / w2;
}

double BumpFunction::value(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) s += coeffs_[i] * atom_value(atoms_[i], x);
    return s;
}

double BumpFunction::d1(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) s += coeffs_[i] * atom_d1(atoms_[i], x);
    return s;
}

double BumpFunction::d2(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) s += coeffs_[i] * atom_d2(atoms_[i], x);
    return s;
}

double BumpFunction::support_radius() const {
    double r = 0.0;
    for (const auto& a : atoms_) r = std::max(r, std::abs(a.center) + a.width);
    return r;
}

std::vector<double> BumpFunction::breakpoints() const {
    std::vector<double> bp;
    for (const auto& a : atoms_) {
        for (double e : {a.center - a.width, a.center + a.width}) {
            bp.push_back(e);
            if (a.mirrored) bp.push_back(-e);
        }
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return bp;
}

double BumpFunction::max_abs_d2(int samples) const {
    double r = support_radius();
    if (r == 0.0) return 0.0;
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
        double x = -r + 2.0 * r * i / (samples - 1);
        m = std::max(m, std::abs(d2(x)));
    }
    return m;
}

double BumpFunction::min_d2(int samples) const {
    double r = support_radius();
    if (r == 0.0) return 0.0;
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
        double x = -r + 2.0 * r * i / (samples - 1);
        m = std::min(m, d2(x));
    }
    return m;
}

BumpFunction BumpFunction::scaled(double s) const {
    std::vector<double> c = coeffs_;
    for (double& v : c) v *= s;
    return BumpFunction(atoms_, std::move(c));
}

nlohmann::json BumpFunction::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        arr.push_back({{"center", atoms_[i].center},
                       {"width", atoms_[i].width},
                       {"coeff", coeffs_[i]},
                       {"mirrored", atoms_[i].mirrored}});
    }
    return {{"atoms", arr}};
}

BumpFunction BumpFunction::from_json(const nlohmann::json& j) {
    std::vector<Atom> atoms;
    std::vector<double> coeffs;
    const auto& arr = j.contains("atoms") ? j.at("atoms") : j;
    for (const auto& a : arr) {
        Atom at;
        at.center = a.at("center").get<double>();
        at.width = a.at("width").get<double>();
        at.mirrored = a.value("mirrored", true);
        atoms.push_back(at);
        coeffs.push_back(a.value("coeff", 1.0));
    }
    return BumpFunction(std::move(atoms), std::move(coeffs));
}

// ----------------------------------------------------------------- MeasureSpec

MeasureSpec MeasureSpec::logistic() {
    MeasureSpec m;
    m.kind_ = Kind::Logistic;
    m.name_ = "logistic";
    return m;
}

MeasureSpec MeasureSpec::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "gaussian sigma must be positive");
    MeasureSpec m;
    m.kind_ = Kind::Gaussian;
    m.sigma_ = sigma;
    m.name_ = "gaussian";
    return m;
}

MeasureSpec MeasureSpec::two_sided_exponential() {
    MeasureSpec m;
    m.kind_ = Kind::TwoSidedExponential;
    m.lc_ = LogConcavity::LogConcave;
    m.name_ = "exponential";
    return m;
}

MeasureSpec MeasureSpec::power_law(double p) {
    if (!(p > 1.0)) throw Error(ErrorKind::InvalidArgument, "power law exponent must exceed 1");
    MeasureSpec m;
    m.kind_ = Kind::PowerLaw;
    m.p_ = p;
    m.norm_ = 2.0 * std::tgamma(1.0 + 1.0 / p);
    m.name_ = "power";
    return m;
}

MeasureSpec MeasureSpec::gaussian_bump(double eps, BumpFunction bump) {
    if (!std::isfinite(eps)) throw Error(ErrorKind::InvalidArgument, "epsilon must be finite");
    MeasureSpec m;
    m.kind_ = Kind::GaussianBump;
    m.eps_ = eps;
    m.bump_ = std::move(bump);
    m.name_ = "gaussian_bump";
    m.symmetric_ = true;
    for (const auto& a : m.bump_.atoms())
        if (!a.mirrored && a.center != 0.0) m.symmetric_ = false;
    double curv = 1.0;
    double r0 = m.bump_.support_radius();
    for (int i = 0; i <= 4000 && r0 > 0.0; ++i)
        curv = std::min(curv, 1.0 + eps * m.bump_.d2(-r0 + 2.0 * r0 * i / 4000.0));
    m.lc_ = curv > 0.0 ? LogConcavity::StrictlyLogConcave : LogConcavity::Unknown;
    // Z = sqrt(2 pi) + int exp(-x^2/2) (exp(-eps b) - 1), exact outside the bump.
    double r = m.bump_.support_radius();
    double z = std::sqrt(2.0 * std::numbers::pi);
    if (r > 0.0 && eps != 0.0) {
        const BumpFunction& b = m.bump_;
        QuadOptions q;
        q.rel_tol = 1e-13;
        q.breakpoints = b.breakpoints();
        z += integrate([&](double x) { return std::exp(-0.5 * x * x) * std::expm1(-eps * b.value(x)); },
                       -r, r, q);
    }
    m.norm_ = z;
    return m;
}

MeasureSpec MeasureSpec::custom(PotentialFn potential, bool symmetric, LogConcavity lc, std::string name) {
    MeasureSpec m;
    m.kind_ = Kind::Custom;
    m.potential_ = std::make_shared<const PotentialFn>(std::move(potential));
    m.symmetric_ = symmetric;
    m.lc_ = lc;
    m.name_ = std::move(name);
    m.normalize_numerically();
    return m;
}

void MeasureSpec::normalize_numerically() {
    QuadOptions q;
    q.rel_tol = 1e-13;
    q.breakpoints = {0.0};
    norm_ = 1.0;
    norm_ = integrate([this](double x) { return std::exp(raw(x).psi); }, -kInf, kInf, q);
    if (!(norm_ > 0.0) || !std::isfinite(norm_))
        throw Error(ErrorKind::DomainError, "density is not normalizable");
}

MeasureSpec MeasureSpec::scaled(double s) const {
    if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "scale must be positive");
    MeasureSpec m = *this;
    m.scale_ *= s;
    return m;
}

bool MeasureSpec::is_c2() const {
    if (kind_ == Kind::TwoSidedExponential) return false;
    if (kind_ == Kind::PowerLaw && p_ < 2.0) return false;
    return true;
}

LogDensity MeasureSpec::raw(double x) const {
    LogDensity r;
    switch (kind_) {
        case Kind::Logistic: {
            double e = std::exp(-std::abs(x));
            r.psi = -std::abs(x) - 2.0 * std::log1p(e);
            r.dpsi = -std::tanh(0.5 * x);
            r.ddpsi = -2.0 * e / ((1.0 + e) * (1.0 + e));
            break;
        }
        case Kind::Gaussian: {
            double s2 = sigma_ * sigma_;
            r.psi = -0.5 * x * x / s2 - std::log(sigma_ * std::sqrt(2.0 * std::numbers::pi));
            r.dpsi = -x / s2;
            r.ddpsi = -1.0 / s2;
            break;
        }
        case Kind::TwoSidedExponential:
            r.psi = -std::abs(x) - std::numbers::ln2;
            r.dpsi = -sign(x);
            r.ddpsi = x == 0.0 ? kNaN : 0.0;
            break;
        case Kind::PowerLaw: {
            double ax = std::abs(x);
            r.psi = -std::pow(ax, p_);
            r.dpsi = -p_ * std::pow(ax, p_ - 1.0) * sign(x);
            if (ax == 0.0 && p_ < 2.0)
                r.ddpsi = kNaN;
            else if (p_ == 2.0)
                r.ddpsi = -2.0;
            else
                r.ddpsi = -p_ * (p_ - 1.0) * std::pow(ax, p_ - 2.0);
            break;
        }
        case Kind::GaussianBump:
            r.psi = -0.5 * x * x - eps_ * bump_.value(x);
            r.dpsi = -x - eps_ * bump_.d1(x);
            r.ddpsi = -1.0 - eps_ * bump_.d2(x);
            break;
        case Kind::Custom:
            r = (*potential_)(x);
            break;
    }
    return r;
}

LogDensity eval_log_density(const MeasureSpec& m, double x, int order) {
    if (!std::isfinite(x)) throw Error(ErrorKind::DomainError, "x must be finite");
    double s = m.scale_;
    LogDensity r = m.raw(x / s);
    if (order >= 2 && std::isnan(r.ddpsi))
        throw Error(ErrorKind::NonDifferentiablePoint, "psi'' undefined at x = " + std::to_string(x));
    r.psi -= std::log(m.norm_) + std::log(s);
    r.dpsi /= s;
    r.ddpsi = order >= 2 ? r.ddpsi / (s * s) : kNaN;
    return r;
}

double density(const MeasureSpec& m, double x) { return std::exp(eval_log_density(m, x, 0).psi); }

std::vector<double> breakpoints(const MeasureSpec& m) {
    std::vector<double> bp;
    if (m.kind() == Kind::TwoSidedExponential || m.kind() == Kind::PowerLaw) bp.push_back(0.0);
    if (m.kind() == Kind::GaussianBump)
        for (double e : m.bump().breakpoints()) bp.push_back(e * m.scale());
    return bp;
}

// ------------------------------------------------------------ CDF and quantile

namespace {

double numeric_cdf(const MeasureSpec& m, double x) {
    QuadOptions q;
    q.rel_tol = 1e-12;
    q.breakpoints = breakpoints(m);
    auto f = [&](double y) { return density(m, y); };
    if (x <= 0.0) return integrate(f, -kInf, x, q);
    return 1.0 - integrate(f, x, kInf, q);
}

}  // namespace

double cdf(const MeasureSpec& m, double x) {
    if (std::isnan(x)) throw Error(ErrorKind::DomainError, "x is NaN");
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    double y = x / m.scale();
    switch (m.kind()) {
        case Kind::Logistic:
            return y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
        case Kind::Gaussian:
            return 0.5 * std::erfc(-y / (m.sigma() * std::numbers::sqrt2));
        case Kind::TwoSidedExponential:
            return y < 0.0 ? 0.5 * std::exp(y) : 1.0 - 0.5 * std::exp(-y);
        case Kind::PowerLaw: {
            double g = boost::math::gamma_q(1.0 / m.p(), std::pow(std::abs(y), m.p()));
            return y < 0.0 ? 0.5 * g : 1.0 - 0.5 * g;
        }
        default:
            return numeric_cdf(m, x);
    }
}

double quantile(const MeasureSpec& m, double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::DomainError, "quantile requires p in (0,1)");
    double s = m.scale();
    switch (m.kind()) {
        case Kind::Logistic:
            return s * (std::log(p) - std::log1p(-p));
        case Kind::Gaussian:
            return -s * m.sigma() * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
        case Kind::TwoSidedExponential:
            return s * (p < 0.5 ? std::log(2.0 * p) : -std::log(2.0 * (1.0 - p)));
        case Kind::PowerLaw: {
            if (p == 0.5) return 0.0;
            double q = p < 0.5 ? 2.0 * p : 2.0 * (1.0 - p);
            double r = std::pow(boost::math::gamma_q_inv(1.0 / m.p(), q), 1.0 / m.p());
            return s * (p < 0.5 ? -r : r);
        }
        default:
            break;
    }
    if (m.symmetric() && p == 0.5) return 0.0;
    double t = std::min({1e-4, 0.5 * p, 0.5 * (1.0 - p)});
    Interval iv = truncation_interval(m, t);
    auto f = [&](double x) { return cdf(m, x) - p; };
    std::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(f, iv.lo, iv.hi, boost::math::tools::eps_tolerance<double>(50), it);
    return 0.5 * (r.first + r.second);
}

double cdf_quantile(const MeasureSpec& m, double x_or_p, Direction dir) {
    return dir == Direction::Cdf ? cdf(m, x_or_p) : quantile(m, x_or_p);
}

double mean(const MeasureSpec& m) {
    if (m.symmetric()) return 0.0;
    QuadOptions q;
    q.rel_tol = 1e-12;
    q.abs_tol = 1e-14;
    q.breakpoints = breakpoints(m);
    return integrate([&](double x) { return x * density(m, x); }, -kInf, kInf, q);
}

double variance(const MeasureSpec& m) {
    double mu = mean(m);
    QuadOptions q;
    q.rel_tol = 1e-12;
    q.breakpoints = breakpoints(m);
    return integrate([&](double x) { return (x - mu) * (x - mu) * density(m, x); }, -kInf, kInf, q);
}

// ------------------------------------------------------------------ truncation

double tail_mass(const MeasureSpec& m, double b) {
    if (b <= 0.0) return 1.0;
    double y = b / m.scale();
    switch (m.kind()) {
        case Kind::Logistic:
            return 2.0 / (1.0 + std::exp(y));
        case Kind::Gaussian:
            return std::erfc(y / (m.sigma() * std::numbers::sqrt2));
        case Kind::TwoSidedExponential:
            return std::exp(-y);
        case Kind::PowerLaw:
            return boost::math::gamma_q(1.0 / m.p(), std::pow(y, m.p()));
        case Kind::GaussianBump:
            if (y >= m.bump().support_radius())
                return std::sqrt(2.0 * std::numbers::pi) / m.normalization() * std::erfc(y / std::numbers::sqrt2);
            break;
        default:
            break;
    }
    QuadOptions q;
    q.rel_tol = 1e-10;
    q.abs_tol = 1e-300;
    auto f = [&](double x) { return density(m, x); };
    return integrate(f, b, kInf, q) + integrate(f, -kInf, -b, q);
}

Interval truncation_interval(const MeasureSpec& m, double tail) {
    if (!(tail > 0.0 && tail < 1e-3))
        throw Error(ErrorKind::DomainError, "tail_mass must lie in (0, 1e-3)");
    double s = m.scale();
    double b = 0.0;
    switch (m.kind()) {
        case Kind::Logistic:
            b = std::log(2.0 / tail - 1.0);
            break;
        case Kind::Gaussian:
            b = m.sigma() * std::numbers::sqrt2 * boost::math::erfc_inv(tail);
            break;
        case Kind::TwoSidedExponential:
            b = -std::log(tail);
            break;
        case Kind::PowerLaw:
            b = std::pow(boost::math::gamma_q_inv(1.0 / m.p(), tail), 1.0 / m.p());
            break;
        case Kind::GaussianBump: {
            double q = std::min(1.0, tail * m.normalization() / std::sqrt(2.0 * std::numbers::pi));
            b = std::max(m.bump().support_radius(), std::numbers::sqrt2 * boost::math::erfc_inv(q));
            break;
        }
        case Kind::Custom: {
            double hi = 1.0;
            while (tail_mass(m, hi) > tail) {
                hi *= 2.0;
                if (hi > 1e6) throw Error(ErrorKind::NoConvergence, "tail search diverged");
            }
            double lo = hi / 2.0;
            if (tail_mass(m, lo) <= tail) lo = 0.0;
            for (int i = 0; i < 60 && hi - lo > 1e-9 * hi; ++i) {
                double mid = 0.5 * (lo + hi);
                (tail_mass(m, mid) > tail ? lo : hi) = mid;
            }
            return {-hi, hi};
        }
    }
    return {-b * s, b * s};
}

// ------------------------------------------------------------------- sampling

std::vector<double> golden_samples(double lo, double hi, int count) {
    constexpr double inv_phi = 0.6180339887498949;
    std::vector<double> xs(count);
    double u = 0.5;
    for (int k = 0; k < count; ++k) {
        u += inv_phi;
        u -= std::floor(u);
        xs[k] = lo + u * (hi - lo);
    }
    return xs;
}

FlagReport verify_flags(const MeasureSpec& m, int samples) {
    FlagReport rep;
    Interval iv = truncation_interval(m, 1e-12);
    rep.max_ddpsi = -kInf;
    for (double x : golden_samples(iv.lo, iv.hi, samples)) {
        rep.max_asymmetry = std::max(rep.max_asymmetry, std::abs(density(m, x) - density(m, -x)));
        LogDensity d = eval_log_density(m, x, 1);
        if (m.is_c2() || x != 0.0) {
            d = eval_log_density(m, x, 2);
            rep.max_ddpsi = std::max(rep.max_ddpsi, d.ddpsi);
        }
    }
    if (m.symmetric()) rep.symmetric_ok = rep.max_asymmetry <= 1e-12;
    if (m.log_concavity() == LogConcavity::StrictlyLogConcave)
        rep.log_concave_ok = rep.max_ddpsi < 0.0;
    else if (m.log_concavity() == LogConcavity::LogConcave)
        rep.log_concave_ok = rep.max_ddpsi <= 1e-12;
    return rep;
}

// ------------------------------------------------------------------------ JSON

MeasureSpec MeasureSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw Error(ErrorKind::InvalidArgument, "measure descriptor needs a \"kind\" field");
    std::string k = j.at("kind").get<std::string>();
    MeasureSpec m = MeasureSpec::logistic();
    if (k == "logistic") {
        m = logistic();
    } else if (k == "gaussian") {
        m = gaussian(j.value("sigma", 1.0));
    } else if (k == "exponential") {
        m = two_sided_exponential();
    } else if (k == "power") {
        m = power_law(j.value("p", 4.0));
    } else if (k == "gaussian_bump") {
        double eps = j.contains("eps") ? j.at("eps").get<double>() : j.value("epsilon", 0.0);
        BumpFunction b = j.contains("bump") ? BumpFunction::from_json(j.at("bump")) : BumpFunction();
        m = gaussian_bump(eps, std::move(b));
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown measure kind '" + k + "'");
    }
    if (j.contains("scale")) m = m.scaled(j.at("scale").get<double>());
    return m;
}

MeasureSpec MeasureSpec::parse(const std::string& text) {
    auto first = text.find_first_not_of(" \t\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::InvalidArgument, std::string("bad measure JSON: ") + e.what());
        }
        return from_json(j);
    }
    // name or name:param
    std::string name = text;
    nlohmann::json j;
    auto colon = text.find(':');
    if (colon != std::string::npos) {
        name = text.substr(0, colon);
        double v = 0.0;
        try {
            v = std::stod(text.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "bad measure parameter in '" + text + "'");
        }
        if (name == "gaussian") j["sigma"] = v;
        if (name == "power") j["p"] = v;
        if (name == "gaussian_bump") j["eps"] = v;
    }
    j["kind"] = name;
    return from_json(j);
}

nlohmann::json MeasureSpec::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::Logistic: j["kind"] = "logistic"; break;
        case Kind::Gaussian: j = {{"kind", "gaussian"}, {"sigma", sigma_}}; break;
        case Kind::TwoSidedExponential: j["kind"] = "exponential"; break;
        case Kind::PowerLaw: j = {{"kind", "power"}, {"p", p_}}; break;
        case Kind::GaussianBump: j = {{"kind", "gaussian_bump"}, {"eps", eps_}, {"bump", bump_.to_json()}}; break;
        case Kind::Custom: j = {{"kind", "custom"}, {"name", name_}}; break;
    }
    if (scale_ != 1.0) j["scale"] = scale_;
    return j;
}

}  // namespace prodiso
