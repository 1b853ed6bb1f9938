#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prodiso/error.hpp"

namespace prodiso {

// Smooth even atom: g(r) = exp(1 - 1/(1 - r^2)) on |r| < 1, zero elsewhere.
// A mirrored atom at center c contributes g((x-c)/w) + g((x+c)/w).
struct Atom {
    double center = 0.0;
    double width = 1.0;
    bool mirrored = true;
};

class BumpFunction {
public:
    BumpFunction() = default;
    BumpFunction(std::vector<Atom> atoms, std::vector<double> coefficients);

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;

    // Value and derivatives of a single atom (coefficient 1).
    static double atom_value(const Atom& a, double x);
    static double atom_d1(const Atom& a, double x);
    static double atom_d2(const Atom& a, double x);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    bool empty() const { return atoms_.empty(); }

    // Radius R with value(x) = 0 for |x| >= R.
    double support_radius() const;
    // Edges of the atom supports, sorted; useful quadrature breakpoints.
    std::vector<double> breakpoints() const;
    // sup |value''| sampled on a fine grid over the support.
    double max_abs_d2(int samples = 4001) const;
    double min_d2(int samples = 4001) const;

    BumpFunction scaled(double s) const;

    nlohmann::json to_json() const;
    static BumpFunction from_json(const nlohmann::json& j);

private:
    std::vector<Atom> atoms_;
    std::vector<double> coeffs_;
};

enum class Kind { Logistic, Gaussian, TwoSidedExponential, PowerLaw, GaussianBump, Custom };
enum class LogConcavity { StrictlyLogConcave, LogConcave, Unknown };

struct LogDensity {
    double psi = 0.0;
    double dpsi = 0.0;
    double ddpsi = 0.0;
};

// Unnormalized log-density and its first two derivatives.
using PotentialFn = std::function<LogDensity(double)>;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

class MeasureSpec {
public:
    static MeasureSpec logistic();
    static MeasureSpec gaussian(double sigma = 1.0);
    static MeasureSpec two_sided_exponential();
    static MeasureSpec power_law(double p);
    static MeasureSpec gaussian_bump(double eps, BumpFunction bump);
    static MeasureSpec custom(PotentialFn potential, bool symmetric, LogConcavity lc,
                              std::string name = "custom");

    static MeasureSpec from_json(const nlohmann::json& j);
    // Accepts a JSON object text or a bare kind name ("logistic", "gaussian", ...).
    static MeasureSpec parse(const std::string& text);
    nlohmann::json to_json() const;

    // Pushforward under x -> s x (s > 0).
    MeasureSpec scaled(double s) const;

    Kind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    double p() const { return p_; }
    double eps() const { return eps_; }
    double scale() const { return scale_; }
    const BumpFunction& bump() const { return bump_; }
    double normalization() const { return norm_; }
    bool symmetric() const { return symmetric_; }
    LogConcavity log_concavity() const { return lc_; }
    const std::string& name() const { return name_; }

    // True when psi'' exists everywhere (no kink at the origin).
    bool is_c2() const;
    // True when psi'' is constant.
    bool is_gaussian() const { return kind_ == Kind::Gaussian; }

private:
    MeasureSpec() = default;
    void normalize_numerically();
    LogDensity raw(double x) const;  // unscaled, unnormalized

    friend LogDensity eval_log_density(const MeasureSpec& m, double x, int order);

    Kind kind_ = Kind::Logistic;
    double sigma_ = 1.0;
    double p_ = 2.0;
    double eps_ = 0.0;
    double scale_ = 1.0;
    BumpFunction bump_;
    std::shared_ptr<const PotentialFn> potential_;
    double norm_ = 1.0;  // total mass of the unnormalized density (unscaled)
    bool symmetric_ = true;
    LogConcavity lc_ = LogConcavity::StrictlyLogConcave;
    std::string name_ = "logistic";
};

// psi, psi', psi'' of the normalized log-density. With order < 2 the second
// derivative is left as NaN and kinks are not an error.
LogDensity eval_log_density(const MeasureSpec& m, double x, int order = 2);

double density(const MeasureSpec& m, double x);

enum class Direction { Cdf, Quantile };

double cdf(const MeasureSpec& m, double x);
double quantile(const MeasureSpec& m, double p);
double cdf_quantile(const MeasureSpec& m, double x_or_p, Direction dir);

double mean(const MeasureSpec& m);
double variance(const MeasureSpec& m);

// Symmetric [-b, b] whose complement has mass <= tail_mass.
Interval truncation_interval(const MeasureSpec& m, double tail_mass = 1e-12);

// Mass outside [-b, b].
double tail_mass(const MeasureSpec& m, double b);

struct FlagReport {
    bool symmetric_ok = true;
    bool log_concave_ok = true;
    double max_asymmetry = 0.0;
    double max_ddpsi = 0.0;
};

FlagReport verify_flags(const MeasureSpec& m, int samples = 1000);

// Quadrature breakpoints for the measure (kinks and bump edges).
std::vector<double> breakpoints(const MeasureSpec& m);

// Points of a deterministic low-discrepancy sequence in [lo, hi].
std::vector<double> golden_samples(double lo, double hi, int count);

}  // namespace prodiso
