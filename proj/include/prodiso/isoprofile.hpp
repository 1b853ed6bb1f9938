#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "prodiso/measure.hpp"
#include "prodiso/spectral.hpp"

namespace prodiso {

// I_mu(t) = min(f(F^-1(t)), f(F^-1(1 - t))) for log-concave mu.
double profile_1d(const MeasureSpec& m, double t);

// Standard Gaussian profile phi(Phi^-1(t)).
double gaussian_profile(double t);

struct ConstantC {
    double c = 0.0;
    double u_star = 0.0;
    double foc_residual = 0.0;  // 4u e^{-2u} - (1 - e^{-2u}) at u_star
};

// c = sup_{u >= 0} (1 - e^{-2u}) / (2 sqrt(u)).
ConstantC compute_c();

// sqrt(lambda_mu) c t (1 - t); lambda < 0 means compute the spectral gap.
double tensor_lower_bound(const MeasureSpec& m, double t, double lambda = -1.0);

struct CltTrace {
    double t = 0.5;
    std::vector<int> ns;
    std::vector<double> values;  // f_{Z_N}(y_N)
    std::vector<double> ys;      // y_N, the t-quantile of Z_N
    double one_dim = 0.0;
    double limit = 0.0;          // phi(Phi^-1(t)) / sigma
    double bound = 0.0;          // min(one_dim, min values)

    nlohmann::json to_json() const;
};

struct CltOptions {
    double points_per_sigma = 40.0;
    double trim = 1e-18;  // relative cutoff for the running-sum support
};

CltTrace clt_upper_bound(const MeasureSpec& m, double t, int n_max, const CltOptions& opts = {});

struct ProfileBounds {
    std::vector<double> ts;
    std::vector<double> one_dim;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<CltTrace> clt_trace;
    double lambda = 0.0;
    double sigma = 0.0;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

struct EnvelopeOptions {
    std::vector<double> trace_ts;  // t values that also get a CLT trace
    int n_max = 64;
    double lambda = -1.0;
};

ProfileBounds profile_envelope(const MeasureSpec& m, const std::vector<double>& ts, const EnvelopeOptions& opts = {});

// n evenly spaced points on [0, 1].
std::vector<double> unit_grid(int n);

}  // namespace prodiso
