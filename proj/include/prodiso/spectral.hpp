#pragma once

#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prodiso/measure.hpp"
#include "prodiso/numerics.hpp"

namespace prodiso {

// Generalized problem K u = lambda M u with K symmetric tridiagonal (Neumann
// finite-volume stiffness) and M diagonal. An optional constraint c restricts
// to c^T u = 0; the shift adds shift * diag(shift_mass) to K.
struct EigenProblem {
    Grid grid;
    std::vector<double> diag;
    std::vector<double> off;
    std::vector<double> mass;
    std::vector<double> constraint;
    double shift = 0.0;
    std::vector<double> shift_mass;

    std::vector<double> effective_diag() const;
};

struct EigenResult {
    std::vector<double> eigenvalues;
    std::vector<double> residual_norms;
    std::vector<double> eigenvector;  // smallest mode, node values on the full grid
    Grid grid;

    nlohmann::json to_json() const;
};

enum class Parity { Any, OddOnly };

// Stiffness from weights w, mass from weights m (times cell volumes).
EigenProblem assemble(std::span<const double> w, std::span<const double> m, const Grid& grid);

// Mean-zero constraint vector for node weights: weights * cells.
std::vector<double> mean_zero_constraint(std::span<const double> weights, const Grid& grid);

EigenResult solve_smallest(const EigenProblem& p, int k = 1, Parity parity = Parity::Any);

// Number of pencil eigenvalues below lambda (Sturm count).
int sturm_count(const EigenProblem& p, double lambda);

struct SpectralOptions {
    double tail_mass = 1e-12;
    int n = 8001;
    double b = 0.0;           // half-width of the domain; 0 picks it from tail_mass
    bool richardson = true;   // extrapolate in h over n and 2n - 1 nodes
    int extrapolate_b = -1;   // -1 auto (exponential-type tails), 0 off, 1 on
};

struct GapReport {
    double lambda = 0.0;
    double lambda_raw = 0.0;  // single grid, no extrapolation
    double b = 0.0;
    int n = 0;
    bool b_extrapolated = false;
    nlohmann::json to_json() const;
};

GapReport spectral_gap_report(const MeasureSpec& m, const SpectralOptions& opts = {});
double spectral_gap(const MeasureSpec& m, const SpectralOptions& opts = {});

struct ConditionOptions {
    double solver_margin = 0.01;
    Parity parity = Parity::Any;
};

enum class Verdict { Holds, Fails, Inconclusive };
const char* verdict_name(Verdict v);

struct ConditionResult {
    double value = 0.0;  // P1: lambda*; P2: the infimum (margin = value - 1)
    bool holds = false;
    Verdict verdict = Verdict::Fails;
    bool infinite = false;
    double margin() const { return value - 1.0; }
};

ConditionResult check_P1(std::span<const double> nu, std::span<const double> theta, const Grid& grid,
                         const ConditionOptions& opts = {});
ConditionResult check_P2(std::span<const double> nu, std::span<const double> theta, double lambda_tau,
                         const Grid& grid, const ConditionOptions& opts = {});

using WeightFn = std::function<double(double)>;

// Same conditions from weight functions, Richardson-extrapolated over the
// grid and its refinement.
ConditionResult check_P1(const WeightFn& nu, const WeightFn& theta, const Grid& grid,
                         const ConditionOptions& opts = {});
ConditionResult check_P2(const WeightFn& nu, const WeightFn& theta, double lambda_tau, const Grid& grid,
                         const ConditionOptions& opts = {});

// u and u' at x.
using TestFn = std::function<std::pair<double, double>(double)>;

// int u'^2 / g'' dmu - Var_mu(u) for dmu = e^{-g}, g = -psi.
double brascamp_lieb_residual(const MeasureSpec& g, const TestFn& u);

struct RemarkBracket {
    double inf_vpp = 0.0;     // inf V'' over the truncation interval
    double mean_vpp = 0.0;    // int V'' dmu, including kink contributions
};

RemarkBracket remark_bracket(const MeasureSpec& m);

struct TensorOracleResult {
    double lambda_2d = 0.0;
    double p1_lambda = 0.0;
    double p2_value = 0.0;
    double lambda_tau = 0.0;
    bool holds_2d = false;
    bool holds_split = false;
    bool agrees = true;
    std::vector<double> witness;  // row-major (tau index, nu index)
};

struct OracleOptions {
    double tolerance = 0.02;
    int max_nodes = 201;
    int max_iter = 400;
};

TensorOracleResult tensor_oracle_2d(std::span<const double> nu, std::span<const double> tau,
                                    std::span<const double> theta, const Grid& grid,
                                    const OracleOptions& opts = {});

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace prodiso
