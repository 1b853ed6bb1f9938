#pragma once

#include <vector>

#include <json.hpp>

#include "prodiso/halfspace.hpp"
#include "prodiso/measure.hpp"

namespace prodiso {

struct Slopes {
    double lambda_dot = 0.0;
    double k_dot = 0.0;
    double a_dot = 0.0;

    nlohmann::json to_json() const;
};

// First-order variations of lambda, k and a for dmu_eps ~ exp(-x^2/2 - eps bump).
Slopes perturbation_slopes(const BumpFunction& bump);

// The two design functionals: (k_dot, lambda_dot - a_dot).
std::pair<double, double> design_functionals(const BumpFunction& bump);

struct PerturbedValues {
    double eps = 0.0;
    double lambda = 0.0;
    double k = 0.0;
    double a = 0.0;
};

struct PerturbOptions {
    double tail_mass = 1e-14;
    double h = 0.01;
};

// lambda(eps), k(eps), a(eps) from the spectral module.
PerturbedValues perturbed_values(const BumpFunction& bump, double eps, const PerturbOptions& opts = {});

struct PerturbationReport {
    Slopes slopes;
    Slopes fd_slopes;
    std::vector<double> epsilons;
    std::vector<PerturbedValues> values;
    PerturbedValues baseline;
    bool feasible = false;
    double max_rel_error = 0.0;

    nlohmann::json to_json() const;
};

PerturbationReport finite_diff_validate(const BumpFunction& bump, const std::vector<double>& eps_list,
                                        const PerturbOptions& opts = {});

struct DesignOptions {
    double delta = 1e-3;   // required slack on both functionals
    double target = 0.5;   // value given to both functionals by the returned bump
};

struct DesignResult {
    BumpFunction bump;
    PerturbationReport report;  // slopes and feasibility; no finite differences
    double max_abs_d2 = 0.0;
};

// Atoms at centers 0, 0.5, ..., 6 with widths 1, 2, 3, 4.
std::vector<Atom> default_design_basis();

// Smallest bump (in a Gaussian-weighted H2 norm) over the span of the basis with
// k_dot = lambda_dot - a_dot = target. `budget` caps the basis size.
DesignResult design_bump(const std::vector<Atom>& basis, int budget = 500, const DesignOptions& opts = {});

}  // namespace prodiso
