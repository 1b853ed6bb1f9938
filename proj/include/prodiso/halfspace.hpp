#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prodiso/measure.hpp"
#include "prodiso/spectral.hpp"

namespace prodiso {

// {x : <x, v> < t} with |v| = 1.
struct HalfSpace {
    std::vector<double> v;
    double t = 0.0;

    // Normalizes v; rejects the zero vector.
    static HalfSpace make(std::vector<double> v, double t);
    static HalfSpace coordinate(int dim, int axis, double t);
    // v = (e_i + sign e_j) / sqrt(2) on the first two axes.
    static HalfSpace bisector(int dim, int sign, double t);

    int dim() const { return static_cast<int>(v.size()); }
    std::vector<int> support() const;  // indices of nonzero components
};

enum class StationarityTag { Coordinate, TwoComponentMatched, GaussianAll, PeriodicMinus, SymmetricPlus, NotStationary };
const char* tag_name(StationarityTag t);

struct StationarityVerdict {
    StationarityTag tag = StationarityTag::NotStationary;
    double residual = 0.0;
    std::vector<std::pair<std::string, double>> details;
    double violating_x = 0.0;  // sample where the identity failed (NotStationary only)

    nlohmann::json to_json() const;
};

StationarityVerdict classify_stationary(const std::vector<MeasureSpec>& measures, const HalfSpace& hs,
                                        double tol = 1e-8);

double mean_curvature_residual(const std::vector<MeasureSpec>& measures, const HalfSpace& hs, int samples = 1000);

enum class StabilityTag { Stable, Unstable, Inconclusive };
const char* tag_name(StabilityTag t);

struct StabilityVerdict {
    StabilityTag tag = StabilityTag::Inconclusive;
    std::vector<std::pair<std::string, double>> certificates;
    bool at_threshold = false;

    double certificate(const std::string& name) const;
    nlohmann::json to_json() const;
};

struct StabilityOptions {
    double solver_margin = 0.01;
    double tail_mass = 1e-12;
    int n = 2001;               // nodes for the reduced 1-D problems
    double lambda = -1.0;       // spectral gap override; negative means compute it
    bool boundary_gap = false;  // use the gap of the boundary density instead of the measure's
    SpectralOptions spectral{};
};

StabilityVerdict coordinate_stability(const MeasureSpec& m, double t, const StabilityOptions& opts = {});

// Sublevel set {t : -psi''(t) <= lambda} as a union of intervals (infinite ends allowed).
std::vector<Interval> coordinate_stable_region(const MeasureSpec& m, const StabilityOptions& opts = {});

// Weights of the reduced one-dimensional problems for v in V^+ (alpha = 1) or V^- (alpha = -1).
struct BoundaryData {
    WeightFn nu;
    WeightFn theta;
    Grid grid;
};

BoundaryData boundary_data(const MeasureSpec& m, double alpha, double tau, const StabilityOptions& opts = {});

StabilityVerdict noncoordinate_stability(const MeasureSpec& m, double alpha, double tau, int dim,
                                         const StabilityOptions& opts = {});

struct BoundaryOptions {
    double tail_mass = 1e-12;
    double points_per_sigma = 50.0;
    int max_nodes = 40001;
};

// Boundary measure of the half-space = density of sum v_i X_i at t.
double boundary_measure(const std::vector<MeasureSpec>& measures, const HalfSpace& hs,
                        const BoundaryOptions& opts = {});

}  // namespace prodiso
