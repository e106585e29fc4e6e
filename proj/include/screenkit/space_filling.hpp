#pragma once

#include "screenkit/design.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace screenkit {

enum class Jitter {
    Random,  ///< uniform position inside each cell
    Midpoint ///< cell centres, deterministic given the permutations
};

/// Optional map from (0,1) to the target marginal; identity when empty.
using QuantileFunction = std::function<double(double)>;

/// Random Latin hypercube: each variable has one point in each of the n
/// equal-probability bins.
Design lhs_random(int n, int d, std::uint64_t seed, Jitter jitter = Jitter::Random,
                  const QuantileFunction& quantile = {});

/// LHS from a symmetric OA with symbols 0..s-1 (n rows, d columns): the n/s
/// occurrences of symbol k in a column are mapped to a random order of the
/// fine bins k*n/s .. (k+1)*n/s - 1.
Design lhs_oa(const Eigen::MatrixXi& oa, std::uint64_t seed, Jitter jitter = Jitter::Random);

/// True when every column hits each bin [k/n, (k+1)/n) exactly once.
bool is_latin_hypercube(const Design& design);

/// (sum_{i<j} dist^-q)^(1/q); +infinity when two points coincide.
double phi_q(const Design& design, double q);

/// Mean over pairs of prod_l (x_il - x_jl)^-2; +infinity when any coordinate
/// is shared.
double maxpro(const Design& design);

enum class LhsObjective { PhiQ, MaxPro };

struct AnnealSchedule {
    long long iterations = 10000;
    double cooling = 0.95;     ///< geometric factor per stage
    int stage_length = 100;    ///< moves per temperature stage
    int calibration_swaps = 100;
    double initial_temperature = 0.0; ///< 0: mean |change| over calibration swaps
};

struct LhsOptimizeOptions {
    LhsObjective objective = LhsObjective::PhiQ;
    double q = 15.0;
    AnnealSchedule schedule;
    Jitter jitter = Jitter::Midpoint;
    int restarts = 1;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct LhsOptimizeResult {
    Design design;
    double value = 0.0;   ///< phi_q or maxpro of the returned design
    double initial = 0.0; ///< criterion of the winning restart's start
};

/// Element swaps within columns, simulated annealing, best design kept.
LhsOptimizeResult lhs_optimize(int n, int d, const LhsOptimizeOptions& options = {});

struct MorrisPlan {
    Design design;             ///< (d + 1) r rows on the f-level grid of [0,1]^d
    int r = 0;
    double delta = 0.0;
    int f = 0;
    std::vector<int> trajectory_starts; ///< first row of each trajectory
    int d() const { return design.d(); }
};

/// Default step f / (2 (f - 1)).
double morris_default_delta(int f);

/// r randomized one-factor-at-a-time trajectories. Base points are uniform
/// over grid points x with x + delta still on the grid.
MorrisPlan morris_plan(int d, int r, int f = 4, std::optional<double> delta = std::nullopt,
                       std::uint64_t seed = 1);

/// Checks the trajectory invariants; throws DomainError describing the first
/// violation.
void validate_morris_plan(const MorrisPlan& plan);

/// Affine map of a [0,1]^d design to [-1,1]^d.
inline Design to_symmetric_box(const Design& design) { return design.to_symmetric(); }

} // namespace screenkit
