#pragma once

#include "screenkit/design.hpp"
#include "screenkit/space_filling.hpp"

namespace screenkit {

struct EEIndices {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;   ///< sample standard deviation, divisor r - 1
    Eigen::VectorXd mu_star; ///< mean absolute effect
    int r = 0;
    Eigen::MatrixXd ee_matrix; ///< r x d raw effects
};

/// One effect per variable per trajectory: (y_after - y_before) divided by the
/// signed step, so decreasing steps estimate the same forward slope.
Eigen::MatrixXd elementary_effects(const MorrisPlan& plan, const Eigen::VectorXd& y);

/// Requires r >= 2.
EEIndices ee_indices(const Eigen::MatrixXd& effects);

struct CotterIndices {
    Eigen::VectorXd odd;       ///< C_o
    Eigen::VectorXd even;      ///< C_e
    Eigen::VectorXd magnitude; ///< M = |C_o| + |C_e|
    Eigen::VectorXd share;     ///< S = M / sum M (zero when sum M = 0)
    Eigen::VectorXd ee_low;    ///< (Y(i+1) - Y(1)) / 2, step from all-low
    Eigen::VectorXd ee_high;   ///< (Y(2d+2) - Y(d+i+1)) / 2, step into all-high
    int d() const { return static_cast<int>(odd.size()); }
};

inline constexpr double kDefaultCotterThreshold = 0.01;

/// y ordered as the systematic fractional replicate design: all-low, d
/// one-high runs, d one-low runs, all-high.
CotterIndices cotter_contrasts(const Eigen::VectorXd& y);

/// Variables with S(i) > threshold. Statistics are S; needs sum M > 0.
ScreeningOutcome cotter_sensitivity(const CotterIndices& indices, double threshold = kDefaultCotterThreshold,
                                    const std::vector<std::string>& names = {});

} // namespace screenkit
