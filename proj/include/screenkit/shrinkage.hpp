#pragma once

#include "screenkit/design.hpp"

#include <optional>
#include <vector>

namespace screenkit {

/// Dense dual simplex for min c'z subject to Az <= b, z >= 0 with c >= 0, so
/// the all-slack basis starts dual feasible. The right-hand side can be
/// replaced between solves, keeping the basis (warm start).
class DualSimplex {
public:
    DualSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& c);

    /// Solve for right-hand side b; returns the structural solution z.
    Eigen::VectorXd solve(const Eigen::VectorXd& b);

    double objective() const { return objective_; }
    int iterations() const { return iterations_; }
    /// Smallest reduced cost at the last solve (>= -tolerance at optimality).
    double min_reduced_cost() const;

    long long max_iterations = 0; ///< 0 means 50 (m + n)

private:
    void pivot(Eigen::Index row, Eigen::Index col);
    void refactor();

    Eigen::MatrixXd A_;
    Eigen::VectorXd c_;
    Eigen::Index m_ = 0;
    Eigen::Index n_ = 0;
    Eigen::MatrixXd T_;       // m x (n + m): B^-1 [A I]
    Eigen::VectorXd reduced_; // n + m
    Eigen::VectorXd x_;       // basic values
    Eigen::VectorXd b_;
    std::vector<Eigen::Index> basis_;
    double objective_ = 0.0;
    int iterations_ = 0;
};

/// min ||beta||_1 subject to ||H'(y - H beta)||_inf <= s.
Eigen::VectorXd dantzig_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double s);

struct DantzigGrid {
    int points = 50;
    double min_ratio = 1e-3; ///< last point is s_max * min_ratio
    std::vector<double> explicit_s; ///< used instead when non-empty (must decrease)
};

struct DantzigPath {
    std::vector<double> s;        ///< decreasing
    Eigen::MatrixXd coefficients; ///< |grid| x p
    std::vector<double> residuals; ///< ||H'(y - H beta)||_inf - s per point
};

DantzigPath dantzig_path(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, const DantzigGrid& grid = {});

struct GaussDantzigOptions {
    DantzigGrid grid;
    double threshold = 0.0; ///< |refit coefficient| > threshold declares the term active
};

struct GaussDantzigResult {
    ScreeningOutcome outcome;   ///< per-variable statistic: max |refit coefficient| of its terms
    DantzigPath path;           ///< on centred, unit-length columns
    std::vector<std::string> term_labels;
    std::vector<double> aicc;   ///< per path point; NaN when excluded
    int chosen = -1;            ///< path index minimizing AICc
    double chosen_s = 0.0;
    std::vector<int> active_terms;      ///< indices into the non-intercept terms
    Eigen::VectorXd refit_coefficients; ///< intercept first, then active terms
    bool empty_support = false;         ///< every path support was empty
};

/// AICc n ln(RSS/n) + 2k + 2k(k+1)/(n-k-1); NaN when n - k - 1 <= 0.
double aicc(double rss, int n, int k);

/// Dantzig path on the non-intercept terms (centred and scaled, intercept
/// unpenalized), least-squares refit of each support, AICc choice of s.
GaussDantzigResult gauss_dantzig(const ModelMatrix& H, const Eigen::VectorXd& y, int d,
                                 const GaussDantzigOptions& options = {},
                                 const std::vector<std::string>& names = {});

} // namespace screenkit
