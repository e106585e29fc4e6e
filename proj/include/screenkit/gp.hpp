#pragma once

#include "screenkit/design.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace screenkit {

inline constexpr double kDefaultNugget = 1e-8;
inline constexpr double kMaxNugget = 1e-4;

/// R_ij = prod_k exp(-theta_k |x_ik - x_jk|^alpha_k).
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& alpha);

struct GpFit {
    double beta0 = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd theta;
    Eigen::VectorXd alpha;
    double nugget = kDefaultNugget; ///< after escalation
    double loglik = 0.0;
};

/// Profile log-likelihood over beta0 and sigma^2 with the full constant
/// -n/2 (1 + ln 2 pi). The nugget grows tenfold on factorization failure up
/// to kMaxNugget, then SingularError.
GpFit gp_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                const Eigen::VectorXd& alpha, double nugget = kDefaultNugget);

/// Per-dimension |x_ik - x_jk|^alpha tables, reused across likelihood calls.
class GpWorkspace {
public:
    GpWorkspace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha);

    /// Profile log-likelihood where variable k uses theta(block[k]); blocks
    /// listed in `block` index into `theta`.
    GpFit loglik(const std::vector<int>& block, const Eigen::VectorXd& theta) const;

    int n() const { return static_cast<int>(y_.size()); }
    int d() const { return static_cast<int>(dist_.size()); }

private:
    Eigen::VectorXd y_;
    double alpha_;
    std::vector<Eigen::MatrixXd> dist_;
};

struct NelderMeadOptions {
    int max_evaluations = 400;
    double tolerance = 1e-6; ///< on the spread of simplex values
    double initial_step = 0.7;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Minimizes f inside the box [lo, hi] (points are clamped).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd start,
                             double lo, double hi, const NelderMeadOptions& options = {});

struct GpOptimizeOptions {
    int starts = 20;
    double theta_min = 1e-3;
    double theta_max = 1e2;
    std::uint64_t seed = 1;
    NelderMeadOptions search;
};

/// Maximum-likelihood theta per block by multi-start simplex search on
/// log theta. `warm` (size = blocks) is used as the first start when given.
GpFit gp_fit(const GpWorkspace& ws, const std::vector<int>& block, int blocks, const GpOptimizeOptions& options = {},
             const Eigen::VectorXd& warm = {}, bool* converged = nullptr);

struct SgpvsOptions {
    double c = 6.0;
    double alpha = 2.0; ///< 2 or 1
    GpOptimizeOptions optimizer;
    int candidate_starts = 3; ///< random starts beside the warm start when freeing one variable
};

struct SgpvsStep {
    int released = -1;
    double loglik = 0.0;
    double improvement = 0.0;
};

struct SgpvsResult {
    ScreeningOutcome outcome; ///< statistic: fitted theta per variable
    std::vector<SgpvsStep> steps;
    std::vector<int> released;
    double tied_theta = 0.0;
    GpFit fit;
    std::vector<std::string> diagnostics;
};

/// Stepwise release of variables from a common theta. Released variables
/// whose theta exceeds the tied value are declared active.
SgpvsResult sgpvs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SgpvsOptions& options = {});

struct RdvsOptions {
    int b = 100;
    double percentile = 0.9;
    int iterations = 2000;
    int burn_in = 500;
    double walk_width = 0.1;
    double prior_a = 0.01; ///< inverse-gamma shape and scale for sigma^2
    double prior_b = 0.01;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct RdvsResult {
    ScreeningOutcome outcome;             ///< statistic: median over chains of posterior median theta
    std::vector<double> reference;        ///< posterior median theta of the inert column, one per chain
    double threshold = 0.0;               ///< percentile of the reference
    Eigen::MatrixXd medians;              ///< b x d posterior medians of the real variables
    std::vector<double> acceptance;       ///< per chain, random-walk moves
    std::vector<std::string> warnings;
};

/// Posterior medians of theta for a chain over rho = exp(-theta/4) with the
/// prior 1/2 U(0,1) + 1/2 point mass at 1, beta0 and sigma^2 integrated out.
struct RhoChain {
    Eigen::VectorXd median_theta;
    double acceptance = 0.0;
};

RhoChain rho_chain(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RdvsOptions& options, std::uint64_t seed);

RdvsResult rdvs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RdvsOptions& options = {});

/// Linear-interpolation quantile of unsorted values.
double quantile(std::vector<double> values, double p);

} // namespace screenkit
