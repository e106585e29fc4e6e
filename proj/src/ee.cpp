#include "screenkit/ee.hpp"

#include "screenkit/errors.hpp"

#include <cmath>
#include <numeric>

namespace screenkit {

Eigen::MatrixXd elementary_effects(const MorrisPlan& plan, const Eigen::VectorXd& y)
{
    const int d = plan.d();
    const int m = d + 1;
    if (y.size() != plan.design.n())
        throw DomainError("response has " + std::to_string(y.size()) + " values but the plan has " +
                          std::to_string(plan.design.n()) + " rows");
    validate_morris_plan(plan);
    Eigen::MatrixXd ee(plan.r, d);
    for (int t = 0; t < plan.r; ++t) {
        const int s = plan.trajectory_starts[static_cast<std::size_t>(t)];
        for (int l = 1; l < m; ++l) {
            const Eigen::RowVectorXd diff = plan.design.runs().row(s + l) - plan.design.runs().row(s + l - 1);
            Eigen::Index var = 0;
            diff.cwiseAbs().maxCoeff(&var);
            ee(t, var) = (y(s + l) - y(s + l - 1)) / diff(var);
        }
    }
    return ee;
}

EEIndices ee_indices(const Eigen::MatrixXd& effects)
{
    const auto r = effects.rows();
    if (r < 2)
        throw DomainError("sigma is undefined with fewer than two trajectories");
    EEIndices out;
    out.r = static_cast<int>(r);
    out.ee_matrix = effects;
    out.mu = effects.colwise().mean().transpose();
    out.mu_star = effects.cwiseAbs().colwise().mean().transpose();
    out.sigma.resize(effects.cols());
    for (Eigen::Index i = 0; i < effects.cols(); ++i) {
        const double ss = (effects.col(i).array() - out.mu(i)).square().sum();
        out.sigma(i) = std::sqrt(ss / static_cast<double>(r - 1));
        if (effects.col(i).maxCoeff() == effects.col(i).minCoeff())
            out.sigma(i) = 0.0;
    }
    return out;
}

CotterIndices cotter_contrasts(const Eigen::VectorXd& y)
{
    const auto len = y.size();
    if (len < 4 || len % 2 != 0)
        throw DomainError("Cotter contrasts need 2d + 2 responses, got " + std::to_string(len));
    const int d = static_cast<int>((len - 2) / 2);
    CotterIndices c;
    c.odd.resize(d);
    c.even.resize(d);
    c.ee_low.resize(d);
    c.ee_high.resize(d);
    const double low = y(0);
    const double high = y(2 * d + 1);
    for (int i = 0; i < d; ++i) {
        const double up = y(i + 1) - low;          // Y(i+1) - Y(1)
        const double top = high - y(d + i + 1);    // Y(2d+2) - Y(d+i+1)
        c.odd(i) = 0.25 * (top + up);
        c.even(i) = 0.25 * (top - up);
        c.ee_low(i) = 0.5 * up;
        c.ee_high(i) = 0.5 * top;
    }
    c.magnitude = c.odd.cwiseAbs() + c.even.cwiseAbs();
    const double total = c.magnitude.sum();
    c.share = total > 0.0 ? Eigen::VectorXd(c.magnitude / total) : Eigen::VectorXd::Zero(d);
    return c;
}

ScreeningOutcome cotter_sensitivity(const CotterIndices& indices, double threshold,
                                    const std::vector<std::string>& names)
{
    if (!(indices.magnitude.sum() > 0.0))
        throw DomainError("all Cotter contrasts are zero");
    if (!(threshold >= 0.0 && threshold < 1.0))
        throw DomainError("threshold must lie in [0, 1)");
    ScreeningOutcome out;
    out.method = "cotter";
    out.names = names.empty() ? default_names(indices.d()) : names;
    out.statistics = indices.share;
    for (int i = 0; i < indices.d(); ++i)
        if (indices.share(i) > threshold)
            out.selected.push_back(i);
    return out;
}

} // namespace screenkit
