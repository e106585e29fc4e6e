#include "screenkit/gp.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/parallel.hpp"
#include "screenkit/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace screenkit {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_alpha(double a)
{
    if (!(a > 0.0 && a <= 2.0))
        throw DomainError("smoothness exponent must lie in (0, 2]");
}

// Cholesky of R + nugget I with escalation; returns false past kMaxNugget.
bool factor(const Eigen::MatrixXd& R, double& nugget, Eigen::LLT<Eigen::MatrixXd>& llt)
{
    const auto n = R.rows();
    for (double g = nugget; g <= kMaxNugget * 1.0000001; g *= 10.0) {
        llt.compute(R + g * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            nugget = g;
            return true;
        }
    }
    return false;
}

GpFit profile(const Eigen::MatrixXd& R, const Eigen::VectorXd& y, double nugget)
{
    const auto n = y.size();
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!factor(R, nugget, llt))
        throw SingularError("correlation matrix not positive definite at nugget " + std::to_string(kMaxNugget));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd ri1 = llt.solve(ones);
    const double beta0 = ri1.dot(y) / ri1.sum();
    const Eigen::VectorXd r = y - beta0 * ones;
    const double sigma2 = r.dot(llt.solve(r)) / static_cast<double>(n);
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw NumericError("degenerate process variance estimate");
    const Eigen::MatrixXd& L = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        logdet += 2.0 * std::log(L(i, i));
    GpFit f;
    f.beta0 = beta0;
    f.sigma2 = sigma2;
    f.nugget = nugget;
    const double nn = static_cast<double>(n);
    f.loglik = -0.5 * nn * std::log(sigma2) - 0.5 * logdet - 0.5 * nn * (1.0 + kLog2Pi);
    return f;
}

Eigen::MatrixXd abs_power(const Eigen::VectorXd& x, double a)
{
    const auto n = x.size();
    Eigen::MatrixXd D(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            D(i, j) = a == 2.0 ? (x(i) - x(j)) * (x(i) - x(j)) : std::pow(std::abs(x(i) - x(j)), a);
    return D;
}

} // namespace

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& alpha)
{
    if (theta.size() != X.cols() || alpha.size() != X.cols())
        throw DomainError("theta and alpha need one entry per variable");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.rows(), X.rows());
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        if (!(theta(k) >= 0.0))
            throw DomainError("theta must be non-negative");
        check_alpha(alpha(k));
        if (theta(k) > 0.0)
            S += theta(k) * abs_power(X.col(k), alpha(k));
    }
    Eigen::MatrixXd R = (-S.array()).exp().matrix();
    R.diagonal().setOnes();
    return R;
}

GpFit gp_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                const Eigen::VectorXd& alpha, double nugget)
{
    if (X.rows() < 2)
        throw DomainError("need at least two runs");
    if (y.size() != X.rows())
        throw DomainError("response length does not match the design");
    if (!(nugget > 0.0))
        throw DomainError("nugget must be positive");
    GpFit f = profile(correlation_matrix(X, theta, alpha), y, nugget);
    f.theta = theta;
    f.alpha = alpha;
    return f;
}

GpWorkspace::GpWorkspace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) : y_(y), alpha_(alpha)
{
    check_alpha(alpha);
    if (X.rows() < 2)
        throw DomainError("need at least two runs");
    if (y.size() != X.rows())
        throw DomainError("response length does not match the design");
    for (Eigen::Index k = 0; k < X.cols(); ++k)
        dist_.push_back(abs_power(X.col(k), alpha));
}

GpFit GpWorkspace::loglik(const std::vector<int>& block, const Eigen::VectorXd& theta) const
{
    if (static_cast<int>(block.size()) != d())
        throw DomainError("block map needs one entry per variable");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n(), n());
    Eigen::VectorXd full(d());
    for (int k = 0; k < d(); ++k) {
        full(k) = theta(block[static_cast<std::size_t>(k)]);
        S += full(k) * dist_[static_cast<std::size_t>(k)];
    }
    GpFit f = profile((-S.array()).exp().matrix(), y_, kDefaultNugget);
    f.theta = full;
    f.alpha = Eigen::VectorXd::Constant(d(), alpha_);
    return f;
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd start,
                             double lo, double hi, const NelderMeadOptions& o)
{
    const auto m = start.size();
    auto clamp = [&](Eigen::VectorXd v) {
        for (Eigen::Index i = 0; i < m; ++i)
            v(i) = std::clamp(v(i), lo, hi);
        return v;
    };
    NelderMeadResult res;
    auto eval = [&](const Eigen::VectorXd& v) {
        ++res.evaluations;
        const double value = f(v);
        return std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
    };
    std::vector<Eigen::VectorXd> pts{clamp(start)};
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::VectorXd p = pts[0];
        p(i) += p(i) + o.initial_step > hi ? -o.initial_step : o.initial_step;
        pts.push_back(clamp(p));
    }
    std::vector<double> val;
    for (const auto& p : pts)
        val.push_back(eval(p));
    std::vector<std::size_t> idx(pts.size());
    while (true) {
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
        const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
        const double spread = val[worst] - val[best];
        if (std::isfinite(spread) && spread <= o.tolerance * (1.0 + std::abs(val[best]))) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= o.max_evaluations)
            break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m);
        for (std::size_t i = 0; i + 1 < idx.size(); ++i)
            centroid += pts[idx[i]];
        centroid /= static_cast<double>(m);
        const Eigen::VectorXd xr = clamp(centroid + (centroid - pts[worst]));
        const double fr = eval(xr);
        if (fr < val[best]) {
            const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - pts[worst]));
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                val[worst] = fe;
            } else {
                pts[worst] = xr;
                val[worst] = fr;
            }
        } else if (fr < val[second]) {
            pts[worst] = xr;
            val[worst] = fr;
        } else {
            const bool outside = fr < val[worst];
            const Eigen::VectorXd xc =
                outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                        : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
            const double fc = eval(xc);
            if (fc < (outside ? fr : val[worst])) {
                pts[worst] = xc;
                val[worst] = fc;
            } else {
                for (std::size_t i = 1; i < idx.size(); ++i) {
                    pts[idx[i]] = pts[best] + 0.5 * (pts[idx[i]] - pts[best]);
                    val[idx[i]] = eval(pts[idx[i]]);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
    res.x = pts[best];
    res.value = val[best];
    return res;
}

GpFit gp_fit(const GpWorkspace& ws, const std::vector<int>& block, int blocks, const GpOptimizeOptions& o,
             const Eigen::VectorXd& warm, bool* converged)
{
    if (blocks < 1)
        throw DomainError("need at least one theta block");
    if (!(o.theta_min > 0.0 && o.theta_max > o.theta_min))
        throw DomainError("theta box must satisfy 0 < min < max");
    const double lo = std::log(o.theta_min), hi = std::log(o.theta_max);
    auto objective = [&](const Eigen::VectorXd& logt) {
        try {
            return -ws.loglik(block, logt.array().exp().matrix()).loglik;
        } catch (const SingularError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    Rng rng(o.seed);
    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    const int starts = std::max(1, o.starts);
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd x0(blocks);
        if (s == 0 && warm.size() == blocks) {
            x0 = warm.array().max(o.theta_min).min(o.theta_max).log().matrix();
        } else {
            for (int b = 0; b < blocks; ++b)
                x0(b) = rng.uniform(lo, hi);
        }
        const auto r = nelder_mead(objective, x0, lo, hi, o.search);
        any_converged = any_converged || r.converged;
        if (r.value < best.value)
            best = r;
    }
    if (converged)
        *converged = any_converged;
    if (!std::isfinite(best.value))
        throw SingularError("no theta in the search box gives a usable correlation matrix");
    return ws.loglik(block, best.x.array().exp().matrix());
}

SgpvsResult sgpvs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SgpvsOptions& o)
{
    if (!(o.c > 0.0))
        throw DomainError("release threshold c must be positive");
    const int d = static_cast<int>(X.cols());
    SgpvsResult res;
    res.outcome.method = "sgpvs";
    res.outcome.names = default_names(d);
    res.outcome.statistics = Eigen::VectorXd::Zero(d);
    if (y.size() != X.rows())
        throw DomainError("response length does not match the design");
    if ((y.array() - y.mean()).abs().maxCoeff() == 0.0) {
        res.diagnostics.push_back("constant response: nothing to release");
        return res;
    }
    const GpWorkspace ws(X, y, o.alpha);
    std::vector<int> block(static_cast<std::size_t>(d), 0);
    bool conv = true;
    GpFit current = gp_fit(ws, block, 1, o.optimizer, {}, &conv);
    if (!conv)
        res.diagnostics.push_back("tied model search did not converge");
    Eigen::VectorXd theta(1);
    theta(0) = current.theta(0);
    int blocks = 1;

    while (static_cast<int>(res.released.size()) < d) {
        std::vector<int> candidates;
        for (int j = 0; j < d; ++j)
            if (block[static_cast<std::size_t>(j)] == 0)
                candidates.push_back(j);
        std::vector<GpFit> fits(candidates.size());
        std::vector<char> ok(candidates.size(), 0), converged(candidates.size(), 0);
        parallel_for(
            static_cast<int>(candidates.size()),
            [&](int c) {
                std::vector<int> trial = block;
                trial[static_cast<std::size_t>(candidates[static_cast<std::size_t>(c)])] = blocks;
                Eigen::VectorXd warm(blocks + 1);
                warm << theta, theta(0);
                GpOptimizeOptions opt = o.optimizer;
                opt.starts = 1 + o.candidate_starts;
                opt.seed = o.optimizer.seed + 7919u * static_cast<std::uint64_t>(res.released.size() + 1) +
                           static_cast<std::uint64_t>(candidates[static_cast<std::size_t>(c)]);
                bool cv = true;
                try {
                    fits[static_cast<std::size_t>(c)] = gp_fit(ws, trial, blocks + 1, opt, warm, &cv);
                    ok[static_cast<std::size_t>(c)] = 1;
                } catch (const Error&) {
                }
                converged[static_cast<std::size_t>(c)] = cv;
            },
            0);
        int pick = -1;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (!ok[c]) {
                res.diagnostics.push_back("release of " + res.outcome.names[static_cast<std::size_t>(candidates[c])] +
                                          " skipped: fit failed");
                continue;
            }
            if (!converged[c])
                res.diagnostics.push_back("release of " + res.outcome.names[static_cast<std::size_t>(candidates[c])] +
                                          " did not converge");
            if (pick < 0 || fits[c].loglik > fits[static_cast<std::size_t>(pick)].loglik)
                pick = static_cast<int>(c);
        }
        if (pick < 0 || fits[static_cast<std::size_t>(pick)].loglik - current.loglik <= o.c)
            break;
        const int j = candidates[static_cast<std::size_t>(pick)];
        const GpFit& f = fits[static_cast<std::size_t>(pick)];
        res.steps.push_back({j, f.loglik, f.loglik - current.loglik});
        res.released.push_back(j);
        block[static_cast<std::size_t>(j)] = blocks;
        Eigen::VectorXd next(blocks + 1);
        for (int k = 0; k < d; ++k)
            next(block[static_cast<std::size_t>(k)]) = f.theta(k);
        ++blocks;
        theta = next;
        current = f;
    }
    res.fit = current;
    res.tied_theta = theta(0);
    res.outcome.statistics = current.theta;
    for (int j : res.released)
        if (current.theta(j) > res.tied_theta)
            res.outcome.selected.push_back(j);
    std::sort(res.outcome.selected.begin(), res.outcome.selected.end());
    return res;
}

// ---------------------------------------------------------------------------

double quantile(std::vector<double> v, double p)
{
    if (v.empty())
        throw DomainError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("quantile level must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

class RhoPosterior {
public:
    RhoPosterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double a, double b) : y_(y), a_(a), b_(b)
    {
        for (Eigen::Index k = 0; k < X.cols(); ++k)
            dist_.push_back(abs_power(X.col(k), 2.0));
    }

    // log p(y | rho) up to a constant; -inf when R cannot be factored.
    double log_marginal(const Eigen::MatrixXd& S) const
    {
        const auto n = y_.size();
        Eigen::MatrixXd R = (-S.array()).exp().matrix();
        double nugget = kDefaultNugget;
        Eigen::LLT<Eigen::MatrixXd> llt;
        if (!factor(R, nugget, llt))
            return -std::numeric_limits<double>::infinity();
        const Eigen::VectorXd ri1 = llt.solve(Eigen::VectorXd::Ones(n));
        const double one_ri_one = ri1.sum();
        const double beta = ri1.dot(y_) / one_ri_one;
        const Eigen::VectorXd r = y_ - beta * Eigen::VectorXd::Ones(n);
        const double s2 = std::max(0.0, r.dot(llt.solve(r)));
        const Eigen::MatrixXd& L = llt.matrixLLT();
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            logdet += 2.0 * std::log(L(i, i));
        return -0.5 * logdet - 0.5 * std::log(one_ri_one) -
               (a_ + 0.5 * static_cast<double>(n - 1)) * std::log(b_ + 0.5 * s2);
    }

    const Eigen::MatrixXd& dist(std::size_t k) const { return dist_[k]; }
    std::size_t d() const { return dist_.size(); }

private:
    Eigen::VectorXd y_;
    double a_, b_;
    std::vector<Eigen::MatrixXd> dist_;
};

double theta_of(double rho) { return rho >= 1.0 ? 0.0 : -4.0 * std::log(rho); }

} // namespace

RhoChain rho_chain(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RdvsOptions& o, std::uint64_t seed)
{
    if (o.iterations <= o.burn_in || o.burn_in < 0)
        throw DomainError("chain length must exceed the burn-in");
    if (!(o.walk_width > 0.0 && o.walk_width < 1.0))
        throw DomainError("walk width must lie in (0, 1)");
    Rng rng(seed);
    const RhoPosterior post(X, y, o.prior_a, o.prior_b);
    const auto d = post.d();
    const auto n = X.rows();
    Eigen::VectorXd rho(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k)
        rho(static_cast<Eigen::Index>(k)) = rng.uniform(0.2, 0.95);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < d; ++k)
        S += theta_of(rho(static_cast<Eigen::Index>(k))) * post.dist(k);
    double current = post.log_marginal(S);
    std::vector<std::vector<double>> draws(d);
    long long proposals = 0, accepted = 0, walks = 0, walks_accepted = 0;
    for (int it = 0; it < o.iterations; ++it) {
        for (std::size_t k = 0; k < d; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double old = rho(kk);
            double proposal = old;
            double log_ratio = 0.0;
            bool valid = true;
            bool walk = false;
            if (old >= 1.0) {
                proposal = rng.uniform();
                log_ratio = std::log(0.5);
            } else if (rng.bernoulli(0.5)) {
                proposal = 1.0;
                log_ratio = std::log(2.0);
            } else {
                proposal = old + o.walk_width * (rng.uniform() - 0.5);
                valid = proposal > 0.0 && proposal < 1.0;
                walk = true;
            }
            ++proposals;
            walks += walk;
            if (!valid)
                continue;
            const Eigen::MatrixXd trial = S + (theta_of(proposal) - theta_of(old)) * post.dist(k);
            const double value = post.log_marginal(trial);
            if (std::log(rng.uniform()) < value - current + log_ratio) {
                rho(kk) = proposal;
                S = trial;
                current = value;
                ++accepted;
                walks_accepted += walk;
            }
        }
        if (it >= o.burn_in)
            for (std::size_t k = 0; k < d; ++k)
                draws[k].push_back(theta_of(rho(static_cast<Eigen::Index>(k))));
    }
    RhoChain chain;
    chain.median_theta.resize(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k)
        chain.median_theta(static_cast<Eigen::Index>(k)) = median(draws[k]);
    // random-walk moves when there are any; jumps to and from rho = 1 are rejected often by design
    chain.acceptance = walks > 0 ? static_cast<double>(walks_accepted) / static_cast<double>(walks)
                                 : static_cast<double>(accepted) / static_cast<double>(std::max(1LL, proposals));
    return chain;
}

RdvsResult rdvs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RdvsOptions& o)
{
    if (o.b < 10)
        throw DomainError("rdvs needs b >= 10 reference chains");
    if (!(o.percentile > 0.0 && o.percentile < 1.0))
        throw DomainError("percentile must lie in (0, 1)");
    if (y.size() != X.rows())
        throw DomainError("response length does not match the design");
    const auto n = X.rows();
    const int d = static_cast<int>(X.cols());
    const double lo = X.minCoeff(), hi = X.maxCoeff();
    Rng root(o.seed);
    std::vector<std::uint64_t> seeds;
    for (int c = 0; c < o.b; ++c)
        seeds.push_back(root.next());
    std::vector<RhoChain> chains(static_cast<std::size_t>(o.b));
    parallel_for(
        o.b,
        [&](int c) {
            Rng rng(seeds[static_cast<std::size_t>(c)]);
            Eigen::MatrixXd Xa(n, d + 1);
            Xa.leftCols(d) = X;
            // inert column: one random Latin hypercube column on the design's range
            const auto perm = rng.permutation(static_cast<int>(n));
            for (Eigen::Index i = 0; i < n; ++i)
                Xa(i, d) = lo + (hi - lo) * (perm[static_cast<std::size_t>(i)] + rng.uniform()) / static_cast<double>(n);
            chains[static_cast<std::size_t>(c)] = rho_chain(Xa, y, o, rng.next());
        },
        o.threads);

    RdvsResult res;
    res.outcome.method = "rdvs";
    res.outcome.names = default_names(d);
    res.outcome.statistics.resize(d);
    res.medians.resize(o.b, d);
    for (int c = 0; c < o.b; ++c) {
        const auto& ch = chains[static_cast<std::size_t>(c)];
        res.reference.push_back(ch.median_theta(d));
        res.medians.row(c) = ch.median_theta.head(d).transpose();
        res.acceptance.push_back(ch.acceptance);
        if (ch.acceptance < 0.05 || ch.acceptance > 0.8)
            res.warnings.push_back("chain " + std::to_string(c) + " acceptance " + std::to_string(ch.acceptance) +
                                   " outside [0.05, 0.8]");
    }
    res.threshold = quantile(res.reference, o.percentile);
    for (int k = 0; k < d; ++k) {
        std::vector<double> col(res.medians.col(k).data(), res.medians.col(k).data() + o.b);
        res.outcome.statistics(k) = median(col);
        if (res.outcome.statistics(k) > res.threshold)
            res.outcome.selected.push_back(k);
    }
    return res;
}

} // namespace screenkit
