#include "screenkit/shrinkage.hpp"

#include "screenkit/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace screenkit {

DualSimplex::DualSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& c) : A_(A), c_(c)
{
    m_ = A.rows();
    n_ = A.cols();
    if (c.size() != n_)
        throw DomainError("cost vector does not match the constraint matrix");
    if ((c.array() < 0.0).any())
        throw DomainError("dual simplex needs non-negative costs");
    T_.resize(m_, n_ + m_);
    T_ << A, Eigen::MatrixXd::Identity(m_, m_);
    reduced_.resize(n_ + m_);
    reduced_ << c, Eigen::VectorXd::Zero(m_);
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i)
        basis_[static_cast<std::size_t>(i)] = n_ + i;
}

double DualSimplex::min_reduced_cost() const { return reduced_.minCoeff(); }

void DualSimplex::pivot(Eigen::Index row, Eigen::Index col)
{
    const double p = T_(row, col);
    T_.row(row) /= p;
    x_(row) /= p;
    for (Eigen::Index i = 0; i < m_; ++i) {
        if (i == row)
            continue;
        const double f = T_(i, col);
        if (f != 0.0) {
            T_.row(i) -= f * T_.row(row);
            x_(i) -= f * x_(row);
        }
    }
    const double rc = reduced_(col);
    if (rc != 0.0)
        reduced_ -= rc * T_.row(row).transpose();
    reduced_(col) = 0.0;
    basis_[static_cast<std::size_t>(row)] = col;
}

void DualSimplex::refactor()
{
    Eigen::MatrixXd full(m_, n_ + m_);
    full << A_, Eigen::MatrixXd::Identity(m_, m_);
    Eigen::MatrixXd B(m_, m_);
    Eigen::VectorXd cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
        const auto j = basis_[static_cast<std::size_t>(i)];
        B.col(i) = full.col(j);
        cb(i) = j < n_ ? c_(j) : 0.0;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    T_ = lu.solve(full);
    x_ = lu.solve(b_);
    Eigen::VectorXd cfull(n_ + m_);
    cfull << c_, Eigen::VectorXd::Zero(m_);
    reduced_ = cfull - T_.transpose() * cb;
    for (Eigen::Index i = 0; i < m_; ++i)
        reduced_(basis_[static_cast<std::size_t>(i)]) = 0.0;
}

Eigen::VectorXd DualSimplex::solve(const Eigen::VectorXd& b)
{
    if (b.size() != m_)
        throw DomainError("right-hand side has the wrong length");
    b_ = b;
    x_ = T_.rightCols(m_) * b;
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    const double feas_tol = 1e-10 * scale;
    const double piv_tol = 1e-9;
    const long long limit = max_iterations > 0 ? max_iterations : 50 * (m_ + n_);
    iterations_ = 0;
    int degenerate = 0;
    bool refreshed = false;

    while (true) {
        if (iterations_ > 0 && iterations_ % 400 == 0)
            refactor();
        const bool bland = degenerate > 50;
        Eigen::Index row = -1;
        double worst = -feas_tol;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (x_(i) >= -feas_tol)
                continue;
            if (bland) {
                if (row < 0 || basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(row)])
                    row = i;
            } else if (x_(i) < worst) {
                worst = x_(i);
                row = i;
            }
        }
        if (row < 0) {
            // optimal; confirm against a fresh factorization once
            if (!refreshed && iterations_ > 0) {
                refactor();
                refreshed = true;
                continue;
            }
            break;
        }
        Eigen::Index col = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n_ + m_; ++j) {
            const double a = T_(row, j);
            if (a >= -piv_tol)
                continue;
            const double ratio = std::max(0.0, reduced_(j)) / -a;
            if (ratio < best - 1e-14) {
                best = ratio;
                col = j;
            }
        }
        if (col < 0)
            throw InfeasibleError("linear program is infeasible");
        degenerate = best <= 1e-14 ? degenerate + 1 : 0;
        pivot(row, col);
        if (++iterations_ > limit)
            throw IterationLimitError("simplex iteration limit reached (" + std::to_string(limit) + ")");
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
        const auto j = basis_[static_cast<std::size_t>(i)];
        if (j < n_)
            z(j) = std::max(0.0, x_(i));
    }
    objective_ = c_.dot(z);
    return z;
}

// ---------------------------------------------------------------------------

namespace {

struct DantzigLp {
    Eigen::MatrixXd G;
    Eigen::VectorXd c;
    DualSimplex simplex;

    static DualSimplex make(const Eigen::MatrixXd& G)
    {
        const auto p = G.rows();
        Eigen::MatrixXd A(2 * p, 2 * p);
        A << G, -G, -G, G;
        return DualSimplex(A, Eigen::VectorXd::Ones(2 * p));
    }

    DantzigLp(const Eigen::MatrixXd& H, const Eigen::VectorXd& y)
        : G(H.transpose() * H), c(H.transpose() * y), simplex(make(G))
    {
    }

    Eigen::VectorXd solve(double s)
    {
        const auto p = G.rows();
        Eigen::VectorXd b(2 * p);
        b << (c.array() + s).matrix(), (s - c.array()).matrix();
        const Eigen::VectorXd z = simplex.solve(b);
        return z.head(p) - z.tail(p);
    }
};

void check_inputs(const Eigen::MatrixXd& H, const Eigen::VectorXd& y)
{
    if (H.rows() != y.size())
        throw DomainError("model matrix has " + std::to_string(H.rows()) + " rows but y has " +
                          std::to_string(y.size()));
    if (H.cols() == 0)
        throw DomainError("model matrix has no columns");
    for (Eigen::Index j = 0; j < H.cols(); ++j)
        if (H.col(j).squaredNorm() == 0.0)
            throw DomainError("model matrix column " + std::to_string(j + 1) + " is zero");
    if (!H.allFinite() || !y.allFinite())
        throw DomainError("non-finite input to the Dantzig selector");
}

} // namespace

Eigen::VectorXd dantzig_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double s)
{
    if (!(s >= 0.0))
        throw InfeasibleError("Dantzig bound s must be non-negative");
    check_inputs(H, y);
    DantzigLp lp(H, y);
    return lp.solve(s);
}

DantzigPath dantzig_path(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, const DantzigGrid& grid)
{
    check_inputs(H, y);
    DantzigLp lp(H, y);
    DantzigPath path;
    if (!grid.explicit_s.empty()) {
        path.s = grid.explicit_s;
        for (std::size_t k = 0; k < path.s.size(); ++k)
            if (!(path.s[k] >= 0.0) || (k > 0 && path.s[k] > path.s[k - 1]))
                throw DomainError("explicit s grid must be non-negative and decreasing");
    } else {
        if (grid.points < 1 || !(grid.min_ratio > 0.0 && grid.min_ratio <= 1.0))
            throw DomainError("grid needs at least one point and a ratio in (0, 1]");
        const double smax = lp.c.cwiseAbs().maxCoeff();
        for (int k = 0; k < grid.points; ++k) {
            const double frac = grid.points == 1 ? 0.0 : static_cast<double>(k) / (grid.points - 1);
            path.s.push_back(smax * std::pow(grid.min_ratio, frac));
        }
    }
    path.coefficients.resize(static_cast<Eigen::Index>(path.s.size()), H.cols());
    for (std::size_t k = 0; k < path.s.size(); ++k) {
        const Eigen::VectorXd beta = lp.solve(path.s[k]);
        path.coefficients.row(static_cast<Eigen::Index>(k)) = beta.transpose();
        path.residuals.push_back((lp.c - lp.G * beta).cwiseAbs().maxCoeff() - path.s[k]);
    }
    return path;
}

double aicc(double rss, int n, int k)
{
    if (n - k - 1 <= 0)
        return std::numeric_limits<double>::quiet_NaN();
    return n * std::log(rss / n) + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

GaussDantzigResult gauss_dantzig(const ModelMatrix& H, const Eigen::VectorXd& y, int d,
                                 const GaussDantzigOptions& options, const std::vector<std::string>& names)
{
    const auto n = H.H.rows();
    if (y.size() != n)
        throw DomainError("response length does not match the model matrix");
    if (!(options.threshold >= 0.0))
        throw DomainError("threshold must be non-negative");
    std::vector<std::size_t> cols;
    for (std::size_t t = 0; t < H.terms.size(); ++t)
        if (!H.terms[t].is_intercept())
            cols.push_back(t);
    if (cols.empty())
        throw DomainError("model has no terms besides the intercept");
    if (H.terms.max_variable() >= d)
        throw IndexError("model term references a variable beyond d");

    const auto q = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd Z(n, q);
    for (Eigen::Index j = 0; j < q; ++j)
        Z.col(j) = H.H.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
    Eigen::MatrixXd Zs = Z.rowwise() - Z.colwise().mean();
    for (Eigen::Index j = 0; j < q; ++j) {
        const double norm = Zs.col(j).norm();
        if (norm <= 1e-12)
            throw DomainError("term " + H.labels[cols[static_cast<std::size_t>(j)]] + " is constant over the design");
        Zs.col(j) /= norm;
    }
    const double ybar = y.mean();
    const Eigen::VectorXd yc = y.array() - ybar;
    const double tss = yc.squaredNorm();

    GaussDantzigResult r;
    for (auto t : cols)
        r.term_labels.push_back(H.labels[t]);
    r.path = dantzig_path(Zs, yc, options.grid);

    const int nn = static_cast<int>(n);
    const double floor = std::max(1e-300, 1e-12 * tss);
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> supports;
    bool any_support = false;
    for (Eigen::Index k = 0; k < r.path.coefficients.rows(); ++k) {
        const Eigen::RowVectorXd beta = r.path.coefficients.row(k);
        const double tol = 1e-9 * std::max(1.0, beta.cwiseAbs().maxCoeff());
        std::vector<int> support;
        for (Eigen::Index j = 0; j < q; ++j)
            if (std::abs(beta(j)) > tol)
                support.push_back(static_cast<int>(j));
        any_support = any_support || !support.empty();
        const int kk = static_cast<int>(support.size()) + 1;
        double score = std::numeric_limits<double>::quiet_NaN();
        if (nn - kk - 1 > 0) {
            Eigen::MatrixXd X(n, kk);
            X.col(0).setOnes();
            for (int u = 0; u < kk - 1; ++u)
                X.col(u + 1) = Z.col(support[static_cast<std::size_t>(u)]);
            try {
                const auto fit = least_squares(X, y);
                score = aicc(std::max(fit.rss, floor), nn, kk);
            } catch (const SingularError&) {
                score = std::numeric_limits<double>::quiet_NaN();
            }
        }
        r.aicc.push_back(score);
        supports.push_back(support);
        if (std::isfinite(score) && score < best - 1e-12) {
            best = score;
            r.chosen = static_cast<int>(k);
        }
    }
    r.empty_support = !any_support;

    ScreeningOutcome& out = r.outcome;
    out.method = "gauss-dantzig";
    out.names = names.empty() ? default_names(d) : names;
    out.statistics = Eigen::VectorXd::Zero(d);
    if (r.chosen < 0) {
        r.refit_coefficients = Eigen::VectorXd::Constant(1, ybar);
        return r;
    }
    r.chosen_s = r.path.s[static_cast<std::size_t>(r.chosen)];
    const auto& support = supports[static_cast<std::size_t>(r.chosen)];
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(support.size()) + 1);
    X.col(0).setOnes();
    for (std::size_t u = 0; u < support.size(); ++u)
        X.col(static_cast<Eigen::Index>(u) + 1) = Z.col(support[u]);
    r.refit_coefficients = least_squares(X, y).coefficients;
    std::set<int> active;
    for (std::size_t u = 0; u < support.size(); ++u) {
        const double coef = r.refit_coefficients(static_cast<Eigen::Index>(u) + 1);
        if (std::abs(coef) <= options.threshold)
            continue;
        r.active_terms.push_back(support[u]);
        for (int v : H.terms[cols[static_cast<std::size_t>(support[u])]].variables()) {
            active.insert(v);
            out.statistics(v) = std::max(out.statistics(v), std::abs(coef));
        }
    }
    out.selected.assign(active.begin(), active.end());
    return r;
}

} // namespace screenkit
