#include "screenkit/design.hpp"

#include "screenkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace screenkit {

const char* coding_name(Coding c)
{
    switch (c) {
    case Coding::TwoLevel:
        return "two-level";
    case Coding::ThreeLevel:
        return "three-level";
    case Coding::Unit:
        return "unit";
    case Coding::Symmetric:
        return "symmetric";
    }
    return "?";
}

Coding parse_coding(const std::string& s)
{
    if (s == "two-level")
        return Coding::TwoLevel;
    if (s == "three-level")
        return Coding::ThreeLevel;
    if (s == "unit")
        return Coding::Unit;
    if (s == "symmetric")
        return Coding::Symmetric;
    throw UsageError("unknown coding '" + s + "'");
}

namespace {

bool in_value_set(double v, Coding c)
{
    switch (c) {
    case Coding::TwoLevel:
        return v == -1.0 || v == 1.0;
    case Coding::ThreeLevel:
        return v == -1.0 || v == 0.0 || v == 1.0;
    case Coding::Unit:
        return v >= 0.0 && v <= 1.0;
    case Coding::Symmetric:
        return v >= -1.0 && v <= 1.0;
    }
    return false;
}

} // namespace

std::vector<std::string> default_names(int d)
{
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(d));
    for (int i = 1; i <= d; ++i)
        names.push_back("x" + std::to_string(i));
    return names;
}

Design::Design(Eigen::MatrixXd runs, Coding coding, std::vector<std::string> names, Provenance provenance)
    : runs_(std::move(runs)), coding_(coding), names_(std::move(names)), provenance_(std::move(provenance))
{
    if (runs_.rows() < 1 || runs_.cols() < 1)
        throw DomainError("design needs at least one run and one variable");
    if (names_.empty())
        names_ = default_names(d());
    if (static_cast<int>(names_.size()) != d())
        throw DomainError("design has " + std::to_string(d()) + " columns but " +
                          std::to_string(names_.size()) + " names");
    if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size())
        throw DomainError("variable names must be unique");
    for (int j = 0; j < d(); ++j)
        for (int i = 0; i < n(); ++i)
            if (!in_value_set(runs_(i, j), coding_)) {
                std::ostringstream msg;
                msg << "entry (" << i + 1 << ", " << j + 1 << ") = " << runs_(i, j) << " is outside the "
                    << coding_name(coding_) << " coding";
                throw DomainError(msg.str());
            }
}

Design Design::with_provenance(Provenance p) const { return Design(runs_, coding_, names_, std::move(p)); }

Design Design::slice_rows(int first, int count) const
{
    if (first < 0 || count < 1 || first + count > n())
        throw IndexError("row slice out of range");
    return Design(runs_.middleRows(first, count), coding_, names_, provenance_);
}

Design Design::select_columns(const std::vector<int>& vars, bool keep_names) const
{
    Eigen::MatrixXd sub(n(), static_cast<Eigen::Index>(vars.size()));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < vars.size(); ++k) {
        if (vars[k] < 0 || vars[k] >= d())
            throw IndexError("column " + std::to_string(vars[k]) + " out of range");
        sub.col(static_cast<Eigen::Index>(k)) = runs_.col(vars[k]);
        names.push_back(names_[static_cast<std::size_t>(vars[k])]);
    }
    if (!keep_names)
        names.clear();
    return Design(std::move(sub), coding_, std::move(names), provenance_);
}

Design Design::to_symmetric() const
{
    if (coding_ != Coding::Unit)
        throw DomainError("to_symmetric expects a [0,1] design");
    Eigen::MatrixXd m = (2.0 * runs_.array() - 1.0).cwiseMax(-1.0).cwiseMin(1.0).matrix();
    return Design(std::move(m), Coding::Symmetric, names_, provenance_);
}

// ---------------------------------------------------------------------------
// Terms

Term::Term(std::vector<std::pair<int, int>> f)
{
    std::sort(f.begin(), f.end());
    for (const auto& [var, power] : f) {
        if (var < 0)
            throw IndexError("negative variable index in term");
        if (power < 0)
            throw DomainError("negative power in term");
        if (power == 0)
            continue;
        if (!factors.empty() && factors.back().first == var)
            factors.back().second += power;
        else
            factors.emplace_back(var, power);
    }
}

Term Term::interaction(std::vector<int> vars)
{
    std::vector<std::pair<int, int>> f;
    for (int v : vars)
        f.emplace_back(v, 1);
    return Term(std::move(f));
}

int Term::degree() const
{
    int s = 0;
    for (const auto& f : factors)
        s += f.second;
    return s;
}

std::vector<int> Term::variables() const
{
    std::vector<int> v;
    for (const auto& f : factors)
        v.push_back(f.first);
    return v;
}

std::string Term::label(const std::vector<std::string>& names) const
{
    if (factors.empty())
        return "(Intercept)";
    std::string s;
    for (const auto& [var, power] : factors) {
        if (!s.empty())
            s += ":";
        s += var < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(var)]
                                                  : "x" + std::to_string(var + 1);
        if (power > 1)
            s += "^" + std::to_string(power);
    }
    return s;
}

TermSet::TermSet(std::vector<Term> terms) : terms_(std::move(terms))
{
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (terms_[i].is_intercept() && i != 0)
            throw DomainError("intercept must be the first term");
        for (std::size_t j = 0; j < i; ++j)
            if (terms_[j] == terms_[i])
                throw DomainError("duplicate term " + terms_[i].label({}));
    }
}

TermSet TermSet::intercept_only() { return TermSet({Term::intercept()}); }

TermSet TermSet::main_effects(int d, bool intercept)
{
    std::vector<Term> t;
    if (intercept)
        t.push_back(Term::intercept());
    for (int i = 0; i < d; ++i)
        t.push_back(Term::main(i));
    return TermSet(std::move(t));
}

TermSet TermSet::main_and_interactions(int d, bool intercept)
{
    std::vector<Term> t = main_effects(d, intercept).terms_;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            t.push_back(Term::interaction({i, j}));
    return TermSet(std::move(t));
}

TermSet TermSet::main_interactions_quadratics(int d, bool intercept)
{
    std::vector<Term> t = main_and_interactions(d, intercept).terms_;
    for (int i = 0; i < d; ++i)
        t.push_back(Term::quadratic(i));
    return TermSet(std::move(t));
}

namespace {

void combinations(int d, int k, int start, std::vector<int>& cur, std::vector<Term>& out)
{
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(Term::interaction(cur));
        return;
    }
    for (int i = start; i < d; ++i) {
        cur.push_back(i);
        combinations(d, k, i + 1, cur, out);
        cur.pop_back();
    }
}

} // namespace

TermSet TermSet::interactions(int d, int min_order, int max_order)
{
    std::vector<Term> t;
    for (int k = std::max(1, min_order); k <= max_order; ++k) {
        std::vector<int> cur;
        combinations(d, k, 0, cur, t);
    }
    return TermSet(std::move(t));
}

int TermSet::max_variable() const
{
    int m = -1;
    for (const auto& t : terms_)
        for (const auto& f : t.factors)
            m = std::max(m, f.first);
    return m;
}

std::vector<std::string> TermSet::labels(const std::vector<std::string>& names) const
{
    std::vector<std::string> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_)
        out.push_back(t.label(names));
    return out;
}

ModelMatrix build_model_matrix(const Design& design, const TermSet& terms)
{
    if (terms.max_variable() >= design.d())
        throw IndexError("term references variable x" + std::to_string(terms.max_variable() + 1) +
                         " but the design has " + std::to_string(design.d()) + " variables");
    const auto& X = design.runs();
    Eigen::MatrixXd H = Eigen::MatrixXd::Ones(design.n(), static_cast<Eigen::Index>(terms.size()));
    for (std::size_t u = 0; u < terms.size(); ++u) {
        auto col = H.col(static_cast<Eigen::Index>(u));
        for (const auto& [var, power] : terms[u].factors)
            for (int r = 0; r < design.n(); ++r)
                col(r) *= power == 1 ? X(r, var) : std::pow(X(r, var), power);
    }
    return {std::move(H), terms, terms.labels(design.names())};
}

// ---------------------------------------------------------------------------
// Least squares and aliasing

namespace {

std::string column_label(const std::vector<std::string>& labels, Eigen::Index j)
{
    if (j < static_cast<Eigen::Index>(labels.size()))
        return labels[static_cast<std::size_t>(j)];
    return "column " + std::to_string(j + 1);
}

/// Pivoted QR with the library's relative rank cut-off; throws on deficiency.
Eigen::ColPivHouseholderQR<Eigen::MatrixXd> checked_qr(const Eigen::MatrixXd& H,
                                                       const std::vector<std::string>& labels)
{
    if (H.cols() == 0)
        throw DomainError("model matrix has no columns");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
    const auto& sv = svd.singularValues();
    const double cut = kRankTolerance * (sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut)
            ++rank;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
    if (rank < H.cols()) {
        qr.setThreshold(kRankTolerance);
        qr.compute(H);
        // Columns pivoted past the numerical rank are the dependent ones.
        std::vector<Eigen::Index> dependent;
        for (Eigen::Index k = rank; k < H.cols(); ++k)
            dependent.push_back(qr.colsPermutation().indices()(k));
        std::sort(dependent.begin(), dependent.end());
        std::string msg = "model matrix is rank deficient (rank " + std::to_string(rank) + " of " +
                          std::to_string(H.cols()) + "); dependent columns:";
        for (auto j : dependent)
            msg += " " + column_label(labels, j);
        throw SingularError(msg);
    }
    return qr;
}

} // namespace

LeastSquaresFit least_squares(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                              const std::vector<std::string>& labels)
{
    if (H.rows() != y.size())
        throw DomainError("response length does not match model matrix rows");
    auto qr = checked_qr(H, labels);
    LeastSquaresFit fit;
    fit.coefficients = qr.solve(y);
    fit.residuals = y - H * fit.coefficients;
    fit.rss = fit.residuals.squaredNorm();
    return fit;
}

LeastSquaresFit least_squares(const ModelMatrix& H, const Eigen::VectorXd& y)
{
    return least_squares(H.H, y, H.labels);
}

AliasMatrix alias_matrix(const ModelMatrix& H, const ModelMatrix& H_tilde)
{
    if (H.H.rows() != H_tilde.H.rows())
        throw DomainError("alias matrix needs both model matrices on the same design");
    auto qr = checked_qr(H.H, H.labels);
    AliasMatrix out;
    const Eigen::MatrixXd gram = H.H.transpose() * H.H;
    const Eigen::MatrixXd off = gram - Eigen::MatrixXd(gram.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() == 0.0) {
        // Orthogonal columns: per-column scaling, exact for integer-coded designs.
        out.A = (H.H.transpose() * H_tilde.H).array().colwise() / gram.diagonal().array();
    } else {
        out.A = qr.solve(H_tilde.H);
        out.A = out.A.unaryExpr([](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; });
    }
    out.row_labels = H.labels;
    out.column_labels = H_tilde.labels;
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics screening_metrics(const std::vector<int>& selected, const std::vector<int>& truth, int d)
{
    std::set<int> S(selected.begin(), selected.end());
    std::set<int> T(truth.begin(), truth.end());
    for (int v : S)
        if (v < 0 || v >= d)
            throw IndexError("selected variable out of range");
    for (int v : T)
        if (v < 0 || v >= d)
            throw IndexError("true variable out of range");
    int hits = 0;
    int false_hits = 0;
    for (int v : S) {
        if (T.count(v))
            ++hits;
        else
            ++false_hits;
    }
    const int inactive = d - static_cast<int>(T.size());
    Metrics m;
    m.sensitivity = T.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(T.size());
    m.false_discovery = S.empty() ? 0.0 : static_cast<double>(false_hits) / static_cast<double>(S.size());
    m.type_one = inactive == 0 ? 0.0 : static_cast<double>(false_hits) / inactive;
    return m;
}

void ScreeningOutcome::score(const std::vector<int>& true_active)
{
    truth = true_active;
    const int d = statistics.size() > 0 ? static_cast<int>(statistics.size()) : static_cast<int>(names.size());
    metrics = screening_metrics(selected, true_active, d);
}

// ---------------------------------------------------------------------------
// Normal distribution helpers

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0)
            return -std::numeric_limits<double>::infinity();
        if (p == 1.0)
            return std::numeric_limits<double>::infinity();
        throw DomainError("normal_quantile: p must lie in [0, 1]");
    }
    // Acklam's rational approximation followed by one Halley step.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double e[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1);
    } else if (p <= 1 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1);
    }
    const double err = normal_cdf(x) - p;
    const double u = err * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    return x - u / (1 + x * u / 2);
}

std::vector<HalfNormalPoint> half_normal_data(const Eigen::VectorXd& estimates)
{
    const auto p = static_cast<int>(estimates.size());
    if (p < 1)
        throw DomainError("half-normal plot needs at least one estimate");
    std::vector<int> order(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(estimates(a)) < std::abs(estimates(b)); });
    std::vector<HalfNormalPoint> out;
    for (int i = 1; i <= p; ++i) {
        const double q = normal_quantile(0.5 + 0.5 * (i - 0.5) / p);
        const int idx = order[static_cast<std::size_t>(i - 1)];
        out.push_back({q, std::abs(estimates(idx)), idx});
    }
    return out;
}

} // namespace screenkit
