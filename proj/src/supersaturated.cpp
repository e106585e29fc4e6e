#include "screenkit/supersaturated.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/parallel.hpp"
#include "screenkit/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace screenkit {

const char* criterion_name(SsdCriterion c) { return c == SsdCriterion::Es2 ? "es2" : "bayesd"; }

SsdCriterion parse_criterion(const std::string& s)
{
    if (s == "es2")
        return SsdCriterion::Es2;
    if (s == "bayesd")
        return SsdCriterion::BayesD;
    throw UsageError("unknown criterion '" + s + "' (expected es2 or bayesd)");
}

namespace {

using IMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

IMatrix integer_runs(const Design& design)
{
    if (design.coding() != Coding::TwoLevel)
        throw DomainError("E(s^2) needs a two-level design");
    return design.runs().unaryExpr([](double v) { return static_cast<long long>(std::llround(v)); });
}

long long pair_sum(const IMatrix& S)
{
    long long total = 0;
    for (Eigen::Index i = 0; i < S.cols(); ++i)
        for (Eigen::Index j = i + 1; j < S.cols(); ++j)
            total += S(i, j) * S(i, j);
    return total;
}

} // namespace

std::optional<double> es2_lower_bound(int n, int d)
{
    if (n < 2 || d < 2 || n % 2 != 0)
        return std::nullopt;
    const double pairs = 0.5 * d * (d - 1.0);
    // Row Gram matrix XX': diagonal d, off-diagonal entries share the parity
    // of d and sum to -d per row when the columns balance.
    const long long m = n - 1;
    const double q = -static_cast<double>(d) / static_cast<double>(m);
    long long a = static_cast<long long>(std::floor(q));
    if (((a - d) % 2 + 2) % 2 != 0)
        --a;
    const long long k = (-d - m * a) / 2; // entries at a + 2
    const long long row = (m - k) * a * a + k * (a + 2) * (a + 2);
    const long long frob = static_cast<long long>(n) * d * d + static_cast<long long>(n) * row;
    long long total = (frob - static_cast<long long>(d) * n * n) / 2;
    // s_ij = n (mod 4) for balanced columns
    if (n % 4 == 0) {
        total = std::max(0LL, total);
        total = (total + 15) / 16 * 16;
    } else {
        const long long base = 4LL * d * (d - 1) / 2;
        const long long extra = std::max(0LL, total - base);
        total = base + (extra + 31) / 32 * 32;
    }
    return static_cast<double>(total) / pairs;
}

SsdCriterionValue es2(const Design& design)
{
    if (design.d() < 2)
        throw DomainError("E(s^2) needs at least two columns");
    const IMatrix X = integer_runs(design);
    const IMatrix S = X.transpose() * X;
    SsdCriterionValue v;
    v.criterion = SsdCriterion::Es2;
    long long total = 0;
    for (Eigen::Index i = 0; i < S.cols(); ++i)
        for (Eigen::Index j = i + 1; j < S.cols(); ++j) {
            const long long s = S(i, j);
            total += s * s;
            ++v.s_squared_counts[s * s];
            v.orthogonal_pairs += s == 0;
            v.max_abs_s = std::max(v.max_abs_s, static_cast<int>(std::llabs(s)));
        }
    const int d = design.d();
    v.value = static_cast<double>(total) * 2.0 / (d * (d - 1.0));
    const bool balanced = (X.colwise().sum().array() == 0).all();
    if (balanced)
        v.lower_bound = es2_lower_bound(design.n(), d);
    return v;
}

double es2_unbalanced(const Design& design)
{
    if (design.d() < 1)
        throw DomainError("E(s^2) needs at least one column");
    const IMatrix X = integer_runs(design);
    IMatrix H(X.rows(), X.cols() + 1);
    H << IMatrix::Ones(X.rows(), 1), X;
    const IMatrix S = H.transpose() * H;
    const double p = static_cast<double>(H.cols());
    return static_cast<double>(pair_sum(S)) * 2.0 / (p * (p - 1.0));
}

namespace {

Eigen::MatrixXd bayes_model(const Design& design, const std::optional<TermSet>& terms)
{
    if (!terms) {
        Eigen::MatrixXd H(design.n(), design.d() + 1);
        H << Eigen::VectorXd::Ones(design.n()), design.runs();
        return H;
    }
    if (!terms->has_intercept())
        throw DomainError("Bayesian D model needs an intercept term");
    return build_model_matrix(design, *terms).H;
}

double bayes_logdet(const Eigen::MatrixXd& H, double tau2)
{
    Eigen::MatrixXd A = H.transpose() * H;
    A.diagonal().tail(A.rows() - 1).array() += 1.0 / tau2;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericError("Bayesian D information matrix is not positive definite");
    const double ld = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    if (!std::isfinite(ld))
        throw NumericError("Bayesian D determinant is not finite");
    return ld;
}

} // namespace

SsdCriterionValue bayes_d(const Design& design, double tau2, const std::optional<TermSet>& terms)
{
    if (!(tau2 > 0.0) || !std::isfinite(tau2))
        throw DomainError("tau2 must be positive and finite");
    const Eigen::MatrixXd H = bayes_model(design, terms);
    const double ld = bayes_logdet(H, tau2);
    SsdCriterionValue v;
    v.criterion = SsdCriterion::BayesD;
    v.value = std::exp(ld / static_cast<double>(H.cols()));
    if (!std::isfinite(v.value))
        throw NumericError("Bayesian D value is not finite");
    v.tau2 = tau2;
    if (design.coding() == Coding::TwoLevel && design.d() >= 2) {
        const auto e = es2(design);
        v.orthogonal_pairs = e.orthogonal_pairs;
        v.max_abs_s = e.max_abs_s;
    }
    return v;
}

HadamardMatrix hadamard_from_design(const Design& oa)
{
    if (oa.coding() != Coding::TwoLevel || oa.d() != oa.n() - 1)
        throw DomainError("expected an n x (n-1) two-level array");
    Eigen::MatrixXd C(oa.n(), oa.n());
    C << Eigen::VectorXd::Ones(oa.n()), oa.runs();
    return {std::move(C)};
}

Design lin_ssd(const HadamardMatrix& h, int branch_col, int keep_sign)
{
    const int n = h.order();
    if (n < 4)
        throw DomainError("Hadamard order must be at least 4");
    if (!(h.C.col(0).array() == 1.0).all())
        throw DomainError("Hadamard matrix must be normalized (first column all +1)");
    if (branch_col < 0 || branch_col >= n - 1)
        throw IndexError("branch column " + std::to_string(branch_col + 1) + " out of range");
    if (keep_sign != 1 && keep_sign != -1)
        throw DomainError("keep_sign must be +1 or -1");
    const int c = branch_col + 1;
    Eigen::MatrixXd X(n / 2, n - 2);
    int r = 0;
    for (int i = 0; i < n; ++i) {
        if (h.C(i, c) != keep_sign)
            continue;
        int k = 0;
        for (int j = 1; j < n; ++j)
            if (j != c)
                X(r, k++) = h.C(i, j);
        ++r;
    }
    if (r != n / 2)
        throw DomainError("branch column is not balanced");
    return Design(std::move(X), Coding::TwoLevel, {}, {"lin-half-fraction", 0});
}

Design wu_ssd(const HadamardMatrix& h, const std::vector<std::pair<int, int>>& interaction_pairs)
{
    const int n = h.order();
    const int base = n - 1;
    Eigen::MatrixXd X(n, base + static_cast<int>(interaction_pairs.size()));
    X.leftCols(base) = h.C.rightCols(base);
    int k = base;
    for (const auto& [a, b] : interaction_pairs) {
        if (a < 0 || b < 0 || a >= base || b >= base)
            throw IndexError("interaction pair references a missing column");
        if (a == b)
            throw DomainError("interaction pair needs two distinct columns");
        X.col(k++) = h.C.col(a + 1).cwiseProduct(h.C.col(b + 1));
    }
    return Design(std::move(X), Coding::TwoLevel, {}, {"wu-augmented", 0});
}

// ---------------------------------------------------------------------------
// Annealing search

namespace {

struct Trajectory {
    Eigen::MatrixXd X;
    double value = 0.0;   // minimized objective
    double initial = 0.0; // objective at the start
    long long moves = 0;
};

double cooling_factor(const SsdSearchOptions& o)
{
    if (o.cooling > 0.0 && o.cooling < 1.0)
        return o.cooling;
    // temperature falls by 1e-4 over the budget
    return std::pow(1e-4, 1.0 / static_cast<double>(std::max<long long>(o.moves, 1)));
}

bool accept(double delta, double temperature, Rng& rng)
{
    if (delta <= 0.0)
        return true;
    if (temperature <= 0.0)
        return false;
    return rng.uniform() < std::exp(-delta / temperature);
}

// Balanced Es2: columns hold n/2 entries of each sign; moves swap a +1 and a
// -1 within one column. Objective is sum_{i<j} s_ij^2.
Trajectory anneal_es2_balanced(int n, int d, const SsdSearchOptions& o, Rng rng, long long target)
{
    IMatrix X(n, d);
    for (int j = 0; j < d; ++j) {
        auto p = rng.permutation(n);
        for (int i = 0; i < n; ++i)
            X(p[static_cast<std::size_t>(i)], j) = i < n / 2 ? 1 : -1;
    }
    IMatrix S = X.transpose() * X;
    long long f = pair_sum(S);
    Trajectory t;
    t.initial = static_cast<double>(f);
    IMatrix bestX = X;
    long long best = f;

    std::vector<long long> delta_s(static_cast<std::size_t>(d));
    auto propose = [&](int& j, int& a, int& b) {
        j = static_cast<int>(rng.below(static_cast<std::size_t>(d)));
        do
            a = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
        while (X(a, j) != 1);
        do
            b = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
        while (X(b, j) != -1);
        long long df = 0;
        for (int k = 0; k < d; ++k) {
            if (k == j)
                continue;
            const long long ds = -2 * X(a, k) + 2 * X(b, k);
            delta_s[static_cast<std::size_t>(k)] = ds;
            const long long s = S(j, k);
            df += (s + ds) * (s + ds) - s * s;
        }
        return df;
    };

    // initial temperature from the mean uphill step
    double up = 0.0;
    int ups = 0;
    for (int trial = 0; trial < 50; ++trial) {
        int j, a, b;
        const long long df = propose(j, a, b);
        if (df > 0) {
            up += static_cast<double>(df);
            ++ups;
        }
    }
    double temperature = ups ? up / ups : 1.0;
    const double alpha = cooling_factor(o);

    long long m = 0;
    for (; m < o.moves && best > target; ++m) {
        int j, a, b;
        const long long df = propose(j, a, b);
        if (accept(static_cast<double>(df), temperature, rng)) {
            X(a, j) = -1;
            X(b, j) = 1;
            for (int k = 0; k < d; ++k)
                if (k != j) {
                    S(j, k) += delta_s[static_cast<std::size_t>(k)];
                    S(k, j) = S(j, k);
                }
            f += df;
            if (f < best) {
                best = f;
                bestX = X;
            }
        }
        temperature *= alpha;
    }
    t.X = bestX.cast<double>();
    t.value = static_cast<double>(best);
    t.moves = m;
    return t;
}

// Odd n under Es2: the intercept column joins the inner products and single
// cells are flipped.
Trajectory anneal_es2_unbalanced(int n, int d, const SsdSearchOptions& o, Rng rng)
{
    IMatrix H(n, d + 1);
    H.col(0).setOnes();
    for (int j = 1; j <= d; ++j) {
        auto p = rng.permutation(n);
        for (int i = 0; i < n; ++i)
            H(p[static_cast<std::size_t>(i)], j) = i < n / 2 ? 1 : -1;
    }
    IMatrix S = H.transpose() * H;
    long long f = pair_sum(S);
    Trajectory t;
    t.initial = static_cast<double>(f);
    IMatrix bestH = H;
    long long best = f;

    auto delta = [&](int a, int j) {
        long long df = 0;
        for (int k = 0; k <= d; ++k) {
            if (k == j)
                continue;
            const long long ds = -2 * H(a, j) * H(a, k);
            const long long s = S(j, k);
            df += (s + ds) * (s + ds) - s * s;
        }
        return df;
    };
    double up = 0.0;
    int ups = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const long long df = delta(static_cast<int>(rng.below(static_cast<std::size_t>(n))),
                                   1 + static_cast<int>(rng.below(static_cast<std::size_t>(d))));
        if (df > 0) {
            up += static_cast<double>(df);
            ++ups;
        }
    }
    double temperature = ups ? up / ups : 1.0;
    const double alpha = cooling_factor(o);
    long long m = 0;
    for (; m < o.moves; ++m) {
        const int a = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
        const int j = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(d)));
        const long long df = delta(a, j);
        if (accept(static_cast<double>(df), temperature, rng)) {
            for (int k = 0; k <= d; ++k)
                if (k != j) {
                    S(j, k) += -2 * H(a, j) * H(a, k);
                    S(k, j) = S(j, k);
                }
            H(a, j) = -H(a, j);
            f += df;
            if (f < best) {
                best = f;
                bestH = H;
            }
        }
        temperature *= alpha;
    }
    t.X = bestH.rightCols(d).cast<double>();
    t.value = static_cast<double>(best);
    t.moves = m;
    return t;
}

Eigen::RowVectorXd model_row(const Eigen::RowVectorXd& x, const std::optional<TermSet>& terms)
{
    if (!terms) {
        Eigen::RowVectorXd h(x.size() + 1);
        h << 1.0, x;
        return h;
    }
    Eigen::RowVectorXd h(static_cast<Eigen::Index>(terms->size()));
    for (std::size_t t = 0; t < terms->size(); ++t) {
        double v = 1.0;
        for (const auto& [var, pow] : (*terms)[t].factors)
            v *= std::pow(x(var), pow);
        h(static_cast<Eigen::Index>(t)) = v;
    }
    return h;
}

// BayesD: single-cell flips, objective -log det(H'H + K/tau2). The inverse
// information matrix is kept current with rank-two updates.
Trajectory anneal_bayes(int n, int d, const SsdSearchOptions& o, Rng rng)
{
    Eigen::MatrixXd X(n, d);
    for (int j = 0; j < d; ++j) {
        auto p = rng.permutation(n);
        for (int i = 0; i < n; ++i)
            X(p[static_cast<std::size_t>(i)], j) = i < n / 2 ? 1.0 : -1.0;
    }
    auto build_H = [&] {
        Eigen::MatrixXd H(n, 0);
        for (int i = 0; i < n; ++i) {
            const auto h = model_row(X.row(i), o.terms);
            if (i == 0)
                H.resize(n, h.size());
            H.row(i) = h;
        }
        return H;
    };
    Eigen::MatrixXd H = build_H();
    const Eigen::Index p = H.cols();
    auto information = [&] {
        Eigen::MatrixXd A = H.transpose() * H;
        A.diagonal().tail(p - 1).array() += 1.0 / o.tau2;
        return A;
    };
    Eigen::MatrixXd A = information();
    double logdet = bayes_logdet(H, o.tau2);
    Eigen::MatrixXd Ainv = A.llt().solve(Eigen::MatrixXd::Identity(p, p));

    Trajectory t;
    t.initial = -logdet;
    Eigen::MatrixXd bestX = X;
    double best = -logdet;

    Eigen::MatrixXd U(p, 2), V(p, 2);
    auto propose = [&](int a, int j, Eigen::Matrix2d& M) {
        Eigen::RowVectorXd x = X.row(a);
        x(j) = -x(j);
        const Eigen::RowVectorXd hn = model_row(x, o.terms);
        U.col(0) = hn.transpose();
        U.col(1) = H.row(a).transpose();
        V.col(0) = hn.transpose();
        V.col(1) = -H.row(a).transpose();
        M = Eigen::Matrix2d::Identity() + V.transpose() * Ainv * U;
        const double det = M.determinant();
        return det > 0.0 ? -std::log(det) : std::numeric_limits<double>::infinity();
    };

    double up = 0.0;
    int ups = 0;
    Eigen::Matrix2d M;
    for (int trial = 0; trial < 50; ++trial) {
        const double df = propose(static_cast<int>(rng.below(static_cast<std::size_t>(n))),
                                  static_cast<int>(rng.below(static_cast<std::size_t>(d))), M);
        if (df > 0 && std::isfinite(df)) {
            up += df;
            ++ups;
        }
    }
    double temperature = ups ? up / ups : 1e-3;
    const double alpha = cooling_factor(o);
    long long accepted = 0;
    long long m = 0;
    for (; m < o.moves; ++m) {
        const int a = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
        const int j = static_cast<int>(rng.below(static_cast<std::size_t>(d)));
        const double df = propose(a, j, M);
        if (std::isfinite(df) && accept(df, temperature, rng)) {
            X(a, j) = -X(a, j);
            H.row(a) = U.col(0).transpose();
            Ainv -= Ainv * U * M.inverse() * V.transpose() * Ainv;
            logdet -= df;
            if (++accepted % 500 == 0) {
                A = information();
                Ainv = A.llt().solve(Eigen::MatrixXd::Identity(p, p));
                logdet = bayes_logdet(H, o.tau2);
            }
            if (-logdet < best - 1e-12) {
                best = -logdet;
                bestX = X;
            }
        }
        temperature *= alpha;
    }
    t.X = bestX;
    t.value = best;
    t.moves = m;
    return t;
}

} // namespace

SsdSearchResult search_ssd(int n, int d, const SsdSearchOptions& options)
{
    if (n < 4)
        throw DomainError("supersaturated search needs n >= 4");
    if (d < 2)
        throw DomainError("supersaturated search needs d >= 2");
    if (options.restarts < 1)
        throw DomainError("restarts must be positive");
    if (options.moves < 0)
        throw DomainError("moves must be non-negative");
    if (options.criterion == SsdCriterion::BayesD && !(options.tau2 > 0.0))
        throw DomainError("tau2 must be positive");
    if (options.terms && options.terms->max_variable() >= d)
        throw IndexError("model term references a variable beyond d");

    const bool unbalanced = options.criterion == SsdCriterion::Es2 && n % 2 != 0;
    long long target = -1;
    if (options.criterion == SsdCriterion::Es2 && !unbalanced) {
        if (const auto lb = es2_lower_bound(n, d))
            target = std::llround(*lb * d * (d - 1.0) / 2.0);
    }

    Rng root(options.seed);
    std::vector<Rng> streams;
    for (int r = 0; r < options.restarts; ++r)
        streams.push_back(root.substream(static_cast<std::uint64_t>(r)));
    std::vector<Trajectory> runs(static_cast<std::size_t>(options.restarts));
    parallel_for(
        options.restarts,
        [&](int r) {
            Rng& rng = streams[static_cast<std::size_t>(r)];
            auto& out = runs[static_cast<std::size_t>(r)];
            if (options.criterion == SsdCriterion::BayesD)
                out = anneal_bayes(n, d, options, rng);
            else if (unbalanced)
                out = anneal_es2_unbalanced(n, d, options, rng);
            else
                out = anneal_es2_balanced(n, d, options, rng, target);
        },
        options.threads);

    std::size_t best = 0;
    long long moves = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        moves += runs[r].moves;
        if (runs[r].value < runs[best].value)
            best = r;
    }
    SsdSearchResult result{Design(runs[best].X, Coding::TwoLevel, {},
                                  {std::string("ssd-search-") + criterion_name(options.criterion), options.seed}),
                           {},
                           0.0,
                           moves,
                           static_cast<int>(best),
                           unbalanced};
    const auto& tr = runs[best];
    if (options.criterion == SsdCriterion::BayesD) {
        result.value = bayes_d(result.design, options.tau2, options.terms);
        const double p = options.terms ? static_cast<double>(options.terms->size()) : d + 1.0;
        result.initial_value = std::exp(-tr.initial / p);
    } else {
        result.value = es2(result.design);
        const double p = unbalanced ? d + 1.0 : d;
        result.initial_value = tr.initial * 2.0 / (p * (p - 1.0));
        if (unbalanced)
            result.value.value = es2_unbalanced(result.design);
    }
    return result;
}

} // namespace screenkit
