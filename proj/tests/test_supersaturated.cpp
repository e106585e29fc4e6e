#include <doctest.h>

#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"
#include "screenkit/rng.hpp"
#include "screenkit/supersaturated.hpp"

#include <cmath>
#include <vector>

using namespace screenkit;

namespace {

const int kLin[6][10] = {
    {-1, -1, -1, -1, -1, 1, 1, 1, 1, 1},  {-1, -1, 1, 1, 1, -1, -1, -1, 1, 1},
    {-1, 1, -1, 1, 1, -1, 1, 1, -1, -1},  {1, -1, 1, -1, 1, 1, 1, -1, -1, -1},
    {1, 1, 1, -1, -1, -1, -1, 1, 1, -1},  {1, 1, -1, 1, -1, 1, -1, -1, -1, 1},
};

const int kWu[12][21] = {
    {-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1},
    {-1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1},
    {-1, -1, 1, 1, 1, -1, -1, -1, 1, 1, 1, 1, -1, -1, -1, 1, 1, 1, -1, -1, -1},
    {-1, 1, -1, 1, 1, -1, 1, 1, -1, -1, 1, -1, 1, -1, -1, 1, -1, -1, 1, 1, -1},
    {-1, 1, 1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, 1, -1, -1, 1, -1, 1, -1, 1},
    {-1, 1, 1, 1, -1, 1, 1, -1, 1, -1, -1, -1, -1, -1, 1, -1, -1, 1, -1, 1, 1},
    {1, -1, 1, 1, -1, -1, 1, 1, -1, 1, -1, -1, 1, 1, -1, -1, 1, 1, -1, 1, -1},
    {1, -1, 1, -1, 1, 1, 1, -1, -1, -1, 1, -1, 1, -1, 1, 1, 1, -1, -1, -1, 1},
    {1, -1, -1, 1, 1, 1, -1, 1, 1, -1, -1, -1, -1, 1, 1, 1, -1, 1, 1, -1, -1},
    {1, 1, 1, -1, -1, -1, -1, 1, 1, -1, 1, 1, 1, -1, -1, -1, -1, 1, 1, -1, 1},
    {1, 1, -1, 1, -1, 1, -1, -1, -1, 1, 1, 1, -1, 1, -1, 1, -1, -1, -1, 1, 1},
    {1, 1, -1, -1, 1, -1, 1, -1, 1, 1, -1, 1, -1, -1, 1, -1, 1, -1, 1, 1, -1},
};

template <int R, int C>
Design from_table(const int (&t)[R][C])
{
    Eigen::MatrixXd X(R, C);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
            X(i, j) = t[i][j];
    return Design(X, Coding::TwoLevel);
}

// Naive E(s^2) straight from the definition.
double naive_es2(const Eigen::MatrixXd& X)
{
    double total = 0;
    int pairs = 0;
    for (int i = 0; i < X.cols(); ++i)
        for (int j = i + 1; j < X.cols(); ++j) {
            const double s = X.col(i).dot(X.col(j));
            total += s * s;
            ++pairs;
        }
    return total / pairs;
}

// Laplace expansion along the first row.
double cofactor_det(const Eigen::MatrixXd& A)
{
    const auto n = A.rows();
    if (n == 1)
        return A(0, 0);
    double det = 0;
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::MatrixXd minor(n - 1, n - 1);
        for (Eigen::Index i = 1; i < n; ++i)
            for (Eigen::Index j = 0, k = 0; j < n; ++j)
                if (j != c)
                    minor(i - 1, k++) = A(i, j);
        det += ((c % 2) ? -1.0 : 1.0) * A(0, c) * cofactor_det(minor);
    }
    return det;
}

// Fraction-free (Bareiss) elimination on an integer matrix.
__int128 bareiss_det(std::vector<std::vector<__int128>> a)
{
    const std::size_t n = a.size();
    __int128 prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t r = k + 1;
            while (r < n && a[r][k] == 0)
                ++r;
            if (r == n)
                return 0;
            std::swap(a[k], a[r]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

// Psi_D with integer tau2 via an exact determinant of tau2 * information.
double exact_bayes_d(const Eigen::MatrixXd& X, int tau2)
{
    const auto n = X.rows();
    const auto p = X.cols() + 1;
    Eigen::MatrixXd H(n, p);
    H << Eigen::VectorXd::Ones(n), X;
    const Eigen::MatrixXd G = H.transpose() * H;
    std::vector<std::vector<__int128>> a(static_cast<std::size_t>(p), std::vector<__int128>(static_cast<std::size_t>(p)));
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                static_cast<__int128>(std::llround(G(i, j))) * tau2 + (i == j && i > 0 ? 1 : 0);
    const double det = static_cast<double>(bareiss_det(a));
    return std::exp((std::log(det) - static_cast<double>(p) * std::log(static_cast<double>(tau2))) /
                    static_cast<double>(p));
}

} // namespace

TEST_CASE("half-fraction construction reproduces the six-run design")
{
    const auto h = hadamard_from_design(plackett_burman_12());
    const auto lin = lin_ssd(h, 10, +1);
    const auto expected = from_table(kLin);
    CHECK(lin.runs() == expected.runs());
    CHECK(lin.runs().colwise().sum().isZero());

    const auto other = lin_ssd(h, 10, -1);
    CHECK(other.n() == 6);
    CHECK(other.d() == 10);
    CHECK(other.runs().colwise().sum().isZero());
    CHECK_THROWS_AS(lin_ssd(h, 11), IndexError);
}

TEST_CASE("E(s^2) of the six-run design")
{
    const auto v = es2(from_table(kLin));
    CHECK(v.value == doctest::Approx(4.0));
    REQUIRE(v.s_squared_counts.size() == 1);
    CHECK(v.s_squared_counts.begin()->first == 4);
    CHECK(v.s_squared_counts.begin()->second == 45);
    REQUIRE(v.lower_bound);
    CHECK(*v.lower_bound == doctest::Approx(4.0));
    CHECK(v.value >= *v.lower_bound - 1e-9);
}

TEST_CASE("interaction augmentation reproduces the twelve-run design")
{
    const auto h = hadamard_from_design(plackett_burman_12());
    std::vector<std::pair<int, int>> pairs;
    for (int j = 1; j < 11; ++j)
        pairs.emplace_back(0, j);
    const auto wu = wu_ssd(h, pairs);
    CHECK(wu.runs() == from_table(kWu).runs());
    for (int k = 0; k < 10; ++k)
        CHECK(wu.column(11 + k) == wu.column(0).cwiseProduct(wu.column(k + 1)));

    const auto v = es2(wu);
    CHECK(v.value == doctest::Approx(6.85714).epsilon(1e-5));
    CHECK(v.orthogonal_pairs == 120);
    CHECK(v.s_squared_counts.at(16) == 90);
    CHECK(v.s_squared_counts.size() == 2);
    REQUIRE(v.lower_bound);
    CHECK(*v.lower_bound == doctest::Approx(1440.0 / 210.0));

    CHECK_THROWS_AS(wu_ssd(h, {{0, 0}}), DomainError);
    CHECK_THROWS_AS(wu_ssd(h, {{0, 11}}), IndexError);
}

TEST_CASE("E(s^2) of orthogonal arrays is zero")
{
    CHECK(es2(plackett_burman_12()).value == 0.0);
    CHECK(es2(plackett_burman(16)).value == 0.0);
    CHECK(es2(plackett_burman_12()).orthogonal_pairs == 55);
}

TEST_CASE("E(s^2) invariances and errors")
{
    Rng rng(3);
    const auto wu = from_table(kWu);
    const double base = es2(wu).value;
    for (int trial = 0; trial < 10; ++trial) {
        const auto rows = rng.permutation(12);
        const auto cols = rng.permutation(21);
        Eigen::MatrixXd X(12, 21);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 21; ++j)
                X(i, j) = wu(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
        for (int j = 0; j < 21; ++j)
            if (rng.bernoulli(0.5))
                X.col(j) *= -1;
        CHECK(es2(Design(X, Coding::TwoLevel)).value == doctest::Approx(base));
        CHECK(naive_es2(X) == doctest::Approx(base));
    }
    CHECK_THROWS_AS(es2(Design(Eigen::MatrixXd::Ones(4, 1), Coding::TwoLevel)), DomainError);
    CHECK_THROWS_AS(es2(Design(Eigen::MatrixXd::Constant(4, 2, 0.5), Coding::Unit)), DomainError);
}

TEST_CASE("E(s^2) lower bound")
{
    CHECK(*es2_lower_bound(6, 10) == doctest::Approx(4.0));
    CHECK(*es2_lower_bound(12, 21) == doctest::Approx(6.857142857));
    CHECK(*es2_lower_bound(16, 20) == doctest::Approx(960.0 / 190.0));
    CHECK(*es2_lower_bound(12, 11) == 0.0);
    CHECK_FALSE(es2_lower_bound(7, 10).has_value());
    // never exceeds the value of any balanced design
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 * (2 + static_cast<int>(rng.below(6)));
        const int d = 2 + static_cast<int>(rng.below(20));
        Eigen::MatrixXd X(n, d);
        for (int j = 0; j < d; ++j) {
            auto p = rng.permutation(n);
            for (int i = 0; i < n; ++i)
                X(p[static_cast<std::size_t>(i)], j) = i < n / 2 ? 1 : -1;
        }
        const auto v = es2(Design(X, Coding::TwoLevel));
        REQUIRE(v.lower_bound);
        CHECK(v.value >= *v.lower_bound - 1e-9);
    }
}

TEST_CASE("Bayesian D criterion")
{
    const auto lin = from_table(kLin);
    const auto v = bayes_d(lin, 5.0);
    CHECK(v.tau2 == 5.0);
    CHECK(v.value == doctest::Approx(exact_bayes_d(lin.runs(), 5)).epsilon(1e-10));

    // 6 x 6 information matrix from five columns, by cofactor expansion
    const auto sub = lin.select_columns({0, 1, 2, 3, 4});
    Eigen::MatrixXd H(6, 6);
    H << Eigen::VectorXd::Ones(6), sub.runs();
    Eigen::MatrixXd A = H.transpose() * H;
    A.diagonal().tail(5).array() += 1.0 / 5.0;
    CHECK(bayes_d(sub, 5.0).value == doctest::Approx(std::pow(cofactor_det(A), 1.0 / 6.0)).epsilon(1e-10));

    // orthogonal H with large tau2 approaches n
    CHECK(bayes_d(plackett_burman_12(), 1e12).value == doctest::Approx(12.0).epsilon(1e-9));

    // row permutation invariance
    Eigen::MatrixXd P = lin.runs().colwise().reverse();
    CHECK(bayes_d(Design(P, Coding::TwoLevel), 5.0).value == doctest::Approx(v.value).epsilon(1e-12));

    // explicit main-effects term set gives the same value
    CHECK(bayes_d(lin, 5.0, TermSet::main_effects(10)).value == doctest::Approx(v.value).epsilon(1e-12));

    CHECK_THROWS_AS(bayes_d(lin, 0.0), DomainError);
    CHECK_THROWS_AS(bayes_d(lin, 5.0, TermSet::main_effects(10, false)), DomainError);
}

TEST_CASE("annealing search attains the six-run bound")
{
    SsdSearchOptions o;
    o.restarts = 5;
    o.moves = 20000;
    o.seed = 2024;
    const auto r = search_ssd(6, 10, o);
    CHECK(r.value.value == doctest::Approx(4.0));
    CHECK(r.moves_used <= 100000);
    CHECK(r.design.runs().colwise().sum().isZero());
    CHECK(r.value.value <= r.initial_value + 1e-12);
}

TEST_CASE("search matches exhaustive enumeration for four runs")
{
    // all balanced 4-run columns
    std::vector<Eigen::VectorXd> cols;
    for (int mask = 0; mask < 16; ++mask) {
        Eigen::VectorXd c(4);
        for (int i = 0; i < 4; ++i)
            c(i) = (mask >> i) & 1 ? 1 : -1;
        if (c.sum() == 0)
            cols.push_back(c);
    }
    REQUIRE(cols.size() == 6);
    for (int d : {3, 5}) {
        CAPTURE(d);
        double best = 1e300;
        std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            Eigen::MatrixXd X(4, d);
            for (int j = 0; j < d; ++j)
                X.col(j) = cols[idx[static_cast<std::size_t>(j)]];
            best = std::min(best, naive_es2(X));
            std::size_t k = 0;
            while (k < idx.size() && ++idx[k] == cols.size())
                idx[k++] = 0;
            if (k == idx.size())
                break;
        }
        SsdSearchOptions o;
        o.restarts = 4;
        o.moves = 5000;
        o.seed = 7;
        CHECK(search_ssd(4, d, o).value.value == doctest::Approx(best));
    }
}

TEST_CASE("search is deterministic and honours the criterion")
{
    SsdSearchOptions o;
    o.restarts = 3;
    o.moves = 3000;
    o.seed = 99;
    const auto a = search_ssd(8, 12, o);
    o.threads = 1;
    const auto b = search_ssd(8, 12, o);
    CHECK(a.design.runs() == b.design.runs());

    o.criterion = SsdCriterion::BayesD;
    const auto c = search_ssd(8, 12, o);
    const auto c2 = search_ssd(8, 12, o);
    CHECK(c.design.runs() == c2.design.runs());
    CHECK(c.value.criterion == SsdCriterion::BayesD);
    CHECK(c.value.value >= c.initial_value - 1e-9);
    CHECK(c.value.value == doctest::Approx(exact_bayes_d(c.design.runs(), 5)).epsilon(1e-9));

    o.criterion = SsdCriterion::Es2;
    const auto odd = search_ssd(7, 10, o);
    CHECK(odd.unbalanced);
    CHECK(odd.value.value == doctest::Approx(es2_unbalanced(odd.design)));
    CHECK(odd.value.value <= odd.initial_value + 1e-12);

    CHECK_THROWS_AS(search_ssd(3, 4, o), DomainError);
}

TEST_CASE("Bayesian D search with a two-factor interaction model")
{
    SsdSearchOptions o;
    o.criterion = SsdCriterion::BayesD;
    o.terms = TermSet::main_and_interactions(4);
    o.restarts = 2;
    o.moves = 2000;
    const auto r = search_ssd(8, 4, o);
    CHECK(r.value.value == doctest::Approx(bayes_d(r.design, 5.0, o.terms).value));
    CHECK(r.value.value >= r.initial_value - 1e-9);
}
