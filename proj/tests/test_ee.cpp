#include <doctest.h>

#include "screenkit/ee.hpp"
#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"

#include <cmath>

using namespace screenkit;

namespace {

template <typename F>
Eigen::VectorXd evaluate(const Design& X, F&& f)
{
    Eigen::VectorXd y(X.n());
    for (int i = 0; i < X.n(); ++i)
        y(i) = f(Eigen::VectorXd(X.runs().row(i).transpose()));
    return y;
}

} // namespace

TEST_CASE("elementary effects of a first-order function")
{
    const auto plan = morris_plan(6, 5, 4, std::nullopt, 3);
    Eigen::VectorXd beta(6);
    beta << 1.5, -2.0, 0.0, 4.0, 0.25, -0.5;
    const auto y = evaluate(plan.design, [&](const Eigen::VectorXd& x) { return 3.0 + beta.dot(x); });
    const auto ee = elementary_effects(plan, y);
    CHECK(ee.rows() == 5);
    for (int t = 0; t < 5; ++t)
        for (int i = 0; i < 6; ++i)
            CHECK(ee(t, i) == doctest::Approx(beta(i)));
    const auto idx = ee_indices(ee);
    for (int i = 0; i < 6; ++i) {
        CHECK(idx.mu(i) == doctest::Approx(beta(i)));
        CHECK(idx.mu_star(i) == doctest::Approx(std::abs(beta(i))));
        CHECK(idx.sigma(i) < 1e-12);
    }

    const auto flat = elementary_effects(plan, Eigen::VectorXd::Constant(plan.design.n(), 7.0));
    CHECK(flat.isZero());
}

TEST_CASE("elementary effect moments")
{
    Eigen::MatrixXd e(3, 1);
    e << 2, 2, 2;
    auto idx = ee_indices(e);
    CHECK(idx.mu(0) == 2.0);
    CHECK(idx.sigma(0) == 0.0);
    CHECK(idx.mu_star(0) == 2.0);

    Eigen::MatrixXd f(2, 1);
    f << -1, 1;
    idx = ee_indices(f);
    CHECK(idx.mu(0) == 0.0);
    CHECK(idx.mu_star(0) == 1.0);
    CHECK(idx.sigma(0) == doctest::Approx(std::sqrt(2.0)));

    CHECK_THROWS_AS(ee_indices(Eigen::MatrixXd::Ones(1, 3)), DomainError);
}

TEST_CASE("mu* bounds |mu| with equality iff effects share a sign")
{
    const auto plan = morris_plan(4, 8, 4, std::nullopt, 11);
    const auto y = evaluate(plan.design, [](const Eigen::VectorXd& x) {
        return std::sin(6 * x(0)) + x(1) * x(2) + x(3) * x(3);
    });
    const auto idx = ee_indices(elementary_effects(plan, y));
    for (int i = 0; i < 4; ++i) {
        CHECK(idx.mu_star(i) >= std::abs(idx.mu(i)) - 1e-12);
        CHECK(idx.sigma(i) >= 0.0);
        const bool same_sign = (idx.ee_matrix.col(i).array() >= 0).all() || (idx.ee_matrix.col(i).array() <= 0).all();
        CHECK(same_sign == (std::abs(idx.mu_star(i) - std::abs(idx.mu(i))) < 1e-12));
    }
}

TEST_CASE("additive functions give effects that depend on the own coordinate only")
{
    const auto plan = morris_plan(5, 10, 6, std::nullopt, 5);
    auto g = [](int i, double v) { return (i + 1) * v * v * v - v; };
    const auto y = evaluate(plan.design, [&](const Eigen::VectorXd& x) {
        double s = 0;
        for (int i = 0; i < 5; ++i)
            s += g(i, x(i));
        return s;
    });
    const auto ee = elementary_effects(plan, y);
    for (int t = 0; t < plan.r; ++t)
        for (int i = 0; i < 5; ++i) {
            const int s = plan.trajectory_starts[static_cast<std::size_t>(t)];
            const double lo = plan.design.runs().block(s, i, 6, 1).minCoeff();
            const double expected = (g(i, lo + plan.delta) - g(i, lo)) / plan.delta;
            CHECK(ee(t, i) == doctest::Approx(expected));
        }
}

TEST_CASE("elementary effects reject corrupt plans")
{
    auto plan = morris_plan(3, 2, 4, std::nullopt, 1);
    CHECK_THROWS_AS(elementary_effects(plan, Eigen::VectorXd::Zero(5)), DomainError);
    Eigen::MatrixXd X = plan.design.runs();
    X.row(1) = X.row(0);
    X(1, 0) = X(0, 0) == 0.0 ? 2.0 / 3.0 : 0.0;
    X(1, 1) = X(0, 1) == 0.0 ? 2.0 / 3.0 : 0.0;
    plan.design = Design(X, Coding::Unit);
    CHECK_THROWS_AS(elementary_effects(plan, Eigen::VectorXd::Zero(8)), DomainError);
}

TEST_CASE("Cotter contrasts")
{
    const int d = 5;
    const auto X = sfrd(d);
    Eigen::VectorXd beta(d);
    beta << 2, -1, 0, 0.5, 3;
    auto c = cotter_contrasts(evaluate(X, [&](const Eigen::VectorXd& x) { return 1.0 + beta.dot(x); }));
    for (int i = 0; i < d; ++i) {
        CHECK(c.odd(i) == doctest::Approx(beta(i)));
        CHECK(c.even(i) == doctest::Approx(0.0));
    }
    CHECK(c.share.sum() == doctest::Approx(1.0).epsilon(1e-12));

    c = cotter_contrasts(evaluate(X, [](const Eigen::VectorXd&) { return 4.0; }));
    CHECK(c.odd.isZero());
    CHECK(c.even.isZero());
    CHECK_THROWS_AS(cotter_sensitivity(c), DomainError);

    c = cotter_contrasts(evaluate(X, [](const Eigen::VectorXd& x) { return 1.5 * x(0) * x(1); }));
    CHECK(c.odd.isZero());
    CHECK(c.even(0) == doctest::Approx(1.5));
    CHECK(c.even(1) == doctest::Approx(1.5));
    CHECK(c.even(2) == 0.0);

    CHECK_THROWS_AS(cotter_contrasts(Eigen::VectorXd::Zero(7)), DomainError);
    CHECK_THROWS_AS(cotter_contrasts(Eigen::VectorXd::Zero(2)), DomainError);
}

TEST_CASE("Cotter sensitivity shares and the elementary-effect link")
{
    const int d = 8;
    const auto X = sfrd(d);
    const auto y = evaluate(X, [](const Eigen::VectorXd& x) {
        return 3 * x(0) + x(1) * x(2) - 2 * x(3) * x(3) * x(4) + 0.01 * x(7);
    });
    const auto c = cotter_contrasts(y);
    for (int i = 0; i < d; ++i) {
        CHECK(c.share(i) >= 0.0);
        CHECK(c.magnitude(i) == doctest::Approx(std::max(std::abs(c.ee_low(i)), std::abs(c.ee_high(i)))));
    }
    CHECK(c.share.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const auto out = cotter_sensitivity(c, 0.01);
    CHECK(out.selected == std::vector<int>{0, 1, 2, 4});
    CHECK(out.method == "cotter");

    // equal magnitudes share equally
    const auto eq = cotter_contrasts(evaluate(sfrd(4), [](const Eigen::VectorXd& x) { return x.sum(); }));
    for (int i = 0; i < 4; ++i)
        CHECK(eq.share(i) == doctest::Approx(0.25));
}
