#include <doctest.h>

#include "screenkit/errors.hpp"
#include "screenkit/io.hpp"
#include "screenkit/space_filling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace screenkit;

namespace {

Design points(std::initializer_list<std::initializer_list<double>> rows)
{
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r)
            X(i, j++) = v;
        ++i;
    }
    return Design(X, Coding::Unit);
}

} // namespace

TEST_CASE("random Latin hypercube stratifies every axis")
{
    const auto X = lhs_random(9, 2, 17);
    CHECK(X.n() == 9);
    CHECK(is_latin_hypercube(X));
    for (int j = 0; j < 2; ++j) {
        std::set<int> bins;
        for (int i = 0; i < 9; ++i)
            bins.insert(static_cast<int>(std::floor(X(i, j) * 9)));
        CHECK(bins.size() == 9);
    }
    const auto two = lhs_random(2, 1, 5);
    const double lo = std::min(two(0, 0), two(1, 0));
    const double hi = std::max(two(0, 0), two(1, 0));
    CHECK(lo < 0.5);
    CHECK(hi >= 0.5);

    CHECK(lhs_random(20, 5, 3).runs() == lhs_random(20, 5, 3).runs());
    CHECK(lhs_random(20, 5, 3).runs() != lhs_random(20, 5, 4).runs());

    const auto mid = lhs_random(4, 3, 8, Jitter::Midpoint);
    for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd c = mid.column(j);
        std::sort(c.data(), c.data() + 4);
        CHECK(c(0) == 0.125);
        CHECK(c(3) == 0.875);
    }
    CHECK_THROWS_AS(lhs_random(1, 2, 1), DomainError);

    // quantile maps keep the stratification in probability scale
    const auto sym = lhs_random(10, 2, 1, Jitter::Midpoint, [](double p) { return 2 * p - 1; });
    CHECK(sym.coding() == Coding::Symmetric);
    CHECK_THROWS_AS(lhs_random(10, 2, 1, Jitter::Midpoint, [](double p) { return 5 * p; }), DomainError);
}

TEST_CASE("orthogonal-array-based Latin hypercube")
{
    Eigen::MatrixXi oa(9, 2);
    for (int i = 0; i < 9; ++i) {
        oa(i, 0) = i / 3;
        oa(i, 1) = i % 3;
    }
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto X = lhs_oa(oa, seed);
        CHECK(is_latin_hypercube(X));
        std::set<std::pair<int, int>> cells;
        for (int i = 0; i < 9; ++i) {
            const int c0 = static_cast<int>(std::floor(X(i, 0) * 3));
            const int c1 = static_cast<int>(std::floor(X(i, 1) * 3));
            CHECK(c0 == oa(i, 0));
            CHECK(c1 == oa(i, 1));
            cells.insert({c0, c1});
        }
        CHECK(cells.size() == 9);
    }
    Eigen::MatrixXi bad(4, 1);
    bad << 0, 0, 0, 1;
    CHECK_THROWS_AS(lhs_oa(bad, 1), DomainError);
}

TEST_CASE("phi_q and maxpro")
{
    CHECK(phi_q(points({{0.0, 0.0}, {1.0, 0.0}}), 15) == doctest::Approx(1.0));
    const double h = 0.25;
    const auto line = points({{0.0}, {h}, {2 * h}});
    const double q = 15;
    const double expected = std::pow(2.0 / std::pow(h, q) + 1.0 / std::pow(2 * h, q), 1.0 / q);
    CHECK(phi_q(line, q) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::isinf(phi_q(points({{0.3, 0.3}, {0.3, 0.3}}), 2)));

    const double a = 0.2, b = 0.5;
    CHECK(maxpro(points({{0.1, 0.1}, {0.1 + a, 0.1 + b}})) == doctest::Approx(1.0 / (a * a * b * b)));
    CHECK(std::isinf(maxpro(points({{0.1, 0.2}, {0.1, 0.7}}))));
    // three points: mean of the three pair terms
    const auto tri = points({{0.0, 0.0}, {0.5, 0.25}, {1.0, 1.0}});
    const double t = (1 / (0.25 * 0.0625) + 1 / (1.0 * 1.0) + 1 / (0.25 * 0.5625)) / 3.0;
    CHECK(maxpro(tri) == doctest::Approx(t));
    CHECK_THROWS_AS(phi_q(points({{0.5}}), 2), DomainError);
}

TEST_CASE("maximin optimization beats typical random hypercubes")
{
    std::vector<double> random_values;
    for (std::uint64_t s = 0; s < 100; ++s)
        random_values.push_back(phi_q(lhs_random(9, 2, 1000 + s), 15));
    std::nth_element(random_values.begin(), random_values.begin() + 50, random_values.end());
    const double median = random_values[50];

    LhsOptimizeOptions o;
    o.seed = 4;
    const auto r = lhs_optimize(9, 2, o);
    CHECK(is_latin_hypercube(r.design));
    CHECK(r.value <= median);
    CHECK(r.value <= r.initial + 1e-12);
    CHECK(r.value == doctest::Approx(phi_q(r.design, 15)));
    CHECK(lhs_optimize(9, 2, o).design.runs() == r.design.runs());

    o.objective = LhsObjective::MaxPro;
    o.schedule.iterations = 3000;
    const auto m = lhs_optimize(12, 3, o);
    CHECK(is_latin_hypercube(m.design));
    CHECK(m.value <= m.initial + 1e-9);
    CHECK(m.value == doctest::Approx(maxpro(m.design)));
}

TEST_CASE("zero-temperature annealing never worsens the criterion")
{
    LhsOptimizeOptions o;
    o.schedule.initial_temperature = 1e-300;
    o.schedule.iterations = 2000;
    o.restarts = 3;
    o.seed = 8;
    const auto r = lhs_optimize(15, 4, o);
    CHECK(r.value <= r.initial);
    CHECK(is_latin_hypercube(r.design));
}

TEST_CASE("Morris plans")
{
    const auto plan = morris_plan(20, 4, 4, std::nullopt, 12);
    CHECK(plan.design.n() == 84);
    CHECK(plan.delta == doctest::Approx(2.0 / 3.0));
    CHECK_NOTHROW(validate_morris_plan(plan));
    CHECK(plan.trajectory_starts == std::vector<int>{0, 21, 42, 63});

    const auto tiny = morris_plan(2, 1, 2, 1.0, 3);
    REQUIRE(tiny.design.n() == 3);
    std::set<std::pair<double, double>> corners;
    for (int i = 0; i < 3; ++i) {
        CHECK((tiny.design(i, 0) == 0.0 || tiny.design(i, 0) == 1.0));
        corners.insert({tiny.design(i, 0), tiny.design(i, 1)});
    }
    CHECK(corners.size() == 3);

    CHECK_THROWS_AS(morris_plan(3, 2, 4, 0.5), DomainError);
    CHECK_THROWS_AS(morris_plan(3, 2, 3), DomainError);
    CHECK_THROWS_AS(morris_plan(3, 2, 4, 4.0 / 3.0), DomainError);

    // a smaller whole-spacing step is allowed
    CHECK_NOTHROW(validate_morris_plan(morris_plan(5, 3, 6, 0.2, 9)));

    auto broken = plan;
    Eigen::MatrixXd X = broken.design.runs();
    X(3, 0) = X(3, 0) == 0.0 ? 1.0 / 3.0 : 0.0;
    X(3, 1) = X(3, 1) == 0.0 ? 1.0 / 3.0 : 0.0;
    broken.design = Design(X, Coding::Unit);
    CHECK_THROWS_AS(validate_morris_plan(broken), DomainError);
}

TEST_CASE("Morris level counts are balanced across random trajectories")
{
    const int r = 2000;
    const auto plan = morris_plan(6, r, 4, std::nullopt, 77);
    for (int j = 0; j < 6; ++j) {
        int counts[4] = {0, 0, 0, 0};
        for (int i = 0; i < plan.design.n(); ++i)
            ++counts[static_cast<int>(std::lround(plan.design(i, j) * 3))];
        const double expected = plan.design.n() / 4.0;
        for (int c : counts)
            CHECK(std::abs(c - expected) < 0.06 * expected);
    }
}

TEST_CASE("Morris sidecar metadata round trip")
{
    const auto plan = morris_plan(5, 3, 4, std::nullopt, 21);
    const auto meta = io::to_json(plan);
    const auto back = io::morris_plan_from(Design(plan.design.runs(), Coding::Symmetric), meta);
    CHECK(back.r == 3);
    CHECK(back.f == 4);
    CHECK(back.delta == plan.delta);
    CHECK(back.trajectory_starts == plan.trajectory_starts);
    CHECK_NOTHROW(validate_morris_plan(back));
    CHECK_THROWS_AS(io::morris_plan_from(plan.design, io::json{{"r", 3}}), UsageError);
}
