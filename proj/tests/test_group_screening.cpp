#include <doctest.h>

#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"
#include "screenkit/group_screening.hpp"
#include "screenkit/rng.hpp"

#include <algorithm>
#include <set>

using namespace screenkit;

namespace {

Oracle linear(Eigen::VectorXd beta, double b0 = 0.0)
{
    return Oracle([beta = std::move(beta), b0](const Eigen::VectorXd& x) { return b0 + beta.dot(x); });
}

Eigen::VectorXd sparse(int d, std::vector<std::pair<int, double>> effects)
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (auto [i, v] : effects)
        b(i) = v;
    return b;
}

} // namespace

TEST_CASE("classical group screening on 5 groups of 4")
{
    const auto oracle = linear(sparse(20, {{0, 3.0}, {1, 2.0}}), 1.0);
    DecisionRule rule;
    rule.delta = 0.5;
    const auto r = group_screen(oracle, Grouping::contiguous(20, 5), GroupMode::Classical, rule, 4);
    CHECK(r.run.group_active == std::vector<bool>{true, false, false, false, false});
    CHECK(r.run.carried == std::vector<int>{0, 1, 2, 3});
    CHECK(r.outcome.selected == std::vector<int>{0, 1});
    CHECK(r.run.n1 == 8);
    CHECK(r.run.n2 == 8);
    REQUIRE(r.run.stage2.has_value());
    CHECK(r.run.stage2->n() == r.run.n2);
    CHECK(oracle.calls() == r.run.total());
    CHECK(r.outcome.statistics(0) == doctest::Approx(3.0));
    CHECK(r.outcome.statistics(1) == doctest::Approx(2.0));
    CHECK(r.outcome.statistics(2) == doctest::Approx(0.0).scale(1.0));
    CHECK(r.outcome.statistics(10) == 0.0);
}

TEST_CASE("inert oracle carries nothing")
{
    const Oracle zero([](const Eigen::VectorXd&) { return 7.0; });
    const auto r = group_screen(zero, Grouping::contiguous(20, 5), GroupMode::Classical);
    CHECK(r.run.carried.empty());
    CHECK_FALSE(r.run.stage2.has_value());
    CHECK(r.run.n2 == 0);
    CHECK(r.outcome.selected.empty());
    CHECK(zero.calls() == r.run.n1);
}

TEST_CASE("opposite effects in one group cancel")
{
    const auto oracle = linear(sparse(20, {{4, 2.0}, {5, -2.0}}));
    const auto r = group_screen(oracle, Grouping::contiguous(20, 5), GroupMode::Classical);
    CHECK(r.run.carried.empty());
    CHECK(r.outcome.selected.empty());
}

TEST_CASE("interaction mode finds a cross-group pair")
{
    const Oracle oracle([](const Eigen::VectorXd& x) { return 1.0 + 2.5 * x(1) * x(6); });
    const auto r = group_screen(oracle, Grouping::contiguous(20, 5), GroupMode::Interaction, {}, 2);
    CHECK(std::all_of(r.run.group_active.begin(), r.run.group_active.end(), [](bool b) { return !b; }));
    CHECK(r.run.active_pairs == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(r.run.n1 == 16);
    CHECK(r.run.carried.size() == 8);
    CHECK(r.outcome.selected == std::vector<int>{1, 6});
    CHECK(oracle.calls() == r.run.total());
}

TEST_CASE("replicated group screening with a noisy oracle")
{
    Rng noise(11);
    const Oracle oracle(
        [&noise](const Eigen::VectorXd& x) { return 4.0 * x(2) + 3.0 * x(13) + 0.3 * noise.normal(); }, true);
    DecisionRule rule;
    rule.replicates = 3;
    rule.alpha = 0.01;
    const auto r = group_screen(oracle, Grouping::contiguous(20, 5), GroupMode::Classical, rule, 9);
    CHECK(r.outcome.selected == std::vector<int>{2, 13});
    CHECK(oracle.calls() == r.run.total());
    CHECK(r.run.n1 == 24);

    DecisionRule single;
    CHECK_THROWS_AS(group_screen(oracle, Grouping::contiguous(20, 5), GroupMode::Classical, single), DomainError);
}

TEST_CASE("oracle failures name the run")
{
    const Oracle bad([](const Eigen::VectorXd& x) -> double {
        if (x(0) > 0)
            throw std::runtime_error("solver diverged");
        return 0.0;
    });
    try {
        group_screen(bad, Grouping::contiguous(8, 4), GroupMode::Classical);
        FAIL("expected a failure");
    } catch (const OracleError& e) {
        CHECK(std::string(e.what()).find("run ") != std::string::npos);
        CHECK(std::string(e.what()).find("solver diverged") != std::string::npos);
    }
    const Oracle nan([](const Eigen::VectorXd&) { return std::nan(""); });
    CHECK_THROWS_AS(nan(Eigen::VectorXd::Zero(2)), OracleError);
}

TEST_CASE("grouping validation")
{
    CHECK(Grouping::contiguous(10, 3).sizes() == std::vector<int>{4, 3, 3});
    CHECK(Grouping::contiguous(10, 3).members(1) == std::vector<int>{4, 5, 6});
    CHECK_THROWS_AS(Grouping::contiguous(3, 4), DomainError);
    Grouping gap{{0, 0, 2}};
    CHECK_THROWS_AS(gap.validate(), DomainError);
}

TEST_CASE("bifurcation split sizes")
{
    CHECK(bifurcation_split(6) == 4);
    CHECK(bifurcation_split(8) == 4);
    CHECK(bifurcation_split(5) == 4);
    CHECK(bifurcation_split(2) == 1);
    CHECK(bifurcation_split(3) == 2);
    CHECK_THROWS_AS(bifurcation_split(1), DomainError);
}

TEST_CASE("sequential bifurcation isolates a single effect")
{
    const auto oracle = linear(sparse(8, {{2, 10.0}}));
    const auto r = sequential_bifurcation(oracle, 8, 1.0);
    CHECK(r.outcome.selected == std::vector<int>{2});
    CHECK(r.runs == 5);
    CHECK(r.runs <= 8);
    CHECK(r.outcome.statistics(2) == doctest::Approx(10.0));
    REQUIRE(r.trace.size() == 7);
    CHECK(r.trace[0].first == 0);
    CHECK(r.trace[0].last == 8);
    CHECK(r.trace[0].contrast == doctest::Approx(20.0));

    const Oracle zero([](const Eigen::VectorXd&) { return 0.0; });
    const auto z = sequential_bifurcation(zero, 8, 0.0);
    CHECK(z.outcome.selected.empty());
    CHECK(z.trace.size() == 1);
    CHECK(z.runs == 2);

    CHECK_THROWS_AS(sequential_bifurcation(zero, 8, -1.0), DomainError);
    BifurcationOptions bad;
    bad.ordering = {0, 1, 1};
    CHECK_THROWS_AS(sequential_bifurcation(zero, 3, 0.0, bad), DomainError);
}

TEST_CASE("six-variable group splits four and two")
{
    const auto oracle = linear(sparse(6, {{5, 1.0}}));
    const auto r = sequential_bifurcation(oracle, 6, 0.1);
    REQUIRE(r.trace.size() >= 3);
    CHECK(r.trace[1].last - r.trace[1].first == 4);
    CHECK(r.trace[2].last - r.trace[2].first == 2);
    CHECK(r.outcome.selected == std::vector<int>{5});
}

TEST_CASE("bifurcation selects exactly the positive effects")
{
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(61));
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
        std::vector<int> truth;
        double smallest = 1e9;
        for (int i = 0; i < d; ++i)
            if (rng.bernoulli(0.15)) {
                beta(i) = 0.5 + 5 * rng.uniform();
                smallest = std::min(smallest, beta(i));
                truth.push_back(i);
            }
        BifurcationOptions o;
        o.ordering = rng.permutation(d);
        const auto oracle = linear(beta, rng.normal());
        const double delta = truth.empty() ? 0.1 : 0.9 * 2 * smallest;
        const auto r = sequential_bifurcation(oracle, d, delta, o);
        CAPTURE(trial);
        CHECK(r.outcome.selected == truth);
        CHECK(r.runs == oracle.calls());
    }
}

TEST_CASE("foldover contrasts ignore two-variable interactions")
{
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 5 + static_cast<int>(rng.below(21));
        Eigen::VectorXd beta(d);
        for (int i = 0; i < d; ++i)
            beta(i) = rng.bernoulli(0.3) ? 1 + rng.uniform() : 0.0;
        Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                gamma(i, j) = rng.normal() * 3;
        const double b0 = rng.normal();
        const Oracle mains([&](const Eigen::VectorXd& x) { return b0 + beta.dot(x); });
        const Oracle full([&](const Eigen::VectorXd& x) { return b0 + beta.dot(x) + x.dot(gamma * x); });
        BifurcationOptions o;
        o.foldover = true;
        const auto a = sequential_bifurcation(mains, d, 0.5, o);
        const auto b = sequential_bifurcation(full, d, 0.5, o);
        CAPTURE(trial);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t k = 0; k < a.trace.size(); ++k)
            CHECK(b.trace[k].contrast == doctest::Approx(a.trace[k].contrast).epsilon(1e-9).scale(1.0));
        CHECK(a.outcome.selected == b.outcome.selected);
        CHECK(b.runs == a.runs);
        CHECK(b.runs % 2 == 0);
    }
}

TEST_CASE("replicated bifurcation with noise")
{
    Rng noise(41);
    const Oracle oracle(
        [&noise](const Eigen::VectorXd& x) { return 3.0 * x(4) + 2.0 * x(11) + 0.2 * noise.normal(); }, true);
    BifurcationOptions o;
    o.replicates = 4;
    o.alpha = 0.01;
    const auto r = sequential_bifurcation(oracle, 16, 0.5, o);
    CHECK(r.outcome.selected == std::vector<int>{4, 11});
    CHECK(r.runs % 4 == 0);
    CHECK_THROWS_AS(sequential_bifurcation(oracle, 16, 0.5), DomainError);
}

TEST_CASE("iffd isolates one strong variable")
{
    const auto oracle = linear(sparse(64, {{37, 5.0}}));
    IffdOptions o;
    o.seed = 3;
    const auto r = iffd(oracle, 64, o);
    CHECK(r.outcome.selected == std::vector<int>{37});
    CHECK(r.runs == 64);
    CHECK(r.outcome.statistics(37) == doctest::Approx(1.0));
    REQUIRE(r.candidates_by_stage.size() == 4);
    CHECK(r.candidates_by_stage[0].size() == 8);
    for (std::size_t k = 1; k < r.candidates_by_stage.size(); ++k) {
        const auto& prev = r.candidates_by_stage[k - 1];
        for (int v : r.candidates_by_stage[k])
            CHECK(std::find(prev.begin(), prev.end(), v) != prev.end());
    }
    const auto again = iffd(oracle, 64, o);
    CHECK(again.candidates_by_stage == r.candidates_by_stage);
    CHECK(again.midlevel_stage == r.midlevel_stage);
}

TEST_CASE("iffd with mid-level stages and several actives")
{
    const auto oracle = linear(sparse(40, {{3, 4.0}, {17, -3.0}, {30, 2.0}}), 2.0);
    IffdOptions o;
    o.g = 16;
    o.stages = 6;
    o.midlevel_prob = 1.0;
    o.delta = 0.5;
    const auto r = iffd(oracle, 40, o);
    CHECK(std::all_of(r.midlevel_stage.begin(), r.midlevel_stage.end(), [](bool b) { return b; }));
    for (int v : {3, 17, 30})
        CHECK(std::find(r.outcome.selected.begin(), r.outcome.selected.end(), v) != r.outcome.selected.end());
}

TEST_CASE("iffd zero oracle and guards")
{
    const Oracle zero([](const Eigen::VectorXd&) { return 0.0; });
    const auto r = iffd(zero, 20, {});
    CHECK(r.outcome.selected.empty());
    CHECK(r.candidates_by_stage[0].empty());
    IffdOptions bad;
    bad.g = 6;
    CHECK_THROWS_AS(iffd(zero, 20, bad), DomainError);
    IffdOptions small;
    CHECK_THROWS_AS(iffd(zero, 4, small), DomainError);
}

TEST_CASE("stage designs")
{
    CHECK(smallest_main_effects_design(5).n() == 8);
    CHECK(smallest_main_effects_design(7).n() == 8);
    CHECK(smallest_main_effects_design(8).n() == 12);
    CHECK(smallest_main_effects_design(1).n() == 4);
    const auto m4 = smallest_main_effects_design(4);
    CHECK((m4.runs().transpose() * m4.runs()).isApprox(8 * Eigen::MatrixXd::Identity(4, 4)));

    const std::vector<std::pair<int, int>> sizes{{4, 16}, {5, 16}, {6, 32}, {8, 64}, {10, 128}};
    for (auto [m, n] : sizes) {
        CAPTURE(m);
        const auto f = smallest_resolution_five(m);
        CHECK(f.design.n() == n);
        CHECK((f.report.resolution >= 5 || f.report.resolution == 0));
        const auto H = build_model_matrix(f.design, TermSet::main_and_interactions(m));
        const Eigen::MatrixXd G = H.H.transpose() * H.H;
        CHECK(G.isApprox(n * Eigen::MatrixXd::Identity(G.rows(), G.cols())));
    }
    CHECK_THROWS_AS(smallest_resolution_five(17), ResourceError);
}
