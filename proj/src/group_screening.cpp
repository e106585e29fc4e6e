#include "screenkit/group_screening.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"
#include "screenkit/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace screenkit {

double Oracle::operator()(const Eigen::VectorXd& x) const
{
    const long long call = ++*calls_;
    try {
        const double y = f_(x);
        if (!std::isfinite(y))
            throw NumericError("non-finite output");
        return y;
    } catch (const OracleError&) {
        throw;
    } catch (const std::exception& e) {
        throw OracleError("oracle failed on run " + std::to_string(call) + ": " + e.what());
    }
}

int Grouping::g() const
{
    return assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
}

std::vector<int> Grouping::sizes() const
{
    std::vector<int> s(static_cast<std::size_t>(g()), 0);
    for (int a : assignment)
        ++s[static_cast<std::size_t>(a)];
    return s;
}

std::vector<int> Grouping::members(int group) const
{
    std::vector<int> m;
    for (int v = 0; v < d(); ++v)
        if (assignment[static_cast<std::size_t>(v)] == group)
            m.push_back(v);
    return m;
}

Grouping Grouping::contiguous(int d, int g)
{
    if (g < 1 || d < g)
        throw DomainError("need 1 <= g <= d groups");
    Grouping out;
    const int base = d / g;
    const int extra = d % g;
    for (int j = 0; j < g; ++j)
        for (int k = 0; k < base + (j < extra ? 1 : 0); ++k)
            out.assignment.push_back(j);
    return out;
}

void Grouping::validate() const
{
    if (assignment.empty())
        throw DomainError("grouping is empty");
    for (int a : assignment)
        if (a < 0)
            throw DomainError("negative group index");
    for (int s : sizes())
        if (s < 1)
            throw DomainError("every group must contain at least one variable");
}

namespace {

// Deterministic outputs carry rounding noise; differences below this are zero.
double noise_floor(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

struct Fit {
    Eigen::VectorXd estimates; // without intercept
    std::vector<bool> active;
    std::vector<std::string> labels;
};

Fit fit_and_decide(const Design& design, const TermSet& terms, const Eigen::VectorXd& y, const DecisionRule& rule)
{
    const auto H = build_model_matrix(design, terms);
    const auto ls = least_squares(H, y);
    const auto p = H.H.cols();
    Fit f;
    f.estimates = ls.coefficients.tail(p - 1);
    f.labels.assign(H.labels.begin() + 1, H.labels.end());
    const auto N = H.H.rows();
    const bool test = rule.replicates > 1 && N > p;
    Eigen::VectorXd se;
    double dof = 0;
    if (test) {
        dof = static_cast<double>(N - p);
        const double sigma2 = ls.rss / dof;
        const Eigen::MatrixXd cov = (H.H.transpose() * H.H).inverse() * sigma2;
        se = cov.diagonal().tail(p - 1).cwiseSqrt();
    }
    for (Eigen::Index j = 0; j < p - 1; ++j) {
        bool on = std::abs(f.estimates(j)) > std::max(rule.delta, noise_floor(y.lpNorm<Eigen::Infinity>()));
        if (test) {
            if (se(j) <= 0.0) {
                on = f.estimates(j) != 0.0;
            } else {
                boost::math::students_t dist(dof);
                const double t = std::abs(f.estimates(j)) / se(j);
                on = 2.0 * boost::math::cdf(boost::math::complement(dist, t)) < rule.alpha;
            }
        }
        f.active.push_back(on);
    }
    return f;
}

Design replicate_rows(const Design& d, int r)
{
    if (r == 1)
        return d;
    Eigen::MatrixXd X(d.n() * r, d.d());
    for (int i = 0; i < d.n(); ++i)
        for (int k = 0; k < r; ++k)
            X.row(i * r + k) = d.runs().row(i);
    return Design(X, d.coding(), d.names(), d.provenance());
}

} // namespace

GroupScreenResult group_screen(const Oracle& oracle, const Grouping& grouping, GroupMode mode,
                               const DecisionRule& rule, std::uint64_t seed)
{
    grouping.validate();
    if (rule.replicates < 1)
        throw DomainError("replicates must be positive");
    if (!(rule.delta >= 0.0))
        throw DomainError("delta must be non-negative");
    if (oracle.stochastic() && rule.replicates < 2)
        throw DomainError("stochastic oracles need replicates >= 2 for the t-test rule");
    const int d = grouping.d();
    const int g = grouping.g();
    const int r = rule.replicates;
    Rng rng(seed);

    const Design base =
        mode == GroupMode::Classical ? smallest_main_effects_design(g) : smallest_resolution_five(g).design;
    GroupScreenResult result{GroupScreenRun(base.select_columns(rng.permutation(g), false)), {}};
    GroupScreenRun& run = result.run;

    auto evaluate = [&](const Design& X, const std::function<Eigen::VectorXd(int)>& settings) {
        Eigen::VectorXd y(X.n() * r);
        for (int i = 0; i < X.n(); ++i) {
            const Eigen::VectorXd x = settings(i);
            for (int k = 0; k < r; ++k)
                y(i * r + k) = oracle(x);
        }
        return y;
    };

    const Eigen::VectorXd y1 = evaluate(run.stage1, [&](int i) {
        Eigen::VectorXd x(d);
        for (int v = 0; v < d; ++v)
            x(v) = run.stage1(i, grouping.assignment[static_cast<std::size_t>(v)]);
        return x;
    });
    run.n1 = static_cast<long long>(run.stage1.n()) * r;
    const TermSet terms1 =
        mode == GroupMode::Classical ? TermSet::main_effects(g) : TermSet::main_and_interactions(g);
    const Fit f1 = fit_and_decide(replicate_rows(run.stage1, r), terms1, y1, rule);
    run.stage1_estimates = f1.estimates;
    run.stage1_labels = f1.labels;
    run.group_active.assign(static_cast<std::size_t>(g), false);
    for (int j = 0; j < g; ++j)
        run.group_active[static_cast<std::size_t>(j)] = f1.active[static_cast<std::size_t>(j)];
    if (mode == GroupMode::Interaction) {
        std::size_t idx = static_cast<std::size_t>(g);
        for (int a = 0; a < g; ++a)
            for (int b = a + 1; b < g; ++b, ++idx)
                if (f1.active[idx])
                    run.active_pairs.emplace_back(a, b);
    }
    std::set<int> carried_groups;
    for (int j = 0; j < g; ++j)
        if (run.group_active[static_cast<std::size_t>(j)])
            carried_groups.insert(j);
    for (const auto& [a, b] : run.active_pairs) {
        carried_groups.insert(a);
        carried_groups.insert(b);
    }
    for (int v = 0; v < d; ++v)
        if (carried_groups.count(grouping.assignment[static_cast<std::size_t>(v)]))
            run.carried.push_back(v);

    ScreeningOutcome& out = result.outcome;
    out.method = mode == GroupMode::Classical ? "group-classical" : "group-interaction";
    out.names = default_names(d);
    out.statistics = Eigen::VectorXd::Zero(d);
    const int m = static_cast<int>(run.carried.size());
    if (m == 0)
        return result;

    // stage 2 on the carried variables
    std::vector<Term> terms2{Term::intercept()};
    for (int i = 0; i < m; ++i)
        terms2.push_back(Term::main(i));
    if (mode == GroupMode::Interaction) {
        std::set<std::pair<int, int>> wanted;
        for (int i = 0; i < m; ++i)
            for (int k = i + 1; k < m; ++k) {
                const int ga = grouping.assignment[static_cast<std::size_t>(run.carried[static_cast<std::size_t>(i)])];
                const int gb = grouping.assignment[static_cast<std::size_t>(run.carried[static_cast<std::size_t>(k)])];
                const bool same = ga == gb && run.group_active[static_cast<std::size_t>(ga)];
                const bool cross = std::find(run.active_pairs.begin(), run.active_pairs.end(),
                                             std::make_pair(std::min(ga, gb), std::max(ga, gb))) != run.active_pairs.end();
                if (same || cross)
                    terms2.push_back(Term::interaction({i, k}));
            }
    }
    const Design X2 =
        mode == GroupMode::Classical ? smallest_main_effects_design(m) : smallest_resolution_five(m).design;
    run.stage2 = X2;
    const Eigen::VectorXd y2 = evaluate(X2, [&](int i) {
        Eigen::VectorXd x = Eigen::VectorXd::Constant(d, -1.0);
        for (int k = 0; k < m; ++k)
            x(run.carried[static_cast<std::size_t>(k)]) = X2(i, k);
        return x;
    });
    run.n2 = static_cast<long long>(X2.n()) * r;
    const Fit f2 = fit_and_decide(replicate_rows(X2, r), TermSet(terms2), y2, rule);
    run.stage2_estimates = f2.estimates;
    std::vector<std::string> carried_names;
    for (int v : run.carried)
        carried_names.push_back(out.names[static_cast<std::size_t>(v)]);
    run.stage2_labels = TermSet(terms2).labels(carried_names);
    run.stage2_labels.erase(run.stage2_labels.begin());

    std::set<int> selected;
    for (std::size_t t = 1; t < terms2.size(); ++t) {
        if (!f2.active[t - 1])
            continue;
        for (int local : terms2[t].variables())
            selected.insert(run.carried[static_cast<std::size_t>(local)]);
    }
    for (int i = 0; i < m; ++i)
        out.statistics(run.carried[static_cast<std::size_t>(i)]) = std::abs(f2.estimates(i));
    out.selected.assign(selected.begin(), selected.end());
    return result;
}

// ---------------------------------------------------------------------------

int bifurcation_split(int m)
{
    if (m < 2)
        throw DomainError("cannot split a group of fewer than two variables");
    int p = 1;
    while (p * 2 < m)
        p *= 2;
    return p;
}

namespace {

struct Sample {
    std::vector<double> values;
    double mean() const
    {
        double s = 0;
        for (double v : values)
            s += v;
        return s / static_cast<double>(values.size());
    }
    double variance() const
    {
        const double m = mean();
        double s = 0;
        for (double v : values)
            s += (v - m) * (v - m);
        return values.size() > 1 ? s / static_cast<double>(values.size() - 1) : 0.0;
    }
};

} // namespace

BifurcationResult sequential_bifurcation(const Oracle& oracle, int d, double delta, const BifurcationOptions& options)
{
    if (!(delta >= 0.0))
        throw DomainError("delta must be non-negative");
    if (d < 1)
        throw DomainError("need at least one variable");
    if (options.replicates < 1)
        throw DomainError("replicates must be positive");
    if (oracle.stochastic() && options.replicates < 2)
        throw DomainError("stochastic oracles need replicates >= 2 for the t-test rule");
    std::vector<int> order = options.ordering;
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            order[static_cast<std::size_t>(i)] = i;
    }
    {
        std::vector<int> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < d; ++i)
            if (static_cast<int>(sorted.size()) != d || sorted[static_cast<std::size_t>(i)] != i)
                throw DomainError("ordering must be a permutation of the variables");
    }
    const long long before = oracle.calls();
    std::map<int, Sample> cache;
    // Run k: the first k variables in the ordering high, the rest low.
    auto level = [&](int k) -> const Sample& {
        auto it = cache.find(k);
        if (it != cache.end())
            return it->second;
        Eigen::VectorXd x = Eigen::VectorXd::Constant(d, -1.0);
        for (int pos = 0; pos < k; ++pos)
            x(order[static_cast<std::size_t>(pos)]) = 1.0;
        Sample s;
        for (int rep = 0; rep < options.replicates; ++rep) {
            const double y = oracle(x);
            if (options.foldover)
                s.values.push_back(0.5 * (y - oracle(-x)));
            else
                s.values.push_back(y);
        }
        return cache.emplace(k, std::move(s)).first->second;
    };
    auto decide = [&](const Sample& lo, const Sample& hi, double& contrast) {
        contrast = hi.mean() - lo.mean();
        const double cut = std::max(delta, noise_floor(std::max(std::abs(hi.mean()), std::abs(lo.mean()))));
        if (options.replicates == 1)
            return contrast > cut;
        const double se2 = hi.variance() / static_cast<double>(hi.values.size()) +
                           lo.variance() / static_cast<double>(lo.values.size());
        if (se2 <= 0.0)
            return contrast > cut;
        const double nh = static_cast<double>(hi.values.size()), nl = static_cast<double>(lo.values.size());
        const double dof = se2 * se2 /
                           (std::pow(hi.variance() / nh, 2) / (nh - 1) + std::pow(lo.variance() / nl, 2) / (nl - 1));
        boost::math::students_t dist(std::max(1.0, dof));
        const double t = (contrast - delta) / std::sqrt(se2);
        return boost::math::cdf(boost::math::complement(dist, t)) < options.alpha;
    };

    BifurcationResult result;
    ScreeningOutcome& out = result.outcome;
    out.method = options.foldover ? "sequential-bifurcation-foldover" : "sequential-bifurcation";
    out.names = default_names(d);
    out.statistics = Eigen::VectorXd::Zero(d);
    std::deque<std::pair<int, int>> work{{0, d}};
    std::set<int> selected;
    while (!work.empty()) {
        const auto [lo, hi] = work.front();
        work.pop_front();
        BifurcationStep step{lo, hi, 0.0, false};
        const Sample& a = level(lo);
        const Sample& b = level(hi);
        step.split = decide(a, b, step.contrast);
        result.trace.push_back(step);
        if (!step.split)
            continue;
        if (hi - lo == 1) {
            const int v = order[static_cast<std::size_t>(lo)];
            selected.insert(v);
            out.statistics(v) = 0.5 * step.contrast;
            continue;
        }
        const int mid = lo + bifurcation_split(hi - lo);
        work.emplace_back(lo, mid);
        work.emplace_back(mid, hi);
    }
    out.selected.assign(selected.begin(), selected.end());
    result.runs = oracle.calls() - before;
    return result;
}

// ---------------------------------------------------------------------------

IffdResult iffd(const Oracle& oracle, int d, const IffdOptions& o)
{
    if (o.g < 2 || (o.g & (o.g - 1)) != 0)
        throw DomainError("iffd needs g a power of two, got " + std::to_string(o.g));
    if (d < o.g)
        throw DomainError("iffd needs d >= g");
    if (o.stages < 1)
        throw DomainError("iffd needs at least one stage");
    if (!(o.midlevel_prob >= 0.0 && o.midlevel_prob <= 1.0) || !(o.sign_flip_prob >= 0.0 && o.sign_flip_prob <= 1.0))
        throw DomainError("probabilities must lie in [0, 1]");
    if (!(o.delta >= 0.0))
        throw DomainError("delta must be non-negative");
    const long long before = oracle.calls();
    const int g = o.g;
    const Eigen::MatrixXd H = hadamard(g).C;
    Eigen::MatrixXd D(2 * g, g);
    D << H, -H;

    Rng root(o.seed);
    IffdResult result;
    ScreeningOutcome& out = result.outcome;
    out.method = "iffd";
    out.names = default_names(d);
    out.statistics = Eigen::VectorXd::Zero(d);
    std::set<int> candidates;
    for (int v = 0; v < d; ++v)
        candidates.insert(v);

    for (int stage = 0; stage < o.stages; ++stage) {
        Rng rng = root.substream(static_cast<std::uint64_t>(stage));
        const auto vars = rng.permutation(d);
        std::vector<int> group(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            group[static_cast<std::size_t>(vars[static_cast<std::size_t>(i)])] = i % g;
        const auto column = rng.permutation(g);
        std::vector<double> sign(static_cast<std::size_t>(d));
        for (int v = 0; v < d; ++v)
            sign[static_cast<std::size_t>(v)] = rng.bernoulli(o.sign_flip_prob) ? -1.0 : 1.0;
        const bool mid = rng.bernoulli(o.midlevel_prob);
        result.midlevel_stage.push_back(mid);

        // grouped-variable settings: -1/+1, or 0/+1 in a mid-level stage
        Eigen::MatrixXd Z(2 * g, g);
        for (int i = 0; i < 2 * g; ++i)
            for (int j = 0; j < g; ++j) {
                const double v = D(i, column[static_cast<std::size_t>(j)]);
                Z(i, j) = mid && v < 0 ? 0.0 : v;
            }
        Eigen::VectorXd y(2 * g);
        for (int i = 0; i < 2 * g; ++i) {
            Eigen::VectorXd x(d);
            for (int v = 0; v < d; ++v)
                x(v) = sign[static_cast<std::size_t>(v)] * Z(i, group[static_cast<std::size_t>(v)]);
            y(i) = oracle(x);
        }
        Eigen::MatrixXd M(2 * g, g + 1);
        M << Eigen::VectorXd::Ones(2 * g), Z;
        const auto fit = least_squares(M, y);
        const double cut = std::max(o.delta, noise_floor(y.lpNorm<Eigen::Infinity>()));
        std::set<int> stage_active;
        for (int v = 0; v < d; ++v)
            if (std::abs(fit.coefficients(1 + group[static_cast<std::size_t>(v)])) > cut) {
                stage_active.insert(v);
                out.statistics(v) += 1.0 / o.stages;
            }
        std::set<int> next;
        std::set_intersection(candidates.begin(), candidates.end(), stage_active.begin(), stage_active.end(),
                              std::inserter(next, next.begin()));
        candidates = std::move(next);
        result.candidates_by_stage.emplace_back(candidates.begin(), candidates.end());
    }
    out.selected.assign(candidates.begin(), candidates.end());
    result.runs = oracle.calls() - before;
    return result;
}

} // namespace screenkit
