#include "screenkit/space_filling.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/parallel.hpp"
#include "screenkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace screenkit {

namespace {

double cell_value(int cell, int n, Jitter jitter, Rng& rng)
{
    const double u = jitter == Jitter::Midpoint ? 0.5 : rng.uniform();
    return (cell + u) / n;
}

Design finish(Eigen::MatrixXd X, const QuantileFunction& quantile, const std::string& construction,
              std::uint64_t seed)
{
    Coding coding = Coding::Unit;
    if (quantile) {
        X = X.unaryExpr([&](double p) { return quantile(p); });
        if ((X.array() >= 0.0).all() && (X.array() <= 1.0).all())
            coding = Coding::Unit;
        else if ((X.array() >= -1.0).all() && (X.array() <= 1.0).all())
            coding = Coding::Symmetric;
        else
            throw DomainError("quantile function must map into [0,1] or [-1,1]");
    }
    return Design(std::move(X), coding, {}, {construction, seed});
}

} // namespace

Design lhs_random(int n, int d, std::uint64_t seed, Jitter jitter, const QuantileFunction& quantile)
{
    if (n < 2)
        throw DomainError("Latin hypercube needs n >= 2");
    if (d < 1)
        throw DomainError("Latin hypercube needs d >= 1");
    Rng rng(seed);
    Eigen::MatrixXd X(n, d);
    for (int j = 0; j < d; ++j) {
        const auto perm = rng.permutation(n);
        for (int i = 0; i < n; ++i)
            X(i, j) = cell_value(perm[static_cast<std::size_t>(i)], n, jitter, rng);
    }
    return finish(std::move(X), quantile, "lhs-random", seed);
}

Design lhs_oa(const Eigen::MatrixXi& oa, std::uint64_t seed, Jitter jitter)
{
    const int n = static_cast<int>(oa.rows());
    const int d = static_cast<int>(oa.cols());
    if (n < 2 || d < 1)
        throw DomainError("orthogonal array is empty");
    const int s = oa.maxCoeff() + 1;
    if (oa.minCoeff() < 0 || s < 2 || n % s != 0)
        throw DomainError("orthogonal array symbols must be 0..s-1 with s dividing n");
    const int per = n / s;
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < s; ++k)
            if ((oa.col(j).array() == k).count() != per)
                throw DomainError("orthogonal array column " + std::to_string(j + 1) + " is not balanced");
    Rng rng(seed);
    Eigen::MatrixXd X(n, d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < s; ++k) {
            const auto alpha = rng.permutation(per);
            int used = 0;
            for (int i = 0; i < n; ++i)
                if (oa(i, j) == k)
                    X(i, j) = cell_value(k * per + alpha[static_cast<std::size_t>(used++)], n, jitter, rng);
        }
    return Design(std::move(X), Coding::Unit, {}, {"lhs-oa", seed});
}

bool is_latin_hypercube(const Design& design)
{
    const int n = design.n();
    for (int j = 0; j < design.d(); ++j) {
        std::vector<bool> hit(static_cast<std::size_t>(n), false);
        for (int i = 0; i < n; ++i) {
            const double v = design(i, j);
            if (v < 0.0 || v > 1.0)
                return false;
            const int bin = std::min(n - 1, static_cast<int>(std::floor(v * n)));
            if (hit[static_cast<std::size_t>(bin)])
                return false;
            hit[static_cast<std::size_t>(bin)] = true;
        }
    }
    return true;
}

namespace {

double pair_phi_term(const Eigen::MatrixXd& X, int a, int b, double q)
{
    const double d2 = (X.row(a) - X.row(b)).squaredNorm();
    if (d2 == 0.0)
        return std::numeric_limits<double>::infinity();
    return std::pow(d2, -0.5 * q);
}

double pair_maxpro_term(const Eigen::MatrixXd& X, int a, int b)
{
    double prod = 1.0;
    for (Eigen::Index l = 0; l < X.cols(); ++l) {
        const double diff = X(a, l) - X(b, l);
        if (diff == 0.0)
            return std::numeric_limits<double>::infinity();
        prod *= diff * diff;
    }
    return 1.0 / prod;
}

double phi_sum(const Eigen::MatrixXd& X, double q)
{
    double s = 0.0;
    for (int i = 0; i < X.rows(); ++i)
        for (int j = i + 1; j < X.rows(); ++j)
            s += pair_phi_term(X, i, j, q);
    return s;
}

double maxpro_sum(const Eigen::MatrixXd& X)
{
    double s = 0.0;
    for (int i = 0; i < X.rows(); ++i)
        for (int j = i + 1; j < X.rows(); ++j)
            s += pair_maxpro_term(X, i, j);
    return s;
}

} // namespace

double phi_q(const Design& design, double q)
{
    if (design.n() < 2)
        throw DomainError("phi_q needs at least two points");
    if (!(q > 0.0))
        throw DomainError("q must be positive");
    const double s = phi_sum(design.runs(), q);
    return std::isinf(s) ? s : std::pow(s, 1.0 / q);
}

double maxpro(const Design& design)
{
    const int n = design.n();
    if (n < 2)
        throw DomainError("maxpro needs at least two points");
    return maxpro_sum(design.runs()) / (0.5 * n * (n - 1.0));
}

// ---------------------------------------------------------------------------

namespace {

struct LhsRun {
    Eigen::MatrixXd X;
    double value = 0.0;
    double initial = 0.0;
};

// The annealer works on the pair sum S (phi_q^q or the unnormalized maxpro
// sum); a swap of rows a, b in column j only changes pairs touching a or b.
LhsRun anneal_lhs(int n, int d, const LhsOptimizeOptions& o, Rng rng)
{
    Eigen::MatrixXd X(n, d);
    for (int j = 0; j < d; ++j) {
        const auto perm = rng.permutation(n);
        for (int i = 0; i < n; ++i)
            X(i, j) = cell_value(perm[static_cast<std::size_t>(i)], n, o.jitter, rng);
    }
    const bool phi = o.objective == LhsObjective::PhiQ;
    auto term = [&](int a, int b) { return phi ? pair_phi_term(X, a, b, o.q) : pair_maxpro_term(X, a, b); };
    auto total = [&] { return phi ? phi_sum(X, o.q) : maxpro_sum(X); };

    // Contribution of rows a and b to S
    auto local = [&](int a, int b) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k != a)
                s += term(a, k);
            if (k != b && k != a)
                s += term(b, k);
        }
        return s;
    };
    auto swap_delta = [&](int a, int b, int j) {
        const double before = local(a, b);
        std::swap(X(a, j), X(b, j));
        const double after = local(a, b);
        std::swap(X(a, j), X(b, j));
        return after - before;
    };
    auto draw = [&](int& a, int& b, int& j) {
        j = static_cast<int>(rng.below(static_cast<std::size_t>(d)));
        a = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
        b = static_cast<int>(rng.below(static_cast<std::size_t>(n - 1)));
        if (b >= a)
            ++b;
    };

    double S = total();
    LhsRun run;
    run.initial = S;
    double best = S;
    Eigen::MatrixXd bestX = X;

    double temperature = o.schedule.initial_temperature;
    if (temperature <= 0.0) {
        double sum = 0.0;
        int count = 0;
        for (int t = 0; t < o.schedule.calibration_swaps; ++t) {
            int a, b, j;
            draw(a, b, j);
            const double delta = swap_delta(a, b, j);
            if (std::isfinite(delta)) {
                sum += std::abs(delta);
                ++count;
            }
        }
        temperature = count ? sum / count : 1.0;
        if (temperature <= 0.0)
            temperature = 1.0;
    }
    const int stage = std::max(1, o.schedule.stage_length);
    long long accepted = 0;
    for (long long it = 0; it < o.schedule.iterations; ++it) {
        int a, b, j;
        draw(a, b, j);
        const double delta = swap_delta(a, b, j);
        bool take = false;
        if (std::isnan(delta))
            take = false;
        else if (delta <= 0.0)
            take = true;
        else if (std::isfinite(delta))
            take = rng.uniform() < std::exp(-delta / temperature);
        if (take) {
            std::swap(X(a, j), X(b, j));
            S += delta;
            if (++accepted % 256 == 0 || !std::isfinite(S))
                S = total();
            if (S < best) {
                S = total();
                if (S < best) {
                    best = S;
                    bestX = X;
                }
            }
        }
        if ((it + 1) % stage == 0)
            temperature *= o.schedule.cooling;
    }
    run.X = bestX;
    run.value = best;
    return run;
}

double finish_value(LhsObjective objective, double S, int n, double q)
{
    if (objective == LhsObjective::PhiQ)
        return std::isinf(S) ? S : std::pow(S, 1.0 / q);
    return S / (0.5 * n * (n - 1.0));
}

} // namespace

LhsOptimizeResult lhs_optimize(int n, int d, const LhsOptimizeOptions& options)
{
    if (n < 2 || d < 1)
        throw DomainError("lhs_optimize needs n >= 2 and d >= 1");
    if (options.objective == LhsObjective::PhiQ && !(options.q > 0.0))
        throw DomainError("q must be positive");
    if (options.restarts < 1)
        throw DomainError("restarts must be positive");
    if (!(options.schedule.cooling > 0.0 && options.schedule.cooling <= 1.0))
        throw DomainError("cooling factor must lie in (0, 1]");
    Rng root(options.seed);
    std::vector<Rng> streams;
    for (int r = 0; r < options.restarts; ++r)
        streams.push_back(root.substream(static_cast<std::uint64_t>(r)));
    std::vector<LhsRun> runs(static_cast<std::size_t>(options.restarts));
    parallel_for(
        options.restarts,
        [&](int r) { runs[static_cast<std::size_t>(r)] = anneal_lhs(n, d, options, streams[static_cast<std::size_t>(r)]); },
        options.threads);
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].value < runs[best].value)
            best = r;
    Design design(runs[best].X, Coding::Unit, {},
                  {options.objective == LhsObjective::PhiQ ? "lhs-maximin" : "lhs-maxpro", options.seed});
    const double value =
        options.objective == LhsObjective::PhiQ ? phi_q(design, options.q) : maxpro(design);
    return {std::move(design), value, finish_value(options.objective, runs[best].initial, n, options.q)};
}

// ---------------------------------------------------------------------------

double morris_default_delta(int f)
{
    if (f < 2)
        throw DomainError("grid needs at least two levels");
    return f / (2.0 * (f - 1.0));
}

MorrisPlan morris_plan(int d, int r, int f, std::optional<double> delta, std::uint64_t seed)
{
    if (d < 1 || r < 1)
        throw DomainError("Morris plan needs d >= 1 and r >= 1");
    if (f < 2 || f % 2 != 0)
        throw DomainError("grid levels f must be even and at least 2");
    const double step = delta ? *delta : morris_default_delta(f);
    // step must be a positive whole number of grid spacings
    const double spacings = step * (f - 1);
    const int k = static_cast<int>(std::lround(spacings));
    if (!(step > 0.0) || std::abs(spacings - k) > 1e-9 || k < 1 || k > f - 1)
        throw DomainError("step " + std::to_string(step) + " is not a multiple of the grid spacing 1/" +
                          std::to_string(f - 1) + " within [0,1]");

    Rng root(seed);
    const int m = d + 1;
    Eigen::MatrixXd X(m * r, d);
    MorrisPlan plan{Design(Eigen::MatrixXd::Zero(1, 1), Coding::Unit), r, step, f, {}};
    std::vector<Rng> streams;
    for (int t = 0; t < r; ++t)
        streams.push_back(root.substream(static_cast<std::uint64_t>(t)));
    parallel_for(
        r,
        [&](int t) {
            Rng& rng = streams[static_cast<std::size_t>(t)];
            // base grid index in 0 .. f-1-k so that base + step stays on the grid
            Eigen::VectorXi base(d);
            for (int i = 0; i < d; ++i)
                base(i) = static_cast<int>(rng.below(static_cast<std::size_t>(f - k)));
            std::vector<bool> flip(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i)
                flip[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
            const auto order = rng.permutation(d);
            // B row l has ones in the first l (shuffled) columns
            for (int l = 0; l < m; ++l)
                for (int c = 0; c < d; ++c) {
                    const int var = order[static_cast<std::size_t>(c)];
                    int b = c < l ? 1 : 0;
                    if (flip[static_cast<std::size_t>(var)])
                        b = 1 - b;
                    X(t * m + l, var) = static_cast<double>(base(var) + b * k) / (f - 1);
                }
        },
        1);
    for (int t = 0; t < r; ++t)
        plan.trajectory_starts.push_back(t * m);
    plan.design = Design(std::move(X), Coding::Unit, {}, {"morris", seed});
    return plan;
}

void validate_morris_plan(const MorrisPlan& plan)
{
    const int d = plan.d();
    const int m = d + 1;
    if (plan.design.n() != m * plan.r || static_cast<int>(plan.trajectory_starts.size()) != plan.r)
        throw DomainError("corrupt plan: expected " + std::to_string(plan.r) + " trajectories of " +
                          std::to_string(m) + " rows");
    const double tol = 1e-9;
    for (int t = 0; t < plan.r; ++t) {
        const int s = plan.trajectory_starts[static_cast<std::size_t>(t)];
        if (s != t * m)
            throw DomainError("corrupt plan: trajectory " + std::to_string(t + 1) + " starts at row " +
                              std::to_string(s + 1));
        std::set<int> seen;
        for (int l = 1; l < m; ++l) {
            const Eigen::RowVectorXd diff = plan.design.runs().row(s + l) - plan.design.runs().row(s + l - 1);
            int changed = -1;
            for (int i = 0; i < d; ++i)
                if (std::abs(diff(i)) > tol) {
                    if (changed >= 0)
                        throw DomainError("corrupt plan: rows " + std::to_string(s + l) + " and " +
                                          std::to_string(s + l + 1) + " differ in more than one coordinate");
                    changed = i;
                }
            if (changed < 0)
                throw DomainError("corrupt plan: rows " + std::to_string(s + l) + " and " + std::to_string(s + l + 1) +
                                  " are identical");
            if (std::abs(std::abs(diff(changed)) - plan.delta) > tol)
                throw DomainError("corrupt plan: step in row " + std::to_string(s + l + 1) + " is not +-delta");
            if (!seen.insert(changed).second)
                throw DomainError("corrupt plan: variable " + std::to_string(changed + 1) +
                                  " moves twice in trajectory " + std::to_string(t + 1));
        }
    }
    for (Eigen::Index i = 0; i < plan.design.runs().size(); ++i) {
        const double g = plan.design.runs().data()[i] * (plan.f - 1);
        if (std::abs(g - std::round(g)) > tol)
            throw DomainError("corrupt plan: value off the grid");
    }
}

} // namespace screenkit
