#pragma once

#include "screenkit/design.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace screenkit {

/// Output function on a settings vector, with an invocation counter.
class Oracle {
public:
    using Function = std::function<double(const Eigen::VectorXd&)>;

    explicit Oracle(Function f, bool stochastic = false)
        : f_(std::move(f)), stochastic_(stochastic), calls_(std::make_shared<std::atomic<long long>>(0))
    {
    }

    /// Evaluates and counts; failures are rethrown as OracleError naming the
    /// call number.
    double operator()(const Eigen::VectorXd& x) const;

    long long calls() const { return calls_->load(); }
    void reset() const { calls_->store(0); }
    bool stochastic() const { return stochastic_; }

private:
    Function f_;
    bool stochastic_;
    std::shared_ptr<std::atomic<long long>> calls_;
};

struct Grouping {
    std::vector<int> assignment; ///< variable -> group (0-based)

    int g() const;
    int d() const { return static_cast<int>(assignment.size()); }
    std::vector<int> sizes() const;
    std::vector<int> members(int group) const;

    /// g contiguous blocks, sizes differing by at most one.
    static Grouping contiguous(int d, int g);
    /// Throws DomainError unless every group is non-empty.
    void validate() const;
};

enum class GroupMode { Classical, Interaction };

/// |estimate| > delta for deterministic oracles; with replicates > 1 a
/// two-sided t-test on the estimate at level alpha.
struct DecisionRule {
    double delta = 0.0;
    int replicates = 1;
    double alpha = 0.2;
};

struct GroupScreenRun {
    explicit GroupScreenRun(Design first) : stage1(std::move(first)) {}

    Design stage1;                    ///< on the grouped variables
    Eigen::VectorXd stage1_estimates; ///< grouped main effects then pair interactions
    std::vector<std::string> stage1_labels;
    std::vector<bool> group_active;
    std::vector<std::pair<int, int>> active_pairs; ///< interaction mode
    std::vector<int> carried;                      ///< variables taken to stage 2
    std::optional<Design> stage2;                  ///< on the carried variables
    Eigen::VectorXd stage2_estimates;
    std::vector<std::string> stage2_labels;
    long long n1 = 0;
    long long n2 = 0; ///< realized stage-2 runs (times replicates)
    long long total() const { return n1 + n2; }
};

struct GroupScreenResult {
    GroupScreenRun run;
    ScreeningOutcome outcome;
};

/// Two-stage factorial group screening. Variables that are not carried are
/// held at their low level in stage 2.
GroupScreenResult group_screen(const Oracle& oracle, const Grouping& grouping, GroupMode mode,
                               const DecisionRule& rule = {}, std::uint64_t seed = 1);

struct BifurcationOptions {
    std::vector<int> ordering; ///< position -> variable; identity when empty
    bool foldover = false;
    int replicates = 1;
    double alpha = 0.2; ///< one-sided Welch test level when replicates > 1
};

struct BifurcationStep {
    int first = 0; ///< group covers ordering positions [first, last)
    int last = 0;
    double contrast = 0.0; ///< estimate of twice the summed main effects
    bool split = false;
};

struct BifurcationResult {
    ScreeningOutcome outcome;
    std::vector<BifurcationStep> trace;
    long long runs = 0; ///< oracle invocations
};

/// Size of the first subgroup when splitting m variables: the largest power
/// of two below m.
int bifurcation_split(int m);

BifurcationResult sequential_bifurcation(const Oracle& oracle, int d, double delta,
                                         const BifurcationOptions& options = {});

struct IffdOptions {
    int g = 8;
    int stages = 4;
    double midlevel_prob = 0.25;
    double sign_flip_prob = 0.5;
    double delta = 0.0;
    std::uint64_t seed = 1;
};

struct IffdResult {
    ScreeningOutcome outcome; ///< statistic: share of stages in an active group
    std::vector<std::vector<int>> candidates_by_stage; ///< intersection after each stage
    std::vector<bool> midlevel_stage;
    long long runs = 0;
};

/// Iterated fractional factorial design: every stage is the 2g-run foldover of
/// a g x g Hadamard matrix with fresh random groups, columns and signs.
IffdResult iffd(const Oracle& oracle, int d, const IffdOptions& options = {});

} // namespace screenkit
