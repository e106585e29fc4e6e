#pragma once

#include "screenkit/design.hpp"
#include "screenkit/factorial.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace screenkit {

enum class SsdCriterion { Es2, BayesD };

const char* criterion_name(SsdCriterion c);
SsdCriterion parse_criterion(const std::string& s);

struct SsdCriterionValue {
    SsdCriterion criterion = SsdCriterion::Es2;
    double value = 0.0;
    int orthogonal_pairs = 0;
    int max_abs_s = 0;
    std::map<long long, int> s_squared_counts; ///< s_ij^2 -> number of pairs
    std::optional<double> lower_bound;         ///< Es2 only, when available
    std::optional<double> tau2;                ///< BayesD only
};

/// Average squared inner product over column pairs of a two-level design.
SsdCriterionValue es2(const Design& design);

/// Es2 over the columns of [1 | X], for designs whose columns need not balance.
double es2_unbalanced(const Design& design);

/// Lower bound on E(s^2) for balanced n x d two-level designs. Available for
/// even n (n = 0 or 2 mod 4); std::nullopt otherwise.
std::optional<double> es2_lower_bound(int n, int d);

inline constexpr double kDefaultTau2 = 5.0;

/// Psi_D = |H'H + K / tau2|^(1/p), with H the model matrix (intercept first,
/// unpenalized) and p its column count. Defaults to intercept + main effects.
SsdCriterionValue bayes_d(const Design& design, double tau2 = kDefaultTau2,
                          const std::optional<TermSet>& terms = std::nullopt);

/// Hadamard matrix whose first column is 1 and the rest are the columns of a
/// two-level OA, e.g. the canonical 12-run Plackett-Burman array.
HadamardMatrix hadamard_from_design(const Design& oa);

/// Half fraction of a normalized Hadamard matrix: keeps the rows where the
/// branch variable (0-based, among the non-constant columns) equals
/// `keep_sign`, then drops it. n/2 runs, order - 2 variables.
Design lin_ssd(const HadamardMatrix& h, int branch_col, int keep_sign = 1);

/// OA columns of h plus the elementwise products of the given 0-based pairs.
Design wu_ssd(const HadamardMatrix& h, const std::vector<std::pair<int, int>>& interaction_pairs);

struct SsdSearchOptions {
    SsdCriterion criterion = SsdCriterion::Es2;
    double tau2 = kDefaultTau2;
    std::optional<TermSet> terms; ///< BayesD model, default main effects
    int restarts = 20;
    long long moves = 20000; ///< annealing moves per restart
    double cooling = 0.0;    ///< geometric factor per move; 0 picks one from `moves`
    std::uint64_t seed = 1;
    int threads = 0;
};

struct SsdSearchResult {
    Design design;
    SsdCriterionValue value;
    double initial_value = 0.0; ///< criterion of the winning restart's start
    long long moves_used = 0;
    int best_restart = 0;
    bool unbalanced = false; ///< odd n under Es2
};

/// Simulated-annealing search. Es2 keeps columns balanced via within-column
/// swaps (odd n: single-cell flips minimizing the unbalanced form); BayesD
/// uses single-cell flips.
SsdSearchResult search_ssd(int n, int d, const SsdSearchOptions& options = {});

} // namespace screenkit
