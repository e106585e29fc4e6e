#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace screenkit {

/// Value set a design's entries are drawn from.
enum class Coding {
    TwoLevel,   ///< {-1, +1}
    ThreeLevel, ///< {-1, 0, +1}
    Unit,       ///< [0, 1]
    Symmetric,  ///< [-1, 1]
};

const char* coding_name(Coding c);
Coding parse_coding(const std::string& s);

/// How a design was produced; carried into reports.
struct Provenance {
    std::string construction;
    std::uint64_t seed = 0;
};

/// An n x d experiment plan. Rows are runs, columns are variables.
/// Immutable after construction; the constructor validates the coding.
class Design {
public:
    Design(Eigen::MatrixXd runs, Coding coding, std::vector<std::string> names = {},
           Provenance provenance = {});

    const Eigen::MatrixXd& runs() const { return runs_; }
    Coding coding() const { return coding_; }
    const std::vector<std::string>& names() const { return names_; }
    const Provenance& provenance() const { return provenance_; }

    int n() const { return static_cast<int>(runs_.rows()); }
    int d() const { return static_cast<int>(runs_.cols()); }
    double operator()(int run, int var) const { return runs_(run, var); }
    Eigen::VectorXd column(int var) const { return runs_.col(var); }

    /// Same runs, different provenance tag.
    Design with_provenance(Provenance p) const;

    /// Rows [first, first + count).
    Design slice_rows(int first, int count) const;

    /// Columns in `vars`, renamed x1..xk unless `keep_names`.
    Design select_columns(const std::vector<int>& vars, bool keep_names = true) const;

    /// Affine map of a [0,1] plan onto [-1,1].
    Design to_symmetric() const;

private:
    Eigen::MatrixXd runs_;
    Coding coding_;
    std::vector<std::string> names_;
    Provenance provenance_;
};

/// Default variable labels x1..xd.
std::vector<std::string> default_names(int d);

/// A monomial: sorted (variable, power) pairs with positive powers.
/// The empty monomial is the intercept.
struct Term {
    std::vector<std::pair<int, int>> factors;

    Term() = default;
    explicit Term(std::vector<std::pair<int, int>> f);

    static Term intercept() { return {}; }
    static Term main(int i) { return Term({{i, 1}}); }
    static Term interaction(std::vector<int> vars);
    static Term quadratic(int i) { return Term({{i, 2}}); }

    bool is_intercept() const { return factors.empty(); }
    int degree() const;
    std::vector<int> variables() const;
    std::string label(const std::vector<std::string>& names) const;

    friend bool operator==(const Term&, const Term&) = default;
};

/// Ordered, duplicate-free list of terms. The intercept, if present, is first.
class TermSet {
public:
    TermSet() = default;
    explicit TermSet(std::vector<Term> terms);

    /// Canonical sets: intercept, mains ascending, 2fi lexicographic,
    /// quadratics ascending.
    static TermSet intercept_only();
    static TermSet main_effects(int d, bool intercept = true);
    static TermSet main_and_interactions(int d, bool intercept = true);
    static TermSet main_interactions_quadratics(int d, bool intercept = true);
    /// Every product of distinct variables of order `min_order`..`max_order`.
    static TermSet interactions(int d, int min_order, int max_order);

    const std::vector<Term>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    const Term& operator[](std::size_t i) const { return terms_[i]; }
    bool has_intercept() const { return !terms_.empty() && terms_.front().is_intercept(); }
    int max_variable() const;
    std::vector<std::string> labels(const std::vector<std::string>& names) const;

private:
    std::vector<Term> terms_;
};

/// Numeric expansion H of a term set over a design.
struct ModelMatrix {
    Eigen::MatrixXd H;
    TermSet terms;
    std::vector<std::string> labels;
};

ModelMatrix build_model_matrix(const Design& design, const TermSet& terms);

struct LeastSquaresFit {
    Eigen::VectorXd coefficients;
    double rss = 0.0;
    Eigen::VectorXd residuals;
};

/// Relative singular value cut-off used for rank decisions.
inline constexpr double kRankTolerance = 1e-8;

/// Ordinary least squares. Throws SingularError naming dependent columns.
LeastSquaresFit least_squares(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                              const std::vector<std::string>& labels = {});
LeastSquaresFit least_squares(const ModelMatrix& H, const Eigen::VectorXd& y);

/// Alias matrix (H'H)^-1 H' Htilde with row/column labels.
struct AliasMatrix {
    Eigen::MatrixXd A;
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
};

AliasMatrix alias_matrix(const ModelMatrix& H, const ModelMatrix& H_tilde);

struct Metrics {
    double sensitivity = 1.0;     ///< phi_s
    double type_one = 0.0;        ///< phi_I
    double false_discovery = 0.0; ///< phi_fdr
};

/// Screening quality of a selection against the truth. Indices are 0-based
/// variables in [0, d).
Metrics screening_metrics(const std::vector<int>& selected, const std::vector<int>& truth, int d);

/// Selection result of any screening method.
struct ScreeningOutcome {
    std::string method;
    std::vector<int> selected; ///< 0-based, ascending
    std::vector<std::string> names;
    Eigen::VectorXd statistics; ///< one score per variable
    std::optional<std::vector<int>> truth;
    std::optional<Metrics> metrics;

    /// Fill `truth` and `metrics`.
    void score(const std::vector<int>& true_active);
};

struct HalfNormalPoint {
    double quantile;
    double magnitude;
    int index; ///< position of the estimate in the input
};

/// Sorted |estimates| against half-normal quantiles.
std::vector<HalfNormalPoint> half_normal_data(const Eigen::VectorXd& estimates);

/// Standard normal quantile function.
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

} // namespace screenkit
