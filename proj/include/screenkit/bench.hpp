#pragma once

#include "screenkit/design.hpp"
#include "screenkit/ee.hpp"
#include "screenkit/io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace screenkit {

inline constexpr int kBenchmarkDimension = 20;

/// Welch et al. test function on [-1, 1]^20 with w_i = x_i / 2. The modified
/// variant replaces 5 (w4 - w20)^2 by 5 w4^2 - 5 w20^2.
double welch_function(const Eigen::VectorXd& x, bool modified = false);

enum class MorrisVariant { Standard, Modified };

/// Morris test function on [-1, 1]^20. Coefficients outside the fixed
/// pattern are drawn once from N(0, 1) with the coefficient seed; beta0 = 0.
/// The modified variant zeroes the third-order block on x1..x5 and sets the
/// third-order block on x6..x10 to -5.
class MorrisFunction {
public:
    explicit MorrisFunction(std::uint64_t coeff_seed = 1, MorrisVariant variant = MorrisVariant::Standard);

    double operator()(const Eigen::VectorXd& x) const;
    static double transform(int i, double x); ///< v_i, 0-based i

    std::uint64_t seed() const { return seed_; }
    MorrisVariant variant() const { return variant_; }
    double beta0 = 0.0;
    Eigen::VectorXd first;   ///< 20
    Eigen::MatrixXd second;  ///< strict upper triangle
    std::vector<std::pair<std::array<int, 3>, double>> third;
    std::vector<std::pair<std::array<int, 4>, double>> fourth;

    io::json to_json() const;

private:
    std::uint64_t seed_;
    MorrisVariant variant_;
};

/// Frozen default coefficient seed for the Morris example.
inline constexpr std::uint64_t kDefaultCoeffSeed = 76;

enum class Example { Welch = 1, Morris = 2 };

struct BenchmarkFunction {
    Example id = Example::Welch;
    int d = kBenchmarkDimension;
    std::vector<int> truth; ///< 0-based
    std::function<double(const Eigen::VectorXd&)> f;
    std::optional<MorrisFunction> morris;
    bool modified = false;
};

BenchmarkFunction make_benchmark(Example id, std::uint64_t coeff_seed = kDefaultCoeffSeed, bool modified = false);

/// mu* > gamma max mu*; with `use_sigma` also sigma > gamma max sigma.
inline constexpr double kDefaultEeGamma = 0.2;
ScreeningOutcome ee_auto_select(const EEIndices& indices, double gamma = kDefaultEeGamma, bool use_sigma = false,
                                const std::vector<std::string>& names = {});

/// Least-squares main-effects fit with two-sided t-tests at level alpha.
/// Statistic: |t|. Needs n > d + 1.
ScreeningOutcome main_effects_t_test(const Design& design, const Eigen::VectorXd& y, double alpha = 0.05);

enum class Method { Sgpvs, Rdvs, Ee, Sfrd, Ssd, Dsd };

std::string method_name(Method m);
Method parse_method(const std::string& s);
/// Run sizes accepted for each method.
std::vector<int> valid_sizes(Method m);

enum class DsdModel { MainEffects, Full };

struct BenchmarkOptions {
    Method method = Method::Ee;
    Example example = Example::Morris;
    int n = 84;
    std::uint64_t seed = 1;
    std::uint64_t coeff_seed = kDefaultCoeffSeed;
    bool modified = false;
    double sfrd_threshold = 0.01;
    double ee_gamma = kDefaultEeGamma;
    bool ee_use_sigma = false;
    DsdModel dsd_model = DsdModel::MainEffects; ///< main effects: t-tests; full: Gauss-Dantzig
    double dsd_alpha = 0.05;
    double sgpvs_alpha = 2.0;
    int rdvs_b = 100;
    int rdvs_iterations = 2000;
    int rdvs_burn_in = 500;
    int lhs_candidates = 5; ///< seeded annealing restarts per space-filling design
    int threads = 0;
    std::optional<std::filesystem::path> out; ///< artifact directory
    bool svg = false;
};

struct BenchmarkResult {
    explicit BenchmarkResult(Design d) : design(std::move(d)) {}

    Design design;
    ScreeningOutcome outcome; ///< scored against the truth
    Metrics metrics;
    Eigen::VectorXd y;
    long long oracle_calls = 0;
    std::string design_provenance;
    io::json details;                                 ///< method-specific report fields
    std::vector<std::filesystem::path> artifacts; ///< files written
};

/// Builds the method's design, evaluates the example and screens. UsageError
/// for an invalid (method, n) pair.
BenchmarkResult run_benchmark(const BenchmarkOptions& options);

io::json to_json(const BenchmarkResult& result, const BenchmarkOptions& options);

/// Minimal SVG renderings for plot data.
std::string svg_scatter(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<std::string>& labels, const std::string& xlabel, const std::string& ylabel);
std::string svg_histogram(const std::vector<double>& values, int bins, const std::vector<double>& marks,
                          const std::string& xlabel);

} // namespace screenkit
