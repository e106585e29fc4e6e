#pragma once

#include "screenkit/design.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace screenkit {

/// A factorial effect as a set of variables, bit i = variable i (0-based).
using Word = std::uint64_t;

inline int word_length(Word w) { return __builtin_popcountll(w); }
Word word_from_variables(const std::vector<int>& vars);
std::vector<int> word_variables(Word w);
/// "x1x2x3", or "I" for the empty word.
std::string word_label(Word w);

/// Generators of a regular 2^(d-q) fraction with their constant signs.
struct DefiningWordSet {
    std::vector<Word> words;
    std::vector<int> signs; ///< +1/-1 per word; empty means all +1

    /// Parse "1234;235" (1-based digits, or comma separated numbers inside a
    /// word when d > 9: "1,2,10;3,11").
    static DefiningWordSet parse(const std::string& spec);

    int sign(std::size_t k) const { return signs.empty() ? 1 : signs[k]; }
};

struct SignedWord {
    Word word = 0;
    int sign = 1;
};

/// One alias string: an effect and every effect it is confounded with.
struct AliasString {
    Word effect = 0;
    std::vector<SignedWord> aliases;
};

/// Aliasing structure of a regular fraction.
struct AliasReport {
    std::vector<SignedWord> defining_relation; ///< all 2^q - 1 words
    int resolution = 0;                        ///< minimum word length
    std::vector<AliasString> alias_strings;    ///< for every main effect and 2fi
    std::optional<AliasMatrix> alias_matrix;

    /// Number of two-variable interactions aliased with main effect `var`.
    int two_factor_aliases_of_main(int var) const;
};

struct RegularFraction {
    Design design;
    AliasReport report;
};

/// Largest d accepted by full_factorial.
inline constexpr int kMaxFullFactorial = 20;

/// 2^d runs in standard order: x1 changes slowest, xd fastest.
Design full_factorial(int d);

/// Regular 2^(d-q) fraction. Dependent variables are the highest-indexed
/// variable of each (reduced) word; the rest form a full factorial.
RegularFraction regular_fraction(int d, const DefiningWordSet& words);

/// Expand generators into the full defining relation; throws on dependence.
std::vector<SignedWord> defining_relation(const DefiningWordSet& words);

/// Alias strings for all effects of order <= max_order.
AliasReport alias_report(int d, const std::vector<SignedWord>& relation, int max_order = 2);

/// Generators for a 16-run resolution III fraction in 11 variables where each
/// main effect is aliased with at most four two-variable interactions.
DefiningWordSet sixteen_run_eleven_factor_generators();

/// Square +-1 matrix with C'C = nI.
struct HadamardMatrix {
    Eigen::MatrixXd C;
    int order() const { return static_cast<int>(C.rows()); }
    /// Rows multiplied by -1 so that the first column is all +1.
    HadamardMatrix normalized() const;
};

/// Orders reachable by Sylvester doubling of 1 or of a Paley type-I matrix
/// (q + 1 with q prime, q = 3 mod 4).
bool hadamard_available(int n);
std::vector<int> supported_hadamard_orders(int up_to);
HadamardMatrix hadamard(int n);

/// OA(n, 2^(n-1), 2). n = 12 returns the canonical 12-run array verbatim.
Design plackett_burman(int n);

/// The canonical 12-run Plackett-Burman array.
Design plackett_burman_12();

/// Definitive screening design with 2d + 1 runs (d even, d >= 4). d = 6
/// returns the canonical table; d - 1 prime uses a Paley conference matrix;
/// otherwise a seeded coordinate-exchange search with `restarts` restarts.
Design definitive_screening(int d, std::uint64_t seed = 1, int restarts = 20);

/// The canonical six-variable definitive screening design.
Design definitive_screening_6();

/// Top-half d x d conference-style matrix found by coordinate exchange
/// (zero diagonal, +-1 elsewhere) maximizing det(C'C).
Eigen::MatrixXd search_dsd_core(int d, std::uint64_t seed, int restarts);

/// First m columns of the smallest available Plackett-Burman design with
/// more than m runs (main effects orthogonal and estimable).
Design smallest_main_effects_design(int m);

/// Smallest regular fraction of resolution >= V in m variables (full
/// factorial, reported with resolution 0, when no fraction exists). Throws ResourceError for m > 16.
RegularFraction smallest_resolution_five(int m);

/// Systematic fractional replicate design: all-low, d one-high, d one-low,
/// all-high (2d + 2 runs).
Design sfrd(int d);

/// [X; -X] for two- or three-level designs.
Design foldover(const Design& design);

/// One-factor-at-a-time plan: all low, then each variable high in turn.
Design ofaat(int d);

/// True when the two designs contain the same rows, ignoring order.
bool same_row_set(const Design& a, const Design& b);

} // namespace screenkit
