#include <doctest.h>

#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"

#include <cmath>
#include <map>
#include <set>

using namespace screenkit;

namespace {

// x1..x4 of the 2^(4-1) example table (x4 = x1x2x3).
const int kTable1Design[8][4] = {{-1, -1, -1, -1}, {-1, -1, 1, 1}, {-1, 1, -1, 1}, {-1, 1, 1, -1},
                                 {1, -1, -1, 1},   {1, -1, 1, -1}, {1, 1, -1, -1}, {1, 1, 1, 1}};

long long dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return std::llround(a.dot(b)); }

/// Absolute 3-column J-characteristics; invariant under row/column
/// permutations and column sign switches.
std::multiset<long long> j3_profile(const Eigen::MatrixXd& X)
{
    std::multiset<long long> out;
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        for (Eigen::Index j = i + 1; j < X.cols(); ++j)
            for (Eigen::Index k = j + 1; k < X.cols(); ++k)
                out.insert(std::llabs(std::llround(X.col(i).cwiseProduct(X.col(j)).dot(X.col(k)))));
    return out;
}

bool strength_two(const Design& d)
{
    for (int a = 0; a < d.d(); ++a)
        for (int b = a + 1; b < d.d(); ++b) {
            std::map<std::pair<int, int>, int> counts;
            for (int r = 0; r < d.n(); ++r)
                ++counts[{static_cast<int>(d(r, a)), static_cast<int>(d(r, b))}];
            if (counts.size() != 4)
                return false;
            for (const auto& [k, c] : counts)
                if (c != d.n() / 4)
                    return false;
        }
    return true;
}

} // namespace

TEST_CASE("full factorial")
{
    const auto f3 = full_factorial(3);
    REQUIRE(f3.n() == 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(f3(r, c) == kTable1Design[r][c]);
    const auto f1 = full_factorial(1);
    CHECK(f1(0, 0) == -1);
    CHECK(f1(1, 0) == 1);
    const auto f2 = full_factorial(2);
    CHECK(dot(f2.column(0), f2.column(1)) == 0);
    CHECK_THROWS_AS(full_factorial(21), ResourceError);
}

TEST_CASE("regular fraction from I = x1x2x3x4")
{
    const auto rf = regular_fraction(4, DefiningWordSet::parse("1234"));
    REQUIRE(rf.design.n() == 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(rf.design(r, c) == kTable1Design[r][c]);
    CHECK(rf.report.resolution == 4);
    REQUIRE(rf.report.defining_relation.size() == 1);
    CHECK(word_label(rf.report.defining_relation[0].word) == "x1x2x3x4");
    // x1 = x2x3x4, x1x2 = x3x4
    const auto& s1 = rf.report.alias_strings[0];
    CHECK(word_label(s1.effect) == "x1");
    CHECK(word_label(s1.aliases[0].word) == "x2x3x4");
    bool found = false;
    for (const auto& s : rf.report.alias_strings)
        if (word_label(s.effect) == "x1x2") {
            CHECK(word_label(s.aliases[0].word) == "x3x4");
            found = true;
        }
    CHECK(found);
}

TEST_CASE("negative generator sign flips the constant product")
{
    const auto rf = regular_fraction(4, DefiningWordSet::parse("-1234"));
    for (int r = 0; r < rf.design.n(); ++r)
        CHECK(rf.design(r, 0) * rf.design(r, 1) * rf.design(r, 2) * rf.design(r, 3) == -1);
    CHECK(rf.report.defining_relation[0].sign == -1);
}

TEST_CASE("16-run resolution III fraction in 11 variables")
{
    const auto rf = regular_fraction(11, sixteen_run_eleven_factor_generators());
    CHECK(rf.design.n() == 16);
    CHECK(rf.report.resolution == 3);
    CHECK(rf.report.defining_relation.size() == 127);
    for (int i = 0; i < 11; ++i)
        CHECK(rf.report.two_factor_aliases_of_main(i) <= 4);
    // each interaction aliased with at most one main effect
    for (const auto& s : rf.report.alias_strings)
        if (word_length(s.effect) == 2) {
            int mains = 0;
            for (const auto& a : s.aliases)
                mains += word_length(a.word) == 1;
            CHECK(mains <= 1);
        }
}

TEST_CASE("regular fraction words hold on every run and alias strings match columns")
{
    const auto words = DefiningWordSet::parse("1235;-1246;2347");
    const auto rf = regular_fraction(7, words);
    CHECK(rf.design.n() == 16);
    for (const auto& w : rf.report.defining_relation) {
        Eigen::VectorXd prod = Eigen::VectorXd::Ones(16);
        for (int v : word_variables(w.word))
            prod = prod.cwiseProduct(rf.design.column(v));
        CHECK(prod == Eigen::VectorXd::Constant(16, w.sign));
    }
    int min_len = 64;
    for (const auto& w : rf.report.defining_relation)
        min_len = std::min(min_len, word_length(w.word));
    CHECK(rf.report.resolution == min_len);

    auto column = [&](Word w) {
        Eigen::VectorXd c = Eigen::VectorXd::Ones(16);
        for (int v : word_variables(w))
            c = c.cwiseProduct(rf.design.column(v));
        return c;
    };
    for (const auto& s : rf.report.alias_strings) {
        const auto base = column(s.effect);
        for (const auto& a : s.aliases)
            CHECK(column(a.word) == base * static_cast<double>(a.sign));
    }
    // effects in different strings are orthogonal
    const auto& strings = rf.report.alias_strings;
    for (std::size_t i = 0; i < strings.size(); ++i)
        for (std::size_t j = i + 1; j < strings.size(); ++j) {
            bool same = false;
            for (const auto& a : strings[i].aliases)
                same = same || a.word == strings[j].effect;
            if (!same)
                CHECK(dot(column(strings[i].effect), column(strings[j].effect)) == 0);
        }
}

TEST_CASE("dependent generators are rejected")
{
    CHECK_THROWS_AS(regular_fraction(6, DefiningWordSet::parse("123;456;123456")), DomainError);
    CHECK_THROWS_AS(regular_fraction(4, DefiningWordSet::parse("1234;1234")), DomainError);
    CHECK_THROWS_AS(regular_fraction(3, DefiningWordSet::parse("1234")), IndexError);
}

TEST_CASE("Hadamard matrices")
{
    for (int n : {1, 2, 4, 8, 12, 16, 20, 24, 32, 40, 44, 48}) {
        CAPTURE(n);
        const auto H = hadamard(n);
        CHECK(H.order() == n);
        CHECK(H.C.transpose() * H.C == Eigen::MatrixXd::Identity(n, n) * n);
        CHECK(H.C.cwiseAbs() == Eigen::MatrixXd::Ones(n, n));
    }
    CHECK_THROWS_AS(hadamard(28), ConstructionError);
    CHECK_THROWS_AS(hadamard(6), ConstructionError);
    try {
        hadamard(28);
    } catch (const ConstructionError& e) {
        CHECK(std::string(e.what()).find("12") != std::string::npos);
    }
}

TEST_CASE("Paley order 12 matches the canonical PB12 up to equivalence")
{
    const auto pb = plackett_burman_12();
    Eigen::MatrixXd full(12, 12);
    full << Eigen::VectorXd::Ones(12), pb.runs();
    CHECK(full.transpose() * full == Eigen::MatrixXd::Identity(12, 12) * 12);

    const auto derived = plackett_burman(16); // sanity: non-12 path
    CHECK(derived.d() == 15);

    const auto H = hadamard(12).normalized();
    CHECK(H.C.col(0) == Eigen::VectorXd::Ones(12));
    const Eigen::MatrixXd paley_pb = H.C.rightCols(11);
    CHECK(j3_profile(paley_pb) == j3_profile(pb.runs()));
}

TEST_CASE("Plackett-Burman designs")
{
    const auto pb = plackett_burman(12);
    CHECK(pb.n() == 12);
    CHECK(pb.d() == 11);
    CHECK(pb(0, 0) == -1);
    CHECK(pb(11, 10) == -1);
    CHECK(pb(1, 5) == 1);
    CHECK(strength_two(pb));

    // columns x1, x2: each sign pair three times
    std::map<std::pair<int, int>, int> counts;
    for (int r = 0; r < 12; ++r)
        ++counts[{static_cast<int>(pb(r, 0)), static_cast<int>(pb(r, 1))}];
    for (const auto& [k, c] : counts)
        CHECK(c == 3);

    for (int n : {4, 8, 16, 20, 24}) {
        CAPTURE(n);
        const auto d = plackett_burman(n);
        CHECK(strength_two(d));
        Eigen::MatrixXd H(n, n);
        H << Eigen::VectorXd::Ones(n), d.runs();
        CHECK(H.transpose() * H == Eigen::MatrixXd::Identity(n, n) * n);
    }

    // n = 8 is a regular 2^(7-4) fraction: products of columns are columns
    const auto p8 = plackett_burman(8);
    for (int a = 0; a < 7; ++a)
        for (int b = a + 1; b < 7; ++b) {
            const Eigen::VectorXd prod = p8.column(a).cwiseProduct(p8.column(b));
            bool found = false;
            for (int c = 0; c < 7; ++c)
                found = found || prod == p8.column(c) || prod == -p8.column(c);
            CHECK(found);
        }
}

TEST_CASE("definitive screening design for six variables is the canonical table")
{
    const auto dsd = definitive_screening(6);
    REQUIRE(dsd.n() == 13);
    const int row1[6] = {0, 1, -1, -1, -1, -1};
    const int row9[6] = {1, -1, 1, -1, 0, -1};
    for (int j = 0; j < 6; ++j) {
        CHECK(dsd(0, j) == row1[j]);
        CHECK(dsd(8, j) == row9[j]);
        CHECK(dsd(12, j) == 0);
        CHECK(dsd.column(j).sum() == 0);
        CHECK((dsd.column(j).array() == 0).count() == 3);
    }
}

namespace {

void check_dsd_invariants(const Design& dsd)
{
    const int d = dsd.d();
    REQUIRE(dsd.n() == 2 * d + 1);
    for (int j = 0; j < d; ++j) {
        CHECK(dsd(2 * j, j) == 0);
        CHECK(dsd.runs().row(2 * j + 1) == -dsd.runs().row(2 * j));
        CHECK(dsd(2 * d, j) == 0);
        CHECK(dot(dsd.column(j), Eigen::VectorXd::Ones(dsd.n())) == 0);
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            CHECK(dot(dsd.column(i), dsd.column(j).cwiseProduct(dsd.column(j))) == 0);
            for (int k = j + 1; k < d; ++k)
                if (i != j && i != k)
                    CHECK(dot(dsd.column(i), dsd.column(j).cwiseProduct(dsd.column(k))) == 0);
        }
}

} // namespace

TEST_CASE("definitive screening orthogonality identities")
{
    check_dsd_invariants(definitive_screening(6));
    check_dsd_invariants(definitive_screening(4));
    const auto d20 = definitive_screening(20);
    check_dsd_invariants(d20);
    // conference core: main effects mutually orthogonal
    const Eigen::MatrixXd G = d20.runs().transpose() * d20.runs();
    CHECK(G == Eigen::MatrixXd::Identity(20, 20) * 38);

    const auto searched = definitive_screening(10, 3, 4);
    check_dsd_invariants(searched);
    const Eigen::MatrixXd G10 = searched.runs().transpose() * searched.runs();
    CHECK(G10.determinant() > 0);

    CHECK_THROWS_AS(definitive_screening(7), DomainError);
    CHECK_THROWS_AS(definitive_screening(2), DomainError);
}

TEST_CASE("systematic fractional replicate design")
{
    CHECK(sfrd(20).n() == 42);
    const auto s2 = sfrd(2);
    const int expected[6][2] = {{-1, -1}, {1, -1}, {-1, 1}, {-1, 1}, {1, -1}, {1, 1}};
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 2; ++c)
            CHECK(s2(r, c) == expected[r][c]);
    for (int d : {2, 5, 20}) {
        const auto s = sfrd(d);
        CHECK((s.runs().row(0) + s.runs().row(2 * d + 1)).isZero());
        // mirrored construction: row i and row d + i are negatives
        for (int i = 1; i <= d; ++i)
            CHECK((s.runs().row(i) + s.runs().row(d + i)).isZero());
    }
    CHECK_THROWS_AS(sfrd(1), DomainError);
}

TEST_CASE("one-factor-at-a-time and foldover")
{
    const auto o3 = ofaat(3);
    REQUIRE(o3.n() == 4);
    for (int r = 1; r < 4; ++r) {
        CHECK((o3.runs().row(r) - o3.runs().row(0)).cwiseAbs().sum() == 2.0);
        CHECK((o3.runs().row(r) - o3.runs().row(r - 1)).cwiseAbs().sum() >= 2.0);
    }
    CHECK(ofaat(20).n() == 21);
    for (int d : {2, 3, 7, 20}) {
        const auto folded = foldover(ofaat(d));
        CHECK(folded.n() == 2 * d + 2);
        CHECK(same_row_set(folded, sfrd(d)));
        CHECK(folded.runs().colwise().sum().isZero());
    }

    const auto t1 = foldover(regular_fraction(4, DefiningWordSet::parse("1234")).design);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                CHECK(dot(t1.column(i), t1.column(j).cwiseProduct(t1.column(k))) == 0);

    const Design cont((Eigen::MatrixXd(2, 1) << 0.2, 0.7).finished(), Coding::Unit);
    CHECK_THROWS_AS(foldover(cont), DomainError);
}
