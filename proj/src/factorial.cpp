#include "screenkit/factorial.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace screenkit {

Word word_from_variables(const std::vector<int>& vars)
{
    Word w = 0;
    for (int v : vars) {
        if (v < 0 || v >= 64)
            throw IndexError("word variable out of range");
        w ^= Word{1} << v;
    }
    return w;
}

std::vector<int> word_variables(Word w)
{
    std::vector<int> v;
    for (int i = 0; i < 64; ++i)
        if ((w >> i) & 1U)
            v.push_back(i);
    return v;
}

std::string word_label(Word w)
{
    if (w == 0)
        return "I";
    std::string s;
    for (int v : word_variables(w))
        s += "x" + std::to_string(v + 1);
    return s;
}

DefiningWordSet DefiningWordSet::parse(const std::string& spec)
{
    DefiningWordSet out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ';')) {
        token.erase(std::remove_if(token.begin(), token.end(), [](char c) { return std::isspace(c); }),
                    token.end());
        if (token.empty())
            continue;
        int sign = 1;
        if (token[0] == '-' || token[0] == '+') {
            sign = token[0] == '-' ? -1 : 1;
            token.erase(0, 1);
        }
        std::vector<int> vars;
        if (token.find(',') != std::string::npos) {
            std::stringstream ts(token);
            std::string num;
            while (std::getline(ts, num, ','))
                vars.push_back(std::stoi(num) - 1);
        } else {
            for (char c : token) {
                if (!std::isdigit(static_cast<unsigned char>(c)) || c == '0')
                    throw UsageError("bad defining word '" + token + "'");
                vars.push_back(c - '1');
            }
        }
        out.words.push_back(word_from_variables(vars));
        out.signs.push_back(sign);
    }
    if (out.words.empty())
        throw UsageError("no defining words in '" + spec + "'");
    return out;
}

int AliasReport::two_factor_aliases_of_main(int var) const
{
    const Word e = Word{1} << var;
    for (const auto& s : alias_strings)
        if (s.effect == e)
            return static_cast<int>(
                std::count_if(s.aliases.begin(), s.aliases.end(), [](const SignedWord& a) { return word_length(a.word) == 2; }));
    return 0;
}

// ---------------------------------------------------------------------------

Design full_factorial(int d)
{
    if (d < 1)
        throw DomainError("full factorial needs d >= 1");
    if (d > kMaxFullFactorial)
        throw ResourceError("full factorial with d = " + std::to_string(d) + " would need 2^" + std::to_string(d) +
                            " runs (limit d <= " + std::to_string(kMaxFullFactorial) + ")");
    const Eigen::Index n = Eigen::Index{1} << d;
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j)
            X(r, j) = ((r >> (d - 1 - j)) & 1) ? 1.0 : -1.0;
    return Design(std::move(X), Coding::TwoLevel, {}, {"full-factorial", 0});
}

namespace {

struct ReducedWord {
    Word word;
    int sign;
    int pivot;
};

/// Reduced row echelon form over GF(2), pivoting on the highest variable.
std::vector<ReducedWord> reduce(const DefiningWordSet& words)
{
    std::vector<ReducedWord> rows;
    for (std::size_t k = 0; k < words.words.size(); ++k) {
        if (words.words[k] == 0)
            throw DomainError("empty defining word");
        rows.push_back({words.words[k], words.sign(k), -1});
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        // Pick the row (from r on) with the highest leading variable.
        std::size_t best = r;
        for (std::size_t k = r; k < rows.size(); ++k)
            if (rows[k].word > rows[best].word)
                best = k;
        std::swap(rows[r], rows[best]);
        if (rows[r].word == 0)
            throw DomainError("defining words are not independent (invalid generators)");
        const int pivot = 63 - __builtin_clzll(rows[r].word);
        rows[r].pivot = pivot;
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (k != r && ((rows[k].word >> pivot) & 1U)) {
                rows[k].word ^= rows[r].word;
                rows[k].sign *= rows[r].sign;
            }
    }
    return rows;
}

} // namespace

std::vector<SignedWord> defining_relation(const DefiningWordSet& words)
{
    reduce(words); // independence check
    const std::size_t q = words.words.size();
    std::vector<SignedWord> rel;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << q); ++mask) {
        SignedWord w;
        for (std::size_t k = 0; k < q; ++k)
            if ((mask >> k) & 1U) {
                w.word ^= words.words[k];
                w.sign *= words.sign(k);
            }
        rel.push_back(w);
    }
    std::stable_sort(rel.begin(), rel.end(), [](const SignedWord& a, const SignedWord& b) {
        const int la = word_length(a.word), lb = word_length(b.word);
        return la != lb ? la < lb : word_variables(a.word) < word_variables(b.word);
    });
    return rel;
}

AliasReport alias_report(int d, const std::vector<SignedWord>& relation, int max_order)
{
    AliasReport rep;
    rep.defining_relation = relation;
    rep.resolution = relation.empty() ? 0 : 64;
    for (const auto& w : relation)
        rep.resolution = std::min(rep.resolution, word_length(w.word));
    std::vector<Word> effects;
    for (int i = 0; i < d; ++i)
        effects.push_back(Word{1} << i);
    if (max_order >= 2)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                effects.push_back((Word{1} << i) | (Word{1} << j));
    for (Word e : effects) {
        AliasString s{e, {}};
        for (const auto& w : relation)
            s.aliases.push_back({e ^ w.word, w.sign});
        std::stable_sort(s.aliases.begin(), s.aliases.end(), [](const SignedWord& a, const SignedWord& b) {
            const int la = word_length(a.word), lb = word_length(b.word);
            return la != lb ? la < lb : word_variables(a.word) < word_variables(b.word);
        });
        rep.alias_strings.push_back(std::move(s));
    }
    return rep;
}

RegularFraction regular_fraction(int d, const DefiningWordSet& words)
{
    const int q = static_cast<int>(words.words.size());
    if (q < 1 || q >= d)
        throw DomainError("regular fraction needs 1 <= q < d");
    if (!words.signs.empty() && words.signs.size() != words.words.size())
        throw DomainError("one sign per defining word is required");
    for (std::size_t k = 0; k < words.words.size(); ++k) {
        if (words.words[k] >> d)
            throw IndexError("defining word " + word_label(words.words[k]) + " uses a variable beyond x" +
                             std::to_string(d));
        if (words.sign(k) != 1 && words.sign(k) != -1)
            throw DomainError("defining word signs must be +1 or -1");
    }
    const auto reduced = reduce(words);
    std::vector<bool> dependent(static_cast<std::size_t>(d), false);
    for (const auto& r : reduced)
        dependent[static_cast<std::size_t>(r.pivot)] = true;
    std::vector<int> base;
    for (int i = 0; i < d; ++i)
        if (!dependent[static_cast<std::size_t>(i)])
            base.push_back(i);

    const Design core = full_factorial(static_cast<int>(base.size()));
    Eigen::MatrixXd X(core.n(), d);
    for (std::size_t b = 0; b < base.size(); ++b)
        X.col(base[b]) = core.runs().col(static_cast<Eigen::Index>(b));
    for (const auto& r : reduced) {
        Eigen::VectorXd col = Eigen::VectorXd::Constant(core.n(), r.sign);
        for (int v : word_variables(r.word & ~(Word{1} << r.pivot)))
            col = col.cwiseProduct(X.col(v));
        X.col(r.pivot) = col;
    }
    std::ostringstream tag;
    tag << "regular-fraction 2^(" << d << "-" << q << ")";
    Design design(std::move(X), Coding::TwoLevel, {}, {tag.str(), 0});
    return {std::move(design), alias_report(d, defining_relation(words))};
}

DefiningWordSet sixteen_run_eleven_factor_generators()
{
    // 5 = 123, 6 = 124, 7 = 134, 8 = 234, 9 = 1234, 10 = 12, 11 = 13
    return DefiningWordSet::parse("1235;1246;1347;2348;12349;1,2,10;1,3,11");
}

// ---------------------------------------------------------------------------
// Hadamard matrices

namespace {

bool is_prime(int q)
{
    if (q < 2)
        return false;
    for (int k = 2; k * k <= q; ++k)
        if (q % k == 0)
            return false;
    return true;
}

/// Quadratic character modulo prime q.
int legendre(int a, int q)
{
    a %= q;
    if (a < 0)
        a += q;
    if (a == 0)
        return 0;
    for (int x = 1; x < q; ++x)
        if ((x * x) % q == a)
            return 1;
    return -1;
}

bool paley_base(int m) { return m >= 4 && is_prime(m - 1) && (m - 1) % 4 == 3; }

Eigen::MatrixXd paley_type_one(int n)
{
    const int q = n - 1;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j < n; ++j) {
        S(0, j) = 1;
        S(j, 0) = -1;
    }
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
            S(i + 1, j + 1) = legendre(j - i, q);
    return Eigen::MatrixXd::Identity(n, n) + S;
}

Eigen::MatrixXd sylvester_double(const Eigen::MatrixXd& H)
{
    const auto k = H.rows();
    Eigen::MatrixXd D(2 * k, 2 * k);
    D << H, H, H, -H;
    return D;
}

} // namespace

bool hadamard_available(int n)
{
    if (n < 1)
        return false;
    if (n == 1 || n == 2)
        return true;
    while (n % 2 == 0 && !paley_base(n))
        n /= 2;
    return n == 1 || paley_base(n);
}

std::vector<int> supported_hadamard_orders(int up_to)
{
    std::vector<int> out;
    for (int n = 1; n <= up_to; ++n)
        if (hadamard_available(n))
            out.push_back(n);
    return out;
}

HadamardMatrix hadamard(int n)
{
    if (!hadamard_available(n)) {
        std::string msg = "no Hadamard construction for order " + std::to_string(n) + "; supported orders up to 64:";
        for (int k : supported_hadamard_orders(64))
            msg += " " + std::to_string(k);
        throw ConstructionError(msg);
    }
    int core = n;
    int doublings = 0;
    while (core > 2 && core % 2 == 0 && !paley_base(core)) {
        core /= 2;
        ++doublings;
    }
    Eigen::MatrixXd H;
    if (core == 1)
        H = Eigen::MatrixXd::Ones(1, 1);
    else if (core == 2)
        H = (Eigen::MatrixXd(2, 2) << 1, 1, 1, -1).finished();
    else
        H = paley_type_one(core);
    for (int k = 0; k < doublings; ++k)
        H = sylvester_double(H);
    return {std::move(H)};
}

HadamardMatrix HadamardMatrix::normalized() const
{
    Eigen::MatrixXd N = C;
    for (Eigen::Index i = 0; i < N.rows(); ++i)
        if (N(i, 0) < 0)
            N.row(i) *= -1.0;
    return {std::move(N)};
}

Design plackett_burman_12()
{
    static const int table[12][11] = {
        {-1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1}, {-1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1},
        {-1, -1, 1, 1, 1, -1, -1, -1, 1, 1, 1},       {-1, 1, -1, 1, 1, -1, 1, 1, -1, -1, 1},
        {-1, 1, 1, -1, 1, 1, -1, 1, -1, 1, -1},       {-1, 1, 1, 1, -1, 1, 1, -1, 1, -1, -1},
        {1, -1, 1, 1, -1, -1, 1, 1, -1, 1, -1},       {1, -1, 1, -1, 1, 1, 1, -1, -1, -1, 1},
        {1, -1, -1, 1, 1, 1, -1, 1, 1, -1, -1},       {1, 1, 1, -1, -1, -1, -1, 1, 1, -1, 1},
        {1, 1, -1, 1, -1, 1, -1, -1, -1, 1, 1},       {1, 1, -1, -1, 1, -1, 1, -1, 1, 1, -1},
    };
    Eigen::MatrixXd X(12, 11);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 11; ++j)
            X(i, j) = table[i][j];
    return Design(std::move(X), Coding::TwoLevel, {}, {"plackett-burman-12 (canonical)", 0});
}

Design plackett_burman(int n)
{
    if (n == 12)
        return plackett_burman_12();
    if (n < 4 || n % 4 != 0)
        throw ConstructionError("Plackett-Burman designs need n a multiple of 4, got " + std::to_string(n));
    const auto H = hadamard(n).normalized();
    Eigen::MatrixXd X = H.C.rightCols(n - 1);
    return Design(std::move(X), Coding::TwoLevel, {}, {"plackett-burman-" + std::to_string(n), 0});
}

// ---------------------------------------------------------------------------
// Definitive screening designs

Design definitive_screening_6()
{
    static const int table[13][6] = {
        {0, 1, -1, -1, -1, -1}, {0, -1, 1, 1, 1, 1},    {1, 0, -1, 1, 1, -1},  {-1, 0, 1, -1, -1, 1},
        {-1, -1, 0, 1, -1, -1}, {1, 1, 0, -1, 1, 1},    {-1, 1, 1, 0, 1, -1},  {1, -1, -1, 0, -1, 1},
        {1, -1, 1, -1, 0, -1},  {-1, 1, -1, 1, 0, 1},   {1, 1, 1, 1, -1, 0},   {-1, -1, -1, -1, 1, 0},
        {0, 0, 0, 0, 0, 0},
    };
    Eigen::MatrixXd X(13, 6);
    for (int i = 0; i < 13; ++i)
        for (int j = 0; j < 6; ++j)
            X(i, j) = table[i][j];
    return Design(std::move(X), Coding::ThreeLevel, {}, {"definitive-screening-6 (canonical)", 0});
}

namespace {

Design dsd_from_core(const Eigen::MatrixXd& C, const std::string& tag, std::uint64_t seed)
{
    const auto d = C.rows();
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2 * d + 1, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        X.row(2 * j) = C.row(j);
        X.row(2 * j + 1) = -C.row(j);
    }
    return Design(std::move(X), Coding::ThreeLevel, {}, {tag, seed});
}

/// Paley conference matrix of order q + 1 (q prime): symmetric for q = 1 mod 4,
/// skew for q = 3 mod 4. C'C = qI.
Eigen::MatrixXd paley_conference(int order)
{
    const int q = order - 1;
    const double eps = (q % 4 == 1) ? 1.0 : -1.0;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(order, order);
    for (int j = 1; j < order; ++j) {
        C(0, j) = 1;
        C(j, 0) = eps;
    }
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
            C(i + 1, j + 1) = legendre(j - i, q);
    return C;
}

double log_det_gram(const Eigen::MatrixXd& C)
{
    Eigen::LLT<Eigen::MatrixXd> llt(C.transpose() * C);
    if (llt.info() != Eigen::Success)
        return -std::numeric_limits<double>::infinity();
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace

Eigen::MatrixXd search_dsd_core(int d, std::uint64_t seed, int restarts)
{
    Rng master(seed);
    Eigen::MatrixXd best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Rng rng = master.substream(static_cast<std::uint64_t>(r));
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j)
                    C(i, j) = rng.bernoulli(0.5) ? 1.0 : -1.0;
        double value = log_det_gram(C);
        bool improved = true;
        while (improved) {
            improved = false;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    if (i == j)
                        continue;
                    C(i, j) = -C(i, j);
                    const double v = log_det_gram(C);
                    if (v > value + 1e-10) {
                        value = v;
                        improved = true;
                    } else {
                        C(i, j) = -C(i, j);
                    }
                }
        }
        if (value > best_value) {
            best_value = value;
            best = C;
        }
    }
    if (!std::isfinite(best_value)) {
        throw ConstructionError("definitive screening search for d = " + std::to_string(d) + " found only singular"
                                " main-effect matrices after " + std::to_string(restarts) + " restarts");
    }
    return best;
}

Design definitive_screening(int d, std::uint64_t seed, int restarts)
{
    if (d < 4 || d % 2 != 0)
        throw DomainError("definitive screening designs need an even d >= 4, got " + std::to_string(d));
    if (d == 6)
        return definitive_screening_6();
    if (is_prime(d - 1))
        return dsd_from_core(paley_conference(d), "definitive-screening (conference)", 0);
    return dsd_from_core(search_dsd_core(d, seed, restarts), "definitive-screening (coordinate exchange)", seed);
}

// ---------------------------------------------------------------------------
// One-factor-at-a-time family

Design ofaat(int d)
{
    if (d < 1)
        throw DomainError("OFAAT needs d >= 1");
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(d + 1, d, -1.0);
    for (int i = 0; i < d; ++i)
        X(i + 1, i) = 1.0;
    return Design(std::move(X), Coding::TwoLevel, {}, {"ofaat", 0});
}

Design sfrd(int d)
{
    if (d < 2)
        throw DomainError("systematic fractional replicate designs need d >= 2");
    Eigen::MatrixXd X(2 * d + 2, d);
    X.row(0).setConstant(-1.0);
    for (int i = 0; i < d; ++i) {
        X.row(1 + i).setConstant(-1.0);
        X(1 + i, i) = 1.0;
        X.row(1 + d + i).setConstant(1.0);
        X(1 + d + i, i) = -1.0;
    }
    X.row(2 * d + 1).setConstant(1.0);
    return Design(std::move(X), Coding::TwoLevel, {}, {"sfrd", 0});
}

Design foldover(const Design& design)
{
    if (design.coding() != Coding::TwoLevel && design.coding() != Coding::ThreeLevel)
        throw DomainError("foldover needs a two- or three-level design");
    Eigen::MatrixXd X(2 * design.n(), design.d());
    X << design.runs(), -design.runs();
    return Design(std::move(X), design.coding(), design.names(),
                  {"foldover of " + design.provenance().construction, design.provenance().seed});
}

bool same_row_set(const Design& a, const Design& b)
{
    if (a.n() != b.n() || a.d() != b.d())
        return false;
    auto rows = [](const Design& x) {
        std::vector<std::vector<double>> r;
        for (int i = 0; i < x.n(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(x.d()));
            for (int j = 0; j < x.d(); ++j)
                row[static_cast<std::size_t>(j)] = x(i, j);
            r.push_back(std::move(row));
        }
        std::sort(r.begin(), r.end());
        return r;
    };
    return rows(a) == rows(b);
}

// ---------------------------------------------------------------------------
// Designs sized for a model

Design smallest_main_effects_design(int m)
{
    if (m < 1)
        throw DomainError("need at least one variable");
    for (int n = 4;; n += 4)
        if (n > m && hadamard_available(n)) {
            const auto pb = plackett_burman(n);
            std::vector<int> cols(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j)
                cols[static_cast<std::size_t>(j)] = j;
            return pb.select_columns(cols, false).with_provenance({"plackett-burman-" + std::to_string(n), 0});
        }
}

namespace {

// Depth-first choice of generator words (base subsets of size >= 4 plus the
// new variable) keeping every word of the relation at length >= 5.
bool choose_generators(int k, int added, std::size_t start, const std::vector<Word>& candidates,
                       std::vector<Word>& chosen, std::vector<Word>& relation, long long& budget)
{
    if (static_cast<int>(chosen.size()) == added)
        return true;
    const int var = k + static_cast<int>(chosen.size());
    for (std::size_t c = start; c < candidates.size(); ++c) {
        if (--budget < 0)
            return false;
        const Word w = candidates[c] | (Word{1} << var);
        std::vector<Word> extra{w};
        bool ok = true;
        for (Word r : relation) {
            const Word p = r ^ w;
            if (word_length(p) < 5) {
                ok = false;
                break;
            }
            extra.push_back(p);
        }
        if (!ok)
            continue;
        const std::size_t before = relation.size();
        relation.insert(relation.end(), extra.begin(), extra.end());
        chosen.push_back(w);
        if (choose_generators(k, added, c + 1, candidates, chosen, relation, budget))
            return true;
        chosen.pop_back();
        relation.resize(before);
    }
    return false;
}

} // namespace

RegularFraction smallest_resolution_five(int m)
{
    if (m < 1)
        throw DomainError("need at least one variable");
    if (m > 16)
        throw ResourceError("resolution V search is limited to 16 variables, got " + std::to_string(m));
    const int params = 1 + m + m * (m - 1) / 2;
    int k = 0;
    while ((1 << k) < params)
        ++k;
    for (; k < m; ++k) {
        std::vector<Word> candidates;
        for (Word s = 1; s < (Word{1} << k); ++s)
            if (word_length(s) >= 4)
                candidates.push_back(s);
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](Word a, Word b) { return word_length(a) > word_length(b); });
        std::vector<Word> chosen, relation;
        long long budget = 200000;
        if (choose_generators(k, m - k, 0, candidates, chosen, relation, budget)) {
            DefiningWordSet words;
            words.words = chosen;
            return regular_fraction(m, words);
        }
    }
    return {full_factorial(m), alias_report(m, {}, 2)};
}

} // namespace screenkit
