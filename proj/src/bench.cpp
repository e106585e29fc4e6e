#include "screenkit/bench.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"
#include "screenkit/gp.hpp"
#include "screenkit/rng.hpp"
#include "screenkit/shrinkage.hpp"
#include "screenkit/space_filling.hpp"
#include "screenkit/supersaturated.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

namespace screenkit {

using namespace io;

double welch_function(const Eigen::VectorXd& x, bool modified)
{
    if (x.size() != kBenchmarkDimension)
        throw DomainError("welch function takes 20 inputs");
    auto w = [&](int i) { return 0.5 * x(i - 1); };
    const double quad = modified ? 5 * w(4) * w(4) - 5 * w(20) * w(20) : 5 * (w(4) - w(20)) * (w(4) - w(20));
    return 5 * w(12) / (1 + w(1)) + quad + w(5) + 40 * std::pow(w(19), 3) - 5 * w(19) + 0.05 * w(2) + 0.08 * w(3) -
           0.03 * w(6) + 0.03 * w(7) - 0.09 * w(9) - 0.01 * w(10) - 0.07 * w(11) + 0.25 * w(13) * w(13) -
           0.04 * w(14) + 0.06 * w(15) - 0.01 * w(17) - 0.03 * w(18);
}

MorrisFunction::MorrisFunction(std::uint64_t coeff_seed, MorrisVariant variant)
    : first(kBenchmarkDimension), second(Eigen::MatrixXd::Zero(kBenchmarkDimension, kBenchmarkDimension)),
      seed_(coeff_seed), variant_(variant)
{
    constexpr int d = kBenchmarkDimension;
    Rng rng(coeff_seed);
    for (int j = 0; j < d; ++j)
        first(j) = j < 10 ? 20.0 : rng.normal();
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k)
            second(j, k) = k < 6 ? -15.0 : rng.normal();
    const bool mod = variant == MorrisVariant::Modified;
    const int lo = mod ? 5 : 0;
    for (int j = lo; j < lo + 5; ++j)
        for (int k = j + 1; k < lo + 5; ++k)
            for (int l = k + 1; l < lo + 5; ++l)
                third.push_back({{j, k, l}, mod ? -5.0 : -10.0});
    for (int j = 0; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k)
            for (int l = k + 1; l < 4; ++l)
                for (int u = l + 1; u < 4; ++u)
                    fourth.push_back({{j, k, l, u}, 5.0});
}

double MorrisFunction::transform(int i, double x)
{
    if (i == 2 || i == 4 || i == 6)
        return 11.0 * (x + 1.0) / (5.0 * x + 6.0) - 1.0;
    return x;
}

double MorrisFunction::operator()(const Eigen::VectorXd& x) const
{
    if (x.size() != kBenchmarkDimension)
        throw DomainError("morris function takes 20 inputs");
    Eigen::VectorXd v(kBenchmarkDimension);
    for (int i = 0; i < kBenchmarkDimension; ++i)
        v(i) = transform(i, x(i));
    double y = beta0 + first.dot(v) + v.dot(second * v);
    for (const auto& [t, b] : third)
        y += b * v(t[0]) * v(t[1]) * v(t[2]);
    for (const auto& [t, b] : fourth)
        y += b * v(t[0]) * v(t[1]) * v(t[2]) * v(t[3]);
    return y;
}

json MorrisFunction::to_json() const
{
    json j;
    j["coeff_seed"] = seed_;
    j["variant"] = variant_ == MorrisVariant::Modified ? "modified" : "standard";
    j["beta0"] = beta0;
    j["first"] = std::vector<double>(first.data(), first.data() + first.size());
    json pairs = json::array();
    for (int a = 0; a < second.rows(); ++a)
        for (int b = a + 1; b < second.cols(); ++b)
            pairs.push_back({a + 1, b + 1, second(a, b)});
    j["second"] = pairs;
    json triples = json::array();
    for (const auto& [t, b] : third)
        triples.push_back({t[0] + 1, t[1] + 1, t[2] + 1, b});
    j["third"] = triples;
    json quads = json::array();
    for (const auto& [t, b] : fourth)
        quads.push_back({t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1, b});
    j["fourth"] = quads;
    return j;
}

BenchmarkFunction make_benchmark(Example id, std::uint64_t coeff_seed, bool modified)
{
    BenchmarkFunction bf;
    bf.id = id;
    bf.modified = modified;
    if (id == Example::Welch) {
        bf.truth = {0, 3, 4, 11, 18, 19};
        bf.f = [modified](const Eigen::VectorXd& x) { return welch_function(x, modified); };
    } else {
        bf.truth = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        bf.morris.emplace(coeff_seed, modified ? MorrisVariant::Modified : MorrisVariant::Standard);
        const MorrisFunction m = *bf.morris;
        bf.f = [m](const Eigen::VectorXd& x) { return m(x); };
    }
    return bf;
}

ScreeningOutcome ee_auto_select(const EEIndices& indices, double gamma, bool use_sigma,
                                const std::vector<std::string>& names)
{
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw DomainError("gamma must lie in [0, 1)");
    const int d = static_cast<int>(indices.mu_star.size());
    ScreeningOutcome out;
    out.method = "ee";
    out.names = names.empty() ? default_names(d) : names;
    out.statistics = indices.mu_star;
    const double top_mu = indices.mu_star.maxCoeff();
    const double top_sigma = indices.sigma.size() == d ? indices.sigma.maxCoeff() : 0.0;
    for (int i = 0; i < d; ++i) {
        const bool by_mu = top_mu > 0.0 && indices.mu_star(i) > gamma * top_mu;
        const bool by_sigma = use_sigma && top_sigma > 0.0 && indices.sigma(i) > gamma * top_sigma;
        if (by_mu || by_sigma || (top_mu > 0.0 && indices.mu_star(i) == top_mu))
            out.selected.push_back(i);
    }
    return out;
}

ScreeningOutcome main_effects_t_test(const Design& design, const Eigen::VectorXd& y, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("alpha must lie in (0, 1)");
    const int d = design.d();
    if (design.n() <= d + 1)
        throw DomainError("t-tests need more runs than main-effects parameters");
    const auto H = build_model_matrix(design, TermSet::main_effects(d));
    const auto fit = least_squares(H, y);
    const double dof = design.n() - d - 1;
    const double sigma2 = fit.rss / dof;
    const Eigen::VectorXd var = (H.H.transpose() * H.H).inverse().diagonal() * sigma2;
    ScreeningOutcome out;
    out.method = "main-effects-t";
    out.names = design.names();
    out.statistics.resize(d);
    const boost::math::students_t dist(dof);
    for (int i = 0; i < d; ++i) {
        const double se = std::sqrt(var(i + 1));
        const double t = se > 0.0 ? std::abs(fit.coefficients(i + 1)) / se
                                  : (fit.coefficients(i + 1) != 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        out.statistics(i) = t;
        if (2.0 * boost::math::cdf(boost::math::complement(dist, t)) < alpha)
            out.selected.push_back(i);
    }
    return out;
}

std::string method_name(Method m)
{
    switch (m) {
    case Method::Sgpvs:
        return "sgpvs";
    case Method::Rdvs:
        return "rdvs";
    case Method::Ee:
        return "ee";
    case Method::Sfrd:
        return "sfrd";
    case Method::Ssd:
        return "ssd";
    case Method::Dsd:
        return "dsd";
    }
    return "";
}

Method parse_method(const std::string& s)
{
    for (Method m : {Method::Sgpvs, Method::Rdvs, Method::Ee, Method::Sfrd, Method::Ssd, Method::Dsd})
        if (method_name(m) == s)
            return m;
    throw UsageError("unknown method '" + s + "' (sgpvs, rdvs, ee, sfrd, ssd, dsd)");
}

std::vector<int> valid_sizes(Method m)
{
    switch (m) {
    case Method::Sgpvs:
    case Method::Rdvs:
        return {16, 41, 84, 200};
    case Method::Ee:
        return {42, 84, 210};
    case Method::Sfrd:
        return {42};
    case Method::Ssd:
        return {16};
    case Method::Dsd:
        return {41};
    }
    return {};
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd evaluate(const Design& X, const BenchmarkFunction& bf, long long& calls)
{
    Eigen::VectorXd y(X.n());
    for (int i = 0; i < X.n(); ++i) {
        y(i) = bf.f(X.runs().row(i).transpose());
        ++calls;
    }
    return y;
}

// Higher sensitivity first, then lower type I error rate.
bool better(const Metrics& a, const Metrics& b)
{
    if (a.sensitivity != b.sensitivity)
        return a.sensitivity > b.sensitivity;
    return a.type_one < b.type_one;
}

void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw ResourceError("cannot write " + p.string());
    out << text;
}

} // namespace

BenchmarkResult run_benchmark(const BenchmarkOptions& o)
{
    const auto sizes = valid_sizes(o.method);
    if (std::find(sizes.begin(), sizes.end(), o.n) == sizes.end()) {
        std::string list;
        for (int s : sizes)
            list += (list.empty() ? "" : ", ") + std::to_string(s);
        throw UsageError("method " + method_name(o.method) + " does not accept n = " + std::to_string(o.n) +
                         "; valid: " + list);
    }
    const BenchmarkFunction bf = make_benchmark(o.example, o.coeff_seed, o.modified);
    const auto names = default_names(bf.d);
    long long calls = 0;
    std::vector<std::pair<std::string, std::vector<std::vector<double>>>> tables;
    std::vector<std::vector<std::string>> headers;
    std::vector<std::pair<std::string, std::string>> svgs;
    auto table = [&](const std::string& file, std::vector<std::string> header, std::vector<std::vector<double>> rows) {
        tables.emplace_back(file, std::move(rows));
        headers.push_back(std::move(header));
    };

    std::optional<BenchmarkResult> result;
    json details = json::object();

    auto shrinkage = [&](const Design& X, const TermSet& terms, const std::string& label) {
        const Eigen::VectorXd y = evaluate(X, bf, calls);
        const auto H = build_model_matrix(X, terms);
        const auto gd = gauss_dantzig(H, y, bf.d, {}, names);
        result.emplace(X);
        result->y = y;
        result->outcome = gd.outcome;
        result->design_provenance = label;
        details["chosen_s"] = gd.chosen_s;
        details["active_terms"] = json::array();
        for (int t : gd.active_terms)
            details["active_terms"].push_back(gd.term_labels[static_cast<std::size_t>(t)]);
        details["empty_support"] = gd.empty_support;
        std::vector<std::string> header{"s", "aicc"};
        header.insert(header.end(), gd.term_labels.begin(), gd.term_labels.end());
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < gd.path.s.size(); ++k) {
            std::vector<double> row{gd.path.s[k], gd.aicc[k]};
            for (Eigen::Index j = 0; j < gd.path.coefficients.cols(); ++j)
                row.push_back(gd.path.coefficients(static_cast<Eigen::Index>(k), j));
            rows.push_back(row);
        }
        table("shrinkage_path.csv", header, rows);
        Eigen::VectorXd est = gd.path.coefficients.row(gd.chosen >= 0 ? gd.chosen : 0).transpose();
        std::vector<std::vector<double>> hn;
        for (const auto& p : half_normal_data(est))
            hn.push_back({static_cast<double>(p.index + 1), p.quantile, p.magnitude});
        table("half_normal.csv", {"term", "quantile", "magnitude"}, hn);
    };

    switch (o.method) {
    case Method::Ee: {
        const int r = o.n / (bf.d + 1);
        const MorrisPlan plan = morris_plan(bf.d, r, 4, std::nullopt, o.seed);
        const Design X = plan.design.to_symmetric();
        const Eigen::VectorXd y = evaluate(X, bf, calls);
        const EEIndices idx = ee_indices(elementary_effects(plan, y));
        result.emplace(X);
        result->y = y;
        result->outcome = ee_auto_select(idx, o.ee_gamma, o.ee_use_sigma, names);
        result->design_provenance = "morris r=" + std::to_string(r) + " f=4";
        details["rule"] = o.ee_use_sigma ? "mu* > gamma max mu* or sigma > gamma max sigma" : "mu* > gamma max mu*";
        details["gamma"] = o.ee_gamma;
        details["mu"] = to_std(idx.mu);
        details["sigma"] = to_std(idx.sigma);
        details["mu_star"] = to_std(idx.mu_star);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < bf.d; ++i)
            rows.push_back({static_cast<double>(i + 1), idx.mu_star(i), idx.sigma(i), idx.mu(i)});
        table("ee_scatter.csv", {"variable", "mu_star", "sigma", "mu"}, rows);
        svgs.emplace_back("ee_scatter.svg", svg_scatter(to_std(idx.mu_star), to_std(idx.sigma), names, "mu*", "sigma"));
        break;
    }
    case Method::Sfrd: {
        const Design X = sfrd(bf.d);
        const Eigen::VectorXd y = evaluate(X, bf, calls);
        const CotterIndices ci = cotter_contrasts(y);
        result.emplace(X);
        result->y = y;
        result->outcome = cotter_sensitivity(ci, o.sfrd_threshold, names);
        result->design_provenance = "sfrd";
        details["threshold"] = o.sfrd_threshold;
        details["share"] = to_std(ci.share);
        details["magnitude"] = to_std(ci.magnitude);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < bf.d; ++i)
            rows.push_back({static_cast<double>(i + 1), ci.odd(i), ci.even(i), ci.magnitude(i), ci.share(i)});
        table("sfrd_indices.csv", {"variable", "odd", "even", "magnitude", "share"}, rows);
        break;
    }
    case Method::Ssd: {
        SsdSearchOptions so;
        so.seed = o.seed;
        so.threads = o.threads;
        const Design X = search_ssd(o.n, bf.d, so).design;
        shrinkage(X, TermSet::main_effects(bf.d), "ssd es2 search");
        break;
    }
    case Method::Dsd: {
        const Design X = definitive_screening(bf.d, o.seed);
        if (o.dsd_model == DsdModel::Full) {
            shrinkage(X, TermSet::main_interactions_quadratics(bf.d), "dsd second-order model");
            details["model"] = "full";
            break;
        }
        const Eigen::VectorXd y = evaluate(X, bf, calls);
        result.emplace(X);
        result->y = y;
        result->outcome = main_effects_t_test(X, y, o.dsd_alpha);
        result->design_provenance = "dsd main-effects model";
        details["model"] = "main";
        details["alpha"] = o.dsd_alpha;
        details["t"] = to_std(result->outcome.statistics);
        const auto fit = least_squares(build_model_matrix(X, TermSet::main_effects(bf.d)), y);
        std::vector<std::vector<double>> hn;
        for (const auto& p : half_normal_data(fit.coefficients.tail(bf.d)))
            hn.push_back({static_cast<double>(p.index + 1), p.quantile, p.magnitude});
        table("half_normal.csv", {"variable", "quantile", "magnitude"}, hn);
        break;
    }
    case Method::Sgpvs:
    case Method::Rdvs: {
        details["candidates"] = json::array();
        for (LhsObjective obj : {LhsObjective::PhiQ, LhsObjective::MaxPro}) {
            LhsOptimizeOptions lo;
            lo.objective = obj;
            lo.restarts = o.lhs_candidates;
            lo.seed = o.seed;
            lo.threads = o.threads;
            const Design X = lhs_optimize(o.n, bf.d, lo).design.to_symmetric();
            const std::string label = obj == LhsObjective::PhiQ ? "maximin lhs" : "maximum projection";
            const Eigen::VectorXd y = evaluate(X, bf, calls);
            ScreeningOutcome outcome;
            json cand;
            cand["design"] = label;
            std::vector<std::vector<double>> hist;
            std::vector<double> reference;
            double threshold = 0.0;
            if (o.method == Method::Sgpvs) {
                SgpvsOptions so;
                so.alpha = o.sgpvs_alpha;
                so.optimizer.seed = o.seed;
                const auto r = sgpvs(X.runs(), y, so);
                outcome = r.outcome;
                cand["released"] = r.released;
                cand["tied_theta"] = r.tied_theta;
                cand["diagnostics"] = r.diagnostics;
            } else {
                RdvsOptions ro;
                ro.b = o.rdvs_b;
                ro.iterations = o.rdvs_iterations;
                ro.burn_in = o.rdvs_burn_in;
                ro.seed = o.seed;
                ro.threads = o.threads;
                const auto r = rdvs(X.runs(), y, ro);
                outcome = r.outcome;
                reference = r.reference;
                threshold = r.threshold;
                cand["threshold"] = r.threshold;
                cand["reference"] = r.reference;
                cand["warnings"] = r.warnings;
            }
            outcome.names = names;
            outcome.score(bf.truth);
            cand["selected"] = outcome.selected;
            cand["metrics"] = to_json(*outcome.metrics);
            cand["statistics"] = to_std(outcome.statistics);
            details["candidates"].push_back(cand);
            if (!result || better(*outcome.metrics, *result->outcome.metrics)) {
                result.emplace(X);
                result->y = y;
                result->outcome = outcome;
                result->design_provenance = label;
                if (o.method == Method::Rdvs) {
                    std::vector<std::vector<double>> rows;
                    for (double v : reference)
                        rows.push_back({v});
                    details["reference_file"] = "rdvs_reference.csv";
                    tables.erase(std::remove_if(tables.begin(), tables.end(),
                                                [](const auto& t) { return t.first.rfind("rdvs", 0) == 0; }),
                                 tables.end());
                    headers.resize(tables.size());
                    table("rdvs_reference.csv", {"reference_median"}, rows);
                    std::vector<std::vector<double>> med;
                    for (int i = 0; i < bf.d; ++i)
                        med.push_back({static_cast<double>(i + 1), outcome.statistics(i), threshold});
                    table("rdvs_medians.csv", {"variable", "median_theta", "threshold"}, med);
                    svgs.clear();
                    svgs.emplace_back("rdvs_histogram.svg",
                                      svg_histogram(reference, 20, to_std(outcome.statistics), "posterior median theta"));
                }
            }
        }
        break;
    }
    }

    BenchmarkResult& res = *result;
    res.outcome.names = names;
    res.outcome.score(bf.truth);
    res.metrics = *res.outcome.metrics;
    res.oracle_calls = calls;
    res.details = details;
    if (bf.morris)
        res.details["coefficients"] = bf.morris->to_json();

    if (o.out) {
        std::filesystem::create_directories(*o.out);
        auto keep = [&](const std::filesystem::path& p) { res.artifacts.push_back(p); };
        write_design_csv(res.design, *o.out / "design.csv");
        keep(*o.out / "design.csv");
        write_vector_csv(res.y, "y", *o.out / "y.csv");
        keep(*o.out / "y.csv");
        for (std::size_t t = 0; t < tables.size(); ++t) {
            write_table_csv(headers[t], tables[t].second, *o.out / tables[t].first);
            keep(*o.out / tables[t].first);
        }
        if (o.svg)
            for (const auto& [file, text] : svgs) {
                write_text(*o.out / file, text);
                keep(*o.out / file);
            }
        keep(*o.out / "report.json");
        write_json(to_json(res, o), *o.out / "report.json");
    }
    return std::move(*result);
}

json to_json(const BenchmarkResult& r, const BenchmarkOptions& o)
{
    json extra;
    extra["method"] = method_name(o.method);
    extra["example"] = static_cast<int>(o.example);
    extra["n"] = o.n;
    extra["seed"] = o.seed;
    if (o.example == Example::Morris)
        extra["coeff_seed"] = o.coeff_seed;
    extra["modified"] = o.modified;
    extra["oracle_calls"] = r.oracle_calls;
    extra["design"] = r.design_provenance;
    extra["details"] = r.details;
    json files = json::array();
    for (const auto& p : r.artifacts)
        files.push_back(p.filename().string());
    extra["artifacts"] = files;
    return report(r.outcome, extra);
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kW = 480, kH = 360, kM = 48;

std::string svg_open()
{
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kM << "\" y1=\"" << kH - kM << "\" x2=\"" << kW - kM / 2 << "\" y2=\"" << kH - kM
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kM << "\" y1=\"" << kM / 2 << "\" x2=\"" << kM << "\" y2=\"" << kH - kM
      << "\" stroke=\"black\"/>\n";
    return s.str();
}

std::string escape(const std::string& t)
{
    std::string out;
    for (char c : t) {
        if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else if (c == '&')
            out += "&amp;";
        else
            out += c;
    }
    return out;
}

std::string labels(const std::string& xl, const std::string& yl)
{
    std::ostringstream s;
    s << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(xl)
      << "</text>\n";
    if (!yl.empty())
        s << "<text x=\"14\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 14 " << kH / 2
          << ")\" text-anchor=\"middle\" font-size=\"12\">" << escape(yl) << "</text>\n";
    return s.str();
}

} // namespace

std::string svg_scatter(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<std::string>& names, const std::string& xlabel, const std::string& ylabel)
{
    if (x.size() != y.size())
        throw DomainError("scatter needs equal-length coordinates");
    const double xmax = x.empty() ? 1.0 : std::max(1e-300, *std::max_element(x.begin(), x.end()));
    const double ymax = y.empty() ? 1.0 : std::max(1e-300, *std::max_element(y.begin(), y.end()));
    std::ostringstream s;
    s << svg_open();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double px = kM + (kW - 1.5 * kM) * std::max(0.0, x[i]) / xmax;
        const double py = kH - kM - (kH - 1.5 * kM) * std::max(0.0, y[i]) / ymax;
        s << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"steelblue\"/>\n";
        if (i < names.size())
            s << "<text x=\"" << px + 4 << "\" y=\"" << py - 4 << "\" font-size=\"10\">" << escape(names[i])
              << "</text>\n";
    }
    s << labels(xlabel, ylabel) << "</svg>\n";
    return s.str();
}

std::string svg_histogram(const std::vector<double>& values, int bins, const std::vector<double>& marks,
                          const std::string& xlabel)
{
    if (bins < 1)
        throw DomainError("histogram needs at least one bin");
    double lo = 0.0, hi = 1.0;
    if (!values.empty()) {
        lo = *std::min_element(values.begin(), values.end());
        hi = *std::max_element(values.begin(), values.end());
    }
    for (double m : marks) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (hi <= lo)
        hi = lo + 1.0;
    std::vector<int> count(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
        ++count[static_cast<std::size_t>(b)];
    }
    const int top = std::max(1, *std::max_element(count.begin(), count.end()));
    const double width = (kW - 1.5 * kM) / bins;
    std::ostringstream s;
    s << svg_open();
    for (int b = 0; b < bins; ++b) {
        const double h = (kH - 1.5 * kM) * count[static_cast<std::size_t>(b)] / top;
        s << "<rect x=\"" << kM + b * width << "\" y=\"" << kH - kM - h << "\" width=\"" << width * 0.95
          << "\" height=\"" << h << "\" fill=\"lightgray\" stroke=\"gray\"/>\n";
    }
    for (double m : marks) {
        const double px = kM + (kW - 1.5 * kM) * (m - lo) / (hi - lo);
        s << "<line x1=\"" << px << "\" y1=\"" << kM / 2 << "\" x2=\"" << px << "\" y2=\"" << kH - kM
          << "\" stroke=\"firebrick\"/>\n";
    }
    s << labels(xlabel, "") << "</svg>\n";
    return s.str();
}

} // namespace screenkit
