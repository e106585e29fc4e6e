#include "screenkit/bench.hpp"
#include "screenkit/ee.hpp"
#include "screenkit/errors.hpp"
#include "screenkit/factorial.hpp"
#include "screenkit/gp.hpp"
#include "screenkit/group_screening.hpp"
#include "screenkit/io.hpp"
#include "screenkit/rng.hpp"
#include "screenkit/shrinkage.hpp"
#include "screenkit/space_filling.hpp"
#include "screenkit/supersaturated.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

using namespace screenkit;
using io::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kNumeric = 3 };

std::uint64_t default_seed()
{
    const char* env = std::getenv("SCREENKIT_SEED");
    if (!env || !*env)
        return 1;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size())
            throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("SCREENKIT_SEED is not an unsigned integer: ") + env);
    }
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

// Design CSV to `out` (stdout when empty) with an optional JSON sidecar.
void emit_design(const Design& d, const std::string& out, const json& sidecar)
{
    if (out.empty()) {
        io::write_design_csv(d, std::cout);
        std::cerr << sidecar.dump(2) << '\n';
        return;
    }
    io::write_design_csv(d, fs::path(out));
    const fs::path side = fs::path(out).replace_extension(".json");
    io::write_json(sidecar, side);
    json summary = sidecar;
    summary["design"] = out;
    summary["sidecar"] = side.string();
    print(summary);
}

json alias_json(const AliasReport& r)
{
    json j;
    j["resolution"] = r.resolution;
    j["defining_relation"] = json::array();
    for (const auto& w : r.defining_relation)
        j["defining_relation"].push_back((w.sign < 0 ? "-" : "") + word_label(w.word));
    j["alias_strings"] = json::array();
    for (const auto& s : r.alias_strings) {
        json a = json::array();
        for (const auto& w : s.aliases)
            a.push_back((w.sign < 0 ? "-" : "") + word_label(w.word));
        j["alias_strings"].push_back({{"effect", word_label(s.effect)}, {"aliases", a}});
    }
    return j;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct BuiltinOracle {
    BenchmarkFunction bench;
    Oracle oracle;
};

BuiltinOracle builtin_oracle(const std::string& spec, int d, std::uint64_t coeff_seed, double noise, std::uint64_t seed)
{
    const std::string prefix = "builtin:";
    if (spec.rfind(prefix, 0) != 0)
        throw UsageError("oracle must be builtin:welch, builtin:morris or a -modified variant");
    const std::string name = spec.substr(prefix.size());
    std::optional<BenchmarkFunction> bf;
    if (name == "welch" || name == "welch-modified")
        bf = make_benchmark(Example::Welch, coeff_seed, name != "welch");
    else if (name == "morris" || name == "morris-modified")
        bf = make_benchmark(Example::Morris, coeff_seed, name != "morris");
    else
        throw UsageError("unknown builtin oracle: " + name);
    if (d != bf->d)
        throw UsageError("builtin oracles take d = " + std::to_string(bf->d));
    if (noise < 0)
        throw UsageError("noise must be non-negative");
    auto f = bf->f;
    if (noise == 0)
        return {*bf, Oracle(f)};
    auto rng = std::make_shared<Rng>(seed);
    auto lock = std::make_shared<std::mutex>();
    return {*bf, Oracle(
                     [f, rng, lock, noise](const Eigen::VectorXd& x) {
                         std::lock_guard<std::mutex> g(*lock);
                         return f(x) + noise * rng->normal();
                     },
                     true)};
}

json scored(ScreeningOutcome outcome, const std::vector<int>& truth, json extra)
{
    outcome.score(truth);
    return io::report(outcome, extra);
}

Exit run(int argc, char** argv)
{
    CLI::App app{"screening designs, analyses and benchmarks", "screenkit"};
    app.require_subcommand(1);
    std::function<void()> action;

    std::uint64_t seed = default_seed();
    auto seed_option = [&](CLI::App* c) { c->add_option("--seed", seed, "random seed (default: SCREENKIT_SEED or 1)"); };

    // ---- design
    auto* design = app.add_subcommand("design", "construct a design")->require_subcommand(1);

    auto* fac = design->add_subcommand("factorial", "full, regular, pb, dsd, sfrd or ofaat design");
    std::string kind, words, out;
    int d = 0, n = 0;
    fac->add_option("--kind", kind)->required()->check(CLI::IsMember({"full", "regular", "pb", "dsd", "sfrd", "ofaat"}));
    fac->add_option("--d", d, "number of variables");
    fac->add_option("--words", words, "generators, e.g. \"1234;235\"");
    fac->add_option("--n", n, "runs (pb)");
    fac->add_option("-o,--out", out, "design CSV; alias report JSON written alongside");
    seed_option(fac);
    fac->callback([&] {
        action = [&] {
            json side;
            side["kind"] = kind;
            std::optional<Design> X;
            if (kind == "pb") {
                if (n <= 0)
                    throw UsageError("pb needs --n");
                X = plackett_burman(n);
            } else {
                if (d <= 0)
                    throw UsageError(kind + " needs --d");
                if (kind == "full") {
                    X = full_factorial(d);
                } else if (kind == "regular") {
                    if (words.empty())
                        throw UsageError("regular needs --words");
                    auto rf = regular_fraction(d, DefiningWordSet::parse(words));
                    side["alias"] = alias_json(rf.report);
                    X = rf.design;
                } else if (kind == "dsd") {
                    X = definitive_screening(d, seed);
                    side["seed"] = seed;
                } else if (kind == "sfrd") {
                    X = sfrd(d);
                } else {
                    X = ofaat(d);
                }
            }
            side["n"] = X->n();
            side["d"] = X->d();
            side["construction"] = X->provenance().construction;
            emit_design(*X, out, side);
        };
    });

    auto* ssd = design->add_subcommand("ssd", "supersaturated design search");
    std::string criterion = "es2";
    double tau2 = kDefaultTau2;
    int restarts = 20;
    ssd->add_option("--n", n)->required();
    ssd->add_option("--d", d)->required();
    ssd->add_option("--criterion", criterion)->check(CLI::IsMember({"es2", "bayesd"}));
    ssd->add_option("--tau2", tau2);
    ssd->add_option("--restarts", restarts);
    ssd->add_option("-o,--out", out);
    seed_option(ssd);
    ssd->callback([&] {
        action = [&] {
            SsdSearchOptions o;
            o.criterion = parse_criterion(criterion);
            o.tau2 = tau2;
            o.restarts = restarts;
            o.seed = seed;
            const auto r = search_ssd(n, d, o);
            json side{{"n", n}, {"d", d}, {"criterion", criterion}, {"value", r.value.value},
                      {"orthogonal_pairs", r.value.orthogonal_pairs}, {"max_abs_s", r.value.max_abs_s}, {"seed", seed}};
            side["bound"] = r.value.lower_bound ? json(*r.value.lower_bound) : json(nullptr);
            emit_design(r.design, out, side);
        };
    });

    auto* lhs = design->add_subcommand("lhs", "Latin hypercube sample");
    std::string optimize = "phi_q";
    double q = 15.0;
    int lhs_restarts = 1;
    bool symmetric = false;
    lhs->add_option("--n", n)->required();
    lhs->add_option("--d", d)->required();
    lhs->add_option("--optimize", optimize)->check(CLI::IsMember({"none", "phi_q", "maxpro"}));
    lhs->add_option("--q", q);
    lhs->add_option("--restarts", lhs_restarts);
    lhs->add_flag("--symmetric", symmetric, "write on [-1, 1] instead of [0, 1]");
    lhs->add_option("-o,--out", out);
    seed_option(lhs);
    lhs->callback([&] {
        action = [&] {
            json side{{"n", n}, {"d", d}, {"optimize", optimize}, {"seed", seed}};
            std::optional<Design> X;
            if (optimize == "none") {
                X = lhs_random(n, d, seed);
            } else {
                LhsOptimizeOptions o;
                o.objective = optimize == "maxpro" ? LhsObjective::MaxPro : LhsObjective::PhiQ;
                o.q = q;
                o.restarts = lhs_restarts;
                o.seed = seed;
                const auto r = lhs_optimize(n, d, o);
                side["criterion"] = r.value;
                side["initial"] = r.initial;
                X = r.design;
            }
            side["phi_q"] = phi_q(*X, q);
            emit_design(symmetric ? X->to_symmetric() : *X, out, side);
        };
    });

    auto* morris = design->add_subcommand("morris", "elementary-effects trajectories");
    int r = 0, f = 4;
    std::optional<double> delta;
    morris->add_option("--d", d)->required();
    morris->add_option("--r", r)->required();
    morris->add_option("--f", f);
    morris->add_option("--delta", delta);
    morris->add_option("-o,--out", out);
    seed_option(morris);
    morris->callback([&] {
        action = [&] {
            const auto plan = morris_plan(d, r, f, delta, seed);
            emit_design(plan.design, out, io::to_json(plan));
        };
    });

    // ---- analyze
    auto* analyze = app.add_subcommand("analyze", "analyze responses")->require_subcommand(1);
    std::string plan_file, meta_file, y_file, design_file, outdir;

    auto* ee = analyze->add_subcommand("ee", "elementary effects indices");
    double gamma = kDefaultEeGamma;
    bool use_sigma = false;
    ee->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    ee->add_option("--meta", meta_file)->required()->check(CLI::ExistingFile);
    ee->add_option("--y", y_file)->required()->check(CLI::ExistingFile);
    ee->add_option("--gamma", gamma, "select mu* > gamma max mu*");
    ee->add_flag("--use-sigma", use_sigma, "also select sigma > gamma max sigma");
    ee->add_option("--out", outdir, "directory for ee_scatter.csv");
    ee->callback([&] {
        action = [&] {
            const auto plan = io::morris_plan_from(io::read_design_csv(fs::path(plan_file), Coding::Unit),
                                                   io::read_json(meta_file));
            const auto y = io::read_vector_csv(y_file);
            const auto idx = ee_indices(elementary_effects(plan, y));
            const auto outcome = ee_auto_select(idx, gamma, use_sigma, plan.design.names());
            json extra{{"mu", to_std(idx.mu)}, {"sigma", to_std(idx.sigma)}, {"mu_star", to_std(idx.mu_star)},
                       {"r", idx.r}, {"gamma", gamma}};
            if (!outdir.empty()) {
                fs::create_directories(outdir);
                std::vector<std::vector<double>> rows;
                for (Eigen::Index i = 0; i < idx.mu_star.size(); ++i)
                    rows.push_back({idx.mu_star(i), idx.sigma(i)});
                io::write_table_csv({"mu_star", "sigma"}, rows, fs::path(outdir) / "ee_scatter.csv");
            }
            print(io::report(outcome, extra));
        };
    });

    auto* cotter = analyze->add_subcommand("cotter", "odd/even contrasts on an SFRD response");
    double threshold = kDefaultCotterThreshold;
    cotter->add_option("--y", y_file)->required()->check(CLI::ExistingFile);
    cotter->add_option("--d", d)->required();
    cotter->add_option("--threshold", threshold);
    cotter->callback([&] {
        action = [&] {
            const auto y = io::read_vector_csv(y_file);
            if (y.size() != 2 * d + 2)
                throw UsageError("an SFRD response for d = " + std::to_string(d) + " has " +
                                 std::to_string(2 * d + 2) + " values, got " + std::to_string(y.size()));
            const auto ci = cotter_contrasts(y);
            const auto outcome = cotter_sensitivity(ci, threshold);
            print(io::report(outcome, {{"odd", to_std(ci.odd)},
                                       {"even", to_std(ci.even)},
                                       {"magnitude", to_std(ci.magnitude)},
                                       {"threshold", threshold}}));
        };
    });

    auto* dz = analyze->add_subcommand("dantzig", "Gauss-Dantzig selector with AICc");
    std::string terms = "main";
    double t = 0.0;
    dz->add_option("--design", design_file)->required()->check(CLI::ExistingFile);
    dz->add_option("--y", y_file)->required()->check(CLI::ExistingFile);
    dz->add_option("--terms", terms)->check(CLI::IsMember({"main", "main+2fi+quad"}));
    dz->add_option("--t", t, "refit threshold on |coefficient|");
    dz->add_option("--out", outdir, "directory for shrinkage_path.csv");
    dz->callback([&] {
        action = [&] {
            const auto X = io::read_design_csv(fs::path(design_file));
            const auto y = io::read_vector_csv(y_file);
            const TermSet ts = terms == "main" ? TermSet::main_effects(X.d()) : TermSet::main_interactions_quadratics(X.d());
            GaussDantzigOptions o;
            o.threshold = t;
            const auto gd = gauss_dantzig(build_model_matrix(X, ts), y, X.d(), o, X.names());
            json active = json::array();
            for (int k : gd.active_terms)
                active.push_back(gd.term_labels[static_cast<std::size_t>(k)]);
            if (!outdir.empty()) {
                fs::create_directories(outdir);
                std::vector<std::string> header{"s"};
                header.insert(header.end(), gd.term_labels.begin(), gd.term_labels.end());
                std::vector<std::vector<double>> rows;
                for (std::size_t k = 0; k < gd.path.s.size(); ++k) {
                    std::vector<double> row{gd.path.s[k]};
                    for (Eigen::Index j = 0; j < gd.path.coefficients.cols(); ++j)
                        row.push_back(gd.path.coefficients(static_cast<Eigen::Index>(k), j));
                    rows.push_back(row);
                }
                io::write_table_csv(header, rows, fs::path(outdir) / "shrinkage_path.csv");
            }
            print(io::report(gd.outcome, {{"chosen_s", gd.chosen_s},
                                          {"active_terms", active},
                                          {"empty_support", gd.empty_support},
                                          {"refit", to_std(gd.refit_coefficients)}}));
        };
    });

    // ---- screen
    auto* screen = app.add_subcommand("screen", "sequential and model-based screening")->require_subcommand(1);
    std::string oracle_spec;
    std::uint64_t coeff_seed = kDefaultCoeffSeed;
    double noise = 0.0, alpha = 0.2, sb_delta = 0.0;
    int replicates = 1;
    auto oracle_options = [&](CLI::App* c) {
        c->add_option("--oracle", oracle_spec, "builtin:welch | builtin:morris | builtin:*-modified")->required();
        c->add_option("--d", d, "number of variables")->default_val(20);
        c->add_option("--coeff-seed", coeff_seed, "coefficient seed of the morris function");
        c->add_option("--noise", noise, "sd of added Gaussian noise");
        seed_option(c);
    };

    auto* group = screen->add_subcommand("group", "two-stage factorial group screening");
    int groups = 0;
    std::string mode = "classical";
    oracle_options(group);
    group->add_option("--groups", groups)->required();
    group->add_option("--mode", mode)->check(CLI::IsMember({"classical", "interaction"}));
    group->add_option("--delta", sb_delta, "effect size threshold");
    group->add_option("--replicates", replicates);
    group->add_option("--alpha", alpha, "t-test level with replicates");
    group->callback([&] {
        action = [&] {
            auto bo = builtin_oracle(oracle_spec, d, coeff_seed, noise, seed);
            DecisionRule rule{sb_delta, replicates, alpha};
            const auto res = group_screen(bo.oracle, Grouping::contiguous(d, groups),
                                          mode == "classical" ? GroupMode::Classical : GroupMode::Interaction, rule, seed);
            json trace{{"stage1_labels", res.run.stage1_labels},
                       {"stage1_estimates", to_std(res.run.stage1_estimates)},
                       {"group_active", res.run.group_active},
                       {"carried", res.run.carried},
                       {"stage2_labels", res.run.stage2_labels},
                       {"stage2_estimates", to_std(res.run.stage2_estimates)}};
            print(scored(res.outcome, bo.bench.truth,
                         {{"runs", {{"stage1", res.run.n1}, {"stage2", res.run.n2}, {"total", res.run.total()}}},
                          {"oracle_calls", bo.oracle.calls()},
                          {"trace", trace}}));
        };
    });

    auto* sb = screen->add_subcommand("sb", "sequential bifurcation");
    bool fold = false;
    oracle_options(sb);
    sb->add_option("--delta", sb_delta)->required();
    sb->add_flag("--foldover", fold);
    sb->add_option("--replicates", replicates);
    sb->add_option("--alpha", alpha);
    sb->callback([&] {
        action = [&] {
            auto bo = builtin_oracle(oracle_spec, d, coeff_seed, noise, seed);
            BifurcationOptions o;
            o.foldover = fold;
            o.replicates = replicates;
            o.alpha = alpha;
            const auto res = sequential_bifurcation(bo.oracle, d, sb_delta, o);
            json trace = json::array();
            for (const auto& s : res.trace)
                trace.push_back({{"first", s.first}, {"last", s.last}, {"contrast", s.contrast}, {"split", s.split}});
            print(scored(res.outcome, bo.bench.truth, {{"runs", res.runs}, {"trace", trace}}));
        };
    });

    auto* ifd = screen->add_subcommand("iffd", "iterated fractional factorial design");
    IffdOptions io_opts;
    oracle_options(ifd);
    ifd->add_option("--g", io_opts.g, "groups per stage (power of two)");
    ifd->add_option("--stages", io_opts.stages);
    ifd->add_option("--midlevel", io_opts.midlevel_prob);
    ifd->add_option("--delta", io_opts.delta);
    ifd->callback([&] {
        action = [&] {
            auto bo = builtin_oracle(oracle_spec, d, coeff_seed, noise, seed);
            io_opts.seed = seed;
            const auto res = iffd(bo.oracle, d, io_opts);
            print(scored(res.outcome, bo.bench.truth,
                         {{"runs", res.runs}, {"candidates_by_stage", res.candidates_by_stage},
                          {"midlevel_stage", res.midlevel_stage}}));
        };
    });

    auto* sg = screen->add_subcommand("sgpvs", "stepwise Gaussian-process variable selection");
    double c = 6.0, smooth = 2.0;
    sg->add_option("--design", design_file)->required()->check(CLI::ExistingFile);
    sg->add_option("--y", y_file)->required()->check(CLI::ExistingFile);
    sg->add_option("--c", c);
    sg->add_option("--alpha", smooth)->check(CLI::IsMember({1.0, 2.0}));
    seed_option(sg);
    sg->callback([&] {
        action = [&] {
            const auto X = io::read_design_csv(fs::path(design_file));
            SgpvsOptions o;
            o.c = c;
            o.alpha = smooth;
            o.optimizer.seed = seed;
            auto res = sgpvs(X.runs(), io::read_vector_csv(y_file), o);
            res.outcome.names = X.names();
            json steps = json::array();
            for (const auto& s : res.steps)
                steps.push_back({{"released", X.names()[static_cast<std::size_t>(s.released)]},
                                 {"loglik", s.loglik},
                                 {"improvement", s.improvement}});
            print(io::report(res.outcome, {{"steps", steps},
                                           {"tied_theta", res.tied_theta},
                                           {"loglik", res.fit.loglik},
                                           {"diagnostics", res.diagnostics}}));
        };
    });

    auto* rd = screen->add_subcommand("rdvs", "reference-distribution variable selection");
    RdvsOptions ro;
    rd->add_option("--design", design_file)->required()->check(CLI::ExistingFile);
    rd->add_option("--y", y_file)->required()->check(CLI::ExistingFile);
    rd->add_option("--b", ro.b);
    rd->add_option("--pct", ro.percentile);
    rd->add_option("--iterations", ro.iterations);
    rd->add_option("--burn-in", ro.burn_in);
    rd->add_option("--threads", ro.threads);
    rd->add_option("--out", outdir, "directory for reference and median CSVs");
    seed_option(rd);
    rd->callback([&] {
        action = [&] {
            const auto X = io::read_design_csv(fs::path(design_file));
            ro.seed = seed;
            auto res = rdvs(X.runs(), io::read_vector_csv(y_file), ro);
            res.outcome.names = X.names();
            if (!outdir.empty()) {
                fs::create_directories(outdir);
                std::vector<std::vector<double>> ref, med;
                for (double v : res.reference)
                    ref.push_back({v});
                for (Eigen::Index k = 0; k < res.outcome.statistics.size(); ++k)
                    med.push_back({static_cast<double>(k + 1), res.outcome.statistics(k), res.threshold});
                io::write_table_csv({"reference_median"}, ref, fs::path(outdir) / "rdvs_reference.csv");
                io::write_table_csv({"variable", "median_theta", "threshold"}, med, fs::path(outdir) / "rdvs_medians.csv");
            }
            print(io::report(res.outcome, {{"threshold", res.threshold},
                                           {"reference", res.reference},
                                           {"warnings", res.warnings}}));
        };
    });

    // ---- bench
    auto* bench = app.add_subcommand("bench", "run one benchmark cell");
    BenchmarkOptions bo;
    std::string method = "ee", dsd_model = "main";
    int example = 2;
    bench->add_option("--method", method)->check(CLI::IsMember({"sgpvs", "rdvs", "ee", "sfrd", "ssd", "dsd"}));
    bench->add_option("--example", example)->check(CLI::IsMember({1, 2}));
    bench->add_option("--n", bo.n);
    bench->add_option("--coeff-seed", bo.coeff_seed);
    bench->add_flag("--modified", bo.modified);
    bench->add_option("--threshold", bo.sfrd_threshold, "SFRD share threshold");
    bench->add_option("--gamma", bo.ee_gamma);
    bench->add_flag("--use-sigma", bo.ee_use_sigma);
    bench->add_option("--dsd-model", dsd_model)->check(CLI::IsMember({"main", "full"}));
    bench->add_option("--dsd-alpha", bo.dsd_alpha);
    bench->add_option("--alpha", bo.sgpvs_alpha, "SGPVS smoothness")->check(CLI::IsMember({1.0, 2.0}));
    bench->add_option("--b", bo.rdvs_b);
    bench->add_option("--iterations", bo.rdvs_iterations);
    bench->add_option("--burn-in", bo.rdvs_burn_in);
    bench->add_option("--candidates", bo.lhs_candidates, "annealing restarts per space-filling design");
    bench->add_option("--threads", bo.threads);
    bench->add_option("--out", outdir);
    bench->add_flag("--svg", bo.svg);
    seed_option(bench);
    bench->callback([&] {
        action = [&] {
            bo.method = parse_method(method);
            bo.example = example == 1 ? Example::Welch : Example::Morris;
            bo.dsd_model = dsd_model == "full" ? DsdModel::Full : DsdModel::MainEffects;
            bo.seed = seed;
            if (!outdir.empty())
                bo.out = fs::path(outdir);
            const auto res = run_benchmark(bo);
            print(to_json(res, bo));
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return static_cast<Exit>(app.exit(e));
    } catch (const CLI::CallForAllHelp& e) {
        return static_cast<Exit>(app.exit(e));
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    if (action)
        action();
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const IndexError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConstructionError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const SingularError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
