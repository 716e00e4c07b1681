// Command-line front end: simulate / fit / variance / tradeoff / two-stage /
// study, all driven by JSON config files. Exit codes: 0 success, 1 usage or
// config error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sslx/experiments.hpp"
#include "sslx/serialize.hpp"

namespace fs = std::filesystem;
using namespace sslx;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed_override, "seed override");
    cmd->add_option("--threads", args.threads, "worker threads for replicate studies")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", args.verbose, "chatty progress on stderr");
}

std::uint64_t effective_seed(const json& cfg, const CommonArgs& args) {
    if (args.seed_override) return *args.seed_override;
    return cfg.value("seed", std::uint64_t{1});
}

fs::path out_path(const CommonArgs& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    return fs::path(args.out_dir) / name;
}

void log_verbose(const CommonArgs& args, const std::string& msg) {
    if (args.verbose) std::cerr << "sslx: " << msg << "\n";
}

std::string family_of(const json& cfg) {
    if (cfg.contains("family")) return cfg["family"].get<std::string>();
    if (cfg.contains("model") && cfg["model"].contains("family"))
        return cfg["model"]["family"].get<std::string>();
    throw ConfigError("config must name a model family ('naive_bayes' or 'chain')");
}

// --- subcommands -------------------------------------------------------------

int cmd_simulate(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args);
    const long n = cfg.value("n", 0L);
    if (n < 1) throw ConfigError("simulate: n must be >= 1");
    const std::string family = family_of(cfg);
    const LabelingPolicy policy = policy_from_json(cfg.at("policy"));
    const std::string output = cfg.value("output", "corpus.txt");

    Rng rng(seed);
    Dataset data;
    if (family == "naive_bayes") {
        NaiveBayesModel model = naive_bayes_from_json(cfg.at("model"));
        data = model.sample_dataset(int(n), policy, rng);
    } else if (family == "chain") {
        ChainModel model = chain_from_json(cfg.at("model"));
        LengthDistribution lengths = lengths_from_json(cfg.at("lengths"));
        data = model.sample_dataset(int(n), policy, lengths, rng);
    } else {
        throw ConfigError("simulate: unknown family '" + family + "'");
    }
    save_corpus(data, data.kind, out_path(args, output).string());
    log_verbose(args, "wrote " + output);

    if (cfg.contains("truth_output")) {
        Dataset truth = data;
        for (auto& s : truth.samples) s.labels = LabelObservation::full(s.true_labels);
        save_corpus(truth, truth.kind, out_path(args, cfg["truth_output"].get<std::string>()).string());
    }
    write_json_file({{"seed", seed}, {"n", n}, {"family", family}, {"output", output}},
                    out_path(args, "simulate_meta.json").string());
    return 0;
}

int cmd_fit(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args);
    if (!cfg.contains("corpus")) throw ConfigError("fit: missing 'corpus' path");
    const std::string family = family_of(cfg);
    Dataset data = load_corpus(cfg["corpus"].get<std::string>());
    EmConfig em = cfg.contains("em") ? em_from_json(cfg["em"]) : EmConfig{};
    // --seed wins; otherwise an explicit em.seed in the config wins
    if (args.seed_override || !(cfg.contains("em") && cfg["em"].contains("seed")))
        em.seed = seed;

    FitResult fit;
    if (family == "naive_bayes") {
        fit = fit_naive_bayes(data, em);
    } else if (family == "chain") {
        const int K = cfg.value("num_states", data.num_labels);
        fit = fit_chain(data, K, em);
    } else {
        throw ConfigError("fit: unknown family '" + family + "'");
    }
    json out = fit_to_json(fit);
    out["seed"] = em.seed;
    write_json_file(out, out_path(args, cfg.value("output", "fit.json")).string());
    return 0;
}

AsymptoticReport compute_report(const json& cfg, std::uint64_t seed) {
    const std::string family = family_of(cfg);
    const auto method = method_from_json(cfg);
    const long mc_samples = cfg.value("mc_samples", 100000L);
    if (family == "naive_bayes") {
        NaiveBayesModel model = naive_bayes_from_json(cfg.at("model"));
        return sigma_classification(model, cfg.value("lambda", 1.0), method, mc_samples, seed);
    }
    if (family == "chain") {
        ChainModel model = chain_from_json(cfg.at("model"));
        return sigma_structured(model, policy_from_json(cfg.at("policy")),
                                lengths_from_json(cfg.at("lengths")), method, mc_samples, seed);
    }
    throw ConfigError("variance: unknown family '" + family + "'");
}

int cmd_variance(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args);
    AsymptoticReport rep = compute_report(cfg, seed);
    if (rep.rank_deficient)
        std::cerr << "sslx: warning: score-variance matrix is rank deficient; "
                     "asymptotic covariance omitted\n";
    json out = report_to_json(rep);
    out["seed"] = seed;
    write_json_file(out, out_path(args, cfg.value("output", "variance.json")).string());
    return 0;
}

TradeoffSpec spec_from_json(const json& cfg) {
    TradeoffSpec spec;
    const json& obj = cfg.at("objective");
    const std::string type = obj.value("type", "");
    if (type == "budget")
        spec.objective = BudgetConstrained{obj.at("budget").get<double>()};
    else if (type == "accuracy")
        spec.objective = AccuracyConstrained{obj.at("max_error").get<double>()};
    else if (type == "penalized")
        spec.objective = Penalized{obj.at("alpha").get<double>()};
    else
        throw ConfigError("objective type must be budget, accuracy, or penalized");

    for (const auto& c : cfg.at("candidates")) {
        TradeoffCandidate cand;
        cand.n = c.at("n").get<long>();
        if (c.contains("lambda")) cand.lambda = c["lambda"].get<double>();
        if (c.contains("policy")) {
            cand.policy = policy_from_json(c["policy"]);
            cand.lengths = lengths_from_json(c.at("lengths"));
        }
        cand.id = c.value("id", "n" + std::to_string(cand.n) +
                                    (c.contains("lambda")
                                         ? "_l" + std::to_string(cand.lambda)
                                         : ""));
        spec.candidates.push_back(std::move(cand));
    }
    spec.validate();
    return spec;
}

void write_candidate_csv(const TradeoffSolution& sol, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    os << "id,n,lambda,cost,trace_inverse,error,feasible,on_frontier\n";
    for (const auto& e : sol.evaluations)
        os << e.candidate.id << ',' << e.candidate.n << ','
           << (std::isnan(e.candidate.lambda) ? std::string()
                                              : detail::fmt_double(e.candidate.lambda))
           << ',' << detail::fmt_double(e.cost) << ',' << detail::fmt_double(e.trace_inverse)
           << ',' << detail::fmt_double(e.error) << ',' << (e.feasible ? 1 : 0) << ','
           << (e.on_frontier ? 1 : 0) << '\n';
}

int cmd_tradeoff(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args);
    const std::string family = family_of(cfg);
    const auto method = method_from_json(cfg);
    const long mc_samples = cfg.value("mc_samples", 100000L);
    TradeoffSpec spec = spec_from_json(cfg);

    TradeoffSolution sol;
    if (family == "naive_bayes") {
        NaiveBayesModel model = naive_bayes_from_json(cfg.at("model"));
        sol = solve_tradeoff(spec, [&](const TradeoffCandidate& c) {
            return sigma_classification(model, c.lambda, method, mc_samples, seed).trace_inverse;
        });
    } else if (family == "chain") {
        ChainModel model = chain_from_json(cfg.at("model"));
        sol = solve_tradeoff(spec, [&](const TradeoffCandidate& c) {
            if (!c.policy || !c.lengths)
                throw ConfigError("tradeoff: chain candidates need policy and lengths");
            return sigma_structured(model, *c.policy, *c.lengths, method, mc_samples, seed)
                .trace_inverse;
        });
    } else {
        throw ConfigError("tradeoff: unknown family '" + family + "'");
    }
    json out = solution_to_json(sol);
    out["seed"] = seed;
    write_json_file(out, out_path(args, cfg.value("output", "tradeoff.json")).string());
    if (cfg.contains("csv")) write_candidate_csv(sol, out_path(args, cfg["csv"].get<std::string>()));
    if (!sol.feasible)
        std::cerr << "sslx: tradeoff infeasible: " << sol.infeasibility_reason << "\n";
    return 0;
}

int cmd_two_stage(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args);
    if (!cfg.contains("pool")) throw ConfigError("two-stage: missing 'pool' corpus path");
    Dataset pool = load_corpus(cfg["pool"].get<std::string>());
    withhold_labels(pool);
    const int r = cfg.value("r", 0);
    TradeoffSpec spec = spec_from_json(cfg);
    EmConfig em = cfg.contains("em") ? em_from_json(cfg["em"]) : EmConfig{};
    Rng rng(seed);
    TwoStagePlan plan = two_stage_classification(
        pool, r, spec, em, rng, cfg.value("reference_lambda", 0.5), method_from_json(cfg),
        cfg.value("mc_samples", 100000L));
    json out = plan_to_json(plan);
    out["seed"] = seed;
    write_json_file(out, out_path(args, cfg.value("output", "two_stage.json")).string());
    return 0;
}

int cmd_study(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const std::uint64_t seed = effective_seed(cfg, args);
    const std::string type = cfg.value("type", "");
    EmConfig em = cfg.contains("em") ? em_from_json(cfg["em"]) : EmConfig{};

    StudyResult result;
    if (type == "classification" || type == "region") {
        ClassificationStudyConfig sc{naive_bayes_from_json(cfg.at("fixture")),
                                     cfg.at("n_grid").get<std::vector<long>>(),
                                     cfg.at("lambda_grid").get<std::vector<double>>(),
                                     cfg.value("replicates", 20),
                                     em,
                                     seed,
                                     args.threads};
        result = type == "region" ? run_region_study(sc) : run_classification_study(sc);
    } else if (type == "structured") {
        StructuredStudyConfig sc{chain_from_json(cfg.at("fixture")),
                                 lengths_from_json(cfg.at("lengths")),
                                 {},
                                 cfg.at("n_grid").get<std::vector<long>>(),
                                 cfg.value("replicates", 20),
                                 cfg.value("test_size", 500L),
                                 em,
                                 seed,
                                 args.threads};
        for (const auto& p : cfg.at("policies"))
            sc.policies.push_back({p.at("id").get<std::string>(), policy_from_json(p.at("policy"))});
        result = run_structured_study(sc);
    } else if (type == "two_stage") {
        TwoStageStudyConfig sc{naive_bayes_from_json(cfg.at("fixture")),
                               cfg.value("pool_size", 2000L),
                               cfg.at("r_grid").get<std::vector<int>>(),
                               cfg.value("replicates", 20),
                               cfg.value("reference_lambda", 0.5),
                               em,
                               seed,
                               args.threads};
        result = run_two_stage_study(sc);
    } else {
        throw ConfigError(
            "study: type must be classification, structured, region, or two_stage");
    }

    {
        std::ofstream os(out_path(args, cfg.value("output_csv", "study.csv")), std::ios::binary);
        write_study_csv(result, os);
    }
    json out = study_to_json(result);
    out["seed"] = seed;
    write_json_file(out, out_path(args, cfg.value("output_json", "study.json")).string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised estimation, asymptotic accuracy, and labeling tradeoffs"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* simulate = app.add_subcommand("simulate", "sample a synthetic corpus");
    auto* fit = app.add_subcommand("fit", "fit a model to a corpus via EM");
    auto* variance = app.add_subcommand("variance", "asymptotic covariance report");
    auto* tradeoff = app.add_subcommand("tradeoff", "resolve the cost-accuracy tradeoff");
    auto* two_stage = app.add_subcommand("two-stage", "two-stage plug-in labeling plan");
    auto* study = app.add_subcommand("study", "replicate study harness");
    for (auto* cmd : {simulate, fit, variance, tradeoff, two_stage, study})
        add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (fit->parsed()) return cmd_fit(args);
        if (variance->parsed()) return cmd_variance(args);
        if (tradeoff->parsed()) return cmd_tradeoff(args);
        if (two_stage->parsed()) return cmd_two_stage(args);
        if (study->parsed()) return cmd_study(args);
        std::cerr << "sslx: no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "sslx: config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "sslx: data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "sslx: config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sslx: numerical failure: " << e.what() << "\n";
        return 3;
    }
}
