// Production acceptance suite. Each check prints one [PASS]/[FAIL] line with
// its runtime; the process exits with the number of failures. Individual
// checks can be selected by number or name substring:
//   acceptance [--cli PATH] [--threads N] [checks...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sslx/experiments.hpp"
#include "sslx/fixtures.hpp"
#include "sslx/serialize.hpp"

namespace fs = std::filesystem;
using namespace sslx;

namespace {

int g_threads = 1;
std::string g_cli_path;

double frob_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / b.norm();
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", x);
    return buf;
}

Eigen::VectorXd fd_score(const NaiveBayesModel& m, const Sample& s, double h) {
    const ParamVector p = m.params();
    Eigen::VectorXd g(p.dim());
    for (int i = 0; i < p.dim(); ++i) {
        Eigen::VectorXd up = p.values(), dn = p.values();
        up[i] += h;
        dn[i] -= h;
        g[i] = (NaiveBayesModel::from_params(ParamVector(p.layout(), up), m.doc_length())
                    .log_observed(s) -
                NaiveBayesModel::from_params(ParamVector(p.layout(), dn), m.doc_length())
                    .log_observed(s)) /
               (2 * h);
    }
    return g;
}

Eigen::VectorXd fd_score(const ChainModel& m, const Sample& s, double h) {
    const ParamVector p = m.params();
    Eigen::VectorXd g(p.dim());
    for (int i = 0; i < p.dim(); ++i) {
        Eigen::VectorXd up = p.values(), dn = p.values();
        up[i] += h;
        dn[i] -= h;
        g[i] = (ChainModel::from_params(ParamVector(p.layout(), up), m.num_states(), m.vocab())
                    .log_observed(s) -
                ChainModel::from_params(ParamVector(p.layout(), dn), m.num_states(), m.vocab())
                    .log_observed(s)) /
               (2 * h);
    }
    return g;
}

// --- 1: analytic scores vs central finite differences ------------------------

bool check_score_finite_differences(std::string& detail) {
    Rng rng(81001);
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        const int C = 2 + int(rng.below(2)), V = 2 + int(rng.below(3));
        const int len = 1 + int(rng.below(6));
        NaiveBayesModel m = random_naive_bayes(C, V, len, 90000 + i);
        const double lambda = (i % 3) * 0.5; // cycles 0, 0.5, 1
        Sample s = m.sample(LabelingPolicy::all_or_nothing(lambda), rng);
        const Eigen::VectorXd a = m.score_observed(s), b = fd_score(m, s, 1e-5);
        worst = std::max(worst, (a - b).norm() / std::max(1.0, b.norm()));
    }
    const std::vector<LabelingPolicy> policies = {LabelingPolicy::all_or_nothing(1.0),
                                                  LabelingPolicy::all_or_nothing(0.0),
                                                  LabelingPolicy::thirds()};
    for (int i = 0; i < 25; ++i) {
        const int K = 2 + int(rng.below(2)), V = 2 + int(rng.below(2));
        const int m_len = 2 + int(rng.below(4));
        ChainModel m = random_chain(K, V, 91000 + i);
        Sample s = m.sample(m_len, policies[i % 3], rng);
        const Eigen::VectorXd a = m.score_observed(s), b = fd_score(m, s, 1e-5);
        worst = std::max(worst, (a - b).norm() / std::max(1.0, b.norm()));
    }
    detail = "max relative error " + sci(worst) + " over 50 instances";
    return worst < 1e-5;
}

// --- 2: score variance vs negative expected finite-difference Hessian --------

bool check_fisher_identity(std::string& detail) {
    const long samples = 100000;
    const double h = 1e-4;

    // classification, mixed labeled/unlabeled score at lambda = 0.5
    NaiveBayesModel nb = standard_nb_fixture();
    const double lambda = 0.5;
    {
        const ParamVector p = nb.params();
        const int r = p.dim();
        std::vector<NaiveBayesModel> up, dn;
        for (int i = 0; i < r; ++i) {
            Eigen::VectorXd vu = p.values(), vd = p.values();
            vu[i] += h;
            vd[i] -= h;
            up.push_back(NaiveBayesModel::from_params(ParamVector(p.layout(), vu),
                                                      nb.doc_length()));
            dn.push_back(NaiveBayesModel::from_params(ParamVector(p.layout(), vd),
                                                      nb.doc_length()));
        }
        Eigen::MatrixXd sum_up = Eigen::MatrixXd::Zero(r, r), sum_dn = sum_up;
        Rng rng(82001);
        auto mixed_score = [&](const NaiveBayesModel& m, const Sample& s) {
            Eigen::VectorXd resp = Eigen::VectorXd::Zero(m.num_classes());
            resp[s.true_labels[0]] = 1.0;
            return (lambda * m.score_from_responsibilities(s.counts, resp) +
                    (1.0 - lambda) *
                        m.score_from_responsibilities(s.counts, m.posterior(s.counts)))
                .eval();
        };
        const LabelingPolicy keep_all = LabelingPolicy::all_or_nothing(1.0);
        for (long t = 0; t < samples; ++t) {
            Sample s = nb.sample(keep_all, rng);
            for (int i = 0; i < r; ++i) {
                sum_up.col(i) += mixed_score(up[i], s);
                sum_dn.col(i) += mixed_score(dn[i], s);
            }
        }
        Eigen::MatrixXd hessian = (sum_up - sum_dn) / (2 * h * double(samples));
        Eigen::MatrixXd neg_h = -0.5 * (hessian + hessian.transpose());
        AsymptoticReport mc = sigma_classification(
            nb, lambda, AsymptoticReport::Method::MonteCarlo, samples, 82002);
        const double err = frob_rel(mc.sigma, neg_h);
        detail = "classification " + std::to_string(err);
        if (err >= 0.05) return false;
    }

    // structured, equal-thirds policy on length-4 sequences
    ChainModel chain = standard_chain_fixture();
    const LabelingPolicy policy = LabelingPolicy::thirds();
    const LengthDistribution lens = LengthDistribution::fixed(4);
    {
        const ParamVector p = chain.params();
        const int r = p.dim();
        std::vector<ChainModel> up, dn;
        for (int i = 0; i < r; ++i) {
            Eigen::VectorXd vu = p.values(), vd = p.values();
            vu[i] += h;
            vd[i] -= h;
            up.push_back(ChainModel::from_params(ParamVector(p.layout(), vu), 2, chain.vocab()));
            dn.push_back(ChainModel::from_params(ParamVector(p.layout(), vd), 2, chain.vocab()));
        }
        Eigen::MatrixXd sum_up = Eigen::MatrixXd::Zero(r, r), sum_dn = sum_up;
        Rng rng(82003);
        std::vector<double> weights;
        for (const auto& c : policy.components) weights.push_back(c.weight);
        const LabelingPolicy hide_all{{{EmptySelector{}, 1.0}}};
        for (long t = 0; t < samples; ++t) {
            const int m = lens.sample(rng);
            const int j = rng.categorical(weights);
            Sample s = chain.sample(m, hide_all, rng);
            std::vector<int> sel = selector_positions(policy.components[j].selector, m, rng);
            std::vector<int> vals(sel.size());
            for (std::size_t k = 0; k < sel.size(); ++k) vals[k] = s.true_labels[sel[k]];
            LabelObservation obs = sel.empty() ? LabelObservation::none()
                                               : LabelObservation::subset(sel, vals);
            for (int i = 0; i < r; ++i) {
                sum_up.col(i) += up[i].score_observed(s.tokens, obs);
                sum_dn.col(i) += dn[i].score_observed(s.tokens, obs);
            }
        }
        Eigen::MatrixXd hessian = (sum_up - sum_dn) / (2 * h * double(samples));
        Eigen::MatrixXd neg_h = -0.5 * (hessian + hessian.transpose());
        AsymptoticReport mc = sigma_structured(chain, policy, lens,
                                               AsymptoticReport::Method::MonteCarlo, samples,
                                               82004);
        const double err = frob_rel(mc.sigma, neg_h);
        detail += ", structured " + std::to_string(err) + " (relative Frobenius)";
        if (err >= 0.05) return false;
    }
    return true;
}

// --- 3: replicate covariance vs inverse sigma, classification ----------------

bool check_covariance_classification(std::string& detail) {
    NaiveBayesModel truth = enumerable_nb_fixture();
    const int R = 500, n = 5000;
    const double lambda = 0.5;
    const Eigen::VectorXd theta0 = truth.params().values();
    const int r = truth.layout().dim();
    const LabelingPolicy policy = LabelingPolicy::all_or_nothing(lambda);

    std::vector<Eigen::VectorXd> devs(R);
    Rng base(83001);
    parallel_for(R, g_threads, [&](int rep) {
        Rng rng = base.split(rep);
        Dataset data = truth.sample_dataset(n, policy, rng);
        EmConfig em;
        em.restarts = 1;
        em.tolerance = 1e-10;
        em.seed = 83100 + rep;
        FitResult fit = fit_naive_bayes(data, em);
        NaiveBayesModel est = align_classes(
            NaiveBayesModel::from_params(fit.estimate, truth.doc_length()), truth);
        devs[rep] = std::sqrt(double(n)) * (est.params().values() - theta0);
    });

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(r);
    for (const auto& d : devs) mean += d;
    mean /= R;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(r, r);
    for (const auto& d : devs) cov += (d - mean) * (d - mean).transpose();
    cov /= double(R - 1);

    AsymptoticReport rep =
        sigma_classification(truth, lambda, AsymptoticReport::Method::Enumeration);
    if (!rep.inverse_sigma) {
        detail = "sigma unexpectedly rank deficient";
        return false;
    }
    const double err = frob_rel(cov, *rep.inverse_sigma);
    detail = "relative Frobenius error " + std::to_string(err) + " (R=500, n=5000)";
    return err < 0.20;
}

// --- 4: replicate covariance vs inverse sigma, structured --------------------

bool check_covariance_structured(std::string& detail) {
    ChainModel truth = small_chain_fixture();
    const int R = 500, n = 5000;
    const LabelingPolicy policy = LabelingPolicy::thirds();
    const LengthDistribution lens = LengthDistribution::fixed(3);
    const Eigen::VectorXd theta0 = truth.params().values();
    const int r = truth.layout().dim();

    std::vector<Eigen::VectorXd> devs(R);
    Rng base(84001);
    parallel_for(R, g_threads, [&](int rep) {
        Rng rng = base.split(rep);
        Dataset data = truth.sample_dataset(n, policy, lens, rng);
        EmConfig em;
        em.restarts = 2;
        em.tolerance = 1e-10;
        em.seed = 84100 + rep;
        FitResult fit = fit_chain(data, 2, em);
        ChainModel est =
            align_states(ChainModel::from_params(fit.estimate, 2, truth.vocab()), truth);
        devs[rep] = std::sqrt(double(n)) * (est.params().values() - theta0);
    });

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(r);
    for (const auto& d : devs) mean += d;
    mean /= R;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(r, r);
    for (const auto& d : devs) cov += (d - mean) * (d - mean).transpose();
    cov /= double(R - 1);

    AsymptoticReport rep =
        sigma_structured(truth, policy, lens, AsymptoticReport::Method::Enumeration);
    if (!rep.inverse_sigma) {
        detail = "sigma unexpectedly rank deficient";
        return false;
    }
    const double err = frob_rel(cov, *rep.inverse_sigma);
    detail = "relative Frobenius error " + std::to_string(err) + " (R=500, n=5000)";
    return err < 0.20;
}

// --- 5: estimation error shrinks with n --------------------------------------

bool check_consistency(std::string& detail) {
    const std::vector<int> n_grid = {500, 2000, 8000, 32000};
    const int R = 20;
    std::ostringstream note;
    bool ok = true;

    {
        NaiveBayesModel truth = standard_nb_fixture();
        const LabelingPolicy policy = LabelingPolicy::all_or_nothing(0.3);
        const Eigen::VectorXd theta0 = truth.params().values();
        std::vector<double> medians;
        for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
            std::vector<double> errs(R);
            Rng base(85001 + gi);
            parallel_for(R, g_threads, [&](int rep) {
                Rng rng = base.split(rep);
                Dataset data = truth.sample_dataset(n_grid[gi], policy, rng);
                EmConfig em;
                em.restarts = 1;
                em.seed = 85100 + rep;
                FitResult fit = fit_naive_bayes(data, em);
                NaiveBayesModel est = align_classes(
                    NaiveBayesModel::from_params(fit.estimate, truth.doc_length()), truth);
                errs[rep] = (est.params().values() - theta0).norm();
            });
            medians.push_back(median(errs));
        }
        note << "classification medians";
        for (double m : medians) note << ' ' << m;
        for (std::size_t i = 1; i < medians.size(); ++i) ok = ok && medians[i] < medians[i - 1];
    }
    {
        ChainModel truth = standard_chain_fixture();
        const LabelingPolicy policy = LabelingPolicy::thirds();
        const LengthDistribution lens = LengthDistribution::fixed(4);
        const Eigen::VectorXd theta0 = truth.params().values();
        std::vector<double> medians;
        for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
            std::vector<double> errs(R);
            Rng base(86001 + gi);
            parallel_for(R, g_threads, [&](int rep) {
                Rng rng = base.split(rep);
                Dataset data = truth.sample_dataset(n_grid[gi], policy, lens, rng);
                EmConfig em;
                em.restarts = 1;
                em.seed = 86100 + rep;
                FitResult fit = fit_chain(data, 2, em);
                ChainModel est = align_states(
                    ChainModel::from_params(fit.estimate, 2, truth.vocab()), truth);
                errs[rep] = (est.params().values() - theta0).norm();
            });
            medians.push_back(median(errs));
        }
        note << "; structured medians";
        for (double m : medians) note << ' ' << m;
        for (std::size_t i = 1; i < medians.size(); ++i) ok = ok && medians[i] < medians[i - 1];
    }
    detail = note.str();
    return ok;
}

// --- 6: EM ascent and the supervised closed form -----------------------------

bool check_em_ascent(std::string& detail) {
    auto ascending = [](const std::vector<double>& trace) {
        for (std::size_t i = 1; i < trace.size(); ++i)
            if (trace[i] < trace[i - 1] - 1e-9 * (std::abs(trace[i - 1]) + 1.0)) return false;
        return true;
    };
    int runs = 0;
    NaiveBayesModel nb = standard_nb_fixture();
    Rng rng(87001);
    for (double lambda : {0.0, 0.3, 0.7, 1.0}) {
        Dataset data = nb.sample_dataset(400, LabelingPolicy::all_or_nothing(lambda), rng);
        EmConfig em;
        em.allow_unlabeled = true;
        em.seed = 87100 + runs;
        FitResult fit = fit_naive_bayes(data, em);
        ++runs;
        if (!ascending(fit.trace)) {
            detail = "classification log-likelihood decreased (lambda " +
                     std::to_string(lambda) + ")";
            return false;
        }
    }
    ChainModel chain = standard_chain_fixture();
    for (const auto& policy : {LabelingPolicy::all_or_nothing(0.5), LabelingPolicy::thirds(),
                               LabelingPolicy::all_or_nothing(0.0)}) {
        Dataset data =
            chain.sample_dataset(250, policy, LengthDistribution::fixed(4), rng);
        EmConfig em;
        em.allow_unlabeled = true;
        em.seed = 87200 + runs;
        FitResult fit = fit_chain(data, 2, em);
        ++runs;
        if (!ascending(fit.trace)) {
            detail = "structured log-likelihood decreased";
            return false;
        }
    }

    // fully supervised fits must land on the closed-form smoothed estimate
    Dataset labeled = nb.sample_dataset(500, LabelingPolicy::all_or_nothing(1.0), rng);
    EmConfig em;
    em.seed = 87300;
    FitResult fit = fit_naive_bayes(labeled, em);
    NaiveBayesModel est = NaiveBayesModel::from_params(fit.estimate, nb.doc_length());
    NaiveBayesModel closed = sslx::detail::nb_labeled_init(labeled, nb.num_classes(), nb.vocab(),
                                                           nb.doc_length(), em.smoothing);
    const double gap = prob_distance(est, closed);

    Dataset clabeled = chain.sample_dataset(250, LabelingPolicy::all_or_nothing(1.0),
                                            LengthDistribution::fixed(4), rng);
    FitResult cfit = fit_chain(clabeled, 2, em);
    const double cgap =
        prob_distance(ChainModel::from_params(cfit.estimate, 2, chain.vocab()),
                      sslx::detail::chain_labeled_init(clabeled, 2, chain.vocab(), em.smoothing));

    detail = std::to_string(runs) + " ascent runs clean; supervised gaps " +
             sci(gap) + " / " + sci(cgap);
    return gap < 1e-10 && cgap < 1e-10;
}

// --- 7: population likelihood gap sign ---------------------------------------

bool check_kl_gap(std::string& detail) {
    NaiveBayesModel truth = enumerable_nb_fixture();
    if (kl_gap(truth, truth, 0.5) != 0.0) {
        detail = "gap at the truth is not exactly zero";
        return false;
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        NaiveBayesModel candidate = random_naive_bayes(2, 2, 1, 88000 + i);
        const double g = kl_gap(truth, candidate, 0.5);
        worst = std::max(worst, g);
        if (!(g < -1e-12)) {
            detail = "gap not negative for candidate " + std::to_string(i) + ": " +
                     std::to_string(g);
            return false;
        }
    }
    Eigen::VectorXd prior(2);
    prior << truth.prior()[1], truth.prior()[0];
    Eigen::MatrixXd cond(2, 2);
    cond.row(0) = truth.conditionals().row(1);
    cond.row(1) = truth.conditionals().row(0);
    NaiveBayesModel swapped(prior, cond, truth.doc_length());
    if (kl_gap(truth, swapped, 0.0) != 0.0) {
        detail = "unlabeled class swap should leave the gap at zero";
        return false;
    }
    detail = "100 candidates strictly negative (max " + sci(worst) +
             "), swap and truth cases exact";
    return true;
}

// shared by checks 8 and 9
const StudyResult& grid_study() {
    static StudyResult cached = [] {
        ClassificationStudyConfig cfg{standard_nb_fixture(),
                                      {500L, 1000L, 2000L, 4000L},
                                      {0.25, 0.5, 0.75, 1.0},
                                      50,
                                      EmConfig{},
                                      89001,
                                      g_threads};
        cfg.em.restarts = 2;
        return run_classification_study(cfg);
    }();
    return cached;
}

// --- 8: empirical error tracks the asymptotic prediction ---------------------

bool check_grid_correlation(std::string& detail) {
    const StudyResult& r = grid_study();
    std::vector<double> empirical, predicted;
    for (double l : {0.25, 0.5, 0.75, 1.0})
        for (long n : {500L, 1000L, 2000L, 4000L}) {
            const std::string gid = "n" + std::to_string(n) + "_l" + std::to_string(l);
            empirical.push_back(median(r.values(gid, "mse_trace")));
            predicted.push_back(*r.grid_value(gid, "trace_inv_over_n"));
        }
    const double rho = rank_correlation(empirical, predicted);
    detail = "rank correlation " + std::to_string(rho) + " over the 4x4 grid";
    return rho >= 0.8;
}

// --- 9: monotonicity in labeling weight and sample size ----------------------

bool check_monotonicity(std::string& detail) {
    NaiveBayesModel m = enumerable_nb_fixture();
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
        const double t =
            sigma_classification(m, 0.1 * i, AsymptoticReport::Method::Enumeration)
                .trace_inverse;
        if (t > prev + 1e-9) {
            detail = "trace increased at lambda " + std::to_string(0.1 * i);
            return false;
        }
        prev = t;
    }

    const StudyResult& r = grid_study();
    for (const char* metric : {"mse_trace", "error_rate"}) {
        for (double l : {0.25, 0.5, 0.75, 1.0}) {
            double prev_med = std::numeric_limits<double>::infinity();
            for (long n : {500L, 1000L, 2000L, 4000L}) {
                const std::string gid = "n" + std::to_string(n) + "_l" + std::to_string(l);
                const double med = median(r.values(gid, metric));
                if (med > prev_med) {
                    detail = std::string(metric) + " median increased from n to 4n at lambda " +
                             std::to_string(l);
                    return false;
                }
                prev_med = med;
            }
        }
    }
    detail = "trace non-increasing in lambda; study medians non-increasing in n";
    return true;
}

// --- 10: grid search equals exhaustive re-evaluation -------------------------

bool check_tradeoff_exactness(std::string& detail) {
    Rng rng(90001);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 3 + int(rng.below(8));
        TradeoffSpec spec;
        std::vector<double> fake_trace;
        for (int i = 0; i < k; ++i) {
            TradeoffCandidate c;
            c.id = "g" + std::to_string(i);
            c.n = 50 + long(rng.below(2000));
            c.lambda = 0.05 + 0.95 * rng.uniform();
            spec.candidates.push_back(c);
            fake_trace.push_back(1.0 + 30.0 * rng.uniform());
        }
        auto oracle = [&](const TradeoffCandidate& c) {
            for (std::size_t i = 0; i < spec.candidates.size(); ++i)
                if (spec.candidates[i].id == c.id) return fake_trace[i];
            return 0.0;
        };
        const std::vector<TradeoffObjective> objectives = {
            BudgetConstrained{50.0 + 800.0 * rng.uniform()},
            AccuracyConstrained{0.001 + 0.2 * rng.uniform()},
            Penalized{0.5 + 100.0 * rng.uniform()}};
        for (const auto& obj : objectives) {
            spec.objective = obj;
            TradeoffSolution sol = solve_tradeoff(spec, oracle);

            // exhaustive re-evaluation
            std::optional<std::size_t> best;
            double best_obj = 0.0, best_cost = 0.0, best_err = 0.0;
            for (std::size_t i = 0; i < spec.candidates.size(); ++i) {
                const auto& c = spec.candidates[i];
                const double cost = c.lambda * double(c.n);
                const double error = fake_trace[i] / double(c.n);
                bool feasible = true;
                double value = 0.0;
                if (const auto* b = std::get_if<BudgetConstrained>(&obj)) {
                    feasible = cost <= b->budget;
                    value = error;
                } else if (const auto* a = std::get_if<AccuracyConstrained>(&obj)) {
                    feasible = error <= a->max_error;
                    value = cost;
                } else {
                    value = cost + std::get<Penalized>(obj).alpha * error;
                }
                if (!feasible) continue;
                if (!best || value < best_obj ||
                    (value == best_obj &&
                     (cost < best_cost || (cost == best_cost && error < best_err)))) {
                    best = i;
                    best_obj = value;
                    best_cost = cost;
                    best_err = error;
                }
            }
            if (best.has_value() != sol.feasible ||
                (best && (sol.chosen_index != *best || sol.objective_value != best_obj))) {
                detail = "solver disagrees with exhaustive search on trial " +
                         std::to_string(trial);
                return false;
            }

            // independent pairwise dominance check of the frontier flags
            for (std::size_t i = 0; i < sol.evaluations.size(); ++i) {
                bool dominated = false;
                for (std::size_t j = 0; j < sol.evaluations.size(); ++j) {
                    if (i == j) continue;
                    const auto &a = sol.evaluations[j], &b = sol.evaluations[i];
                    if (a.cost <= b.cost && a.error <= b.error &&
                        (a.cost < b.cost || a.error < b.error))
                        dominated = true;
                }
                if (sol.evaluations[i].on_frontier != !dominated) {
                    detail = "frontier flag disagrees with pairwise dominance";
                    return false;
                }
            }
        }
    }
    detail = "20 randomized grids, all three objectives exact";
    return true;
}

// --- 11: plug-in variance estimates improve with the stage-1 label count -----

bool check_two_stage(std::string& detail) {
    TwoStageStudyConfig cfg{overlap_nb_fixture(), 2000L, {250, 500, 1000, 1300}, 20, 0.5,
                            EmConfig{},           91011, g_threads};
    cfg.em.restarts = 2;
    StudyResult r = run_two_stage_study(cfg);
    std::ostringstream note;
    note << "medians";
    double prev = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int rr : {250, 500, 1000, 1300}) {
        const double med = median(r.values("r" + std::to_string(rr), "trace_abs_error"));
        note << ' ' << med;
        ok = ok && med <= prev;
        prev = med;
    }
    detail = note.str();
    return ok;
}

// --- 12: CLI byte-identical reruns -------------------------------------------

bool run_cli(const std::string& args) {
    const std::string cmd = "\"" + g_cli_path + "\" " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

std::optional<std::string> slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) return std::nullopt;
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    if (names.empty()) {
        why = "no outputs produced";
        return false;
    }
    for (const auto& name : names) {
        auto fa = slurp(a / name), fb = slurp(b / name);
        if (!fa || !fb || *fa != *fb) {
            why = "mismatch in " + name.string();
            return false;
        }
    }
    return true;
}

bool check_cli_determinism(std::string& detail) {
    if (g_cli_path.empty()) {
        detail = "pass --cli PATH to enable this check";
        return false;
    }
    fs::path work = fs::temp_directory_path() / "sslx_acceptance_cli";
    fs::remove_all(work);
    fs::create_directories(work);

    auto write = [&](const std::string& name, const json& j) {
        std::ofstream os(work / name, std::ios::binary);
        os << j.dump(2);
        return (work / name).string();
    };

    const json model_fixture = {{"standard_fixture", true}};
    const std::string sim_cfg = write("simulate.json",
                                      {{"family", "naive_bayes"},
                                       {"model", model_fixture},
                                       {"n", 300},
                                       {"policy", {{"all_or_nothing", 0.5}}},
                                       {"output", "corpus.txt"},
                                       {"truth_output", "truth.txt"}});
    const std::string fit_cfg = write("fit.json",
                                      {{"family", "naive_bayes"},
                                       {"corpus", (work / "a_simulate/corpus.txt").string()},
                                       {"em", {{"restarts", 2}}},
                                       {"output", "fit.json"}});
    const std::string var_cfg = write("variance.json",
                                      {{"family", "naive_bayes"},
                                       {"model", model_fixture},
                                       {"lambda", 0.5},
                                       {"method", "monte_carlo"},
                                       {"mc_samples", 20000},
                                       {"output", "variance.json"}});
    json candidates = json::array();
    for (double l : {0.25, 0.5, 1.0})
        candidates.push_back({{"n", 400}, {"lambda", l}});
    const std::string trade_cfg = write("tradeoff.json",
                                        {{"family", "naive_bayes"},
                                         {"model", model_fixture},
                                         {"objective", {{"type", "budget"}, {"budget", 250.0}}},
                                         {"candidates", candidates},
                                         {"output", "tradeoff.json"},
                                         {"csv", "tradeoff.csv"}});
    const std::string two_cfg = write("two_stage.json",
                                      {{"pool", (work / "a_simulate/truth.txt").string()},
                                       {"r", 80},
                                       {"objective", {{"type", "budget"}, {"budget", 250.0}}},
                                       {"candidates", candidates},
                                       {"em", {{"restarts", 2}}},
                                       {"output", "two_stage.json"}});
    const std::string study_cfg = write("study.json",
                                        {{"type", "classification"},
                                         {"fixture", model_fixture},
                                         {"n_grid", {60, 120}},
                                         {"lambda_grid", {0.5, 1.0}},
                                         {"replicates", 3},
                                         {"em", {{"restarts", 2}}}});

    const std::vector<std::pair<std::string, std::string>> jobs = {
        {"simulate", sim_cfg}, {"fit", fit_cfg},       {"variance", var_cfg},
        {"tradeoff", trade_cfg}, {"two-stage", two_cfg}, {"study", study_cfg}};
    for (const auto& [sub, cfg] : jobs) {
        for (const char* tag : {"a", "b"}) {
            const fs::path out = work / (std::string(tag) + "_" + sub);
            if (!run_cli(sub + " --config " + cfg + " --out " + out.string() +
                         " --seed 12345 --threads 1")) {
                detail = sub + " exited nonzero";
                return false;
            }
        }
        std::string why;
        if (!same_tree(work / ("a_" + sub), work / ("b_" + sub), why)) {
            detail = sub + ": " + why;
            return false;
        }
    }
    detail = "6 subcommands byte-identical across reruns";
    return true;
}

struct Check {
    int number;
    const char* name;
    std::function<bool(std::string&)> fn;
    double budget_seconds;
};

} // namespace

int main(int argc, char** argv) {
    g_threads = std::clamp(int(std::thread::hardware_concurrency()), 1, 8);
    std::vector<std::string> filters;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc)
            g_cli_path = argv[++i];
        else if (arg == "--threads" && i + 1 < argc)
            g_threads = std::max(1, std::atoi(argv[++i]));
        else
            filters.push_back(arg);
    }

    const std::vector<Check> checks = {
        {1, "score-finite-differences", check_score_finite_differences, 10},
        {2, "fisher-identity", check_fisher_identity, 60},
        {3, "covariance-classification", check_covariance_classification, 300},
        {4, "covariance-structured", check_covariance_structured, 600},
        {5, "consistency", check_consistency, 600},
        {6, "em-ascent", check_em_ascent, 120},
        {7, "likelihood-gap-sign", check_kl_gap, 60},
        {8, "grid-correlation", check_grid_correlation, 900},
        {9, "monotonicity", check_monotonicity, 900},
        {10, "tradeoff-exactness", check_tradeoff_exactness, 60},
        {11, "two-stage", check_two_stage, 600},
        {12, "cli-determinism", check_cli_determinism, 300},
    };

    int failures = 0, run = 0;
    for (const auto& c : checks) {
        if (!filters.empty()) {
            bool selected = false;
            for (const auto& f : filters)
                if (f == std::to_string(c.number) || std::string(c.name).find(f) != std::string::npos)
                    selected = true;
            if (!selected) continue;
        }
        ++run;
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (ok && secs > c.budget_seconds) {
            ok = false;
            detail += " [exceeded " + std::to_string(int(c.budget_seconds)) + " s budget]";
        }
        std::printf("[%s] %02d %-28s %7.1f s  %s\n", ok ? "PASS" : "FAIL", c.number, c.name,
                    secs, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("%d/%d checks passed\n", run - failures, run);
    return failures;
}
