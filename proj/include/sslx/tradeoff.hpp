#ifndef SSLX_TRADEOFF_HPP
#define SSLX_TRADEOFF_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sslx/asymptotics.hpp"
#include "sslx/estimation.hpp"
#include "sslx/policy.hpp"

namespace sslx {

// One point of the candidate grid. Classification candidates carry (lambda,
// n); structured ones a labeling policy with a length distribution. The cost
// defaults to lambda*n resp. n*policy_cost unless the spec overrides it.
struct TradeoffCandidate {
    std::string id;
    long n = 0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::optional<LabelingPolicy> policy;
    std::optional<LengthDistribution> lengths;

    double default_cost() const {
        if (policy) {
            if (!lengths) throw std::invalid_argument("TradeoffCandidate: policy without lengths");
            return static_cast<double>(n) * policy->cost(*lengths);
        }
        return lambda * static_cast<double>(n);
    }
};

struct BudgetConstrained { double budget = 0.0; };      // min error s.t. cost <= C
struct AccuracyConstrained { double max_error = 0.0; }; // min cost s.t. error <= C
struct Penalized { double alpha = 0.0; };               // min cost + alpha * error

using TradeoffObjective = std::variant<BudgetConstrained, AccuracyConstrained, Penalized>;

struct TradeoffSpec {
    TradeoffObjective objective;
    std::vector<TradeoffCandidate> candidates;
    // optional override for the labeling cost of a candidate
    std::function<double(const TradeoffCandidate&)> cost_function;

    void validate() const {
        if (candidates.empty()) throw std::invalid_argument("TradeoffSpec: empty candidate grid");
        if (const auto* b = std::get_if<BudgetConstrained>(&objective)) {
            if (b->budget <= 0.0) throw std::invalid_argument("TradeoffSpec: budget must be > 0");
        } else if (const auto* a = std::get_if<AccuracyConstrained>(&objective)) {
            if (a->max_error <= 0.0)
                throw std::invalid_argument("TradeoffSpec: accuracy bound must be > 0");
        } else if (const auto* p = std::get_if<Penalized>(&objective)) {
            if (p->alpha <= 0.0) throw std::invalid_argument("TradeoffSpec: alpha must be > 0");
        }
    }

    double cost_of(const TradeoffCandidate& c) const {
        return cost_function ? cost_function(c) : c.default_cost();
    }
};

struct CandidateEvaluation {
    TradeoffCandidate candidate;
    double cost = 0.0;
    double trace_inverse = 0.0; // trace(Sigma^-1) at the candidate
    double error = 0.0;         // finite-n proxy: trace(Sigma^-1) / n
    bool feasible = true;
    bool on_frontier = false;
};

struct TradeoffSolution {
    bool feasible = false;
    std::string infeasibility_reason;
    std::size_t chosen_index = 0; // into evaluations, valid when feasible
    double objective_value = std::numeric_limits<double>::quiet_NaN();
    std::vector<CandidateEvaluation> evaluations;

    const CandidateEvaluation& chosen() const {
        if (!feasible) throw std::logic_error("TradeoffSolution: no feasible candidate");
        return evaluations[chosen_index];
    }
};

// Pareto-minimal subset under (cost, error). Returns per-candidate frontier
// flags; a point is dominated if another is <= in both coordinates and < in
// at least one.
inline std::vector<bool> frontier_flags(const std::vector<CandidateEvaluation>& evals) {
    const std::size_t k = evals.size();
    std::vector<bool> on(k, true);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const bool leq = evals[j].cost <= evals[i].cost && evals[j].error <= evals[i].error;
            const bool strict = evals[j].cost < evals[i].cost || evals[j].error < evals[i].error;
            if (leq && strict) {
                on[i] = false;
                break;
            }
        }
    return on;
}

// Exact search over the candidate grid. The variance oracle maps a candidate
// to trace(Sigma^-1) at that candidate's policy. Ties break by lower cost,
// then lower error, then grid order.
inline TradeoffSolution solve_tradeoff(
    const TradeoffSpec& spec,
    const std::function<double(const TradeoffCandidate&)>& variance_oracle) {
    spec.validate();
    TradeoffSolution sol;
    sol.evaluations.reserve(spec.candidates.size());
    for (const auto& c : spec.candidates) {
        CandidateEvaluation e;
        e.candidate = c;
        e.cost = spec.cost_of(c);
        e.trace_inverse = variance_oracle(c);
        e.error = e.trace_inverse / static_cast<double>(c.n);
        sol.evaluations.push_back(std::move(e));
    }

    auto objective_of = [&](const CandidateEvaluation& e) {
        if (std::holds_alternative<BudgetConstrained>(spec.objective)) return e.error;
        if (std::holds_alternative<AccuracyConstrained>(spec.objective)) return e.cost;
        return e.cost + std::get<Penalized>(spec.objective).alpha * e.error;
    };
    for (auto& e : sol.evaluations) {
        if (const auto* b = std::get_if<BudgetConstrained>(&spec.objective))
            e.feasible = e.cost <= b->budget;
        else if (const auto* a = std::get_if<AccuracyConstrained>(&spec.objective))
            e.feasible = e.error <= a->max_error;
        else
            e.feasible = true;
    }

    auto flags = frontier_flags(sol.evaluations);
    for (std::size_t i = 0; i < flags.size(); ++i) sol.evaluations[i].on_frontier = flags[i];

    bool found = false;
    for (std::size_t i = 0; i < sol.evaluations.size(); ++i) {
        const auto& e = sol.evaluations[i];
        if (!e.feasible) continue;
        const double obj = objective_of(e);
        if (!found) {
            found = true;
            sol.chosen_index = i;
            sol.objective_value = obj;
            continue;
        }
        const auto& cur = sol.evaluations[sol.chosen_index];
        if (obj < sol.objective_value ||
            (obj == sol.objective_value &&
             (e.cost < cur.cost || (e.cost == cur.cost && e.error < cur.error)))) {
            sol.chosen_index = i;
            sol.objective_value = obj;
        }
    }
    sol.feasible = found;
    if (!found) {
        if (const auto* b = std::get_if<BudgetConstrained>(&spec.objective))
            sol.infeasibility_reason =
                "no candidate satisfies cost <= " + std::to_string(b->budget);
        else if (const auto* a = std::get_if<AccuracyConstrained>(&spec.objective))
            sol.infeasibility_reason =
                "no candidate satisfies error <= " + std::to_string(a->max_error);
        else
            sol.infeasibility_reason = "empty grid";
    }
    return sol;
}

struct TwoStagePlan {
    int initial_labels = 0;            // r
    ParamVector plug_in_estimate;      // theta'
    double estimated_trace = 0.0;      // trace(Sigma^-1) at theta' for the reference lambda
    double reference_lambda = 0.5;
    TradeoffSolution solution;
};

// Two-stage plug-in algorithm for classification: label r pool samples, fit
// theta' semi-supervised, then resolve the tradeoff with variances evaluated
// at theta'. Stage-1 samples are drawn uniformly without replacement; their
// labels count toward the final budget through the candidate costs.
inline TwoStagePlan two_stage_classification(const Dataset& pool, int r, const TradeoffSpec& spec,
                                             const EmConfig& fit_config, Rng& rng,
                                             double reference_lambda = 0.5,
                                             AsymptoticReport::Method method =
                                                 AsymptoticReport::Method::Enumeration,
                                             long mc_samples = 100'000) {
    if (r < 1) throw std::invalid_argument("two_stage: r must be >= 1");
    if (pool.size() < static_cast<std::size_t>(r))
        throw std::invalid_argument("two_stage: pool smaller than r");
    spec.validate();

    // stage-1 reveals only the r drawn samples; everything else is unlabeled
    Dataset staged = pool;
    auto picks = rng.sample_without_replacement(pool.size(), static_cast<std::size_t>(r));
    std::vector<bool> picked(pool.size(), false);
    for (std::size_t idx : picks) picked[idx] = true;
    for (std::size_t i = 0; i < staged.samples.size(); ++i) {
        Sample& s = staged.samples[i];
        if (picked[i]) {
            if (s.true_labels.empty())
                throw std::invalid_argument("two_stage: pool sample carries no revealable label");
            s.labels = LabelObservation::full(s.true_labels);
        } else {
            s.labels = LabelObservation::none();
        }
    }

    FitResult fit = fit_naive_bayes(staged, fit_config);
    int doc_length = 0;
    for (const auto& s : staged.samples) {
        int t = 0;
        for (int c : s.counts) t += c;
        doc_length = std::max(doc_length, t);
    }
    NaiveBayesModel plug_in = NaiveBayesModel::from_params(fit.estimate, doc_length);

    TwoStagePlan plan;
    plan.initial_labels = r;
    plan.plug_in_estimate = fit.estimate;
    plan.reference_lambda = reference_lambda;
    plan.estimated_trace =
        sigma_classification(plug_in, reference_lambda, method, mc_samples).trace_inverse;
    plan.solution = solve_tradeoff(spec, [&](const TradeoffCandidate& c) {
        return sigma_classification(plug_in, c.lambda, method, mc_samples).trace_inverse;
    });
    return plan;
}

} // namespace sslx

#endif
