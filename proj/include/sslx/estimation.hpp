#ifndef SSLX_ESTIMATION_HPP
#define SSLX_ESTIMATION_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sslx/chain.hpp"
#include "sslx/dataset.hpp"
#include "sslx/naive_bayes.hpp"
#include "sslx/rng.hpp"

namespace sslx {

struct EmConfig {
    int max_iterations = 500;
    double tolerance = 1e-8;        // relative log-likelihood change
    int restarts = 5;
    double smoothing = 1e-3;        // Dirichlet-style pseudo-count for M-steps
    double init_noise = 0.1;        // logit perturbation per restart
    std::uint64_t seed = 1;
    bool allow_unlabeled = false;   // permit fitting with zero labeled samples

    void validate() const {
        if (tolerance <= 0.0) throw std::invalid_argument("EmConfig: tolerance must be positive");
        if (restarts < 1) throw std::invalid_argument("EmConfig: restarts must be >= 1");
        if (max_iterations < 1) throw std::invalid_argument("EmConfig: max_iterations must be >= 1");
    }
};

struct FitResult {
    ParamVector estimate;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::vector<double> trace; // per-iteration observed log-likelihood
    int restart_index = 0;
};

inline double observed_loglik(const NaiveBayesModel& m, const Dataset& data) {
    double ll = 0.0;
    for (const auto& s : data.samples) ll += m.log_observed(s);
    return ll;
}

inline double observed_loglik(const ChainModel& m, const Dataset& data) {
    double ll = 0.0;
    for (const auto& s : data.samples) ll += m.log_observed(s);
    return ll;
}

namespace detail {

inline Eigen::VectorXd normalize_counts(const Eigen::VectorXd& counts, double smoothing) {
    Eigen::VectorXd c = counts.array() + smoothing;
    return c / c.sum();
}

// closed-form estimate from labeled samples only; uniform when none
inline NaiveBayesModel nb_labeled_init(const Dataset& data, int C, int V, int doc_length,
                                       double smoothing) {
    Eigen::VectorXd prior_counts = Eigen::VectorXd::Zero(C);
    Eigen::MatrixXd term_counts = Eigen::MatrixXd::Zero(C, V);
    for (const auto& s : data.samples) {
        if (!s.is_labeled()) continue;
        const int y = s.class_label();
        prior_counts[y] += 1.0;
        for (int v = 0; v < V; ++v) term_counts(y, v) += s.counts[v];
    }
    const double sm = std::max(smoothing, 1e-3);
    Eigen::VectorXd prior = normalize_counts(prior_counts, sm);
    Eigen::MatrixXd cond(C, V);
    for (int y = 0; y < C; ++y) cond.row(y) = normalize_counts(term_counts.row(y), sm);
    return NaiveBayesModel(prior, cond, doc_length);
}

inline ParamVector perturb(const ParamVector& p, double sigma, Rng& rng) {
    Eigen::VectorXd v = p.values();
    for (int i = 0; i < v.size(); ++i) v[i] += sigma * rng.normal();
    return ParamVector(p.layout(), v);
}

inline ChainModel chain_labeled_init(const Dataset& data, int K, int V, double smoothing) {
    Eigen::VectorXd init_counts = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd trans_counts = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd emit_counts = Eigen::MatrixXd::Zero(K, V);
    for (const auto& s : data.samples) {
        const int m = s.length();
        std::vector<int> clamp(m, -1);
        for (std::size_t i = 0; i < s.labels.observed_positions.size(); ++i)
            clamp[s.labels.observed_positions[i]] = s.labels.observed_values[i];
        if (clamp[0] >= 0) init_counts[clamp[0]] += 1.0;
        for (int t = 0; t < m; ++t)
            if (clamp[t] >= 0) emit_counts(clamp[t], s.tokens[t]) += 1.0;
        for (int t = 0; t + 1 < m; ++t)
            if (clamp[t] >= 0 && clamp[t + 1] >= 0) trans_counts(clamp[t], clamp[t + 1]) += 1.0;
    }
    const double sm = std::max(smoothing, 1e-3);
    Eigen::VectorXd init = normalize_counts(init_counts, sm);
    Eigen::MatrixXd trans(K, K), emit(K, V);
    for (int k = 0; k < K; ++k) {
        trans.row(k) = normalize_counts(trans_counts.row(k), sm);
        emit.row(k) = normalize_counts(emit_counts.row(k), sm);
    }
    return ChainModel(init, trans, emit);
}

} // namespace detail

// EM for the stochastic SSL naive Bayes likelihood: labeled documents enter
// with point-mass responsibilities, unlabeled ones with class posteriors.
inline FitResult fit_naive_bayes(const Dataset& data, const EmConfig& config) {
    config.validate();
    if (data.empty()) throw std::invalid_argument("fit_naive_bayes: empty dataset");
    if (data.kind != Dataset::Kind::BagOfWords)
        throw std::invalid_argument("fit_naive_bayes: dataset is not bag-of-words");
    const int C = data.num_labels, V = data.vocab;
    if (C < 1 || V < 1) throw std::invalid_argument("fit_naive_bayes: bad dataset dimensions");
    bool any_labeled = false;
    int doc_length = 0;
    for (const auto& s : data.samples) {
        any_labeled = any_labeled || s.is_labeled();
        doc_length = std::max(doc_length,
                              std::accumulate(s.counts.begin(), s.counts.end(), 0));
    }
    if (!any_labeled && !config.allow_unlabeled)
        throw std::invalid_argument(
            "fit_naive_bayes: all samples unlabeled; the class labeling is not "
            "identifiable. Pass allow_unlabeled to fit anyway.");

    Rng rng(config.seed);
    const NaiveBayesModel base =
        detail::nb_labeled_init(data, C, V, doc_length, config.smoothing);

    FitResult best;
    for (int r = 0; r < config.restarts; ++r) {
        Rng rrng = rng.split(r);
        ParamVector p0 = base.params();
        if (r > 0 || !any_labeled)
            p0 = detail::perturb(p0, any_labeled ? config.init_noise : 1.0, rrng);
        NaiveBayesModel model = NaiveBayesModel::from_params(p0, doc_length);

        FitResult res;
        res.restart_index = r;
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (int it = 0; it < config.max_iterations; ++it) {
            Eigen::VectorXd prior_counts = Eigen::VectorXd::Zero(C);
            Eigen::MatrixXd term_counts = Eigen::MatrixXd::Zero(C, V);
            double ll = 0.0;
            for (const auto& s : data.samples) {
                Eigen::VectorXd resp;
                if (s.is_labeled()) {
                    resp = Eigen::VectorXd::Zero(C);
                    resp[s.class_label()] = 1.0;
                    ll += model.log_joint(s.counts, s.class_label());
                } else {
                    resp = model.posterior(s.counts);
                    ll += model.log_marginal(s.counts);
                }
                prior_counts += resp;
                for (int v = 0; v < V; ++v)
                    if (s.counts[v] > 0) term_counts.col(v) += resp * double(s.counts[v]);
            }
            res.trace.push_back(ll);
            res.iterations = it + 1;
            const bool converged =
                it > 0 && std::abs(ll - prev_ll) <= config.tolerance * (std::abs(prev_ll) + 1.0);
            prev_ll = ll;
            if (converged) break;

            Eigen::VectorXd prior = detail::normalize_counts(prior_counts, config.smoothing);
            Eigen::MatrixXd cond(C, V);
            for (int y = 0; y < C; ++y)
                cond.row(y) = detail::normalize_counts(term_counts.row(y), config.smoothing);
            model = NaiveBayesModel(prior, cond, doc_length);
        }
        res.log_likelihood = prev_ll;
        res.estimate = model.params();
        if (res.log_likelihood > best.log_likelihood) best = res;
    }
    return best;
}

// EM for chains under arbitrary label observations. Observed positions clamp
// the forward-backward posteriors; the M-step is closed form per row.
inline FitResult fit_chain(const Dataset& data, int K, const EmConfig& config) {
    config.validate();
    if (data.empty()) throw std::invalid_argument("fit_chain: empty dataset");
    if (data.kind != Dataset::Kind::Sequence)
        throw std::invalid_argument("fit_chain: dataset is not sequential");
    const int V = data.vocab;
    if (K < 1 || V < 1) throw std::invalid_argument("fit_chain: bad dimensions");
    bool any_labeled = false;
    for (const auto& s : data.samples) {
        for (int v : s.labels.observed_values)
            if (v < 0 || v >= K)
                throw std::invalid_argument("fit_chain: observed label outside state range");
        any_labeled = any_labeled || s.is_labeled();
    }

    Rng rng(config.seed);
    const ChainModel base = detail::chain_labeled_init(data, K, V, config.smoothing);

    FitResult best;
    for (int r = 0; r < config.restarts; ++r) {
        Rng rrng = rng.split(r);
        ParamVector p0 = base.params();
        if (r > 0 || !any_labeled)
            p0 = detail::perturb(p0, any_labeled ? config.init_noise : 1.0, rrng);
        ChainModel model = ChainModel::from_params(p0, K, V);

        FitResult res;
        res.restart_index = r;
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (int it = 0; it < config.max_iterations; ++it) {
            Eigen::VectorXd init_counts = Eigen::VectorXd::Zero(K);
            Eigen::MatrixXd trans_counts = Eigen::MatrixXd::Zero(K, K);
            Eigen::MatrixXd emit_counts = Eigen::MatrixXd::Zero(K, V);
            double ll = 0.0;
            for (const auto& s : data.samples) {
                auto post = model.forward_backward(s.tokens, s.labels);
                ll += post.log_likelihood;
                auto e = model.counts_from_posteriors(s.tokens, post);
                init_counts += e.initial;
                trans_counts += e.trans;
                emit_counts += e.emit;
            }
            res.trace.push_back(ll);
            res.iterations = it + 1;
            const bool converged =
                it > 0 && std::abs(ll - prev_ll) <= config.tolerance * (std::abs(prev_ll) + 1.0);
            prev_ll = ll;
            if (converged) break;

            Eigen::VectorXd init = detail::normalize_counts(init_counts, config.smoothing);
            Eigen::MatrixXd trans(K, K), emit(K, V);
            for (int k = 0; k < K; ++k) {
                trans.row(k) = detail::normalize_counts(trans_counts.row(k), config.smoothing);
                emit.row(k) = detail::normalize_counts(emit_counts.row(k), config.smoothing);
            }
            model = ChainModel(init, trans, emit);
        }
        res.log_likelihood = prev_ll;
        res.estimate = model.params();
        if (res.log_likelihood > best.log_likelihood) best = res;
    }
    return best;
}

// Best state relabeling of `estimate` against `reference` by infinity-norm
// distance in probability space. Latent-state models are only identified up
// to permutation; evaluation metrics align first.
inline ChainModel align_states(const ChainModel& estimate, const ChainModel& reference) {
    const int K = estimate.num_states();
    std::vector<int> perm(K);
    for (int k = 0; k < K; ++k) perm[k] = k;
    std::vector<int> best_perm = perm;
    double best_dist = std::numeric_limits<double>::infinity();
    auto dist_for = [&](const std::vector<int>& p) {
        double d = 0.0;
        for (int k = 0; k < K; ++k) {
            d = std::max(d, std::abs(estimate.initial()[p[k]] - reference.initial()[k]));
            for (int j = 0; j < K; ++j)
                d = std::max(d, std::abs(estimate.transition()(p[k], p[j]) -
                                         reference.transition()(k, j)));
            for (int v = 0; v < estimate.vocab(); ++v)
                d = std::max(d, std::abs(estimate.emission()(p[k], v) -
                                         reference.emission()(k, v)));
        }
        return d;
    };
    std::sort(perm.begin(), perm.end());
    do {
        const double d = dist_for(perm);
        if (d < best_dist) {
            best_dist = d;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    Eigen::VectorXd init(K);
    Eigen::MatrixXd trans(K, K), emit(K, estimate.vocab());
    for (int k = 0; k < K; ++k) {
        init[k] = estimate.initial()[best_perm[k]];
        for (int j = 0; j < K; ++j) trans(k, j) = estimate.transition()(best_perm[k], best_perm[j]);
        emit.row(k) = estimate.emission().row(best_perm[k]);
    }
    return ChainModel(init, trans, emit);
}

inline NaiveBayesModel align_classes(const NaiveBayesModel& estimate,
                                     const NaiveBayesModel& reference) {
    const int C = estimate.num_classes();
    std::vector<int> perm(C);
    for (int c = 0; c < C; ++c) perm[c] = c;
    std::vector<int> best_perm = perm;
    double best_dist = std::numeric_limits<double>::infinity();
    auto dist_for = [&](const std::vector<int>& p) {
        double d = 0.0;
        for (int c = 0; c < C; ++c) {
            d = std::max(d, std::abs(estimate.prior()[p[c]] - reference.prior()[c]));
            for (int v = 0; v < estimate.vocab(); ++v)
                d = std::max(d, std::abs(estimate.conditionals()(p[c], v) -
                                         reference.conditionals()(c, v)));
        }
        return d;
    };
    do {
        const double d = dist_for(perm);
        if (d < best_dist) {
            best_dist = d;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    Eigen::VectorXd prior(C);
    Eigen::MatrixXd cond(C, estimate.vocab());
    for (int c = 0; c < C; ++c) {
        prior[c] = estimate.prior()[best_perm[c]];
        cond.row(c) = estimate.conditionals().row(best_perm[c]);
    }
    return NaiveBayesModel(prior, cond, estimate.doc_length());
}

// infinity-norm distance between two models in probability space
inline double prob_distance(const NaiveBayesModel& a, const NaiveBayesModel& b) {
    double d = (a.prior() - b.prior()).cwiseAbs().maxCoeff();
    d = std::max(d, (a.conditionals() - b.conditionals()).cwiseAbs().maxCoeff());
    return d;
}

inline double prob_distance(const ChainModel& a, const ChainModel& b) {
    double d = (a.initial() - b.initial()).cwiseAbs().maxCoeff();
    d = std::max(d, (a.transition() - b.transition()).cwiseAbs().maxCoeff());
    d = std::max(d, (a.emission() - b.emission()).cwiseAbs().maxCoeff());
    return d;
}

} // namespace sslx

#endif
