#ifndef SSLX_CHAIN_HPP
#define SSLX_CHAIN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslx/dataset.hpp"
#include "sslx/param.hpp"
#include "sslx/policy.hpp"
#include "sslx/rng.hpp"

namespace sslx {

// First-order hidden chain over K states emitting tokens from an alphabet of
// size V: initial distribution, KxK transition matrix, KxV emission matrix.
// The Boltzmann-chain experiments run through this HMM parameterization.
class ChainModel {
public:
    ChainModel(Eigen::VectorXd init, Eigen::MatrixXd trans, Eigen::MatrixXd emit)
        : init_(std::move(init)), trans_(std::move(trans)), emit_(std::move(emit)) {
        const int K = num_states();
        if (trans_.rows() != K || trans_.cols() != K || emit_.rows() != K)
            throw std::invalid_argument("ChainModel: shape mismatch");
        check_rows();
    }

    int num_states() const { return static_cast<int>(init_.size()); }
    int vocab() const { return static_cast<int>(emit_.cols()); }
    const Eigen::VectorXd& initial() const { return init_; }
    const Eigen::MatrixXd& transition() const { return trans_; }
    const Eigen::MatrixXd& emission() const { return emit_; }

    ParamLayout layout() const {
        std::vector<SimplexBlock> blocks;
        blocks.push_back({"initial", num_states()});
        for (int k = 0; k < num_states(); ++k)
            blocks.push_back({"trans_" + std::to_string(k), num_states()});
        for (int k = 0; k < num_states(); ++k)
            blocks.push_back({"emit_" + std::to_string(k), vocab()});
        return ParamLayout(std::move(blocks));
    }

    ParamVector params() const {
        std::vector<Eigen::VectorXd> rows;
        rows.push_back(init_);
        for (int k = 0; k < num_states(); ++k) rows.push_back(trans_.row(k));
        for (int k = 0; k < num_states(); ++k) rows.push_back(emit_.row(k));
        return ParamVector::from_probabilities(layout(), rows);
    }

    static ChainModel from_params(const ParamVector& p, int K, int V) {
        auto rows = p.to_probabilities();
        if (static_cast<int>(rows.size()) != 1 + 2 * K)
            throw std::invalid_argument("ChainModel::from_params: bad layout");
        Eigen::MatrixXd trans(K, K), emit(K, V);
        for (int k = 0; k < K; ++k) trans.row(k) = rows[1 + k];
        for (int k = 0; k < K; ++k) emit.row(k) = rows[1 + K + k];
        return ChainModel(rows[0], trans, emit);
    }

    double log_complete(const std::vector<int>& tokens, const std::vector<int>& labels) const {
        if (tokens.size() != labels.size())
            throw std::invalid_argument("log_complete: token/label length mismatch");
        double ll = std::log(init_[labels[0]]) + std::log(emit_(labels[0], tokens[0]));
        for (std::size_t t = 1; t < tokens.size(); ++t)
            ll += std::log(trans_(labels[t - 1], labels[t])) + std::log(emit_(labels[t], tokens[t]));
        return ll;
    }

    struct Posteriors {
        Eigen::MatrixXd gamma;             // m x K state posteriors
        std::vector<Eigen::MatrixXd> xi;   // m-1 pairwise posteriors, K x K
        double log_likelihood = 0.0;       // log p(observed labels, x)
    };

    // Scaled forward-backward with observed positions clamped to their
    // observed state; returns posteriors over the unobserved positions and
    // log p({Y_i : i in S}, x).
    Posteriors forward_backward(const std::vector<int>& tokens,
                                const LabelObservation& obs) const {
        const int m = static_cast<int>(tokens.size());
        const int K = num_states();
        if (m == 0) throw std::invalid_argument("forward_backward: empty sequence");
        obs.validate(m, K);
        for (int t = 0; t < m; ++t)
            if (tokens[t] < 0 || tokens[t] >= vocab())
                throw std::invalid_argument("forward_backward: token out of alphabet");

        std::vector<int> clamp(m, -1);
        for (std::size_t i = 0; i < obs.observed_positions.size(); ++i)
            clamp[obs.observed_positions[i]] = obs.observed_values[i];

        Eigen::MatrixXd alpha(m, K), beta(m, K);
        Eigen::VectorXd scale(m);
        auto mask = [&](int t, int k) { return clamp[t] < 0 || clamp[t] == k; };

        for (int k = 0; k < K; ++k)
            alpha(0, k) = mask(0, k) ? init_[k] * emit_(k, tokens[0]) : 0.0;
        scale[0] = alpha.row(0).sum();
        if (scale[0] <= 0.0) throw std::runtime_error("forward_backward: zero-probability observation");
        alpha.row(0) /= scale[0];
        for (int t = 1; t < m; ++t) {
            for (int k = 0; k < K; ++k) {
                double a = 0.0;
                if (mask(t, k)) {
                    for (int j = 0; j < K; ++j) a += alpha(t - 1, j) * trans_(j, k);
                    a *= emit_(k, tokens[t]);
                }
                alpha(t, k) = a;
            }
            scale[t] = alpha.row(t).sum();
            if (scale[t] <= 0.0) throw std::runtime_error("forward_backward: zero-probability observation");
            alpha.row(t) /= scale[t];
        }

        beta.row(m - 1).setOnes();
        for (int t = m - 2; t >= 0; --t) {
            for (int j = 0; j < K; ++j) {
                double b = 0.0;
                for (int k = 0; k < K; ++k)
                    if (mask(t + 1, k))
                        b += trans_(j, k) * emit_(k, tokens[t + 1]) * beta(t + 1, k);
                beta(t, j) = b / scale[t + 1];
            }
        }

        Posteriors p;
        p.gamma.resize(m, K);
        for (int t = 0; t < m; ++t) {
            Eigen::VectorXd g = alpha.row(t).cwiseProduct(beta.row(t));
            p.gamma.row(t) = g / g.sum();
        }
        p.xi.reserve(m - 1);
        for (int t = 0; t + 1 < m; ++t) {
            Eigen::MatrixXd x(K, K);
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    x(j, k) = mask(t + 1, k)
                                  ? alpha(t, j) * trans_(j, k) * emit_(k, tokens[t + 1]) *
                                        beta(t + 1, k) / scale[t + 1]
                                  : 0.0;
            p.xi.push_back(x / x.sum());
        }
        p.log_likelihood = scale.array().log().sum();
        return p;
    }

    // log p(observed labels, x) by the constrained forward recursion
    double log_observed(const std::vector<int>& tokens, const LabelObservation& obs) const {
        return forward_backward(tokens, obs).log_likelihood;
    }
    double log_observed(const Sample& s) const { return log_observed(s.tokens, s.labels); }

    // Expected complete-data counts given the observation.
    struct ExpectedCounts {
        Eigen::VectorXd initial;  // K
        Eigen::MatrixXd trans;    // K x K
        Eigen::MatrixXd emit;     // K x V
    };

    ExpectedCounts expected_counts(const std::vector<int>& tokens,
                                   const LabelObservation& obs) const {
        const Posteriors p = forward_backward(tokens, obs);
        return counts_from_posteriors(tokens, p);
    }

    ExpectedCounts counts_from_posteriors(const std::vector<int>& tokens,
                                          const Posteriors& p) const {
        const int K = num_states(), V = vocab();
        ExpectedCounts e;
        e.initial = p.gamma.row(0);
        e.trans = Eigen::MatrixXd::Zero(K, K);
        for (const auto& x : p.xi) e.trans += x;
        e.emit = Eigen::MatrixXd::Zero(K, V);
        for (int t = 0; t < p.gamma.rows(); ++t)
            e.emit.col(tokens[t]) += p.gamma.row(t).transpose();
        return e;
    }

    // Analytic observed-data score via the missing-data identity: expected
    // complete-data sufficient statistics mapped through the logit map.
    Eigen::VectorXd score_observed(const std::vector<int>& tokens,
                                   const LabelObservation& obs) const {
        return score_from_counts(expected_counts(tokens, obs));
    }
    Eigen::VectorXd score_observed(const Sample& s) const {
        return score_observed(s.tokens, s.labels);
    }

    Eigen::VectorXd score_from_counts(const ExpectedCounts& e) const {
        const int K = num_states(), V = vocab();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(layout().dim());
        int off = 0;
        for (int k = 0; k + 1 < K; ++k) g[off + k] = e.initial[k] - init_[k];
        off += K - 1;
        for (int j = 0; j < K; ++j) {
            const double total = e.trans.row(j).sum();
            for (int k = 0; k + 1 < K; ++k) g[off + k] = e.trans(j, k) - total * trans_(j, k);
            off += K - 1;
        }
        for (int k = 0; k < K; ++k) {
            const double total = e.emit.row(k).sum();
            for (int v = 0; v + 1 < V; ++v) g[off + v] = e.emit(k, v) - total * emit_(k, v);
            off += V - 1;
        }
        return g;
    }

    // draws one (x, y) sequence of length m and applies the labeling policy
    Sample sample(int m, const LabelingPolicy& policy, Rng& rng) const {
        const int K = num_states(), V = vocab();
        std::vector<int> labels(m), tokens(m);
        std::vector<double> row(std::max(K, V));
        auto draw = [&](const Eigen::VectorXd& p) {
            std::vector<double> w(p.data(), p.data() + p.size());
            return rng.categorical(w);
        };
        labels[0] = draw(init_);
        tokens[0] = draw(emit_.row(labels[0]));
        for (int t = 1; t < m; ++t) {
            labels[t] = draw(trans_.row(labels[t - 1]));
            tokens[t] = draw(emit_.row(labels[t]));
        }
        Sample s;
        s.tokens = std::move(tokens);
        s.true_labels = labels;
        s.labels = policy.apply(labels, rng);
        return s;
    }

    Dataset sample_dataset(int n, const LabelingPolicy& policy,
                           const LengthDistribution& lengths, Rng& rng) const {
        lengths.validate();
        Dataset d;
        d.kind = Dataset::Kind::Sequence;
        d.num_labels = num_states();
        d.vocab = vocab();
        d.samples.reserve(n);
        for (int i = 0; i < n; ++i)
            d.samples.push_back(sample(lengths.sample(rng), policy, rng));
        return d;
    }

    // positionwise posterior decoding, ties toward the lowest state index
    std::vector<int> predict(const std::vector<int>& tokens) const {
        const Posteriors p = forward_backward(tokens, LabelObservation::none());
        std::vector<int> out(tokens.size());
        for (int t = 0; t < p.gamma.rows(); ++t) {
            int best = 0;
            for (int k = 1; k < num_states(); ++k)
                if (p.gamma(t, k) > p.gamma(t, best)) best = k;
            out[t] = best;
        }
        return out;
    }

    // Enumerates all (x, y) sequence pairs of length m with probabilities.
    // f(tokens, labels, probability). Outcome count is (K*V)^m.
    template <typename F>
    void enumerate_joint(int m, F&& f) const {
        std::vector<int> tokens(m), labels(m);
        enumerate_rec(0, m, tokens, labels, std::forward<F>(f));
    }

private:
    template <typename F>
    void enumerate_rec(int t, int m, std::vector<int>& tokens, std::vector<int>& labels,
                       F&& f) const {
        if (t == m) {
            f(const_cast<const std::vector<int>&>(tokens),
              const_cast<const std::vector<int>&>(labels),
              std::exp(log_complete(tokens, labels)));
            return;
        }
        for (int k = 0; k < num_states(); ++k) {
            labels[t] = k;
            for (int v = 0; v < vocab(); ++v) {
                tokens[t] = v;
                enumerate_rec(t + 1, m, tokens, labels, f);
            }
        }
    }

    void check_rows() const {
        auto check = [](const Eigen::VectorXd& row) {
            double s = 0.0;
            for (int i = 0; i < row.size(); ++i) {
                if (!(row[i] > 0.0))
                    throw std::invalid_argument("ChainModel: probabilities must be strictly positive");
                s += row[i];
            }
            if (std::abs(s - 1.0) > 1e-10)
                throw std::invalid_argument("ChainModel: row does not sum to 1");
        };
        check(init_);
        for (int k = 0; k < trans_.rows(); ++k) check(trans_.row(k));
        for (int k = 0; k < emit_.rows(); ++k) check(emit_.row(k));
    }

    Eigen::VectorXd init_;
    Eigen::MatrixXd trans_;
    Eigen::MatrixXd emit_;
};

inline double chain_log_observed(const ChainModel& m, const Sample& s) {
    return m.log_observed(s);
}

} // namespace sslx

#endif
