#ifndef SSLX_NAIVE_BAYES_HPP
#define SSLX_NAIVE_BAYES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslx/dataset.hpp"
#include "sslx/param.hpp"
#include "sslx/policy.hpp"
#include "sslx/rng.hpp"

namespace sslx {

inline double log_sum_exp(const Eigen::VectorXd& v) {
    const double mx = v.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
    return mx + std::log(s);
}

// Multinomial naive Bayes: class prior over C classes, per-class term
// distribution over V terms, documents of a fixed length. Document
// log-likelihoods omit the multinomial coefficient (constant in the
// parameters); enumeration weights include it so probabilities normalize.
class NaiveBayesModel {
public:
    NaiveBayesModel(Eigen::VectorXd prior, Eigen::MatrixXd cond, int doc_length)
        : prior_(std::move(prior)), cond_(std::move(cond)), doc_length_(doc_length) {
        if (cond_.rows() != prior_.size())
            throw std::invalid_argument("NaiveBayesModel: prior/conditional shape mismatch");
        if (doc_length_ < 0) throw std::invalid_argument("NaiveBayesModel: negative doc length");
        check_rows();
    }

    int num_classes() const { return static_cast<int>(prior_.size()); }
    int vocab() const { return static_cast<int>(cond_.cols()); }
    int doc_length() const { return doc_length_; }
    const Eigen::VectorXd& prior() const { return prior_; }
    const Eigen::MatrixXd& conditionals() const { return cond_; }

    ParamLayout layout() const {
        std::vector<SimplexBlock> blocks;
        blocks.push_back({"prior", num_classes()});
        for (int c = 0; c < num_classes(); ++c)
            blocks.push_back({"cond_" + std::to_string(c), vocab()});
        return ParamLayout(std::move(blocks));
    }

    ParamVector params() const {
        std::vector<Eigen::VectorXd> rows;
        rows.push_back(prior_);
        for (int c = 0; c < num_classes(); ++c) rows.push_back(cond_.row(c));
        return ParamVector::from_probabilities(layout(), rows);
    }

    static NaiveBayesModel from_params(const ParamVector& p, int doc_length) {
        auto rows = p.to_probabilities();
        const int C = static_cast<int>(rows.size()) - 1;
        if (C < 1) throw std::invalid_argument("from_params: bad layout");
        const int V = static_cast<int>(rows[1].size());
        Eigen::MatrixXd cond(C, V);
        for (int c = 0; c < C; ++c) cond.row(c) = rows[c + 1];
        return NaiveBayesModel(rows[0], cond, doc_length);
    }

    // log p(x, y), multinomial coefficient omitted
    double log_joint(const std::vector<int>& counts, int y) const {
        if (y < 0 || y >= num_classes()) throw std::invalid_argument("log_joint: label out of range");
        double ll = std::log(prior_[y]);
        for (int v = 0; v < vocab(); ++v)
            if (counts[v] > 0) ll += counts[v] * std::log(cond_(y, v));
        return ll;
    }

    // log p(x) = log sum_y p(x, y)
    double log_marginal(const std::vector<int>& counts) const {
        Eigen::VectorXd terms(num_classes());
        for (int y = 0; y < num_classes(); ++y) terms[y] = log_joint(counts, y);
        return log_sum_exp(terms);
    }

    Eigen::VectorXd posterior(const std::vector<int>& counts) const {
        Eigen::VectorXd terms(num_classes());
        for (int y = 0; y < num_classes(); ++y) terms[y] = log_joint(counts, y);
        const double lz = log_sum_exp(terms);
        for (int y = 0; y < num_classes(); ++y) terms[y] = std::exp(terms[y] - lz);
        return terms;
    }

    // observed-data log-likelihood of one sample (joint if labeled, else marginal)
    double log_observed(const Sample& s) const {
        return s.is_labeled() ? log_joint(s.counts, s.class_label()) : log_marginal(s.counts);
    }

    // Analytic score of the observed-data log-likelihood via the missing-data
    // identity: the gradient equals the expected complete-data score given the
    // observation, mapped through the logit parameterization.
    Eigen::VectorXd score_observed(const Sample& s) const {
        Eigen::VectorXd resp;
        if (s.is_labeled()) {
            resp = Eigen::VectorXd::Zero(num_classes());
            resp[s.class_label()] = 1.0;
        } else {
            resp = posterior(s.counts);
        }
        return score_from_responsibilities(s.counts, resp);
    }

    Eigen::VectorXd score_from_responsibilities(const std::vector<int>& counts,
                                                const Eigen::VectorXd& resp) const {
        const int C = num_classes(), V = vocab();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(layout().dim());
        int total = 0;
        for (int v = 0; v < V; ++v) total += counts[v];
        // prior block: resp_c - pi_c for free categories
        for (int c = 0; c + 1 < C; ++c) g[c] = resp[c] - prior_[c];
        // class-conditional blocks: resp_y * (count_v - N * theta_{y,v})
        int off = C - 1;
        for (int y = 0; y < C; ++y) {
            for (int v = 0; v + 1 < V; ++v)
                g[off + v] = resp[y] * (counts[v] - total * cond_(y, v));
            off += V - 1;
        }
        return g;
    }

    // draws (x, y) from the model and applies the labeling policy; the hidden
    // truth is recorded for evaluation only
    Sample sample(const LabelingPolicy& policy, Rng& rng) const {
        std::vector<double> pri(prior_.data(), prior_.data() + prior_.size());
        const int y = rng.categorical(pri);
        std::vector<int> counts(vocab(), 0);
        std::vector<double> row(vocab());
        for (int v = 0; v < vocab(); ++v) row[v] = cond_(y, v);
        for (int t = 0; t < doc_length_; ++t) counts[rng.categorical(row)]++;
        Sample s;
        s.counts = std::move(counts);
        s.true_labels = {y};
        s.labels = policy.apply(s.true_labels, rng);
        return s;
    }

    Dataset sample_dataset(int n, const LabelingPolicy& policy, Rng& rng) const {
        Dataset d;
        d.kind = Dataset::Kind::BagOfWords;
        d.num_labels = num_classes();
        d.vocab = vocab();
        d.samples.reserve(n);
        for (int i = 0; i < n; ++i) d.samples.push_back(sample(policy, rng));
        return d;
    }

    // argmax posterior, ties toward the lowest class index
    int predict(const std::vector<int>& counts) const {
        Eigen::VectorXd terms(num_classes());
        for (int y = 0; y < num_classes(); ++y) terms[y] = log_joint(counts, y);
        int best = 0;
        for (int y = 1; y < num_classes(); ++y)
            if (terms[y] > terms[best]) best = y;
        return best;
    }

    // Enumerates all (count vector, class) outcomes of the fixed document
    // length with their exact probabilities (multinomial coefficient
    // included). f(counts, y, probability).
    template <typename F>
    void enumerate_joint(F&& f) const {
        std::vector<int> counts(vocab(), 0);
        enumerate_counts(0, doc_length_, counts, [&](const std::vector<int>& c) {
            double lcoef = std::lgamma(doc_length_ + 1.0);
            for (int v = 0; v < vocab(); ++v) lcoef -= std::lgamma(c[v] + 1.0);
            for (int y = 0; y < num_classes(); ++y)
                f(c, y, std::exp(lcoef + log_joint(c, y)));
        });
    }

    std::size_t enumeration_size() const {
        // compositions of doc_length into vocab parts, times classes
        double n = 1.0;
        for (int i = 1; i < vocab(); ++i)
            n *= static_cast<double>(doc_length_ + i) / i;
        return static_cast<std::size_t>(n * num_classes() + 0.5);
    }

private:
    template <typename F>
    void enumerate_counts(int v, int remaining, std::vector<int>& counts, F&& f) const {
        if (v + 1 == vocab()) {
            counts[v] = remaining;
            f(const_cast<const std::vector<int>&>(counts));
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            counts[v] = k;
            enumerate_counts(v + 1, remaining - k, counts, f);
        }
    }

    void check_rows() const {
        auto check = [](const Eigen::VectorXd& row) {
            double s = 0.0;
            for (int i = 0; i < row.size(); ++i) {
                if (!(row[i] > 0.0))
                    throw std::invalid_argument("NaiveBayesModel: probabilities must be strictly positive");
                s += row[i];
            }
            if (std::abs(s - 1.0) > 1e-10)
                throw std::invalid_argument("NaiveBayesModel: row does not sum to 1");
        };
        check(prior_);
        for (int c = 0; c < cond_.rows(); ++c) check(cond_.row(c));
    }

    Eigen::VectorXd prior_;
    Eigen::MatrixXd cond_;
    int doc_length_;
};

inline double nb_log_joint(const NaiveBayesModel& m, const Sample& s) {
    return m.log_joint(s.counts, s.class_label());
}
inline double nb_log_marginal(const NaiveBayesModel& m, const Sample& s) {
    return m.log_marginal(s.counts);
}

} // namespace sslx

#endif
