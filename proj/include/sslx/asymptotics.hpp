#ifndef SSLX_ASYMPTOTICS_HPP
#define SSLX_ASYMPTOTICS_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sslx/chain.hpp"
#include "sslx/naive_bayes.hpp"
#include "sslx/policy.hpp"
#include "sslx/rng.hpp"

namespace sslx {

struct MonteCarloInfo {
    long samples = 0;
    double max_entry_standard_error = 0.0;
};

// Policy-weighted score-variance matrix Sigma and the asymptotic covariance
// of sqrt(n)(theta_hat - theta_0), which is its inverse. The inverse is
// absent when Sigma is numerically rank deficient.
struct AsymptoticReport {
    enum class Method { Enumeration, MonteCarlo };

    Eigen::MatrixXd sigma;
    std::optional<Eigen::MatrixXd> inverse_sigma;
    Eigen::VectorXd eigenvalues;           // ascending
    bool rank_deficient = false;
    Eigen::MatrixXd null_directions;       // columns; empty unless deficient
    double trace_inverse = std::numeric_limits<double>::quiet_NaN();
    double log_trace_inverse = std::numeric_limits<double>::quiet_NaN();
    Method method = Method::Enumeration;
    std::optional<MonteCarloInfo> monte_carlo;
};

// smallest/largest eigenvalue ratio below this flags rank deficiency
inline constexpr double kRankTolerance = 1e-8;

namespace detail {

// Symmetrize, eigendecompose, and fill in the inverse when full rank.
// One factorization serves both the PSD check and the inversion.
inline AsymptoticReport finalize_report(Eigen::MatrixXd sigma, AsymptoticReport::Method method,
                                        std::optional<MonteCarloInfo> mc) {
    AsymptoticReport rep;
    rep.method = method;
    rep.monte_carlo = std::move(mc);
    rep.sigma = 0.5 * (sigma + sigma.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.sigma);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("AsymptoticReport: eigendecomposition failed");
    rep.eigenvalues = es.eigenvalues();
    const int r = static_cast<int>(rep.sigma.rows());
    const double largest = rep.eigenvalues[r - 1];
    const double smallest = rep.eigenvalues[0];
    rep.rank_deficient = !(largest > 0.0) || smallest < kRankTolerance * largest;
    if (rep.rank_deficient) {
        int nullity = 0;
        while (nullity < r && rep.eigenvalues[nullity] < kRankTolerance * std::max(largest, 0.0))
            ++nullity;
        nullity = std::max(nullity, 1);
        rep.null_directions = es.eigenvectors().leftCols(nullity);
    } else {
        Eigen::VectorXd inv_ev = rep.eigenvalues.cwiseInverse();
        rep.inverse_sigma =
            es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
        rep.trace_inverse = inv_ev.sum();
        rep.log_trace_inverse = std::log(rep.trace_inverse);
    }
    return rep;
}

constexpr std::size_t kMaxEnumeration = 4'000'000;

struct MomentAccumulator {
    explicit MomentAccumulator(int dim)
        : weight(0.0), mean(Eigen::VectorXd::Zero(dim)),
          second(Eigen::MatrixXd::Zero(dim, dim)) {}
    double weight;
    Eigen::VectorXd mean;
    Eigen::MatrixXd second;

    void add(const Eigen::VectorXd& v, double w) {
        weight += w;
        mean += w * v;
        second += w * (v * v.transpose());
    }

    // covariance given total weight normalizes to `total`
    Eigen::MatrixXd covariance(double total) const {
        Eigen::VectorXd m = mean / total;
        return second / total - m * m.transpose();
    }
};

} // namespace detail

// Prop.-2 matrix for classification:
//   Sigma = lambda * Var(complete-data score) + (1 - lambda) * Var(marginal score)
inline AsymptoticReport sigma_classification(const NaiveBayesModel& model, double lambda,
                                             AsymptoticReport::Method method,
                                             long mc_samples = 100'000,
                                             std::uint64_t seed = 17) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("sigma_classification: lambda outside [0, 1]");
    const int r = model.layout().dim();

    if (method == AsymptoticReport::Method::Enumeration) {
        if (model.enumeration_size() > detail::kMaxEnumeration)
            throw std::invalid_argument(
                "sigma_classification: outcome space too large for enumeration");
        detail::MomentAccumulator complete(r), marginal(r);
        model.enumerate_joint([&](const std::vector<int>& counts, int y, double p) {
            Eigen::VectorXd resp = Eigen::VectorXd::Zero(model.num_classes());
            resp[y] = 1.0;
            complete.add(model.score_from_responsibilities(counts, resp), p);
            // summing p(x, y) over y recovers the marginal weight p(x)
            marginal.add(model.score_from_responsibilities(counts, model.posterior(counts)), p);
        });
        Eigen::MatrixXd sigma = lambda * complete.covariance(1.0) +
                                (1.0 - lambda) * marginal.covariance(1.0);
        return detail::finalize_report(std::move(sigma), method, std::nullopt);
    }

    Rng rng(seed);
    const LabelingPolicy keep_all = LabelingPolicy::all_or_nothing(1.0);
    detail::MomentAccumulator complete(r), marginal(r);
    Eigen::MatrixXd se_sq = Eigen::MatrixXd::Zero(r, r); // E[(outer entry)^2]
    for (long i = 0; i < mc_samples; ++i) {
        Sample s = model.sample(keep_all, rng);
        Eigen::VectorXd resp = Eigen::VectorXd::Zero(model.num_classes());
        resp[s.true_labels[0]] = 1.0;
        Eigen::VectorXd v1 = model.score_from_responsibilities(s.counts, resp);
        Eigen::VectorXd v2 =
            model.score_from_responsibilities(s.counts, model.posterior(s.counts));
        complete.add(v1, 1.0);
        marginal.add(v2, 1.0);
        Eigen::MatrixXd contrib =
            lambda * (v1 * v1.transpose()) + (1.0 - lambda) * (v2 * v2.transpose());
        se_sq += contrib.cwiseProduct(contrib);
    }
    const double n = static_cast<double>(mc_samples);
    Eigen::MatrixXd sigma =
        lambda * complete.covariance(n) + (1.0 - lambda) * marginal.covariance(n);
    Eigen::MatrixXd mixed_mean =
        (lambda * complete.second + (1.0 - lambda) * marginal.second) / n;
    Eigen::MatrixXd entry_var = se_sq / n - mixed_mean.cwiseProduct(mixed_mean);
    MonteCarloInfo info{mc_samples,
                        std::sqrt(std::max(entry_var.maxCoeff(), 0.0) / n)};
    return detail::finalize_report(std::move(sigma), method, info);
}

// Prop.-4 matrix for structured prediction:
//   Sigma = E_q(m) { sum_j lambda_j Var(score of log p({Y_i : i in S_j^m}, X)) }
inline AsymptoticReport sigma_structured(const ChainModel& model, const LabelingPolicy& policy,
                                         const LengthDistribution& lengths,
                                         AsymptoticReport::Method method,
                                         long mc_samples = 100'000,
                                         std::uint64_t seed = 17) {
    policy.validate();
    lengths.validate();
    const int r = model.layout().dim();
    const int K = model.num_states(), V = model.vocab();

    if (method == AsymptoticReport::Method::Enumeration) {
        if (!policy.deterministic_selectors())
            throw std::invalid_argument(
                "sigma_structured: enumeration requires deterministic selectors");
        double outcomes = 0.0;
        for (int m : lengths.support) outcomes += std::pow(double(K) * V, m);
        if (outcomes > double(detail::kMaxEnumeration))
            throw std::invalid_argument(
                "sigma_structured: outcome space too large for enumeration");

        Rng unused(0);
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(r, r);
        for (std::size_t mi = 0; mi < lengths.support.size(); ++mi) {
            const int m = lengths.support[mi];
            const double qm = lengths.probabilities[mi];
            if (qm == 0.0) continue;
            for (const auto& comp : policy.components) {
                if (comp.weight == 0.0) continue;
                std::vector<int> sel = selector_positions(comp.selector, m, unused);
                detail::MomentAccumulator acc(r);
                model.enumerate_joint(m, [&](const std::vector<int>& x,
                                             const std::vector<int>& y, double p) {
                    std::vector<int> vals(sel.size());
                    for (std::size_t i = 0; i < sel.size(); ++i) vals[i] = y[sel[i]];
                    LabelObservation obs =
                        sel.empty() ? LabelObservation::none()
                                    : LabelObservation::subset(sel, std::move(vals));
                    acc.add(model.score_observed(x, obs), p);
                });
                sigma += qm * comp.weight * acc.covariance(1.0);
            }
        }
        return detail::finalize_report(std::move(sigma), method, std::nullopt);
    }

    // Monte Carlo: draw (m, selector, x, y) jointly; per-cell covariances are
    // weighted by empirical cell frequencies.
    Rng rng(seed);
    std::map<std::pair<int, int>, detail::MomentAccumulator> cells;
    std::vector<double> weights;
    for (const auto& c : policy.components) weights.push_back(c.weight);
    Eigen::MatrixXd se_sq = Eigen::MatrixXd::Zero(r, r);
    Eigen::MatrixXd second_sum = Eigen::MatrixXd::Zero(r, r);
    for (long i = 0; i < mc_samples; ++i) {
        const int m = lengths.sample(rng);
        const int j = rng.categorical(weights);
        Sample s = model.sample(m, LabelingPolicy{{{EmptySelector{}, 1.0}}}, rng);
        std::vector<int> sel = selector_positions(policy.components[j].selector, m, rng);
        std::vector<int> vals(sel.size());
        for (std::size_t t = 0; t < sel.size(); ++t) vals[t] = s.true_labels[sel[t]];
        LabelObservation obs = sel.empty() ? LabelObservation::none()
                                           : LabelObservation::subset(sel, std::move(vals));
        Eigen::VectorXd v = model.score_observed(s.tokens, obs);
        auto [it, fresh] = cells.try_emplace({m, j}, r);
        it->second.add(v, 1.0);
        Eigen::MatrixXd outer = v * v.transpose();
        second_sum += outer;
        se_sq += outer.cwiseProduct(outer);
    }
    const double n = static_cast<double>(mc_samples);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(r, r);
    for (const auto& [key, acc] : cells)
        sigma += (acc.weight / n) * acc.covariance(acc.weight);
    Eigen::MatrixXd mean_outer = second_sum / n;
    Eigen::MatrixXd entry_var = se_sq / n - mean_outer.cwiseProduct(mean_outer);
    MonteCarloInfo info{mc_samples,
                        std::sqrt(std::max(entry_var.maxCoeff(), 0.0) / n)};
    return detail::finalize_report(std::move(sigma), method, info);
}

// mu(theta) = -lambda D(p0(X,Y) || p(X,Y)) - (1 - lambda) D(p0(X) || p(X)),
// computed exactly by enumeration; 0 iff the observed distributions agree.
inline double kl_gap(const NaiveBayesModel& truth, const NaiveBayesModel& candidate,
                     double lambda) {
    if (truth.num_classes() != candidate.num_classes() || truth.vocab() != candidate.vocab() ||
        truth.doc_length() != candidate.doc_length())
        throw std::invalid_argument("kl_gap: model shapes differ");
    if (truth.enumeration_size() > detail::kMaxEnumeration)
        throw std::invalid_argument("kl_gap: outcome space too large for enumeration");
    double d_joint = 0.0, d_marginal = 0.0;
    std::vector<double> p0_joint(truth.num_classes()), p_joint(truth.num_classes());
    truth.enumerate_joint([&](const std::vector<int>& counts, int y, double p0) {
        // recompute the candidate weight for the same outcome
        double lcoef = std::lgamma(truth.doc_length() + 1.0);
        for (std::size_t v = 0; v < counts.size(); ++v) lcoef -= std::lgamma(counts[v] + 1.0);
        const double p = std::exp(lcoef + candidate.log_joint(counts, y));
        if (p0 > 0.0) d_joint += p0 * (std::log(p0) - std::log(p));
        p0_joint[y] = p0;
        p_joint[y] = p;
        if (y + 1 == truth.num_classes()) {
            double m0 = 0.0, m1 = 0.0;
            for (int c = 0; c < truth.num_classes(); ++c) {
                m0 += p0_joint[c];
                m1 += p_joint[c];
            }
            if (m0 > 0.0) d_marginal += m0 * (std::log(m0) - std::log(m1));
        }
    });
    return -lambda * d_joint - (1.0 - lambda) * d_marginal;
}

// Structured analogue: the policy- and length-weighted sum of KL divergences
// between the distributions of ({Y_i : i in S_j^m}, X).
inline double kl_gap(const ChainModel& truth, const ChainModel& candidate,
                     const LabelingPolicy& policy, const LengthDistribution& lengths) {
    if (truth.num_states() != candidate.num_states() || truth.vocab() != candidate.vocab())
        throw std::invalid_argument("kl_gap: model shapes differ");
    policy.validate();
    lengths.validate();
    if (!policy.deterministic_selectors())
        throw std::invalid_argument("kl_gap: enumeration requires deterministic selectors");
    const int K = truth.num_states(), V = truth.vocab();

    Rng unused(0);
    double gap = 0.0;
    for (std::size_t mi = 0; mi < lengths.support.size(); ++mi) {
        const int m = lengths.support[mi];
        const double qm = lengths.probabilities[mi];
        if (qm == 0.0) continue;
        const double x_outcomes = std::pow(double(V), m);
        for (const auto& comp : policy.components) {
            if (comp.weight == 0.0) continue;
            std::vector<int> sel = selector_positions(comp.selector, m, unused);
            const double y_outcomes = std::pow(double(K), double(sel.size()));
            if (x_outcomes * y_outcomes > double(detail::kMaxEnumeration))
                throw std::invalid_argument("kl_gap: outcome space too large for enumeration");
            double d = 0.0;
            // iterate token sequences and observed-label assignments
            std::vector<int> x(m, 0), ys(sel.size(), 0);
            auto next = [](std::vector<int>& idx, int base) {
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    if (++idx[i] < base) return true;
                    idx[i] = 0;
                }
                return idx.empty() ? false : false;
            };
            bool more_x = true;
            while (more_x) {
                bool more_y = true;
                std::fill(ys.begin(), ys.end(), 0);
                while (more_y) {
                    LabelObservation obs =
                        sel.empty() ? LabelObservation::none()
                                    : LabelObservation::subset(sel, ys);
                    const double p0 = std::exp(truth.log_observed(x, obs));
                    const double p1 = std::exp(candidate.log_observed(x, obs));
                    if (p0 > 0.0) d += p0 * (std::log(p0) - std::log(p1));
                    more_y = next(ys, K);
                    if (sel.empty()) break;
                }
                more_x = next(x, V);
            }
            gap -= qm * comp.weight * d;
        }
    }
    return gap;
}

enum class IdentifiabilityStatus { Identifiable, LocallyNonIdentifiable, Inconclusive };

struct IdentifiabilityReport {
    IdentifiabilityStatus status = IdentifiabilityStatus::Inconclusive;
    Eigen::MatrixXd null_directions; // columns; populated when locally non-identifiable
};

// Numeric rank test on Sigma. Zero-cost policies reveal no labels, so the
// rank test cannot see discrete label-permutation failures; those come back
// Inconclusive by construction.
inline IdentifiabilityReport identifiability_diagnostic(const ChainModel& model,
                                                        const LabelingPolicy& policy,
                                                        const LengthDistribution& lengths) {
    IdentifiabilityReport rep;
    if (policy.cost(lengths) == 0.0) {
        rep.status = IdentifiabilityStatus::Inconclusive;
        return rep;
    }
    AsymptoticReport a =
        sigma_structured(model, policy, lengths, AsymptoticReport::Method::Enumeration);
    if (a.rank_deficient) {
        rep.status = IdentifiabilityStatus::LocallyNonIdentifiable;
        rep.null_directions = a.null_directions;
    } else {
        rep.status = IdentifiabilityStatus::Identifiable;
    }
    return rep;
}

inline IdentifiabilityReport identifiability_diagnostic(const NaiveBayesModel& model,
                                                        double lambda) {
    IdentifiabilityReport rep;
    if (lambda == 0.0) {
        rep.status = IdentifiabilityStatus::Inconclusive;
        return rep;
    }
    AsymptoticReport a =
        sigma_classification(model, lambda, AsymptoticReport::Method::Enumeration);
    if (a.rank_deficient) {
        rep.status = IdentifiabilityStatus::LocallyNonIdentifiable;
        rep.null_directions = a.null_directions;
    } else {
        rep.status = IdentifiabilityStatus::Identifiable;
    }
    return rep;
}

} // namespace sslx

#endif
