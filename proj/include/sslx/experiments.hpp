#ifndef SSLX_EXPERIMENTS_HPP
#define SSLX_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sslx/asymptotics.hpp"
#include "sslx/estimation.hpp"
#include "sslx/io.hpp"
#include "sslx/parallel.hpp"
#include "sslx/tradeoff.hpp"

namespace sslx {

// Long-form study output: one row per measurement. Grid-level quantities
// (asymptotic traces, costs, frontier flags) use replicate = -1.
struct StudyRow {
    std::string grid_id;
    long n = 0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::string policy_id;
    int replicate = -1;
    std::string metric;
    double value = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;

    std::vector<double> values(const std::string& grid_id, const std::string& metric) const {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.grid_id == grid_id && r.metric == metric && r.replicate >= 0)
                out.push_back(r.value);
        return out;
    }

    std::optional<double> grid_value(const std::string& grid_id, const std::string& metric) const {
        for (const auto& r : rows)
            if (r.grid_id == grid_id && r.metric == metric && r.replicate < 0)
                return r.value;
        return std::nullopt;
    }
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
}

// Spearman rank correlation (average ranks on ties).
inline double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("rank_correlation: bad input sizes");
    auto ranks = [](const std::vector<double>& x) {
        const std::size_t n = x.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    auto ra = ranks(a), rb = ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

// --- Classification study (error surface over n and lambda) -----------------

struct ClassificationStudyConfig {
    NaiveBayesModel fixture;
    std::vector<long> n_grid;
    std::vector<double> lambda_grid;
    int replicates = 20;
    EmConfig em;
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const {
        if (replicates < 1) throw std::invalid_argument("StudyConfig: replicates must be >= 1");
        if (n_grid.empty() || lambda_grid.empty())
            throw std::invalid_argument("StudyConfig: empty grid");
    }
};

// Exact error rate of a classifier under the generating model, by summing
// the probability of every outcome the classifier gets wrong. Free of
// test-sampling noise, so error differences across grid points reflect the
// fits alone.
inline double population_error(const NaiveBayesModel& truth, const NaiveBayesModel& classifier) {
    double err = 0.0;
    truth.enumerate_joint([&](const std::vector<int>& counts, int y, double p) {
        if (classifier.predict(counts) != y) err += p;
    });
    return err;
}

// Per grid point and replicate: sample a training set under the
// all-or-nothing policy, fit, and measure the exact population error rate
// plus trace((theta_hat - theta_0)(theta_hat - theta_0)^T) in the free
// parameterization. The asymptotic trace is computed once per grid point.
inline StudyResult run_classification_study(const ClassificationStudyConfig& cfg) {
    cfg.validate();
    StudyResult out;
    Rng base(cfg.seed);
    const Eigen::VectorXd theta0 = cfg.fixture.params().values();

    int grid_index = 0;
    for (double lambda : cfg.lambda_grid) {
        const AsymptoticReport asym = sigma_classification(
            cfg.fixture, lambda, AsymptoticReport::Method::Enumeration);
        for (long n : cfg.n_grid) {
            const std::string gid = "n" + std::to_string(n) + "_l" + std::to_string(lambda);
            out.rows.push_back({gid, n, lambda, "", -1, "trace_inv", asym.trace_inverse});
            out.rows.push_back({gid, n, lambda, "", -1, "trace_inv_over_n",
                                asym.trace_inverse / double(n)});
            out.rows.push_back({gid, n, lambda, "", -1, "log_trace_asym_var",
                                std::log(asym.trace_inverse / double(n))});
            const LabelingPolicy policy = LabelingPolicy::all_or_nothing(lambda);
            std::vector<double> mse(cfg.replicates), err(cfg.replicates);
            parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
                Rng train_rng = base.split(1000003ULL * grid_index + 2ULL * rep);
                Dataset train = cfg.fixture.sample_dataset(int(n), policy, train_rng);
                EmConfig em = cfg.em;
                em.seed = cfg.seed ^ (7919ULL * grid_index + rep);
                FitResult fit = fit_naive_bayes(train, em);
                NaiveBayesModel est = align_classes(
                    NaiveBayesModel::from_params(fit.estimate, cfg.fixture.doc_length()),
                    cfg.fixture);
                const Eigen::VectorXd diff = est.params().values() - theta0;
                mse[rep] = diff.squaredNorm();
                err[rep] = population_error(cfg.fixture, est);
            });
            for (int rep = 0; rep < cfg.replicates; ++rep) {
                out.rows.push_back({gid, n, lambda, "", rep, "mse_trace", mse[rep]});
                out.rows.push_back({gid, n, lambda, "", rep, "error_rate", err[rep]});
            }
            ++grid_index;
        }
    }
    return out;
}

// --- Structured study (policy comparison for chains) ------------------------

struct StructuredStudyConfig {
    ChainModel fixture;
    LengthDistribution lengths;
    std::vector<std::pair<std::string, LabelingPolicy>> policies;
    std::vector<long> n_grid;
    int replicates = 20;
    long test_size = 500;
    EmConfig em;
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const {
        if (replicates < 1) throw std::invalid_argument("StudyConfig: replicates must be >= 1");
        if (n_grid.empty() || policies.empty())
            throw std::invalid_argument("StudyConfig: empty grid");
    }
};

// Held-out per-sequence perplexity: exp of the negative mean per-sequence
// complete-data log-likelihood on fully labeled test sequences.
inline StudyResult run_structured_study(const StructuredStudyConfig& cfg) {
    cfg.validate();
    StudyResult out;
    Rng base(cfg.seed);
    const LabelingPolicy test_policy = LabelingPolicy::all_or_nothing(1.0);
    const int K = cfg.fixture.num_states();

    int grid_index = 0;
    for (const auto& [pid, policy] : cfg.policies) {
        const double unit_cost = policy.cost(cfg.lengths);
        for (long n : cfg.n_grid) {
            const std::string gid = "n" + std::to_string(n) + "_" + pid;
            out.rows.push_back({gid, n, std::numeric_limits<double>::quiet_NaN(), pid, -1,
                                "cost", unit_cost * double(n)});
            std::vector<double> perplexity(cfg.replicates);
            parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
                Rng train_rng = base.split(1000003ULL * grid_index + 2ULL * rep);
                Rng test_rng = base.split(1000003ULL * grid_index + 2ULL * rep + 1);
                Dataset train =
                    cfg.fixture.sample_dataset(int(n), policy, cfg.lengths, train_rng);
                EmConfig em = cfg.em;
                em.seed = cfg.seed ^ (7919ULL * grid_index + rep);
                FitResult fit = fit_chain(train, K, em);
                ChainModel est =
                    ChainModel::from_params(fit.estimate, K, cfg.fixture.vocab());

                Dataset test =
                    cfg.fixture.sample_dataset(int(cfg.test_size), test_policy, cfg.lengths, test_rng);
                double ll = 0.0;
                for (const auto& s : test.samples)
                    ll += est.log_complete(s.tokens, s.labels.observed_values);
                perplexity[rep] = std::exp(-ll / double(cfg.test_size));
            });
            for (int rep = 0; rep < cfg.replicates; ++rep)
                out.rows.push_back({gid, n, std::numeric_limits<double>::quiet_NaN(), pid, rep,
                                    "per_sequence_perplexity", perplexity[rep]});
            ++grid_index;
        }
    }
    return out;
}

// --- Achievable-region study -------------------------------------------------

// Emits a (cost, error) scatter over the (n, lambda) grid with
// frontier/dominated flags computed from replicate medians.
inline StudyResult run_region_study(const ClassificationStudyConfig& cfg) {
    StudyResult study = run_classification_study(cfg);
    std::vector<CandidateEvaluation> evals;
    std::vector<std::string> gids;
    for (double lambda : cfg.lambda_grid)
        for (long n : cfg.n_grid) {
            const std::string gid = "n" + std::to_string(n) + "_l" + std::to_string(lambda);
            CandidateEvaluation e;
            e.cost = lambda * double(n);
            e.error = median(study.values(gid, "mse_trace"));
            evals.push_back(e);
            gids.push_back(gid);
            study.rows.push_back({gid, n, lambda, "", -1, "cost", e.cost});
            study.rows.push_back({gid, n, lambda, "", -1, "error_median", e.error});
        }
    auto flags = frontier_flags(evals);
    for (std::size_t i = 0; i < flags.size(); ++i) {
        long n = 0;
        double lambda = 0.0;
        for (const auto& r : study.rows)
            if (r.grid_id == gids[i]) { n = r.n; lambda = r.lambda; break; }
        study.rows.push_back({gids[i], n, lambda, "", -1, "on_frontier", flags[i] ? 1.0 : 0.0});
    }
    return study;
}

// --- Two-stage study ----------------------------------------------------------

struct TwoStageStudyConfig {
    NaiveBayesModel fixture;
    long pool_size = 2000;
    std::vector<int> r_grid;
    int replicates = 20;
    double reference_lambda = 0.5;
    EmConfig em;
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const {
        if (replicates < 1) throw std::invalid_argument("StudyConfig: replicates must be >= 1");
        if (r_grid.empty()) throw std::invalid_argument("StudyConfig: empty r grid");
        for (int r : r_grid)
            if (r < 1 || r > pool_size)
                throw std::invalid_argument("StudyConfig: r outside [1, pool]");
    }
};

// Per r and replicate: |trace(Sigma_hat at theta') - trace(Sigma at theta_0)|
// where theta' is the stage-1 plug-in fit on r labeled + (pool - r) unlabeled.
inline StudyResult run_two_stage_study(const TwoStageStudyConfig& cfg) {
    cfg.validate();
    StudyResult out;
    const double oracle_trace =
        sigma_classification(cfg.fixture, cfg.reference_lambda,
                             AsymptoticReport::Method::Enumeration)
            .trace_inverse;
    Rng base(cfg.seed);
    const LabelingPolicy hide_all{{{EmptySelector{}, 1.0}}};
    const int max_r = *std::max_element(cfg.r_grid.begin(), cfg.r_grid.end());

    // Paired design: every replicate draws one pool and one reveal order
    // shared by all r values, and each r reveals a prefix of that order.
    // Pool and selection noise then cancel when medians are compared
    // across r, leaving the effect of the label budget itself.
    std::vector<std::vector<double>> abs_err(cfg.r_grid.size(),
                                             std::vector<double>(cfg.replicates));
    parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
        Rng pool_rng = base.split(2ULL * rep);
        Rng pick_rng = base.split(2ULL * rep + 1);
        const Dataset pool = cfg.fixture.sample_dataset(int(cfg.pool_size), hide_all, pool_rng);
        const auto order = pick_rng.sample_without_replacement(pool.size(), std::size_t(max_r));
        for (std::size_t ri = 0; ri < cfg.r_grid.size(); ++ri) {
            Dataset revealed = pool;
            for (int i = 0; i < cfg.r_grid[ri]; ++i) {
                Sample& s = revealed.samples[order[i]];
                s.labels = LabelObservation::full(s.true_labels);
            }
            EmConfig em = cfg.em;
            em.seed = cfg.seed ^ (104729ULL * rep);
            FitResult fit = fit_naive_bayes(revealed, em);
            NaiveBayesModel plug_in =
                NaiveBayesModel::from_params(fit.estimate, cfg.fixture.doc_length());
            const double est_trace =
                sigma_classification(plug_in, cfg.reference_lambda,
                                     AsymptoticReport::Method::Enumeration)
                    .trace_inverse;
            abs_err[ri][rep] = std::abs(est_trace - oracle_trace);
        }
    });
    for (std::size_t ri = 0; ri < cfg.r_grid.size(); ++ri) {
        const std::string gid = "r" + std::to_string(cfg.r_grid[ri]);
        out.rows.push_back({gid, cfg.pool_size, cfg.reference_lambda, "", -1, "oracle_trace",
                            oracle_trace});
        for (int rep = 0; rep < cfg.replicates; ++rep)
            out.rows.push_back({gid, cfg.pool_size, cfg.reference_lambda, "", rep,
                                "trace_abs_error", abs_err[ri][rep]});
    }
    return out;
}

// --- Output ------------------------------------------------------------------

// schema v1: grid_id,n,lambda,policy,replicate,metric,value
inline void write_study_csv(const StudyResult& study, std::ostream& os) {
    os << "grid_id,n,lambda,policy,replicate,metric,value\n";
    for (const auto& r : study.rows) {
        os << r.grid_id << ',' << r.n << ',';
        if (std::isnan(r.lambda))
            os << "";
        else
            os << detail::fmt_double(r.lambda);
        os << ',' << r.policy_id << ',' << r.replicate << ',' << r.metric << ','
           << detail::fmt_double(r.value) << '\n';
    }
}

} // namespace sslx

#endif
