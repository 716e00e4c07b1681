#include <doctest.h>

#include <cmath>

#include "sslx/asymptotics.hpp"
#include "sslx/fixtures.hpp"

using namespace sslx;

namespace {

// FD Jacobian column i of the analytic score, used as the Hessian oracle
Eigen::MatrixXd fd_score_jacobian_nb(const NaiveBayesModel& m, const std::vector<int>& counts,
                                     bool complete, int y, double h = 1e-4) {
    const ParamVector p = m.params();
    const int r = p.dim();
    Eigen::MatrixXd J(r, r);
    for (int i = 0; i < r; ++i) {
        Eigen::VectorXd up = p.values(), dn = p.values();
        up[i] += h;
        dn[i] -= h;
        auto mu = NaiveBayesModel::from_params(ParamVector(p.layout(), up), m.doc_length());
        auto md = NaiveBayesModel::from_params(ParamVector(p.layout(), dn), m.doc_length());
        Eigen::VectorXd su, sd;
        if (complete) {
            Eigen::VectorXd resp = Eigen::VectorXd::Zero(m.num_classes());
            resp[y] = 1.0;
            su = mu.score_from_responsibilities(counts, resp);
            sd = md.score_from_responsibilities(counts, resp);
        } else {
            su = mu.score_from_responsibilities(counts, mu.posterior(counts));
            sd = md.score_from_responsibilities(counts, md.posterior(counts));
        }
        J.col(i) = (su - sd) / (2 * h);
    }
    return J;
}

double frob_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / b.norm();
}

} // namespace

TEST_CASE("score variance equals the negative expected Hessian") {
    NaiveBayesModel m = enumerable_nb_fixture();
    const double lambda = 0.5;
    const int r = m.layout().dim();
    Eigen::MatrixXd neg_hessian = Eigen::MatrixXd::Zero(r, r);
    m.enumerate_joint([&](const std::vector<int>& c, int y, double p) {
        neg_hessian -= p * (lambda * fd_score_jacobian_nb(m, c, true, y) +
                            (1.0 - lambda) * fd_score_jacobian_nb(m, c, false, y));
    });
    AsymptoticReport rep =
        sigma_classification(m, lambda, AsymptoticReport::Method::Enumeration);
    CHECK(frob_rel(rep.sigma, neg_hessian) < 1e-5);
}

TEST_CASE("classification sigma: enumeration and Monte Carlo agree") {
    NaiveBayesModel m = standard_nb_fixture();
    AsymptoticReport en = sigma_classification(m, 0.5, AsymptoticReport::Method::Enumeration);
    AsymptoticReport mc =
        sigma_classification(m, 0.5, AsymptoticReport::Method::MonteCarlo, 60000, 913);
    REQUIRE(mc.monte_carlo.has_value());
    CHECK(mc.monte_carlo->samples == 60000);
    const double tol = 5.0 * mc.monte_carlo->max_entry_standard_error + 1e-9;
    CHECK((en.sigma - mc.sigma).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("structured sigma: enumeration and Monte Carlo agree") {
    ChainModel m = small_chain_fixture();
    const LengthDistribution lens = LengthDistribution::fixed(3);
    AsymptoticReport en = sigma_structured(m, LabelingPolicy::thirds(), lens,
                                           AsymptoticReport::Method::Enumeration);
    AsymptoticReport mc = sigma_structured(m, LabelingPolicy::thirds(), lens,
                                           AsymptoticReport::Method::MonteCarlo, 60000, 914);
    REQUIRE(mc.monte_carlo.has_value());
    const double tol = 5.0 * mc.monte_carlo->max_entry_standard_error + 1e-9;
    CHECK((en.sigma - mc.sigma).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("sigma is linear in lambda") {
    NaiveBayesModel m = enumerable_nb_fixture();
    auto s = [&](double l) {
        return sigma_classification(m, l, AsymptoticReport::Method::Enumeration).sigma;
    };
    Eigen::MatrixXd expect = 0.3 * s(1.0) + 0.7 * s(0.0);
    CHECK((s(0.3) - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("more labels never increase the asymptotic variance") {
    NaiveBayesModel m = enumerable_nb_fixture();
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
        AsymptoticReport rep =
            sigma_classification(m, 0.1 * i, AsymptoticReport::Method::Enumeration);
        REQUIRE_FALSE(rep.rank_deficient);
        CHECK(rep.trace_inverse <= prev + 1e-9);
        CHECK(rep.log_trace_inverse == doctest::Approx(std::log(rep.trace_inverse)));
        prev = rep.trace_inverse;
    }
}

TEST_CASE("inverse sigma really inverts sigma") {
    NaiveBayesModel m = standard_nb_fixture();
    AsymptoticReport rep = sigma_classification(m, 0.7, AsymptoticReport::Method::Enumeration);
    REQUIRE(rep.inverse_sigma.has_value());
    const int r = int(rep.sigma.rows());
    CHECK((rep.sigma * (*rep.inverse_sigma) - Eigen::MatrixXd::Identity(r, r))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
    CHECK(rep.trace_inverse == doctest::Approx(rep.inverse_sigma->trace()).epsilon(1e-10));
}

TEST_CASE("population likelihood gap is zero only at the truth") {
    NaiveBayesModel truth = enumerable_nb_fixture();
    CHECK(kl_gap(truth, truth, 0.5) == 0.0);
    CHECK(kl_gap(truth, truth, 0.0) == 0.0);

    Rng rng(400);
    for (int i = 0; i < 30; ++i) {
        NaiveBayesModel candidate = random_naive_bayes(2, 2, 1, 1000 + i);
        CHECK(kl_gap(truth, candidate, 0.5) < -1e-12);
    }
}

TEST_CASE("with no labels a class swap leaves the gap at zero") {
    NaiveBayesModel truth = enumerable_nb_fixture();
    Eigen::VectorXd prior(2);
    prior << truth.prior()[1], truth.prior()[0];
    Eigen::MatrixXd cond(2, 2);
    cond.row(0) = truth.conditionals().row(1);
    cond.row(1) = truth.conditionals().row(0);
    NaiveBayesModel swapped(prior, cond, truth.doc_length());
    CHECK(kl_gap(truth, swapped, 0.0) == 0.0);
    // any labeling weight separates the swap from the truth
    CHECK(kl_gap(truth, swapped, 0.5) < -1e-6);
}

TEST_CASE("structured likelihood gap behaves like the classification one") {
    ChainModel truth = small_chain_fixture();
    const LengthDistribution lens = LengthDistribution::fixed(3);
    CHECK(kl_gap(truth, truth, LabelingPolicy::thirds(), lens) == 0.0);
    for (int i = 0; i < 10; ++i) {
        ChainModel candidate = random_chain(2, 2, 2000 + i);
        CHECK(kl_gap(truth, candidate, LabelingPolicy::thirds(), lens) < -1e-12);
    }
}

TEST_CASE("identifiability diagnostic distinguishes the three cases") {
    NaiveBayesModel nb = enumerable_nb_fixture();
    CHECK(identifiability_diagnostic(nb, 0.5).status == IdentifiabilityStatus::Identifiable);
    CHECK(identifiability_diagnostic(nb, 0.0).status == IdentifiabilityStatus::Inconclusive);

    // symmetric chain whose states are interchangeable beyond position 0:
    // uniform start, uniform transitions, identical emission rows
    Eigen::VectorXd init(2);
    init << 0.5, 0.5;
    Eigen::MatrixXd trans(2, 2), emit(2, 2);
    trans << 0.5, 0.5, 0.5, 0.5;
    emit << 0.7, 0.3, 0.7, 0.3;
    ChainModel degenerate(init, trans, emit);
    LabelingPolicy first_only;
    first_only.components.push_back(
        {ContiguousWindow{1, ContiguousWindow::Placement::Prefix}, 1.0});
    auto rep = identifiability_diagnostic(degenerate, first_only,
                                          LengthDistribution::fixed(3));
    CHECK(rep.status == IdentifiabilityStatus::LocallyNonIdentifiable);
    CHECK(rep.null_directions.cols() >= 1);

    LabelingPolicy nothing;
    nothing.components.push_back({EmptySelector{}, 1.0});
    CHECK(identifiability_diagnostic(small_chain_fixture(), nothing,
                                     LengthDistribution::fixed(3))
              .status == IdentifiabilityStatus::Inconclusive);
    CHECK(identifiability_diagnostic(small_chain_fixture(), LabelingPolicy::thirds(),
                                     LengthDistribution::fixed(3))
              .status == IdentifiabilityStatus::Identifiable);
}

TEST_CASE("enumeration refuses random selectors and oversized spaces") {
    ChainModel m = small_chain_fixture();
    LabelingPolicy random_window;
    random_window.components.push_back(
        {ContiguousWindow{1, ContiguousWindow::Placement::UniformRandom}, 1.0});
    CHECK_THROWS_AS(sigma_structured(m, random_window, LengthDistribution::fixed(3),
                                     AsymptoticReport::Method::Enumeration),
                    std::invalid_argument);
    CHECK_THROWS_AS(sigma_structured(m, LabelingPolicy::thirds(),
                                     LengthDistribution::fixed(25),
                                     AsymptoticReport::Method::Enumeration),
                    std::invalid_argument);
    CHECK_THROWS_AS(sigma_classification(standard_nb_fixture(), 1.5,
                                         AsymptoticReport::Method::Enumeration),
                    std::invalid_argument);
}
