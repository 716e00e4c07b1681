#ifndef SSLX_FIXTURES_HPP
#define SSLX_FIXTURES_HPP

#include <cstdint>

#include "sslx/chain.hpp"
#include "sslx/naive_bayes.hpp"
#include "sslx/rng.hpp"

namespace sslx {

// symmetric-Dirichlet row draw
inline Eigen::VectorXd dirichlet_row(int size, double concentration, Rng& rng) {
    Eigen::VectorXd row(size);
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        row[i] = rng.gamma(concentration) + 1e-12;
        total += row[i];
    }
    return row / total;
}

inline NaiveBayesModel random_naive_bayes(int classes, int vocab, int doc_length,
                                          std::uint64_t seed, double concentration = 1.0) {
    Rng rng(seed);
    Eigen::VectorXd prior = dirichlet_row(classes, concentration, rng);
    Eigen::MatrixXd cond(classes, vocab);
    for (int c = 0; c < classes; ++c) cond.row(c) = dirichlet_row(vocab, concentration, rng);
    return NaiveBayesModel(prior, cond, doc_length);
}

inline ChainModel random_chain(int states, int vocab, std::uint64_t seed,
                               double concentration = 1.0) {
    Rng rng(seed);
    Eigen::VectorXd init = dirichlet_row(states, concentration, rng);
    Eigen::MatrixXd trans(states, states), emit(states, vocab);
    for (int k = 0; k < states; ++k) trans.row(k) = dirichlet_row(states, concentration, rng);
    for (int k = 0; k < states; ++k) emit.row(k) = dirichlet_row(vocab, concentration, rng);
    return ChainModel(init, trans, emit);
}

// Standard fixtures shared by the study harness and the test suites. The
// parameter values are fixed, seeded draws so every run sees the same truth.

inline NaiveBayesModel standard_nb_fixture() {
    return random_naive_bayes(2, 5, 20, 20240817);
}

// small enough to enumerate token-by-token (C=2, V=2, single-token docs)
inline NaiveBayesModel enumerable_nb_fixture() {
    Eigen::VectorXd prior(2);
    prior << 0.35, 0.65;
    Eigen::MatrixXd cond(2, 2);
    cond << 0.8, 0.2,
            0.3, 0.7;
    return NaiveBayesModel(prior, cond, 1);
}

// Nearly identical class-conditionals and single-token documents, so an
// unlabeled document carries almost no class information and revealed
// labels dominate the fit. Used by the two-stage plug-in study.
inline NaiveBayesModel overlap_nb_fixture() {
    Eigen::VectorXd prior(2);
    prior << 0.4, 0.6;
    Eigen::MatrixXd cond(2, 5);
    cond << 0.22, 0.21, 0.20, 0.19, 0.18,
            0.18, 0.19, 0.20, 0.21, 0.22;
    return NaiveBayesModel(prior, cond, 1);
}

inline ChainModel standard_chain_fixture() {
    return random_chain(2, 3, 20240818);
}

// K=2, V=2 chain used with length-3 sequences (64 joint outcomes)
inline ChainModel small_chain_fixture() {
    Eigen::VectorXd init(2);
    init << 0.6, 0.4;
    Eigen::MatrixXd trans(2, 2), emit(2, 2);
    trans << 0.75, 0.25,
             0.3, 0.7;
    emit << 0.85, 0.15,
            0.35, 0.65;
    return ChainModel(init, trans, emit);
}

} // namespace sslx

#endif
