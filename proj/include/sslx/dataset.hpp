#ifndef SSLX_DATASET_HPP
#define SSLX_DATASET_HPP

#include <stdexcept>
#include <vector>

#include "sslx/policy.hpp"

namespace sslx {

// One observation plus its (possibly partial) label observation.
// Classification samples carry a sparse-free dense count vector over the
// vocabulary and a label observation that is Full or None; sequence samples
// carry a token sequence. true_labels is populated only by simulation and is
// used for evaluation, never by fitting.
struct Sample {
    std::vector<int> counts;      // classification: length V
    std::vector<int> tokens;      // structured: length m
    LabelObservation labels;
    std::vector<int> true_labels; // hidden ground truth (simulation only)

    bool is_sequence() const { return !tokens.empty(); }
    int length() const { return is_sequence() ? static_cast<int>(tokens.size()) : 1; }

    // classification convenience: observed class label, requires Full labels
    int class_label() const {
        if (labels.observed_values.size() != 1)
            throw std::logic_error("Sample: class_label on unlabeled sample");
        return labels.observed_values[0];
    }
    bool is_labeled() const { return !labels.empty(); }
};

struct Dataset {
    enum class Kind { BagOfWords, Sequence };
    Kind kind = Kind::BagOfWords;
    int num_labels = 0; // classes (classification) or states (structured)
    int vocab = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

} // namespace sslx

#endif
