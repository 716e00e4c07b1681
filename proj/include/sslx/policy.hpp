#ifndef SSLX_POLICY_HPP
#define SSLX_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sslx/rng.hpp"

namespace sslx {

// Which labels of a sample were revealed. Positions are 0-based and sorted.
// Full and None are canonical shorthands; observed_values holds the label at
// each observed position (parallel to observed_positions).
struct LabelObservation {
    enum class Kind { Full, None, Subset };
    Kind kind = Kind::None;
    std::vector<int> observed_positions;
    std::vector<int> observed_values;

    static LabelObservation full(std::vector<int> values) {
        LabelObservation o;
        o.kind = Kind::Full;
        o.observed_values = std::move(values);
        o.observed_positions.resize(o.observed_values.size());
        for (std::size_t i = 0; i < o.observed_positions.size(); ++i)
            o.observed_positions[i] = static_cast<int>(i);
        return o;
    }
    static LabelObservation none() { return LabelObservation{}; }
    static LabelObservation subset(std::vector<int> positions, std::vector<int> values) {
        if (positions.size() != values.size())
            throw std::invalid_argument("LabelObservation: positions/values length mismatch");
        LabelObservation o;
        o.kind = Kind::Subset;
        o.observed_positions = std::move(positions);
        o.observed_values = std::move(values);
        return o;
    }

    bool fully_observed(int length) const {
        return kind == Kind::Full ||
               static_cast<int>(observed_positions.size()) == length;
    }
    bool empty() const { return observed_positions.empty(); }

    // validates against a sequence length and a label alphabet size
    void validate(int length, int num_labels) const {
        int prev = -1;
        for (std::size_t i = 0; i < observed_positions.size(); ++i) {
            int p = observed_positions[i];
            if (p <= prev) throw std::invalid_argument("LabelObservation: positions not strictly ascending");
            if (p < 0 || p >= length) throw std::invalid_argument("LabelObservation: position out of range");
            if (observed_values[i] < 0 || observed_values[i] >= num_labels)
                throw std::invalid_argument("LabelObservation: label value out of range");
            prev = p;
        }
    }

    bool operator==(const LabelObservation& o) const {
        return observed_positions == o.observed_positions && observed_values == o.observed_values;
    }
};

// Deterministic label-subset selectors (the chi_j in the policy mixture).
struct FullSelector {};
struct EmptySelector {};
struct PrefixFraction {
    double fraction = 0.0; // floor(fraction * m) positions
};
struct ContiguousWindow {
    enum class Placement { Prefix, UniformRandom };
    int length = 1;
    Placement placement = Placement::Prefix;
};
struct ExplicitIndexSet {
    // 0-based positions per sequence length; lengths not listed select nothing
    std::map<int, std::vector<int>> positions_by_length;
};

using Selector = std::variant<FullSelector, EmptySelector, PrefixFraction,
                              ContiguousWindow, ExplicitIndexSet>;

// Positions selected on a length-m sequence. Only the random-start window
// variant consumes randomness; every other selector ignores rng.
inline std::vector<int> selector_positions(const Selector& sel, int m, Rng& rng) {
    std::vector<int> pos;
    if (std::holds_alternative<FullSelector>(sel)) {
        pos.resize(m);
        for (int i = 0; i < m; ++i) pos[i] = i;
    } else if (std::holds_alternative<EmptySelector>(sel)) {
        // nothing
    } else if (const auto* pf = std::get_if<PrefixFraction>(&sel)) {
        int k = static_cast<int>(std::floor(pf->fraction * m));
        k = std::clamp(k, 0, m);
        pos.resize(k);
        for (int i = 0; i < k; ++i) pos[i] = i;
    } else if (const auto* w = std::get_if<ContiguousWindow>(&sel)) {
        int len = std::min(w->length, m); // windows longer than the sequence clip
        int start = 0;
        if (w->placement == ContiguousWindow::Placement::UniformRandom && m > len)
            start = static_cast<int>(rng.below(static_cast<std::uint64_t>(m - len + 1)));
        pos.resize(len);
        for (int i = 0; i < len; ++i) pos[i] = start + i;
    } else if (const auto* e = std::get_if<ExplicitIndexSet>(&sel)) {
        auto it = e->positions_by_length.find(m);
        if (it != e->positions_by_length.end()) pos = it->second;
    }
    return pos;
}

inline bool selector_is_random(const Selector& sel) {
    const auto* w = std::get_if<ContiguousWindow>(&sel);
    return w && w->placement == ContiguousWindow::Placement::UniformRandom;
}

// Expected number of selected positions at length m (averages over a random
// window start, which does not change the count anyway).
inline int selector_count(const Selector& sel, int m) {
    if (std::holds_alternative<FullSelector>(sel)) return m;
    if (std::holds_alternative<EmptySelector>(sel)) return 0;
    if (const auto* pf = std::get_if<PrefixFraction>(&sel))
        return std::clamp(static_cast<int>(std::floor(pf->fraction * m)), 0, m);
    if (const auto* w = std::get_if<ContiguousWindow>(&sel)) return std::min(w->length, m);
    const auto& e = std::get<ExplicitIndexSet>(sel);
    auto it = e.positions_by_length.find(m);
    return it == e.positions_by_length.end() ? 0 : static_cast<int>(it->second.size());
}

// Distribution over sequence lengths.
struct LengthDistribution {
    std::vector<int> support;
    std::vector<double> probabilities;

    static LengthDistribution fixed(int m) { return {{m}, {1.0}}; }

    void validate() const {
        if (support.empty()) throw std::invalid_argument("LengthDistribution: empty support");
        if (support.size() != probabilities.size())
            throw std::invalid_argument("LengthDistribution: support/probability size mismatch");
        double total = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) {
            if (support[i] < 1) throw std::invalid_argument("LengthDistribution: nonpositive length");
            if (probabilities[i] < 0.0)
                throw std::invalid_argument("LengthDistribution: negative probability");
            total += probabilities[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("LengthDistribution: probabilities must sum to 1");
    }

    double expected_length() const {
        double e = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) e += support[i] * probabilities[i];
        return e;
    }

    int sample(Rng& rng) const { return support[rng.categorical(probabilities)]; }
};

// Mixture of deterministic selectors with weights lambda_j.
struct LabelingPolicy {
    struct Component {
        Selector selector;
        double weight = 0.0;
    };
    std::vector<Component> components;

    static LabelingPolicy all_or_nothing(double lambda) {
        LabelingPolicy p;
        p.components.push_back({FullSelector{}, lambda});
        p.components.push_back({EmptySelector{}, 1.0 - lambda});
        return p;
    }

    // full / empty / first-half with equal weights
    static LabelingPolicy thirds() {
        LabelingPolicy p;
        p.components.push_back({FullSelector{}, 1.0 / 3.0});
        p.components.push_back({EmptySelector{}, 1.0 / 3.0});
        p.components.push_back({PrefixFraction{0.5}, 1.0 / 3.0});
        return p;
    }

    void validate() const {
        if (components.empty()) throw std::invalid_argument("LabelingPolicy: no components");
        double total = 0.0;
        for (const auto& c : components) {
            if (c.weight < 0.0) throw std::invalid_argument("LabelingPolicy: negative weight");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("LabelingPolicy: weights must sum to 1");
    }

    bool deterministic_selectors() const {
        for (const auto& c : components)
            if (selector_is_random(c.selector)) return false;
        return true;
    }

    // chi_j(Y) with j ~ Mult(lambda); the mixture draw consumes exactly one
    // decision from the rng stream.
    LabelObservation apply(const std::vector<int>& label_sequence, Rng& rng) const {
        validate();
        if (label_sequence.empty())
            throw std::invalid_argument("apply_policy: empty label sequence");
        std::vector<double> weights;
        weights.reserve(components.size());
        for (const auto& c : components) weights.push_back(c.weight);
        const int j = rng.categorical(weights);
        const int m = static_cast<int>(label_sequence.size());
        std::vector<int> pos = selector_positions(components[j].selector, m, rng);
        if (static_cast<int>(pos.size()) == m) return LabelObservation::full(label_sequence);
        if (pos.empty()) return LabelObservation::none();
        std::vector<int> vals(pos.size());
        for (std::size_t i = 0; i < pos.size(); ++i) vals[i] = label_sequence[pos[i]];
        return LabelObservation::subset(std::move(pos), std::move(vals));
    }

    // expected labeled positions per sample: sum_m q(m) sum_j lambda_j |S_j^m|
    double cost(const LengthDistribution& lengths) const {
        validate();
        lengths.validate();
        double total = 0.0;
        for (std::size_t i = 0; i < lengths.support.size(); ++i) {
            double per_length = 0.0;
            for (const auto& c : components)
                per_length += c.weight * selector_count(c.selector, lengths.support[i]);
            total += lengths.probabilities[i] * per_length;
        }
        return total;
    }
};

inline LabelObservation apply_policy(const LabelingPolicy& policy,
                                     const std::vector<int>& label_sequence, Rng& rng) {
    return policy.apply(label_sequence, rng);
}

inline double policy_cost(const LabelingPolicy& policy, const LengthDistribution& lengths) {
    return policy.cost(lengths);
}

} // namespace sslx

#endif
