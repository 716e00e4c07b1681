#ifndef SSLX_PARAM_HPP
#define SSLX_PARAM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sslx {

// One probability simplex (class prior, a transition row, ...). The free
// parameterization is the multinomial logit with the last category fixed at
// zero, so a block of `size` categories contributes `size - 1` free entries.
struct SimplexBlock {
    std::string name;
    int size = 0;
};

class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(std::vector<SimplexBlock> blocks) : blocks_(std::move(blocks)) {
        int off = 0;
        offsets_.reserve(blocks_.size());
        for (const auto& b : blocks_) {
            if (b.size < 1) throw std::invalid_argument("ParamLayout: block size must be >= 1");
            offsets_.push_back(off);
            off += b.size - 1;
        }
        dim_ = off;
    }

    int dim() const { return dim_; }
    std::size_t num_blocks() const { return blocks_.size(); }
    const SimplexBlock& block(std::size_t i) const { return blocks_[i]; }
    int offset(std::size_t i) const { return offsets_[i]; }

    bool operator==(const ParamLayout& o) const {
        if (blocks_.size() != o.blocks_.size()) return false;
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            if (blocks_[i].size != o.blocks_[i].size || blocks_[i].name != o.blocks_[i].name)
                return false;
        return true;
    }

private:
    std::vector<SimplexBlock> blocks_;
    std::vector<int> offsets_;
    int dim_ = 0;
};

// logits (size-1 free entries, last category reference) -> probabilities (size)
inline Eigen::VectorXd logits_to_probs(const Eigen::VectorXd& logits) {
    const int size = static_cast<int>(logits.size()) + 1;
    double mx = 0.0;
    for (int i = 0; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
    double z = std::exp(-mx);
    for (int i = 0; i < logits.size(); ++i) z += std::exp(logits[i] - mx);
    Eigen::VectorXd p(size);
    for (int i = 0; i + 1 < size; ++i) p[i] = std::exp(logits[i] - mx) / z;
    p[size - 1] = std::exp(-mx) / z;
    return p;
}

inline Eigen::VectorXd probs_to_logits(const Eigen::VectorXd& probs) {
    const int size = static_cast<int>(probs.size());
    if (size < 1) throw std::invalid_argument("probs_to_logits: empty simplex");
    const double ref = probs[size - 1];
    if (ref <= 0.0) throw std::invalid_argument("probs_to_logits: reference category has zero mass");
    Eigen::VectorXd l(size - 1);
    for (int i = 0; i + 1 < size; ++i) {
        if (probs[i] <= 0.0) throw std::invalid_argument("probs_to_logits: zero probability entry");
        l[i] = std::log(probs[i]) - std::log(ref);
    }
    return l;
}

// Unconstrained parameter vector plus the layout mapping its blocks onto
// probability simplices.
class ParamVector {
public:
    ParamVector() = default;
    ParamVector(ParamLayout layout, Eigen::VectorXd values)
        : layout_(std::move(layout)), values_(std::move(values)) {
        if (values_.size() != layout_.dim())
            throw std::invalid_argument("ParamVector: dimension mismatch with layout");
        for (int i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw std::invalid_argument("ParamVector: non-finite entry");
    }

    const ParamLayout& layout() const { return layout_; }
    const Eigen::VectorXd& values() const { return values_; }
    int dim() const { return static_cast<int>(values_.size()); }

    Eigen::VectorXd block_logits(std::size_t i) const {
        return values_.segment(layout_.offset(i), layout_.block(i).size - 1);
    }

    std::vector<Eigen::VectorXd> to_probabilities() const {
        std::vector<Eigen::VectorXd> rows;
        rows.reserve(layout_.num_blocks());
        for (std::size_t i = 0; i < layout_.num_blocks(); ++i)
            rows.push_back(logits_to_probs(block_logits(i)));
        return rows;
    }

    static ParamVector from_probabilities(const ParamLayout& layout,
                                          const std::vector<Eigen::VectorXd>& rows) {
        if (rows.size() != layout.num_blocks())
            throw std::invalid_argument("from_probabilities: block count mismatch");
        Eigen::VectorXd v(layout.dim());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != layout.block(i).size)
                throw std::invalid_argument("from_probabilities: row size mismatch");
            v.segment(layout.offset(i), layout.block(i).size - 1) = probs_to_logits(rows[i]);
        }
        return ParamVector(layout, std::move(v));
    }

private:
    ParamLayout layout_;
    Eigen::VectorXd values_;
};

} // namespace sslx

#endif
