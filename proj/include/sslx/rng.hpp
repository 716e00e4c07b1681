#ifndef SSLX_RNG_HPP
#define SSLX_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace sslx {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG wrapper. Streams derived via split() are independent
// and stable across runs, which the reproducibility contract relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    // uniform in [0, 1)
    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    }

    double normal() {
        return std::normal_distribution<double>(0.0, 1.0)(gen_);
    }

    double gamma(double shape) {
        return std::gamma_distribution<double>(shape, 1.0)(gen_);
    }

    // index drawn proportionally to weights; consumes exactly one uniform
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw std::invalid_argument("categorical: nonpositive weight total");
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    int categorical(const std::vector<double>& weights) {
        return categorical(std::span<const double>(weights));
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
    }

    // derived independent stream; pure in the parent state
    Rng split(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x51ed2701ULL)));
    }

    // sample k distinct indices from [0, n) without replacement
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace sslx

#endif
