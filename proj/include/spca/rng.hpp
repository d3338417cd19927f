#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

namespace spca {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mixes a seed with coordinate values (repeat index, grid cell, ...) so that
/// every unit of work gets an independent, reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = master;
    (void)splitmix64(s);
    for (std::uint64_t part : parts) {
        s ^= part + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        (void)splitmix64(s);
    }
    return s;
}

/// Deterministic generator with explicit algorithms for every draw, so that
/// streams are identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up so that small seeds do not produce correlated leading draws
        for (int i = 0; i < 4; ++i) (void)splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Log-uniform over [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    /// Uniform index in [0, n), n > 0. Rejection sampling keeps it unbiased.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return static_cast<std::size_t>(x % n);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace spca
