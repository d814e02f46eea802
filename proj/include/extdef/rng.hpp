#pragma once

#include <cstdint>

#include <random>

#include "extdef/special.hpp"

namespace extdef {

/// splitmix64 mix step; used both to derive child seeds and to decorrelate
/// user-supplied seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child seed for an independent stream. All parallel work
/// (study repetitions, bootstrap batches) draws from streams derived this
/// way from one master seed, so results do not depend on thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream + 1));
}

/// Deterministic random source. mt19937_64 has a standardized sequence, and
/// all variates below are inverse-CDF transforms of its output, so a fixed
/// seed gives bit-identical draws on any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0,1); safe inside log and norm_quantile.
    double uniform_open() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() { return norm_quantile(uniform_open()); }

    double exponential() { return -std::log(uniform_open()); }

    /// Geometric block length with mean K >= 1 (support {1,2,...}).
    long geometric(double mean) {
        if (mean <= 1.0) return 1;
        const double p = 1.0 / mean;
        const double u = uniform_open();
        return 1 + static_cast<long>(std::floor(std::log(u) / std::log1p(-p)));
    }

    /// Uniform index in {0,...,n-1}, unbiased via rejection.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x > bound);
        return static_cast<std::size_t>(x % n);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace extdef
