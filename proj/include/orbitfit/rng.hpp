#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace orbitfit {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream `k` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) { return seed ^ splitmix64(k); }

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::VectorXd uniform_vector(Rng& rng, int dim, double lo, double hi) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = uniform(rng, lo, hi);
    return v;
}

inline Eigen::VectorXd gaussian_vector(Rng& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    return v;
}

/// Uniform draw from the closed Euclidean ball of `radius` in R^dim.
inline Eigen::VectorXd uniform_in_ball(Rng& rng, int dim, double radius) {
    Eigen::VectorXd v = gaussian_vector(rng, dim);
    double n = v.norm();
    while (n == 0.0) {
        v = gaussian_vector(rng, dim);
        n = v.norm();
    }
    const double r = radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / dim);
    return v * (r / n);
}

}  // namespace orbitfit
