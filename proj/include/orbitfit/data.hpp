#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "orbitfit/model.hpp"

namespace orbitfit {

enum class Shape { Segment, Circle, Helix, SphereCap, SwissRoll };
enum class SamplingMode { Uniform, Linspace };

std::string to_string(Shape shape);
Shape shape_from_string(const std::string& name);

/// Dimension of the coordinates a shape is natively drawn in.
int native_dim(Shape shape);
/// Radius of the smallest origin-centred ball containing the noiseless shape.
double shape_radius(Shape shape);

struct GeneratorSpec {
    Shape shape = Shape::Segment;
    int d = 2;
    int n = 100;
    /// Isotropic Gaussian noise, radially truncated at 3 sigma.
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Apply a random orthogonal map after zero-padding to R^d.
    bool embed = false;
    SamplingMode sampling = SamplingMode::Uniform;

    void validate() const;
};

/// Deterministic given the seed.
Dataset generate(const GeneratorSpec& spec);

/// i.i.d. draws from the shape measure (uniform parameters), using the same
/// embedding that generate() applies for this seed.
Sampler shape_sampler(const GeneratorSpec& spec);

/// Disjoint partition after a seeded shuffle; the first part holds
/// round(train_fraction * n) points.
std::pair<Dataset, Dataset> split(const Dataset& S, double train_fraction, std::uint64_t seed);

}  // namespace orbitfit
