#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "orbitfit/encoders.hpp"
#include "orbitfit/fields.hpp"
#include "orbitfit/flows.hpp"

namespace orbitfit {

/// n x d sample, one point per row.
class Dataset {
public:
    Dataset() = default;
    /// Throws ConfigError on an empty or non-finite matrix.
    explicit Dataset(Mat points, std::string name = "");

    const Mat& points() const noexcept { return points_; }
    const std::string& name() const noexcept { return name_; }
    int size() const noexcept { return static_cast<int>(points_.rows()); }
    int dim() const noexcept { return static_cast<int>(points_.cols()); }
    Vec row(int i) const { return points_.row(i).transpose(); }
    /// R = max_i |x_i|.
    double support_radius() const;

private:
    Mat points_;
    std::string name_;
};

/// Header "x0,...,x{d-1}", one point per row, shortest round-trip decimal form.
void write_csv(const Dataset& data, std::ostream& out);
std::string to_csv(const Dataset& data);
void write_csv_file(const Dataset& data, const std::string& path);
Dataset read_csv(std::istream& in, const std::string& name = "");
Dataset read_csv_file(const std::string& path);

/// G = g_{f, xi} ∘ a: encoder times drive the flows starting at xi.
struct ReconstructionMap {
    ProductEncoder encoder;
    std::vector<VectorField> fields;
    Vec xi;
    FlowConfig flow;

    int m() const noexcept { return static_cast<int>(fields.size()); }
    int dim() const noexcept { return static_cast<int>(xi.size()); }
    /// Checks m = |encoder| = |fields| and consistent dimensions.
    void validate() const;

    Vec operator()(const Vec& x) const;

    /// Encoder parameters followed by field parameters.
    int param_count() const;
    Vec params() const;
    void set_params(const Eigen::Ref<const Vec>& p);
};

Vec reconstruct(const ReconstructionMap& G, const Vec& x);

/// (1/n) Σ |x_i - G(x_i)|, summed in index order.
double empirical_risk(const ReconstructionMap& G, const Dataset& S);

/// Σ w_i |x_i - G(x_i)|.
double weighted_risk(const ReconstructionMap& G, const Mat& points, std::span<const double> weights);

/// Per-point reconstruction errors |x_i - G(x_i)|.
Vec reconstruction_errors(const ReconstructionMap& G, const Mat& points);

/// xi = Σ_k softmax(logits)_k anchors_k, which keeps xi in the convex hull of the anchors.
struct AnchorParam {
    Mat anchors;  // k x d
    Vec logits;   // k

    Vec weights() const;
    Vec xi() const;
};

struct RiskGradient {
    double risk = 0.0;
    Vec encoder;  // matches ProductEncoder::params()
    Vec fields;   // field parameters concatenated in layer order
    Vec xi;       // gradient with respect to xi itself
    Vec logits;   // through the anchor parametrization; empty without anchors

    /// [encoder, fields, logits] when anchored, else [encoder, fields, xi].
    Vec flat() const;
};

/// Gradient of the empirical risk via forward sensitivities through each flow and
/// reverse accumulation across layers. Zero-error points contribute a zero subgradient.
RiskGradient risk_gradient(const ReconstructionMap& G, const Dataset& S, const AnchorParam* anchors = nullptr);

/// Same for Σ w_i |x_i - G(x_i)| with arbitrary (possibly negative) weights.
RiskGradient weighted_risk_gradient(const ReconstructionMap& G, const Mat& points, std::span<const double> weights,
                                    const AnchorParam* anchors = nullptr);

using Sampler = std::function<Vec(Rng&)>;

Sampler point_mass_sampler(Vec x);
/// Uniform over the rows of `points`.
Sampler empirical_sampler(Mat points);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Monte-Carlo estimate of E|X - G(X)| from n_mc fresh draws.
MonteCarloEstimate expected_risk_mc(const ReconstructionMap& G, const Sampler& sampler, int n_mc, std::uint64_t seed);

/// Sample mean and standard error of the mean.
MonteCarloEstimate mean_and_std_err(std::span<const double> values);

}  // namespace orbitfit
