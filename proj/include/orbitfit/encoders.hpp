#pragma once

#include <span>
#include <vector>

#include "orbitfit/common.hpp"
#include "orbitfit/rng.hpp"

/**
 * @file encoders.hpp
 *
 * Smooth encoders a : R^d -> [T0, T1]. The raw network output z(x) is squashed
 * by the logistic function, a(x) = T0 + (T1 - T0) s(z(x)), so the range
 * constraint holds exactly while the map stays smooth.
 */

namespace orbitfit {

enum class EncoderKind { AffineSquashed, MlpSquashed };

double logistic(double z);

class Encoder {
public:
    /// z(x) = w . x + b.
    static Encoder affine(Vec w, double b, TimeInterval interval);

    /// tanh hidden layers of the given widths followed by a linear scalar
    /// readout. weights[l] is (out x in); the last layer has a single row.
    static Encoder mlp(std::vector<Mat> weights, std::vector<Vec> biases, TimeInterval interval);

    /// All-zero MLP of the given input dimension and hidden widths.
    static Encoder mlp_zeros(int input_dim, const std::vector<int>& widths, TimeInterval interval);

    EncoderKind kind() const noexcept { return kind_; }
    int input_dim() const noexcept { return input_dim_; }
    const TimeInterval& interval() const noexcept { return interval_; }
    const std::vector<Mat>& weights() const noexcept { return weights_; }
    const std::vector<Vec>& biases() const noexcept { return biases_; }
    std::vector<int> hidden_widths() const;

    /// Throws DimensionError on size mismatch.
    double operator()(const Vec& x) const;

    /// Raw pre-squash output z(x).
    double raw(const Eigen::Ref<const Vec>& x) const;

    /// Value and gradient with respect to params(), written into `grad`.
    double value_and_param_gradient(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> grad) const;

    /// Layers in order, each as W row-major followed by its bias.
    int param_count() const noexcept;
    Vec params() const;
    void set_params(const Eigen::Ref<const Vec>& p);

    /// Uniform Lipschitz constant in x: prod ‖W_l‖ * (T1 - T0) / 4.
    double lipschitz() const;

private:
    Encoder(EncoderKind kind, int input_dim, TimeInterval interval)
        : kind_(kind), input_dim_(input_dim), interval_(interval) {}

    EncoderKind kind_;
    int input_dim_;
    TimeInterval interval_;
    // Affine encoders use a single 1 x d layer.
    std::vector<Mat> weights_;
    std::vector<Vec> biases_;
};

/// a_1 x ... x a_m, all parts on one interval.
class ProductEncoder {
public:
    ProductEncoder() = default;
    explicit ProductEncoder(std::vector<Encoder> parts);

    const std::vector<Encoder>& parts() const noexcept { return parts_; }
    std::vector<Encoder>& parts() noexcept { return parts_; }
    int size() const noexcept { return static_cast<int>(parts_.size()); }
    const TimeInterval& interval() const { return parts_.front().interval(); }
    int input_dim() const { return parts_.front().input_dim(); }

    Vec operator()(const Vec& x) const;

    int param_count() const noexcept;
    Vec params() const;
    void set_params(const Eigen::Ref<const Vec>& p);

private:
    std::vector<Encoder> parts_;
};

double encode(const Encoder& a, const Vec& x);
Vec encode_product(const ProductEncoder& a, const Vec& x);

/// max over the sample of |a(x) - a'(x)|; a lower bound on the C^0 distance.
double encoder_c0_distance(const Encoder& a, const Encoder& b, std::span<const Vec> sample);

struct EncoderSpec {
    EncoderKind kind = EncoderKind::MlpSquashed;
    std::vector<int> widths{16};
    /// Initial parameters ~ U(-init_scale, init_scale).
    double init_scale = 0.1;

    void validate() const;
};

Encoder sample_encoder(const EncoderSpec& spec, int input_dim, TimeInterval interval, Rng& rng);

/// Projects the parameter vector onto the Euclidean ball of `radius`.
void project_encoder(Encoder& a, double radius);

}  // namespace orbitfit
