#include "orbitfit/encoders.hpp"

#include <cmath>
#include <string>

#include "orbitfit/errors.hpp"
#include "orbitfit/fields.hpp"

namespace orbitfit {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Encoder Encoder::affine(Vec w, double b, TimeInterval interval) {
    validate_interval(interval, "encoder.interval");
    if (w.size() == 0) throw DimensionError("affine encoder needs a non-empty weight vector");
    if (!w.allFinite() || !std::isfinite(b)) throw ConfigError("encoder", "weights must be finite");
    Encoder a(EncoderKind::AffineSquashed, static_cast<int>(w.size()), interval);
    a.weights_.push_back(w.transpose());
    a.biases_.push_back(Vec::Constant(1, b));
    return a;
}

Encoder Encoder::mlp(std::vector<Mat> weights, std::vector<Vec> biases, TimeInterval interval) {
    validate_interval(interval, "encoder.interval");
    if (weights.empty() || weights.size() != biases.size()) {
        throw DimensionError("MLP encoder needs matching, non-empty weight and bias lists");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != biases[l].size()) throw DimensionError("bias length differs from layer width");
        if (l > 0 && weights[l].cols() != weights[l - 1].rows()) throw DimensionError("layer shapes do not chain");
        if (!weights[l].allFinite() || !biases[l].allFinite()) throw ConfigError("encoder", "weights must be finite");
    }
    if (weights.back().rows() != 1) throw DimensionError("MLP readout layer must have one output");
    if (weights.front().cols() == 0) throw DimensionError("MLP input dimension must be positive");
    Encoder a(EncoderKind::MlpSquashed, static_cast<int>(weights.front().cols()), interval);
    a.weights_ = std::move(weights);
    a.biases_ = std::move(biases);
    return a;
}

Encoder Encoder::mlp_zeros(int input_dim, const std::vector<int>& widths, TimeInterval interval) {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    int in = input_dim;
    for (int w : widths) {
        if (w < 1) throw ConfigError("encoder.widths", "hidden widths must be >= 1");
        weights.push_back(Mat::Zero(w, in));
        biases.push_back(Vec::Zero(w));
        in = w;
    }
    weights.push_back(Mat::Zero(1, in));
    biases.push_back(Vec::Zero(1));
    return mlp(std::move(weights), std::move(biases), interval);
}

std::vector<int> Encoder::hidden_widths() const {
    std::vector<int> widths;
    for (std::size_t l = 0; l + 1 < weights_.size(); ++l) widths.push_back(static_cast<int>(weights_[l].rows()));
    return widths;
}

double Encoder::raw(const Eigen::Ref<const Vec>& x) const {
    Vec h = x;
    for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
        Vec next = weights_[l] * h + biases_[l];
        h = next.array().tanh();
    }
    return weights_.back().row(0).dot(h) + biases_.back()[0];
}

double Encoder::operator()(const Vec& x) const {
    if (x.size() != input_dim_) {
        throw DimensionError("encoder of input dimension " + std::to_string(input_dim_) +
                             " applied to a point of dimension " + std::to_string(x.size()));
    }
    return interval_.lo + interval_.length() * logistic(raw(x));
}

double Encoder::value_and_param_gradient(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> grad) const {
    const std::size_t layers = weights_.size();
    std::vector<Vec> activations;
    activations.reserve(layers);
    activations.push_back(x);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        Vec next = weights_[l] * activations.back() + biases_[l];
        activations.push_back(next.array().tanh());
    }
    const double z = weights_.back().row(0).dot(activations.back()) + biases_.back()[0];
    const double s = logistic(z);
    const double value = interval_.lo + interval_.length() * s;

    // Parameter offsets per layer.
    std::vector<int> offset(layers);
    int pos = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        offset[l] = pos;
        pos += static_cast<int>(weights_[l].size() + biases_[l].size());
    }

    Vec delta = Vec::Constant(1, interval_.length() * s * (1.0 - s));
    for (std::size_t l = layers; l-- > 0;) {
        const Vec& input = activations[l];
        const Mat& W = weights_[l];
        const int rows = static_cast<int>(W.rows());
        const int cols = static_cast<int>(W.cols());
        for (int i = 0; i < rows; ++i) grad.segment(offset[l] + i * cols, cols) = delta[i] * input;
        grad.segment(offset[l] + rows * cols, rows) = delta;
        if (l == 0) break;
        Vec back = W.transpose() * delta;
        const Vec& h = activations[l];
        delta = back.array() * (1.0 - h.array().square());
    }
    return value;
}

int Encoder::param_count() const noexcept {
    int n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += static_cast<int>(weights_[l].size() + biases_[l].size());
    return n;
}

Vec Encoder::params() const {
    Vec p(param_count());
    int pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Mat& W = weights_[l];
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            p.segment(pos, W.cols()) = W.row(i).transpose();
            pos += static_cast<int>(W.cols());
        }
        p.segment(pos, biases_[l].size()) = biases_[l];
        pos += static_cast<int>(biases_[l].size());
    }
    return p;
}

void Encoder::set_params(const Eigen::Ref<const Vec>& p) {
    if (p.size() != param_count()) throw DimensionError("encoder parameter vector has the wrong length");
    int pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Mat& W = weights_[l];
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            W.row(i) = p.segment(pos, W.cols()).transpose();
            pos += static_cast<int>(W.cols());
        }
        biases_[l] = p.segment(pos, biases_[l].size());
        pos += static_cast<int>(biases_[l].size());
    }
}

double Encoder::lipschitz() const {
    double product = 1.0;
    for (const Mat& W : weights_) product *= spectral_norm(W);
    return product * interval_.length() / 4.0;
}

ProductEncoder::ProductEncoder(std::vector<Encoder> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw DimensionError("product encoder needs at least one part");
    for (const auto& a : parts_) {
        if (!(a.interval() == parts_.front().interval())) {
            throw ConfigError("encoder", "all parts of a product encoder must share one interval");
        }
        if (a.input_dim() != parts_.front().input_dim()) throw DimensionError("encoder parts differ in input dimension");
    }
}

Vec ProductEncoder::operator()(const Vec& x) const {
    Vec t(size());
    for (int j = 0; j < size(); ++j) t[j] = parts_[static_cast<std::size_t>(j)](x);
    return t;
}

int ProductEncoder::param_count() const noexcept {
    int n = 0;
    for (const auto& a : parts_) n += a.param_count();
    return n;
}

Vec ProductEncoder::params() const {
    Vec p(param_count());
    int pos = 0;
    for (const auto& a : parts_) {
        p.segment(pos, a.param_count()) = a.params();
        pos += a.param_count();
    }
    return p;
}

void ProductEncoder::set_params(const Eigen::Ref<const Vec>& p) {
    if (p.size() != param_count()) throw DimensionError("product encoder parameter vector has the wrong length");
    int pos = 0;
    for (auto& a : parts_) {
        a.set_params(p.segment(pos, a.param_count()));
        pos += a.param_count();
    }
}

double encode(const Encoder& a, const Vec& x) { return a(x); }

Vec encode_product(const ProductEncoder& a, const Vec& x) { return a(x); }

double encoder_c0_distance(const Encoder& a, const Encoder& b, std::span<const Vec> sample) {
    if (sample.empty()) throw ConfigError("sample_points", "C0 distance needs a non-empty sample");
    double best = 0.0;
    for (const auto& x : sample) best = std::max(best, std::abs(a(x) - b(x)));
    return best;
}

void EncoderSpec::validate() const {
    if (!(init_scale >= 0.0)) throw ConfigError("encoder.init_scale", "must be nonnegative");
    for (int w : widths)
        if (w < 1) throw ConfigError("encoder.widths", "hidden widths must be >= 1");
}

Encoder sample_encoder(const EncoderSpec& spec, int input_dim, TimeInterval interval, Rng& rng) {
    spec.validate();
    const double s = spec.init_scale;
    if (spec.kind == EncoderKind::AffineSquashed) {
        Vec w = uniform_vector(rng, input_dim, -s, s);
        return Encoder::affine(std::move(w), uniform(rng, -s, s), interval);
    }
    Encoder a = Encoder::mlp_zeros(input_dim, spec.widths, interval);
    a.set_params(uniform_vector(rng, a.param_count(), -s, s));
    return a;
}

void project_encoder(Encoder& a, double radius) {
    Vec p = a.params();
    const double n = p.norm();
    if (n > radius && n > 0.0) {
        p *= radius / n;
        a.set_params(p);
    }
}

}  // namespace orbitfit
