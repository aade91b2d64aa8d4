#include "orbitfit/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "orbitfit/errors.hpp"

namespace orbitfit {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
    if (max_iters < 1) throw ConfigError("train.max_iters", "must be >= 1");
    if (restarts < 1) throw ConfigError("train.restarts", "must be >= 1");
    if (!(tolerance >= 0.0)) throw ConfigError("train.tolerance", "must be nonnegative");
    if (anchor_count < 1) throw ConfigError("train.anchor_count", "must be >= 1");
    if (!(weight_projection_radius > 0.0)) throw ConfigError("train.weight_projection_radius", "must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum", "must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train.beta", "moment decay rates must be in [0, 1)");
    }
}

void ModelSpec::validate() const {
    family.validate();
    encoder.validate();
    flow.validate();
    if (m < 1) throw ConfigError("model.m", "must be >= 1");
    validate_interval(interval, "model.interval");
}

ReconstructionMap sample_model(const ModelSpec& spec, const Mat& points, int anchor_count, Rng& rng,
                               AnchorParam* anchors_out) {
    const int d = spec.family.dim;
    if (points.cols() != d) throw DimensionError("dataset dimension differs from the family dimension");
    std::vector<Encoder> parts;
    ReconstructionMap G;
    for (int j = 0; j < spec.m; ++j) parts.push_back(sample_encoder(spec.encoder, d, spec.interval, rng));
    G.encoder = ProductEncoder(std::move(parts));
    for (int j = 0; j < spec.m; ++j) G.fields.push_back(sample_field(spec.family, rng));
    G.flow = spec.flow;

    // Anchors without replacement: partial Fisher-Yates over row indices.
    const int n = static_cast<int>(points.rows());
    const int k = std::min(n, anchor_count);
    std::vector<int> index(static_cast<std::size_t>(n));
    std::iota(index.begin(), index.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(pick(rng))]);
    }
    AnchorParam anchors;
    anchors.anchors.resize(k, d);
    for (int i = 0; i < k; ++i) anchors.anchors.row(i) = points.row(index[static_cast<std::size_t>(i)]);
    anchors.logits = Vec::Zero(k);
    G.xi = anchors.xi();
    if (anchors_out) *anchors_out = std::move(anchors);
    return G;
}

namespace {

class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, Eigen::Index size)
        : cfg_(cfg), m_(Vec::Zero(size)), v_(Vec::Zero(size)) {}

    void step(Vec& theta, const Vec& grad) {
        ++t_;
        const double lr = rate();
        switch (cfg_.optimizer) {
            case OptimizerKind::GradientDescent:
                theta -= lr * grad;
                break;
            case OptimizerKind::Momentum:
                m_ = cfg_.momentum * m_ + grad;
                theta -= lr * m_;
                break;
            case OptimizerKind::Adam: {
                m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
                v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
                const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
                const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
                theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
                break;
            }
        }
    }

private:
    double rate() const {
        if (cfg_.schedule == LrSchedule::Constant) return cfg_.learning_rate;
        const double frac = static_cast<double>(t_ - 1) / std::max(1, cfg_.max_iters);
        return cfg_.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    }

    const TrainConfig& cfg_;
    Vec m_;
    Vec v_;
    int t_ = 0;
};

// Trainable state: model parameters followed by the anchor logits.
Vec pack(const ReconstructionMap& G, const AnchorParam& anchors) {
    Vec theta(G.param_count() + anchors.logits.size());
    theta << G.params(), anchors.logits;
    return theta;
}

void unpack(const Vec& theta, ReconstructionMap& G, AnchorParam& anchors) {
    const int np = G.param_count();
    G.set_params(theta.head(np));
    anchors.logits = theta.tail(anchors.logits.size());
    G.xi = anchors.xi();
}

void project(ReconstructionMap& G, const ModelSpec& spec, const TrainConfig& cfg) {
    for (auto& a : G.encoder.parts()) project_encoder(a, cfg.weight_projection_radius);
    for (auto& f : G.fields) project_to_family(f, spec.family);
}

}  // namespace

FitReport minimize_weighted(const Mat& points, std::span<const double> weights, const ModelSpec& spec,
                            const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (points.rows() < 1) throw ConfigError("dataset", "needs at least one point");
    if (static_cast<Eigen::Index>(weights.size()) != points.rows()) {
        throw DimensionError("one weight per point is required");
    }

    FitReport report;
    report.seed_used = cfg.seed;
    report.final_empirical_risk = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
        AnchorParam anchors;
        ReconstructionMap G = sample_model(spec, points, cfg.anchor_count, rng, &anchors);
        Vec theta = pack(G, anchors);
        Optimizer opt(cfg, theta.size());
        double restart_best = std::numeric_limits<double>::infinity();
        try {
            for (int iter = 0; iter <= cfg.max_iters; ++iter) {
                const RiskGradient grad = weighted_risk_gradient(G, points, weights, &anchors);
                const Vec g = grad.flat();
                const double gnorm = g.norm();
                if (!std::isfinite(grad.risk) || !std::isfinite(gnorm)) {
                    throw NumericError("non-finite objective or gradient");
                }
                restart_best = std::min(restart_best, grad.risk);
                if (grad.risk < best) {
                    best = grad.risk;
                    report.best_model = G;
                    report.best_anchors = anchors;
                    report.best_restart = restart;
                }
                report.history.push_back({restart, iter, grad.risk, gnorm, best});
                if (iter == cfg.max_iters || gnorm <= cfg.tolerance) break;
                opt.step(theta, g);
                unpack(theta, G, anchors);
                project(G, spec, cfg);
                theta = pack(G, anchors);
            }
            report.restart_errors.emplace_back();
        } catch (const NumericError& e) {
            report.restart_errors.emplace_back(e.what());
        }
        report.restart_risks.push_back(restart_best);
    }
    if (report.best_restart < 0) {
        throw NumericError("every restart failed: " + report.restart_errors.front());
    }
    report.final_empirical_risk = best;
    return report;
}

FitReport fit(const Dataset& S, const ModelSpec& spec, const TrainConfig& cfg) {
    if (S.dim() != spec.family.dim) throw DimensionError("dataset dimension differs from the family dimension");
    const std::vector<double> weights(static_cast<std::size_t>(S.size()), 1.0 / S.size());
    return minimize_weighted(S.points(), weights, spec, cfg);
}

FitReport fit(const Dataset& S, const FamilySpec& family, const EncoderSpec& encoder, int m, TimeInterval interval,
              const TrainConfig& cfg, const FlowConfig& flow) {
    ModelSpec spec{family, encoder, m, interval, flow};
    return fit(S, spec, cfg);
}

double evaluate(const ReconstructionMap& model, const Dataset& S_test) { return empirical_risk(model, S_test); }

}  // namespace orbitfit
