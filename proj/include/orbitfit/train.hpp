#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "orbitfit/model.hpp"

namespace orbitfit {

enum class OptimizerKind { GradientDescent, Momentum, Adam };

/// Constant: the base rate throughout. Cosine: lr (1 + cos(π k / max_iters)) / 2 at iteration k.
enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-2;
    LrSchedule schedule = LrSchedule::Constant;
    int max_iters = 2000;
    int restarts = 5;
    std::uint64_t seed = 0;
    /// Stop a restart once the gradient norm falls to this value.
    double tolerance = 1e-8;
    /// xi is a softmax combination of min(n, anchor_count) data points.
    int anchor_count = 64;
    /// Encoder parameter vectors are projected onto this ball after each step.
    double weight_projection_radius = 10.0;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// Everything that fixes the hypothesis class: families, m, interval, integrator.
struct ModelSpec {
    FamilySpec family;
    EncoderSpec encoder;
    int m = 1;
    TimeInterval interval{-1.0, 1.0};
    FlowConfig flow;

    void validate() const;
};

struct HistoryEntry {
    int restart = 0;
    int iter = 0;
    double risk = 0.0;
    double grad_norm = 0.0;
    /// Best objective seen so far across iterations and restarts.
    double best_so_far = 0.0;
};

struct FitReport {
    ReconstructionMap best_model;
    AnchorParam best_anchors;
    /// Minimum objective over all evaluated iterates of all restarts.
    double final_empirical_risk = 0.0;
    std::vector<HistoryEntry> history;
    /// Best objective per restart; +inf for restarts aborted by a flow blow-up.
    std::vector<double> restart_risks;
    std::vector<std::string> restart_errors;
    int best_restart = -1;
    std::uint64_t seed_used = 0;
};

/// Random member of the class, with xi from an anchor subset of `points`.
ReconstructionMap sample_model(const ModelSpec& spec, const Mat& points, int anchor_count, Rng& rng,
                               AnchorParam* anchors_out = nullptr);

/// Full-batch empirical risk minimization with restarts. Restart k uses seed
/// derive_seed(cfg.seed, k); the result is deterministic given the seed.
FitReport fit(const Dataset& S, const ModelSpec& spec, const TrainConfig& cfg);

FitReport fit(const Dataset& S, const FamilySpec& family, const EncoderSpec& encoder, int m, TimeInterval interval,
              const TrainConfig& cfg, const FlowConfig& flow = {});

/// Minimizes Σ w_i |x_i - G(x_i)| over the class. Used with signed weights to
/// approximate Rademacher suprema.
FitReport minimize_weighted(const Mat& points, std::span<const double> weights, const ModelSpec& spec,
                            const TrainConfig& cfg);

/// Empirical risk on a held-out sample.
double evaluate(const ReconstructionMap& model, const Dataset& S_test);

}  // namespace orbitfit
