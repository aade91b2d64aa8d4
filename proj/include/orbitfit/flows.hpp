#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "orbitfit/fields.hpp"

/**
 * @file flows.hpp
 *
 * Fixed-step classical RK4 realizations of the flow map e^{tf} and of the
 * decoder e^{t_m f_m} ∘ ... ∘ e^{t_1 f_1} ξ, with forward sensitivities.
 */

namespace orbitfit {

struct FlowConfig {
    /// Upper bound on the RK4 step length.
    double step_size_max = 1e-2;
    int min_steps = 1;
    /// Trajectories leaving this ball raise NumericError. When unset,
    /// compose_flows uses 10x the largest bump outer radius (if every field
    /// carries a bump) and otherwise only checks finiteness.
    std::optional<double> safety_radius;

    void validate() const;
};

/// ceil(|t| / step_size_max), at least min_steps.
int step_count(const FlowConfig& cfg, double t);

/// Numerical e^{tf}ξ. Negative t integrates backwards with a signed step.
Vec flow(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg = {});

/// Integrator states from ξ to e^{tf}ξ, one per step (both ends included).
std::vector<Vec> flow_trajectory(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg = {});

/// e^{t_m f_m} ∘ ... ∘ e^{t_1 f_1} ξ, applied left to right over the tuples.
Vec compose_flows(std::span<const VectorField> fields, std::span<const double> times, const Vec& xi,
                  const FlowConfig& cfg = {});

/// Safety radius compose_flows applies for these fields.
double effective_safety_radius(std::span<const VectorField> fields, const FlowConfig& cfg);

enum class Sensitivity { InitialPoint, FieldParams, Time };

struct FlowSensitivity {
    Vec state;
    /// d x d for InitialPoint, d x param_count for FieldParams, d x 1 for Time.
    Mat jacobian;
};

FlowSensitivity flow_with_sensitivity(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg,
                                      Sensitivity wrt);

/// All three sensitivities of one layer, integrated on a shared RK4 grid.
struct LayerSensitivity {
    Vec state;
    Mat d_initial;  // d x d
    Mat d_params;   // d x param_count
    Vec d_time;     // f(state)
};

LayerSensitivity flow_layer_sensitivity(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg,
                                        double safety_radius = std::numeric_limits<double>::infinity());

}  // namespace orbitfit
