#include "orbitfit/flows.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "orbitfit/errors.hpp"

namespace orbitfit {

void FlowConfig::validate() const {
    if (!(step_size_max > 0.0) || !std::isfinite(step_size_max)) {
        throw ConfigError("flow.step_size_max", "must be positive and finite");
    }
    if (min_steps < 1) throw ConfigError("flow.min_steps", "must be >= 1");
    if (safety_radius && !(*safety_radius > 0.0)) throw ConfigError("flow.safety_radius", "must be positive");
}

int step_count(const FlowConfig& cfg, double t) {
    const double raw = std::ceil(std::abs(t) / cfg.step_size_max);
    if (!(raw < 1e9)) throw NumericError("flow duration needs too many integration steps");
    return std::max(cfg.min_steps, static_cast<int>(raw));
}

double effective_safety_radius(std::span<const VectorField> fields, const FlowConfig& cfg) {
    if (cfg.safety_radius) return *cfg.safety_radius;
    double outer = 0.0;
    for (const auto& f : fields) {
        if (!f.bump()) return std::numeric_limits<double>::infinity();
        outer = std::max(outer, f.bump()->outer_radius);
    }
    return fields.empty() ? std::numeric_limits<double>::infinity() : 10.0 * outer;
}

namespace {

void check_state(const Vec& x, double safety_radius) {
    if (!x.allFinite()) throw NumericError("non-finite state while integrating a flow");
    if (x.norm() > safety_radius) {
        throw NumericError("trajectory left the safety radius " + std::to_string(safety_radius));
    }
}

void check_dims(const VectorField& f, const Vec& xi) {
    if (xi.size() != f.dim()) {
        throw DimensionError("initial point of dimension " + std::to_string(xi.size()) + " for a field of dimension " +
                             std::to_string(f.dim()));
    }
}

bool exact_constant(const VectorField& f) { return f.kind() == FieldKind::Constant && !f.bump(); }

Vec integrate(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg, double safety,
              std::vector<Vec>* path = nullptr) {
    if (path) path->push_back(xi);
    if (t == 0.0) return xi;
    if (exact_constant(f)) {
        // RK4 is exact on a constant right-hand side.
        Vec x = xi + t * f.v();
        check_state(x, safety);
        if (path) {
            const int n = step_count(cfg, t);
            for (int s = 1; s < n; ++s) path->push_back(xi + (t * s / n) * f.v());
            path->push_back(x);
        }
        return x;
    }
    const int n = step_count(cfg, t);
    const double h = t / n;
    const int d = f.dim();
    Vec x = xi;
    Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
    for (int s = 0; s < n; ++s) {
        f.evaluate(x, k1);
        tmp = x + 0.5 * h * k1;
        f.evaluate(tmp, k2);
        tmp = x + 0.5 * h * k2;
        f.evaluate(tmp, k3);
        tmp = x + h * k3;
        f.evaluate(tmp, k4);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_state(x, safety);
        if (path) path->push_back(x);
    }
    return x;
}

}  // namespace

Vec flow(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg) {
    check_dims(f, xi);
    if (!std::isfinite(t)) throw DomainError("flow duration must be finite");
    return integrate(f, xi, t, cfg, effective_safety_radius(std::span(&f, 1), cfg));
}

std::vector<Vec> flow_trajectory(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg) {
    check_dims(f, xi);
    if (!std::isfinite(t)) throw DomainError("flow duration must be finite");
    std::vector<Vec> path;
    integrate(f, xi, t, cfg, effective_safety_radius(std::span(&f, 1), cfg), &path);
    return path;
}

Vec compose_flows(std::span<const VectorField> fields, std::span<const double> times, const Vec& xi,
                  const FlowConfig& cfg) {
    if (fields.empty() || fields.size() != times.size()) {
        throw DimensionError("compose_flows needs m >= 1 fields and as many times");
    }
    const double safety = effective_safety_radius(fields, cfg);
    Vec x = xi;
    for (std::size_t j = 0; j < fields.size(); ++j) {
        check_dims(fields[j], x);
        if (!std::isfinite(times[j])) throw DomainError("flow duration must be finite");
        x = integrate(fields[j], x, times[j], cfg, safety);
    }
    return x;
}

LayerSensitivity flow_layer_sensitivity(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg,
                                        double safety_radius) {
    check_dims(f, xi);
    const int d = f.dim();
    const int p = f.param_count();
    LayerSensitivity out;
    out.d_initial = Mat::Identity(d, d);
    out.d_params = Mat::Zero(d, p);
    out.d_time = Vec(d);

    if (t == 0.0) {
        out.state = xi;
        f.evaluate(xi, out.d_time);
        return out;
    }
    if (exact_constant(f)) {
        out.state = xi + t * f.v();
        check_state(out.state, safety_radius);
        out.d_params.diagonal().setConstant(t);
        out.d_time = f.v();
        return out;
    }

    const int n = step_count(cfg, t);
    const double h = t / n;
    Vec x = xi;
    Mat& phi = out.d_initial;
    Mat& sens = out.d_params;

    Vec kx[4] = {Vec(d), Vec(d), Vec(d), Vec(d)};
    Mat kphi[4] = {Mat(d, d), Mat(d, d), Mat(d, d), Mat(d, d)};
    Mat ksens[4] = {Mat(d, p), Mat(d, p), Mat(d, p), Mat(d, p)};
    Vec x_stage(d);
    Mat phi_stage(d, d);
    Mat sens_stage(d, p);
    Mat jx(d, d);
    Mat jp(d, p);

    const double weights[3] = {0.5 * h, 0.5 * h, h};
    for (int s = 0; s < n; ++s) {
        for (int stage = 0; stage < 4; ++stage) {
            if (stage == 0) {
                f.evaluate_with_jacobians(x, kx[0], jx, jp);
                kphi[0].noalias() = jx * phi;
                ksens[0].noalias() = jx * sens;
                ksens[0] += jp;
                continue;
            }
            const double w = weights[stage - 1];
            x_stage = x + w * kx[stage - 1];
            phi_stage = phi + w * kphi[stage - 1];
            sens_stage = sens + w * ksens[stage - 1];
            f.evaluate_with_jacobians(x_stage, kx[stage], jx, jp);
            kphi[stage].noalias() = jx * phi_stage;
            ksens[stage].noalias() = jx * sens_stage;
            ksens[stage] += jp;
        }
        const double c = h / 6.0;
        x += c * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3]);
        phi += c * (kphi[0] + 2.0 * kphi[1] + 2.0 * kphi[2] + kphi[3]);
        sens += c * (ksens[0] + 2.0 * ksens[1] + 2.0 * ksens[2] + ksens[3]);
        check_state(x, safety_radius);
    }
    out.state = std::move(x);
    f.evaluate(out.state, out.d_time);
    return out;
}

FlowSensitivity flow_with_sensitivity(const VectorField& f, const Vec& xi, double t, const FlowConfig& cfg,
                                      Sensitivity wrt) {
    if (!std::isfinite(t)) throw DomainError("flow duration must be finite");
    LayerSensitivity layer = flow_layer_sensitivity(f, xi, t, cfg, effective_safety_radius(std::span(&f, 1), cfg));
    FlowSensitivity out{std::move(layer.state), {}};
    switch (wrt) {
        case Sensitivity::InitialPoint:
            out.jacobian = std::move(layer.d_initial);
            break;
        case Sensitivity::FieldParams:
            out.jacobian = std::move(layer.d_params);
            break;
        case Sensitivity::Time:
            out.jacobian = layer.d_time;
            break;
    }
    return out;
}

}  // namespace orbitfit
