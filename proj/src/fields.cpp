#include "orbitfit/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbitfit/errors.hpp"

namespace orbitfit {

void validate_interval(const TimeInterval& interval, const std::string& where) {
    if (!std::isfinite(interval.lo) || !std::isfinite(interval.hi)) {
        throw ConfigError(where, "interval endpoints must be finite");
    }
    if (!(interval.lo < interval.hi)) throw ConfigError(where, "interval must satisfy T0 < T1");
    if (!interval.contains_zero()) throw ConfigError(where, "interval must contain 0");
}

namespace {

double binomial(int n, int k) {
    double result = 1.0;
    for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
    return result;
}

// (2k+1)! / (k!)^2, the leading coefficient of S_k'(s) = c s^k (1 - s)^k.
double smoothstep_slope_coefficient(int order) { return (2 * order + 1) * binomial(2 * order, order); }

}  // namespace

double smoothstep(int order, double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    double sum = 0.0;
    for (int n = 0; n <= order; ++n) {
        sum += binomial(order + n, n) * binomial(2 * order + 1, order - n) * std::pow(-s, n);
    }
    return std::pow(s, order + 1) * sum;
}

double smoothstep_derivative(int order, double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return smoothstep_slope_coefficient(order) * std::pow(s * (1.0 - s), order);
}

void BumpSpec::validate() const {
    if (!(inner_radius > 0.0) || !std::isfinite(inner_radius)) {
        throw ConfigError("bump.inner_radius", "must be a positive finite number");
    }
    if (!(outer_radius > inner_radius) || !std::isfinite(outer_radius)) {
        throw ConfigError("bump.outer_radius", "must be finite and exceed inner_radius");
    }
    if (profile < 2 || profile > 12) throw ConfigError("bump.profile", "smoothstep order must be in [2, 12]");
}

double BumpSpec::value(double radius) const {
    if (radius <= inner_radius) return 1.0;
    if (radius >= outer_radius) return 0.0;
    return 1.0 - smoothstep(profile, (radius - inner_radius) / (outer_radius - inner_radius));
}

double BumpSpec::slope(double radius) const {
    if (radius <= inner_radius || radius >= outer_radius) return 0.0;
    const double width = outer_radius - inner_radius;
    return -smoothstep_derivative(profile, (radius - inner_radius) / width) / width;
}

double BumpSpec::max_slope() const {
    return smoothstep_slope_coefficient(profile) * std::pow(0.25, profile) / (outer_radius - inner_radius);
}

double spectral_norm(const Mat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> solver(A.transpose() * A, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

double symmetric_part_max_eigenvalue(const Mat& A) {
    Mat sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

bool satisfies_exp_stability(const Mat& A, double lambda) { return symmetric_part_max_eigenvalue(A) <= -lambda; }

namespace {

void check_finite(const Eigen::Ref<const Mat>& m, const char* what) {
    if (!m.allFinite()) throw ConfigError(what, "entries must be finite");
}

void apply_norm_policy(Mat& A, Vec& u, NormPolicy policy) {
    const double a_norm = spectral_norm(A);
    const double u_norm = u.norm();
    if (policy == NormPolicy::Reject) {
        if (a_norm > 1.0 + 1e-12) throw ConfigError("A", "spectral norm exceeds 1");
        if (u_norm > 1.0 + 1e-12) throw ConfigError("u", "norm exceeds 1");
        return;
    }
    if (a_norm > 1.0) A /= a_norm;
    if (u_norm > 1.0) u /= u_norm;
}

}  // namespace

VectorField VectorField::constant(Vec v, std::optional<BumpSpec> bump) {
    if (v.size() == 0) throw DimensionError("constant field needs a non-empty direction");
    check_finite(v, "v");
    if (bump) bump->validate();
    VectorField f(FieldKind::Constant, static_cast<int>(v.size()));
    f.u_ = std::move(v);
    f.bump_ = bump;
    return f;
}

VectorField VectorField::affine(Mat A, Vec u, std::optional<BumpSpec> bump, NormPolicy policy) {
    if (A.rows() == 0 || A.rows() != A.cols() || u.size() != A.rows()) {
        throw DimensionError("affine field needs square A and u of matching size");
    }
    check_finite(A, "A");
    check_finite(u, "u");
    if (bump) bump->validate();
    apply_norm_policy(A, u, policy);
    VectorField f(FieldKind::Affine, static_cast<int>(u.size()));
    f.A_ = std::move(A);
    f.u_ = std::move(u);
    f.bump_ = bump;
    return f;
}

VectorField VectorField::recurrent(Mat A, Vec u, Nonlinearity sigma, std::optional<BumpSpec> bump,
                                   NormPolicy policy) {
    VectorField f = affine(std::move(A), std::move(u), bump, policy);
    f.kind_ = FieldKind::Recurrent;
    f.sigma_ = sigma;
    return f;
}

Vec VectorField::operator()(const Vec& x) const {
    if (x.size() != dim_) {
        throw DimensionError("field of dimension " + std::to_string(dim_) + " evaluated at a point of dimension " +
                             std::to_string(x.size()));
    }
    Vec out(dim_);
    evaluate(x, out);
    return out;
}

void VectorField::raw_value(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> out) const {
    switch (kind_) {
        case FieldKind::Constant:
            out = u_;
            return;
        case FieldKind::Affine:
            out.noalias() = A_ * x;
            out += u_;
            return;
        case FieldKind::Recurrent: {
            out.noalias() = A_ * x;
            out += u_;
            const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
            const double inner = sigma_ == Nonlinearity::TanhComponentwise ? 1.0 : 0.5;
            for (int i = 0; i < dim_; ++i) out[i] = scale * std::tanh(inner * out[i]);
            return;
        }
    }
}

void VectorField::evaluate(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> out) const {
    if (bump_) {
        const double r = x.norm();
        if (r >= bump_->outer_radius) {
            out.setZero();
            return;
        }
        raw_value(x, out);
        if (r > bump_->inner_radius) out *= bump_->value(r);
        return;
    }
    raw_value(x, out);
}

void VectorField::evaluate_with_jacobians(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> out, Eigen::Ref<Mat> d_x,
                                          Eigen::Ref<Mat> d_params) const {
    const int d = dim_;
    d_params.setZero();
    double radius = 0.0;
    if (bump_) {
        radius = x.norm();
        if (radius >= bump_->outer_radius) {
            out.setZero();
            d_x.setZero();
            return;
        }
    }

    switch (kind_) {
        case FieldKind::Constant:
            out = u_;
            d_x.setZero();
            d_params.diagonal().setOnes();
            break;
        case FieldKind::Affine:
            out.noalias() = A_ * x;
            out += u_;
            d_x = A_;
            for (int i = 0; i < d; ++i) {
                d_params.block(i, i * d, 1, d) = x.transpose();
                d_params(i, d * d + i) = 1.0;
            }
            break;
        case FieldKind::Recurrent: {
            out.noalias() = A_ * x;
            out += u_;
            const double scale = 1.0 / std::sqrt(static_cast<double>(d));
            const double inner = sigma_ == Nonlinearity::TanhComponentwise ? 1.0 : 0.5;
            for (int i = 0; i < d; ++i) {
                const double th = std::tanh(inner * out[i]);
                const double deriv = scale * inner * (1.0 - th * th);
                out[i] = scale * th;
                d_x.row(i) = deriv * A_.row(i);
                d_params.block(i, i * d, 1, d) = deriv * x.transpose();
                d_params(i, d * d + i) = deriv;
            }
            break;
        }
    }

    if (bump_ && radius > bump_->inner_radius) {
        const double rho = bump_->value(radius);
        const double drho = bump_->slope(radius) / radius;
        d_x *= rho;
        d_x.noalias() += (drho * out) * x.transpose();
        d_params *= rho;
        out *= rho;
    }
}

int VectorField::param_count() const noexcept { return kind_ == FieldKind::Constant ? dim_ : dim_ * dim_ + dim_; }

Vec VectorField::params() const {
    if (kind_ == FieldKind::Constant) return u_;
    Vec p(param_count());
    for (int i = 0; i < dim_; ++i) p.segment(i * dim_, dim_) = A_.row(i).transpose();
    p.tail(dim_) = u_;
    return p;
}

void VectorField::set_params(const Eigen::Ref<const Vec>& p) {
    if (p.size() != param_count()) throw DimensionError("parameter vector has the wrong length");
    if (kind_ == FieldKind::Constant) {
        u_ = p;
        return;
    }
    for (int i = 0; i < dim_; ++i) A_.row(i) = p.segment(i * dim_, dim_).transpose();
    u_ = p.tail(dim_);
}

void FamilySpec::validate() const {
    if (dim < 1) throw ConfigError("family.dim", "must be >= 1");
    if (bump) bump->validate();
    if (kind == FieldKind::Constant && !(constant_bound >= 0.0 && std::isfinite(constant_bound))) {
        throw ConfigError("family.constant_bound", "must be a nonnegative finite number");
    }
}

FieldConstants field_constants(const FamilySpec& family) {
    family.validate();
    const double slope = family.bump ? family.bump->max_slope() : 0.0;
    switch (family.kind) {
        case FieldKind::Constant:
            return {family.constant_bound, family.constant_bound * slope};
        case FieldKind::Affine: {
            if (!family.bump) {
                throw ConfigError("family.bump", "affine fields are unbounded without a bump");
            }
            // |Ax + u| <= |x| + 1 on the support of the bump; product rule for the gradient.
            const double reach = family.bump->outer_radius + 1.0;
            return {reach, 1.0 + reach * slope};
        }
        case FieldKind::Recurrent:
            return {1.0, 1.0 + slope};
    }
    return {};
}

VectorField sample_field(const FamilySpec& family, Rng& rng) {
    const int d = family.dim;
    if (family.kind == FieldKind::Constant) {
        return VectorField::constant(uniform_in_ball(rng, d, family.constant_bound), family.bump);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = uniform(rng, -scale, scale);
    Vec u = uniform_in_ball(rng, d, 1.0);
    if (family.kind == FieldKind::Affine) {
        return VectorField::affine(std::move(A), std::move(u), family.bump, NormPolicy::Rescale);
    }
    return VectorField::recurrent(std::move(A), std::move(u), family.nonlinearity, family.bump, NormPolicy::Rescale);
}

void project_to_family(VectorField& f, const FamilySpec& family) {
    Vec p = f.params();
    const int d = f.dim();
    if (f.kind() == FieldKind::Constant) {
        const double n = p.norm();
        if (n > family.constant_bound && n > 0.0) p *= family.constant_bound / n;
        f.set_params(p);
        return;
    }
    Mat A(d, d);
    for (int i = 0; i < d; ++i) A.row(i) = p.segment(i * d, d).transpose();
    const double a_norm = spectral_norm(A);
    if (a_norm > 1.0) p.head(d * d) /= a_norm;
    const double u_norm = p.tail(d).norm();
    if (u_norm > 1.0) p.tail(d) /= u_norm;
    f.set_params(p);
}

// --- comparison functions -------------------------------------------------

ComparisonFn ComparisonFn::worst_case(double L, double L0, TimeInterval interval) {
    if (!(L >= 0.0) || !(L0 >= 0.0) || !std::isfinite(L) || !std::isfinite(L0)) {
        throw ConfigError("comparison", "L and L0 must be nonnegative and finite");
    }
    ComparisonFn cf(Kind::WorstCase, interval);
    cf.L_ = L;
    cf.L0_ = L0;
    return cf;
}

ComparisonFn ComparisonFn::exponential(double L, TimeInterval interval) {
    if (!(L >= 0.0) || !std::isfinite(L)) throw ConfigError("comparison.L", "must be nonnegative and finite");
    ComparisonFn cf(Kind::Exponential, interval);
    cf.L_ = L;
    return cf;
}

ComparisonFn ComparisonFn::exp_stable(double lambda, TimeInterval interval) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("comparison.lambda", "must be positive and finite");
    }
    if (interval.lo < 0.0) throw DomainError("exponentially stable comparison requires nonnegative times");
    ComparisonFn cf(Kind::ExpStable, interval);
    cf.lambda_ = lambda;
    return cf;
}

ComparisonFn ComparisonFn::tabulated(std::vector<double> r_grid, std::vector<double> t_grid, Mat values,
                                     TimeInterval interval) {
    const auto strictly_increasing = [](const std::vector<double>& g) {
        for (std::size_t i = 1; i < g.size(); ++i)
            if (!(g[i] > g[i - 1])) return false;
        return true;
    };
    if (r_grid.size() < 2 || r_grid.front() != 0.0 || !strictly_increasing(r_grid)) {
        throw ConfigError("comparison.r_grid", "needs >= 2 strictly increasing entries starting at 0");
    }
    if (t_grid.size() < 2 || !strictly_increasing(t_grid)) {
        throw ConfigError("comparison.t_grid", "needs >= 2 strictly increasing entries");
    }
    if (t_grid.front() > interval.lo || t_grid.back() < interval.hi) {
        throw ConfigError("comparison.t_grid", "must cover the time interval");
    }
    if (values.rows() != static_cast<Eigen::Index>(r_grid.size()) ||
        values.cols() != static_cast<Eigen::Index>(t_grid.size())) {
        throw DimensionError("comparison table must be |r_grid| x |t_grid|");
    }
    if (!values.allFinite() || (values.array() < 0.0).any()) {
        throw ConfigError("comparison.values", "entries must be finite and nonnegative");
    }
    if (values.row(0).cwiseAbs().maxCoeff() != 0.0) {
        throw ConfigError("comparison.values", "beta(0, t) must vanish");
    }
    for (Eigen::Index i = 1; i < values.rows(); ++i) {
        if ((values.row(i).array() < values.row(i - 1).array()).any()) {
            throw ConfigError("comparison.values", "beta must be nondecreasing in r");
        }
    }
    ComparisonFn cf(Kind::Tabulated, interval);
    cf.r_grid_ = std::move(r_grid);
    cf.t_grid_ = std::move(t_grid);
    cf.table_ = std::move(values);
    return cf;
}

ComparisonFn ComparisonFn::pointwise_max(std::vector<ComparisonFn> parts) {
    if (parts.empty()) throw ConfigError("comparison.parts", "needs at least one member");
    const TimeInterval interval = parts.front().interval();
    for (const auto& p : parts) {
        if (!(p.interval() == interval)) throw ConfigError("comparison.parts", "members must share the interval");
    }
    ComparisonFn cf(Kind::PointwiseMax, interval);
    cf.parts_ = std::move(parts);
    return cf;
}

double ComparisonFn::table_beta(double r, double t) const {
    if (t < t_grid_.front() || t > t_grid_.back()) throw DomainError("time outside the tabulated range");
    auto segment = [](const std::vector<double>& g, double x) {
        auto it = std::upper_bound(g.begin(), g.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - g.begin());
        hi = std::clamp<std::size_t>(hi, 1, g.size() - 1);
        return hi - 1;
    };
    const std::size_t i = segment(r_grid_, r);
    const std::size_t j = segment(t_grid_, t);
    // Beyond the last r node the last segment is extended linearly.
    const double wr = (r - r_grid_[i]) / (r_grid_[i + 1] - r_grid_[i]);
    const double wt = (t - t_grid_[j]) / (t_grid_[j + 1] - t_grid_[j]);
    const auto at_t = [&](std::size_t row) {
        return (1.0 - wt) * table_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) +
               wt * table_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j + 1));
    };
    return (1.0 - wr) * at_t(i) + wr * at_t(i + 1);
}

double ComparisonFn::beta(double r, double t) const {
    if (r < 0.0) throw DomainError("beta is defined for r >= 0");
    switch (kind_) {
        case Kind::WorstCase:
            return std::min(r * std::exp(L_ * std::abs(t)), r + 2.0 * L0_ * std::abs(t));
        case Kind::Exponential:
            return r * std::exp(L_ * std::abs(t));
        case Kind::ExpStable:
            if (t < 0.0) throw DomainError("exponentially stable comparison only allows t >= 0");
            return r * std::exp(-lambda_ * t);
        case Kind::Tabulated:
            return table_beta(r, t);
        case Kind::PointwiseMax: {
            double best = 0.0;
            for (const auto& p : parts_) best = std::max(best, p.beta(r, t));
            return best;
        }
    }
    return 0.0;
}

double ComparisonFn::right_slope_at_zero(double t) const {
    switch (kind_) {
        case Kind::WorstCase:
            // For small r the exponential branch is the minimum unless L0 = 0.
            return L0_ > 0.0 ? std::exp(L_ * std::abs(t)) : 1.0;
        case Kind::Exponential:
            return std::exp(L_ * std::abs(t));
        case Kind::ExpStable:
            if (t < 0.0) throw DomainError("exponentially stable comparison only allows t >= 0");
            return std::exp(-lambda_ * t);
        case Kind::Tabulated:
            return (table_beta(r_grid_[1], t) - table_beta(0.0, t)) / r_grid_[1];
        case Kind::PointwiseMax: {
            double best = 0.0;
            for (const auto& p : parts_) best = std::max(best, p.right_slope_at_zero(t));
            return best;
        }
    }
    return 0.0;
}

double ComparisonFn::bar_beta(double r) const {
    if (r < 0.0) throw DomainError("bar_beta is defined for r >= 0");
    const double T = interval_.max_abs();
    switch (kind_) {
        case Kind::WorstCase:
            return std::min(r * std::exp(L_ * T), r + 2.0 * L0_ * T);
        case Kind::Exponential:
            return r * std::exp(L_ * T);
        case Kind::ExpStable:
            return r * std::exp(-lambda_ * interval_.lo);
        case Kind::Tabulated: {
            // Piecewise linear in t, so the max sits on a node or an endpoint.
            double best = std::max(table_beta(r, interval_.lo), table_beta(r, interval_.hi));
            for (double t : t_grid_)
                if (interval_.contains(t)) best = std::max(best, table_beta(r, t));
            return best;
        }
        case Kind::PointwiseMax: {
            double best = 0.0;
            for (const auto& p : parts_) best = std::max(best, p.bar_beta(r));
            return best;
        }
    }
    return 0.0;
}

double ComparisonFn::bar_beta_j(double r, int j) const {
    if (j < 0) throw DomainError("iterate index must be >= 0");
    double value = r;
    for (int k = 0; k < j; ++k) value = bar_beta(value);
    return value;
}

std::optional<double> ComparisonFn::linear_gain() const {
    const double T = interval_.max_abs();
    switch (kind_) {
        case Kind::WorstCase:
            if (L_ == 0.0 || L0_ == 0.0 || T == 0.0) return 1.0;
            return std::nullopt;
        case Kind::Exponential:
            return std::exp(L_ * T);
        case Kind::ExpStable:
            return std::exp(-lambda_ * interval_.lo);
        case Kind::Tabulated:
            return std::nullopt;
        case Kind::PointwiseMax: {
            double best = 0.0;
            for (const auto& p : parts_) {
                auto g = p.linear_gain();
                if (!g) return std::nullopt;
                best = std::max(best, *g);
            }
            return best;
        }
    }
    return std::nullopt;
}

namespace {

// max over t in [0, end] (or [end, 0]) of |∫_0^t g|, by cumulative trapezoid.
template <class Slope>
double max_abs_cumulative_integral(const Slope& g, double end, const std::vector<double>& extra_nodes) {
    if (end == 0.0) return 0.0;
    constexpr int kIntervals = 4096;
    std::vector<double> nodes;
    nodes.reserve(kIntervals + 1 + extra_nodes.size());
    for (int k = 0; k <= kIntervals; ++k) nodes.push_back(end * k / kIntervals);
    for (double t : extra_nodes)
        if ((end > 0.0 && t > 0.0 && t < end) || (end < 0.0 && t < 0.0 && t > end)) nodes.push_back(t);
    std::sort(nodes.begin(), nodes.end(), [end](double a, double b) { return end > 0.0 ? a < b : a > b; });
    double integral = 0.0;
    double best = 0.0;
    double prev_t = nodes.front();
    double prev_g = g(prev_t);
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        const double t = nodes[k];
        const double gt = g(t);
        integral += 0.5 * (gt + prev_g) * (t - prev_t);
        best = std::max(best, std::abs(integral));
        prev_t = t;
        prev_g = gt;
    }
    return best;
}

}  // namespace

double ComparisonFn::bar_B() const {
    const double T = interval_.max_abs();
    switch (kind_) {
        case Kind::WorstCase:
            if (L0_ == 0.0 || L_ == 0.0) return T;
            return std::expm1(L_ * T) / L_;
        case Kind::Exponential:
            if (L_ == 0.0) return T;
            return std::expm1(L_ * T) / L_;
        case Kind::ExpStable:
            // sup over all horizons of ∫_0^t e^{-lambda u} du.
            return 1.0 / lambda_;
        case Kind::Tabulated:
        case Kind::PointwiseMax: {
            auto g = [this](double t) { return right_slope_at_zero(t); };
            return std::max(max_abs_cumulative_integral(g, interval_.hi, t_grid_),
                            max_abs_cumulative_integral(g, interval_.lo, t_grid_));
        }
    }
    return 0.0;
}

ComparisonFn family_comparison(const FamilySpec& family, TimeInterval interval) {
    const FieldConstants c = field_constants(family);
    return ComparisonFn::worst_case(c.L, c.L0, interval);
}

ComparisonFn mixture_comparison(const std::vector<FamilySpec>& families, TimeInterval interval) {
    std::vector<ComparisonFn> parts;
    parts.reserve(families.size());
    for (const auto& f : families) parts.push_back(family_comparison(f, interval));
    return ComparisonFn::pointwise_max(std::move(parts));
}

}  // namespace orbitfit
