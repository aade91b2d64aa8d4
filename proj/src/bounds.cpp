#include "orbitfit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "orbitfit/errors.hpp"

namespace orbitfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ConfigError(path, what);
}

bool nonneg_finite(double x) { return x >= 0.0 && std::isfinite(x); }

}  // namespace

std::string to_string(CoveringModel model) { return model == CoveringModel::Ball ? "ball" : "power"; }

// --- covering numbers -----------------------------------------------------------

FamilyDescriptor FamilyDescriptor::from_parametrization(int params, double param_diameter, double param_lipschitz) {
    require(params >= 0, "params", "must be nonnegative");
    require(nonneg_finite(param_diameter) && nonneg_finite(param_lipschitz), "covering_constant",
            "diameter and Lipschitz constant must be nonnegative and finite");
    return {params, 2.0 * param_diameter * param_lipschitz};
}

double covering_log(const FamilyDescriptor& family, double delta, CoveringModel model) {
    if (std::isnan(delta) || delta < 0.0) throw DomainError("covering radius must be nonnegative");
    if (family.params == 0 || family.covering_constant == 0.0) return 0.0;
    if (delta == 0.0) return kInf;
    const double ratio = family.covering_constant / delta;
    if (model == CoveringModel::Ball) return family.params * std::log1p(ratio);
    return family.params * std::max(0.0, std::log(ratio));
}

double covering_log_K(double R, int d, double delta, CoveringModel model) {
    if (!(R >= 0.0) || d < 1) throw DomainError("ball covering needs R >= 0 and d >= 1");
    return covering_log(FamilyDescriptor{d, 2.0 * R}, delta, model);
}

double covering_log_family(const FamilyDescriptor& family, double delta, CoveringModel model) {
    return covering_log(family, delta, model);
}

// --- class presets ---------------------------------------------------------------

void ClassSpec::validate() const {
    require(m >= 1, "bounds.class.m", "must be >= 1");
    require(d >= 1, "bounds.class.d", "must be >= 1");
    validate_interval(interval, "bounds.class.interval");
    require(encoder.params >= 0 && nonneg_finite(encoder.covering_constant), "bounds.class.encoder",
            "needs params >= 0 and a finite nonnegative covering constant");
    require(fields.params >= 0 && nonneg_finite(fields.covering_constant), "bounds.class.fields",
            "needs params >= 0 and a finite nonnegative covering constant");
    require(nonneg_finite(L0), "bounds.class.L0", "must be nonnegative and finite");
    require(nonneg_finite(K_radius), "bounds.class.K_radius", "must be nonnegative and finite");
    require(nonneg_finite(K_tilde_radius) && K_tilde_radius >= K_radius, "bounds.class.K_tilde_radius",
            "must be finite and at least K_radius");
    require(diameter > 0.0 && std::isfinite(diameter), "bounds.class.diameter", "must be positive and finite");
    require(cf.interval() == interval, "bounds.class.comparison", "must be defined on the class interval");
}

FamilyDescriptor affine_encoder_descriptor(int d, TimeInterval interval, double R, double param_radius) {
    const double slope = interval.length() / 4.0;
    return FamilyDescriptor::from_parametrization(d + 1, 2.0 * param_radius, slope * std::sqrt(R * R + 1.0));
}

FamilyDescriptor mlp_encoder_descriptor(const EncoderSpec& spec, int d, TimeInterval interval, double R,
                                        double param_radius) {
    if (spec.kind == EncoderKind::AffineSquashed) return affine_encoder_descriptor(d, interval, R, param_radius);
    std::vector<int> dims{d};
    dims.insert(dims.end(), spec.widths.begin(), spec.widths.end());
    dims.push_back(1);
    const int layers = static_cast<int>(dims.size()) - 1;
    int params = 0;
    double sq = 0.0;
    for (int l = 0; l < layers; ++l) {
        params += dims[static_cast<std::size_t>(l + 1)] * (dims[static_cast<std::size_t>(l)] + 1);
        // |input of layer l|: R for the data, sqrt(width) after tanh.
        const double in = l == 0 ? R : std::sqrt(static_cast<double>(dims[static_cast<std::size_t>(l)]));
        // Backpropagated signal through the later blocks, each of norm <= param_radius.
        const double back = std::pow(param_radius, layers - 1 - l);
        sq += back * back * (in * in + 1.0);
    }
    return FamilyDescriptor::from_parametrization(params, 2.0 * param_radius, interval.length() / 4.0 * std::sqrt(sq));
}

ClassSpec constant_class(int m, int d, TimeInterval interval, double R, double c, FamilyDescriptor encoder) {
    ClassSpec s;
    s.m = m;
    s.d = d;
    s.interval = interval;
    s.cf = ComparisonFn::exponential(0.0, interval);
    s.encoder = encoder;
    // v in the ball of radius c, C0 distance equal to the parameter distance.
    s.fields = FamilyDescriptor::from_parametrization(d, 2.0 * c, 1.0);
    s.L0 = c;
    s.K_radius = R;
    s.K_tilde_radius = R + m * interval.max_abs() * c;
    s.diameter = 2.0 * s.K_tilde_radius;
    s.name = "constant";
    s.validate();
    return s;
}

ClassSpec exp_stable_class(int m, int d, double T, double lambda, double L0, FamilyDescriptor encoder,
                           FamilyDescriptor fields, double R, double diameter) {
    ClassSpec s;
    s.m = m;
    s.d = d;
    s.interval = {0.0, T};
    s.cf = ComparisonFn::exp_stable(lambda, s.interval);
    s.encoder = encoder;
    s.fields = fields;
    s.L0 = L0;
    s.K_radius = R;
    s.K_tilde_radius = std::max(R, diameter / 2.0);
    s.diameter = diameter;
    s.name = "exp_stable";
    s.validate();
    return s;
}

namespace {

ClassSpec matrix_field_class(int m, int d, TimeInterval interval, double R, FamilyDescriptor encoder, double r,
                             ComparisonFn cf, double L0, const std::string& name) {
    ClassSpec s;
    s.m = m;
    s.d = d;
    s.interval = interval;
    s.cf = std::move(cf);
    s.encoder = encoder;
    // (A, u) with ‖A‖_F <= √d, |u| <= 1; C0(K̃) Lipschitz constant sqrt(r² + 1).
    s.fields = FamilyDescriptor::from_parametrization(d * d + d, 2.0 * std::sqrt(d + 1.0), std::sqrt(r * r + 1.0));
    s.L0 = L0;
    s.K_radius = R;
    s.K_tilde_radius = r;
    s.diameter = 2.0 * r;
    s.name = name;
    s.validate();
    return s;
}

}  // namespace

ClassSpec affine_class(int m, int d, TimeInterval interval, double R, FamilyDescriptor encoder) {
    const double r = (R + 1.0) * std::exp(m * interval.max_abs());
    return matrix_field_class(m, d, interval, R, encoder, r, ComparisonFn::exponential(1.0, interval), r + 1.0,
                              "affine");
}

ClassSpec recurrent_class(int m, int d, TimeInterval interval, double R, FamilyDescriptor encoder) {
    const double r = R + m * interval.max_abs();
    return matrix_field_class(m, d, interval, R, encoder, r, ComparisonFn::worst_case(1.0, 1.0, interval), 1.0,
                              "recurrent");
}

// --- rho and the entropy integral -----------------------------------------------------

double solve_rho(const ComparisonFn& cf, int m, double L0, double bar_B, double delta, RhoIndex which) {
    if (m < 1) throw DomainError("solve_rho needs m >= 1");
    if (std::isnan(delta) || delta < 0.0) throw DomainError("solve_rho needs delta >= 0");
    if (delta == kInf) return kInf;
    const bool iterate_only = which == RhoIndex::Initial;
    const double c = which == RhoIndex::Encoder ? L0 * bar_B : (which == RhoIndex::Fields ? bar_B : 1.0);
    if (c == 0.0) return kInf;
    if (delta == 0.0) return 0.0;

    if (const auto g = cf.linear_gain()) {
        if (iterate_only) return *g == 0.0 ? kInf : delta / std::pow(*g, m);
        double sum = 0.0;
        for (int j = 0; j < m; ++j) sum += std::pow(*g, j);
        return delta / (c * sum);
    }

    auto phi = [&](double x) {
        if (iterate_only) return cf.bar_beta_j(x, m);
        double sum = 0.0;
        for (int j = 0; j < m; ++j) sum += cf.bar_beta_j(c * x, j);
        return sum;
    };
    // The identity term bounds phi(x) below by c x, so delta / c is infeasible or exact.
    double lo = 0.0;
    double hi = delta / c;
    if (phi(hi) <= delta) return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) <= delta ? lo : hi) = mid;
    }
    return lo;
}

double entropy_integrand(const ClassSpec& spec, double bar_B, double delta, const std::array<double, 3>& gamma,
                         RhoSample* sample) {
    const double r1 = solve_rho(spec.cf, spec.m, spec.L0, bar_B, gamma[0] * delta, RhoIndex::Encoder);
    const double r2 = solve_rho(spec.cf, spec.m, spec.L0, bar_B, gamma[1] * delta, RhoIndex::Fields);
    const double r3 = solve_rho(spec.cf, spec.m, spec.L0, bar_B, gamma[2] * delta, RhoIndex::Initial);
    const double total = spec.m * covering_log(spec.encoder, r1, spec.covering) +
                         spec.m * covering_log(spec.fields, r2, spec.covering) +
                         covering_log_K(spec.K_radius, spec.d, r3, spec.covering);
    const double value = std::sqrt(total);
    if (sample) *sample = {delta, r1, r2, r3, value};
    return value;
}

namespace {

using Fn = std::function<double(double)>;

double simpson(double fa, double fm, double fb, double a, double b) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

double adaptive(const Fn& g, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth,
                int& evals) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = g(lm);
    const double frm = g(rm);
    evals += 2;
    const double left = simpson(fa, flm, fm, a, m);
    const double right = simpson(fm, frm, fb, m, b);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return adaptive(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals) +
           adaptive(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals);
}

double composite(const Fn& g, double a, double b, int intervals, int& evals) {
    const double h = (b - a) / intervals;
    double sum = g(a) + g(b);
    for (int i = 1; i < intervals; ++i) sum += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
    evals += intervals + 1;
    return sum * h / 3.0;
}

// ∫ F(δ) dδ over [lo, hi] in the variable u = log δ.
double integrate_log(const Fn& F, double lo, double hi, double rel_tol, int& evals) {
    const Fn g = [&F](double u) {
        const double delta = std::exp(u);
        return F(delta) * delta;
    };
    const double a = std::log(lo);
    const double b = std::log(hi);
    const int pieces = 16;
    const double coarse = composite(g, a, b, 2 * pieces, evals);
    const double tol = std::max(rel_tol * std::abs(coarse), 1e-300);
    double total = 0.0;
    const double h = (b - a) / pieces;
    for (int k = 0; k < pieces; ++k) {
        const double pa = a + k * h;
        const double pb = pa + h;
        const double fa = g(pa);
        const double fm = g(0.5 * (pa + pb));
        const double fb = g(pb);
        evals += 3;
        total += adaptive(g, pa, pb, fa, fm, fb, simpson(fa, fm, fb, pa, pb), tol / pieces, 40, evals);
    }
    return total;
}

struct Integral {
    double body = 0.0;
    double head = 0.0;
};

// Head [εD e^{-30}, εD] is integrated as well; what remains below is < e^{-30} εD F.
Integral entropy_integral(const ClassSpec& spec, double bar_B, const std::array<double, 3>& gamma,
                          const DudleyOptions& opt, int& evals) {
    const double D = spec.diameter;
    const Fn F = [&](double delta) { return entropy_integrand(spec, bar_B, delta, gamma); };
    Integral out;
    out.body = integrate_log(F, opt.epsilon * D, D, opt.quadrature_rel_tol, evals);
    out.head = integrate_log(F, opt.epsilon * D * std::exp(-30.0), opt.epsilon * D, opt.quadrature_rel_tol, evals);
    return out;
}

double coarse_integral(const ClassSpec& spec, double bar_B, const std::array<double, 3>& gamma,
                       const DudleyOptions& opt, int& evals) {
    const Fn F = [&](double delta) { return entropy_integrand(spec, bar_B, delta, gamma); };
    const Fn g = [&F](double u) {
        const double delta = std::exp(u);
        return F(delta) * delta;
    };
    const double D = spec.diameter;
    return composite(g, std::log(opt.epsilon * D), std::log(D), 64, evals);
}

void validate_options(const DudleyOptions& opt) {
    require(opt.gamma_resolution >= 3, "bounds.gamma_resolution", "must be >= 3");
    require(opt.epsilon > 0.0 && opt.epsilon < 1.0, "bounds.epsilon", "must lie in (0, 1)");
    require(opt.quadrature_rel_tol > 0.0, "bounds.quadrature_rel_tol", "must be positive");
}

}  // namespace

BoundReport dudley_bound(const ClassSpec& spec, int n, const DudleyOptions& options) {
    spec.validate();
    validate_options(options);
    require(n >= 1, "bounds.n", "must be >= 1");
    BoundReport report;
    report.n = n;
    report.options = options;
    report.bar_B = spec.cf.bar_B();
    report.L0 = spec.L0;
    report.diameter = spec.diameter;

    std::array<double, 3> gamma{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    int evals = 0;
    if (options.optimize_gamma) {
        const int res = options.gamma_resolution;
        double best = kInf;
        for (int k1 = 1; k1 <= res - 2; ++k1) {
            for (int k2 = 1; k1 + k2 <= res - 1; ++k2) {
                const std::array<double, 3> g{static_cast<double>(k1) / res, static_cast<double>(k2) / res,
                                              static_cast<double>(res - k1 - k2) / res};
                const double value = coarse_integral(spec, report.bar_B, g, options, evals);
                if (value < best) {
                    best = value;
                    gamma = g;
                }
            }
        }
    }
    report.gamma = gamma;
    const Integral I = entropy_integral(spec, report.bar_B, gamma, options, evals);
    report.entropy_integral = I.body + I.head;
    report.head_contribution = I.head;
    report.value = report.entropy_integral / std::sqrt(static_cast<double>(n));
    report.integrand_evaluations = evals;

    const int samples = 25;
    for (int k = 0; k < samples; ++k) {
        const double delta = spec.diameter * std::pow(options.epsilon, 1.0 - static_cast<double>(k) / (samples - 1));
        RhoSample s;
        entropy_integrand(spec, report.bar_B, delta, gamma, &s);
        report.rho_samples.push_back(s);
    }
    if (spec.cf.kind() == ComparisonFn::Kind::ExpStable) report.closed_form = exp_stable_closed_form(spec, n, options);
    return report;
}

ClosedFormCheck exp_stable_closed_form(const ClassSpec& spec, int n, const DudleyOptions& options) {
    spec.validate();
    validate_options(options);
    if (spec.cf.kind() != ComparisonFn::Kind::ExpStable) {
        throw ConfigError("bounds.class.comparison", "closed form needs an exp_stable comparison");
    }
    ClassSpec power = spec;
    power.covering = CoveringModel::Power;
    const double lambda = spec.cf.lambda();
    const double m = spec.m;
    const double root_n = std::sqrt(static_cast<double>(n));
    int evals = 0;
    const Integral I = entropy_integral(power, spec.cf.bar_B(), {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, options, evals);

    ClosedFormCheck out;
    out.constant = 1.5 * std::sqrt(std::numbers::pi);
    out.closed_form = (std::pow(m, 1.5) / lambda *
                           (spec.encoder.covering_constant * spec.L0 * std::sqrt(spec.encoder.params) +
                            spec.fields.covering_constant * std::sqrt(spec.fields.params)) +
                       2.0 * spec.K_radius * std::sqrt(spec.d)) /
                      root_n;
    out.quadrature = (I.body + I.head) / root_n;
    const double reference = out.constant * out.closed_form;
    out.relative_gap = reference > 0.0 ? std::abs(out.quadrature - reference) / reference : 0.0;
    return out;
}

double theorem2_certificate(double rademacher, double diameter, int n, double confidence_delta) {
    require(n >= 1, "bounds.n", "must be >= 1");
    require(confidence_delta > 0.0 && confidence_delta < 1.0, "bounds.confidence", "must lie in (0, 1)");
    require(diameter > 0.0, "bounds.diameter", "must be positive");
    return 4.0 * rademacher + diameter * std::sqrt(2.0 * std::log(1.0 / confidence_delta) / n);
}

// --- Rademacher complexity ----------------------------------------------------------

FiniteClass::FiniteClass(std::vector<ReconstructionMap> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw ConfigError("class", "a finite class needs at least one map");
}

void FiniteClass::bind(const Mat& points) {
    losses_.resize(static_cast<Eigen::Index>(maps_.size()), points.rows());
    for (std::size_t k = 0; k < maps_.size(); ++k)
        losses_.row(static_cast<Eigen::Index>(k)) = reconstruction_errors(maps_[k], points).transpose();
}

double FiniteClass::sup(std::span<const double> eps, std::uint64_t) const {
    if (static_cast<Eigen::Index>(eps.size()) != losses_.cols()) throw DimensionError("sign vector length differs from n");
    const Eigen::Map<const Vec> e(eps.data(), static_cast<Eigen::Index>(eps.size()));
    return (losses_ * e).maxCoeff() / static_cast<double>(eps.size());
}

ParametricClass::ParametricClass(ModelSpec spec, TrainConfig inner) : spec_(std::move(spec)), inner_(inner) {
    spec_.validate();
    inner_.validate();
}

double ParametricClass::sup(std::span<const double> eps, std::uint64_t seed) const {
    const double n = static_cast<double>(eps.size());
    std::vector<double> weights(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) weights[i] = -eps[i] / n;
    TrainConfig cfg = inner_;
    cfg.seed = seed;
    return -minimize_weighted(points_, weights, spec_, cfg).final_empirical_risk;
}

RademacherEstimate rademacher_estimate(RademacherClass& cls, const Dataset& S, int n_eps_draws, std::uint64_t seed) {
    require(n_eps_draws >= 1, "bounds.rademacher.draws", "must be >= 1");
    cls.bind(S.points());
    RademacherEstimate est;
    est.draws = n_eps_draws;
    est.lower_estimate = !cls.exact();
    std::vector<double> eps(static_cast<std::size_t>(S.size()));
    for (int k = 0; k < n_eps_draws; ++k) {
        const std::uint64_t draw_seed = derive_seed(seed, static_cast<std::uint64_t>(k));
        Rng rng(draw_seed);
        std::bernoulli_distribution coin(0.5);
        for (auto& e : eps) e = coin(rng) ? 1.0 : -1.0;
        est.values.push_back(cls.sup(eps, derive_seed(draw_seed, 1)));
    }
    const MonteCarloEstimate mc = mean_and_std_err(est.values);
    est.mean = mc.mean;
    est.std_err = mc.std_err;
    return est;
}

double massart_bound(int class_size, double diameter, int n) {
    require(class_size >= 1 && n >= 1, "bounds.massart", "needs a nonempty class and n >= 1");
    return diameter * std::sqrt(2.0 * std::log(static_cast<double>(class_size)) / n);
}

// --- perturbation inequality checks -------------------------------------------------

VerificationFamily affine_verification_family(int d, int m, TimeInterval interval, double R) {
    validate_interval(interval, "verify.interval");
    const double r = (R + 1.0) * std::exp(m * interval.max_abs());
    VerificationFamily fam{FamilySpec{}, ComparisonFn::exponential(1.0, interval), interval, R, r, m, "affine"};
    fam.family.kind = FieldKind::Affine;
    fam.family.dim = d;
    fam.family.bump = BumpSpec{r, 2.0 * r, 2};
    fam.family.validate();
    return fam;
}

VerificationFamily recurrent_verification_family(int d, int m, TimeInterval interval, double R, Nonlinearity sigma) {
    validate_interval(interval, "verify.interval");
    const double r = R + m * interval.max_abs();
    VerificationFamily fam{FamilySpec{}, ComparisonFn::worst_case(1.0, 1.0, interval), interval, R, r, m, "recurrent"};
    fam.family.kind = FieldKind::Recurrent;
    fam.family.dim = d;
    fam.family.nonlinearity = sigma;
    fam.family.validate();
    return fam;
}

namespace {

Mat sample_ball(Rng& rng, int count, int d, double radius) {
    Mat pts(count, d);
    for (int i = 0; i < count; ++i) pts.row(i) = uniform_in_ball(rng, d, radius).transpose();
    return pts;
}

// Points where |ΔA x + Δu| peaks over the ball of radius r.
void add_matrix_candidates(const VectorField& f, const VectorField& g, double r, std::vector<Vec>& out) {
    if (f.kind() == FieldKind::Constant) return;
    const int d = f.dim();
    const Vec dp = f.params() - g.params();
    Mat dA(d, d);
    for (int i = 0; i < d; ++i) dA.row(i) = dp.segment(i * d, d).transpose();
    const Vec du = dp.tail(d);
    Eigen::JacobiSVD<Mat> svd(dA, Eigen::ComputeFullV);
    const Vec v = svd.matrixV().col(0);
    out.push_back(r * v);
    out.push_back(-r * v);
    const Vec w = dA.transpose() * du;
    if (w.norm() > 0.0) out.push_back(r * w / w.norm());
    out.push_back(Vec::Zero(d));
}

double c0_distance(const VectorField& f, const VectorField& g, const Mat& sample, const std::vector<Vec>& extra) {
    const int d = f.dim();
    Vec a(d), b(d);
    double best = 0.0;
    for (Eigen::Index i = 0; i < sample.rows(); ++i) {
        const Vec x = sample.row(i).transpose();
        f.evaluate(x, a);
        g.evaluate(x, b);
        best = std::max(best, (a - b).norm());
    }
    for (const auto& x : extra) {
        f.evaluate(x, a);
        g.evaluate(x, b);
        best = std::max(best, (a - b).norm());
    }
    return best;
}

VectorField perturbed(const VectorField& f, const FamilySpec& family, Rng& rng) {
    VectorField g = f;
    const double scale = std::pow(10.0, -uniform(rng, 0.0, 3.0)) / std::sqrt(static_cast<double>(f.dim()));
    g.set_params(f.params() + scale * gaussian_vector(rng, f.param_count()));
    project_to_family(g, family);
    return g;
}

Vec perturbed_point(const Vec& x, double R, Rng& rng) {
    const double scale = std::pow(10.0, -uniform(rng, 0.0, 3.0));
    Vec y = x + scale * gaussian_vector(rng, static_cast<int>(x.size())) / std::sqrt(static_cast<double>(x.size()));
    if (y.norm() > R) y *= R / y.norm();
    return y;
}

void append(std::vector<Vec>& out, const std::vector<Vec>& more) { out.insert(out.end(), more.begin(), more.end()); }

// States of a composition, grouped by layer.
std::vector<std::vector<Vec>> layer_paths(const std::vector<VectorField>& fields, const std::vector<double>& times,
                                          const Vec& xi, const FlowConfig& cfg, Vec& end) {
    std::vector<std::vector<Vec>> paths;
    Vec x = xi;
    for (std::size_t j = 0; j < fields.size(); ++j) {
        paths.push_back(flow_trajectory(fields[j], x, times[j], cfg));
        x = paths.back().back();
    }
    end = x;
    return paths;
}

class Tally {
public:
    Tally(std::string name, const VerificationFamily& fam, double tol) : tol_(tol) {
        report_.name = std::move(name);
        report_.family = fam.name;
        report_.min_slack = kInf;
    }

    bool violated(double lhs, double rhs) const { return lhs > rhs + tol_; }

    void record(double lhs, double rhs) {
        ++report_.trials;
        if (violated(lhs, rhs)) ++report_.violations;
        if (rhs > 0.0) report_.max_ratio = std::max(report_.max_ratio, lhs / rhs);
        report_.min_slack = std::min(report_.min_slack, rhs + tol_ - lhs);
    }

    void escalated() { ++report_.escalations; }
    LemmaReport done() const { return report_; }

private:
    double tol_;
    LemmaReport report_;
};

void validate_verify(const VerifyOptions& opt) {
    require(opt.trials >= 1, "verify.trials", "must be >= 1");
    require(opt.c0_samples >= 1, "verify.c0_samples", "must be >= 1");
    require(opt.tolerance >= 0.0, "verify.tolerance", "must be nonnegative");
    opt.flow.validate();
}

}  // namespace

LemmaReport verify_lemma_one_layer(const VerificationFamily& fam, const VerifyOptions& options) {
    validate_verify(options);
    Rng rng(options.seed);
    const int d = fam.family.dim;
    const double bar_B = fam.cf.bar_B();
    const Mat sample = sample_ball(rng, options.c0_samples, d, fam.K_tilde_radius);
    Tally tally("one_layer", fam, options.tolerance);
    for (int trial = 0; trial < options.trials; ++trial) {
        const VectorField f = sample_field(fam.family, rng);
        const VectorField g = trial % 2 ? perturbed(f, fam.family, rng) : sample_field(fam.family, rng);
        const Vec xi = uniform_in_ball(rng, d, fam.K_radius);
        const double t = uniform(rng, fam.interval.lo, fam.interval.hi);
        const auto pf = flow_trajectory(f, xi, t, options.flow);
        const auto pg = flow_trajectory(g, xi, t, options.flow);
        const double lhs = (pf.back() - pg.back()).norm();
        std::vector<Vec> extra = pf;
        append(extra, pg);
        add_matrix_candidates(f, g, fam.K_tilde_radius, extra);
        double norm = c0_distance(f, g, sample, extra);
        if (tally.violated(lhs, bar_B * norm)) {
            tally.escalated();
            const Mat more = sample_ball(rng, 10 * options.c0_samples, d, fam.K_tilde_radius);
            norm = std::max(norm, c0_distance(f, g, more, {}));
        }
        tally.record(lhs, bar_B * norm);
    }
    return tally.done();
}

LemmaReport verify_lemma_initial_condition(const VerificationFamily& fam, int k, const VerifyOptions& options) {
    validate_verify(options);
    require(k >= 1 && k <= fam.m, "verify.k", "must lie in [1, m] so trajectories stay in the invariant ball");
    Rng rng(options.seed);
    const int d = fam.family.dim;
    Tally tally("initial_condition", fam, options.tolerance);
    for (int trial = 0; trial < options.trials; ++trial) {
        std::vector<VectorField> fields;
        std::vector<double> times;
        for (int j = 0; j < k; ++j) {
            fields.push_back(sample_field(fam.family, rng));
            times.push_back(uniform(rng, fam.interval.lo, fam.interval.hi));
        }
        const Vec xi = uniform_in_ball(rng, d, fam.K_radius);
        const Vec xi2 = trial % 2 ? perturbed_point(xi, fam.K_radius, rng) : uniform_in_ball(rng, d, fam.K_radius);
        const double lhs =
            (compose_flows(fields, times, xi, options.flow) - compose_flows(fields, times, xi2, options.flow)).norm();
        tally.record(lhs, fam.cf.bar_beta_j((xi - xi2).norm(), k));
    }
    return tally.done();
}

LemmaReport verify_lemma_field_perturbation(const VerificationFamily& fam, const VerifyOptions& options) {
    validate_verify(options);
    Rng rng(options.seed);
    const int d = fam.family.dim;
    const int m = fam.m;
    const double bar_B = fam.cf.bar_B();
    const Mat sample = sample_ball(rng, options.c0_samples, d, fam.K_tilde_radius);
    Tally tally("field_perturbation", fam, options.tolerance);
    for (int trial = 0; trial < options.trials; ++trial) {
        std::vector<VectorField> f;
        std::vector<VectorField> g;
        std::vector<double> times;
        for (int j = 0; j < m; ++j) {
            f.push_back(sample_field(fam.family, rng));
            g.push_back(trial % 2 ? perturbed(f.back(), fam.family, rng) : sample_field(fam.family, rng));
            times.push_back(uniform(rng, fam.interval.lo, fam.interval.hi));
        }
        const Vec xi = uniform_in_ball(rng, d, fam.K_radius);
        Vec end_f, end_g;
        const auto pf = layer_paths(f, times, xi, options.flow, end_f);
        const auto pg = layer_paths(g, times, xi, options.flow, end_g);
        const double lhs = (end_f - end_g).norm();

        std::vector<double> norms(static_cast<std::size_t>(m));
        auto rhs_of = [&] {
            double rhs = 0.0;
            for (int j = 0; j < m; ++j)
                rhs += fam.cf.bar_beta_j(bar_B * norms[static_cast<std::size_t>(j)], m - 1 - j);
            return rhs;
        };
        for (int j = 0; j < m; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            std::vector<Vec> extra = pf[uj];
            append(extra, pg[uj]);
            add_matrix_candidates(f[uj], g[uj], fam.K_tilde_radius, extra);
            norms[uj] = c0_distance(f[uj], g[uj], sample, extra);
        }
        if (tally.violated(lhs, rhs_of())) {
            tally.escalated();
            const Mat more = sample_ball(rng, 10 * options.c0_samples, d, fam.K_tilde_radius);
            for (int j = 0; j < m; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                norms[uj] = std::max(norms[uj], c0_distance(f[uj], g[uj], more, {}));
            }
        }
        tally.record(lhs, rhs_of());
    }
    return tally.done();
}

// --- product nets on a toy class --------------------------------------------------------

void ToyClass::validate() const {
    require(d >= 1, "verify.toy.d", "must be >= 1");
    require(m >= 1, "verify.toy.m", "must be >= 1");
    validate_interval(interval, "verify.toy.interval");
    require(nonneg_finite(K_radius), "verify.toy.K_radius", "must be nonnegative and finite");
    require(nonneg_finite(field_bound), "verify.toy.field_bound", "must be nonnegative and finite");
    require(nonneg_finite(param_bound), "verify.toy.param_bound", "must be nonnegative and finite");
}

namespace {

// Grid on [-b, b] whose nearest point is within h of every coordinate.
struct Grid {
    double bound = 0.0;
    int points = 1;

    static Grid make(double bound, double h, const std::string& path) {
        if (bound == 0.0) return {0.0, 1};
        require(h > 0.0, path, "a zero net radius needs a degenerate coordinate range");
        const double count = std::ceil(bound / h) + 1.0;
        require(count < 1e9, path, "net is too fine");
        return {bound, static_cast<int>(count)};
    }

    double at(int k) const { return points == 1 ? 0.0 : -bound + 2.0 * bound * k / (points - 1); }

    int nearest(double x) const {
        if (points == 1) return 0;
        const double k = std::round((x + bound) * (points - 1) / (2.0 * bound));
        return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(points - 1)));
    }
};

Vec clip_ball(Vec v, double r) {
    const double n = v.norm();
    if (n > r) v *= r / n;
    return v;
}

struct ToyMember {
    std::vector<Vec> enc;  // (w, b) per layer
    std::vector<Vec> v;
    Vec xi;
};

ReconstructionMap toy_map(const ToyClass& toy, const ToyMember& g) {
    ReconstructionMap G;
    std::vector<Encoder> parts;
    for (int j = 0; j < toy.m; ++j) {
        const Vec& p = g.enc[static_cast<std::size_t>(j)];
        parts.push_back(Encoder::affine(p.head(toy.d), p[toy.d], toy.interval));
        G.fields.push_back(VectorField::constant(g.v[static_cast<std::size_t>(j)]));
    }
    G.encoder = ProductEncoder(std::move(parts));
    G.xi = g.xi;
    return G;
}

double map_distance(const ReconstructionMap& a, const ReconstructionMap& b, const Mat& pts) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const Vec x = pts.row(i).transpose();
        best = std::max(best, (a(x) - b(x)).norm());
    }
    return best;
}

}  // namespace

NetReport verify_proposition_net(const ToyClass& toy, double delta1, double delta2, double delta3, int trials,
                                 std::uint64_t seed, double budget, bool exhaustive) {
    toy.validate();
    require(delta1 >= 0.0 && delta2 >= 0.0 && delta3 >= 0.0, "verify.net_radii", "must be nonnegative");
    require(trials >= 1, "verify.trials", "must be >= 1");
    const int d = toy.d;
    const int m = toy.m;
    const double T = toy.interval.max_abs();
    const double enc_lip = toy.interval.length() / 4.0 * std::sqrt(toy.K_radius * toy.K_radius + 1.0);
    const double sd = std::sqrt(static_cast<double>(d));
    const Grid g_enc = Grid::make(toy.param_bound, enc_lip > 0.0 ? delta1 / (enc_lip * std::sqrt(d + 1.0)) : kInf,
                                  "verify.net_radii.encoder");
    const Grid g_field = Grid::make(toy.field_bound, delta2 / sd, "verify.net_radii.fields");
    const Grid g_xi = Grid::make(toy.K_radius, delta3 / sd, "verify.net_radii.initial");

    NetReport report;
    report.grid_points = {g_enc.points, g_field.points, g_xi.points};
    report.net_size = std::pow(g_enc.points, (d + 1.0) * m) * std::pow(g_field.points, static_cast<double>(d * m)) *
                      std::pow(g_xi.points, static_cast<double>(d));
    if (!(report.net_size <= budget)) {
        throw ConfigError("verify.net_budget", "net of " + std::to_string(report.net_size) +
                                                   " elements exceeds the budget of " + std::to_string(budget));
    }
    report.radius = m * toy.field_bound * T * delta1 + m * T * delta2 + delta3;
    report.exhaustive = exhaustive;

    Rng rng(seed);
    const Mat base = sample_ball(rng, exhaustive ? 256 : 2000, d, toy.K_radius);
    std::vector<ReconstructionMap> net;
    if (exhaustive) {
        const int coords = (d + 1) * m + d * m + d;
        std::vector<int> digit(static_cast<std::size_t>(coords), 0);
        auto radix = [&](int c) {
            if (c < (d + 1) * m) return g_enc.points;
            return c < (d + 1) * m + d * m ? g_field.points : g_xi.points;
        };
        for (;;) {
            ToyMember h;
            int c = 0;
            for (int j = 0; j < m; ++j) {
                Vec p(d + 1);
                for (int i = 0; i <= d; ++i) p[i] = g_enc.at(digit[static_cast<std::size_t>(c++)]);
                h.enc.push_back(p);
            }
            for (int j = 0; j < m; ++j) {
                Vec v(d);
                for (int i = 0; i < d; ++i) v[i] = g_field.at(digit[static_cast<std::size_t>(c++)]);
                h.v.push_back(clip_ball(v, toy.field_bound));
            }
            h.xi = Vec(d);
            for (int i = 0; i < d; ++i) h.xi[i] = g_xi.at(digit[static_cast<std::size_t>(c++)]);
            h.xi = clip_ball(h.xi, toy.K_radius);
            net.push_back(toy_map(toy, h));
            int pos = 0;
            while (pos < coords && ++digit[static_cast<std::size_t>(pos)] == radix(pos)) digit[static_cast<std::size_t>(pos++)] = 0;
            if (pos == coords) break;
        }
    }

    for (int trial = 0; trial < trials; ++trial) {
        ToyMember g;
        ToyMember h;
        Mat pts = base;
        std::vector<Vec> extra;
        for (int j = 0; j < m; ++j) {
            const Vec p = uniform_vector(rng, d + 1, -toy.param_bound, toy.param_bound);
            Vec q(d + 1);
            for (int i = 0; i <= d; ++i) q[i] = g_enc.at(g_enc.nearest(p[i]));
            g.enc.push_back(p);
            h.enc.push_back(q);
            const Vec dw = (p - q).head(d);
            if (dw.norm() > 0.0) {
                extra.push_back(toy.K_radius * dw / dw.norm());
                extra.push_back(-toy.K_radius * dw / dw.norm());
            }
            const Vec v = uniform_in_ball(rng, d, toy.field_bound);
            Vec w(d);
            for (int i = 0; i < d; ++i) w[i] = g_field.at(g_field.nearest(v[i]));
            g.v.push_back(v);
            h.v.push_back(clip_ball(w, toy.field_bound));
        }
        g.xi = uniform_in_ball(rng, d, toy.K_radius);
        h.xi = Vec(d);
        for (int i = 0; i < d; ++i) h.xi[i] = g_xi.at(g_xi.nearest(g.xi[i]));
        h.xi = clip_ball(h.xi, toy.K_radius);
        if (!extra.empty()) {
            pts.conservativeResize(base.rows() + static_cast<Eigen::Index>(extra.size()), d);
            for (std::size_t k = 0; k < extra.size(); ++k)
                pts.row(base.rows() + static_cast<Eigen::Index>(k)) = extra[k].transpose();
        }

        const ReconstructionMap G = toy_map(toy, g);
        double dist = 0.0;
        if (exhaustive) {
            dist = kInf;
            for (const auto& H : net) dist = std::min(dist, map_distance(G, H, pts));
        } else {
            dist = map_distance(G, toy_map(toy, h), pts);
        }
        ++report.trials;
        report.max_distance = std::max(report.max_distance, dist);
        if (dist > report.radius + 1e-9) ++report.violations;
    }
    return report;
}

}  // namespace orbitfit
