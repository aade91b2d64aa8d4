#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orbitfit/train.hpp"

/**
 * @file bounds.hpp
 *
 * Covering-number bookkeeping, the entropy-integral generalization bound,
 * Monte-Carlo Rademacher estimates, and numerical checks of the flow
 * perturbation inequalities and of the product-net construction.
 *
 * All bounds hold up to an absolute constant; the numbers reported here use
 * constant 1 unless a field says otherwise.
 */

namespace orbitfit {

/// How log covering numbers of a parametric set scale with the radius.
/// Ball: k log(1 + C/δ), valid for every δ > 0.
/// Power: k log(C/δ) clipped at 0, the form used in closed-form integrals.
enum class CoveringModel { Ball, Power };

std::string to_string(CoveringModel model);

/// A class with a Lipschitz parametrization: log N(δ) ≈ params · log(1 + C/δ).
struct FamilyDescriptor {
    int params = 0;
    double covering_constant = 0.0;

    /// C = 2 · diam(Θ) · L_param.
    static FamilyDescriptor from_parametrization(int params, double param_diameter, double param_lipschitz);
};

double covering_log(const FamilyDescriptor& family, double delta, CoveringModel model = CoveringModel::Ball);
/// log N(B_R ⊂ R^d, δ) <= d log(1 + 2R/δ).
double covering_log_K(double R, int d, double delta, CoveringModel model = CoveringModel::Ball);
double covering_log_family(const FamilyDescriptor& family, double delta, CoveringModel model = CoveringModel::Ball);

/// Data of a hypothesis class sufficient for the entropy bound.
struct ClassSpec {
    int m = 1;
    int d = 2;
    TimeInterval interval{-1.0, 1.0};
    FamilyDescriptor encoder;
    FamilyDescriptor fields;
    ComparisonFn cf = ComparisonFn::worst_case(1.0, 1.0, {-1.0, 1.0});
    /// sup of |f| over the family on the invariant set.
    double L0 = 1.0;
    /// Radius of the ball K holding the data and the initial conditions.
    double K_radius = 1.0;
    /// Radius of the invariant ball holding all trajectories.
    double K_tilde_radius = 1.0;
    /// Bound on the loss, diam(K ∪ K̃).
    double diameter = 2.0;
    CoveringModel covering = CoveringModel::Ball;
    std::string name;

    void validate() const;
};

/// Affine squashed encoders a(x) = T0 + (T1 - T0) logistic(w·x + b) with
/// |(w, b)| <= param_radius, measured in C0(B_R).
FamilyDescriptor affine_encoder_descriptor(int d, TimeInterval interval, double R, double param_radius);
/// Squashed MLP encoders with every weight block of spectral norm <= param_radius.
FamilyDescriptor mlp_encoder_descriptor(const EncoderSpec& spec, int d, TimeInterval interval, double R,
                                        double param_radius);

/// Constant fields |v| <= c without bump: β(r, t) = r, B̄ = T̄, K̃ = B(R + m T̄ c).
ClassSpec constant_class(int m, int d, TimeInterval interval, double R, double c, FamilyDescriptor encoder);
/// Contractive fields with constant lambda on positive times.
ClassSpec exp_stable_class(int m, int d, double T, double lambda, double L0, FamilyDescriptor encoder,
                           FamilyDescriptor fields, double R, double diameter);
/// Bump-truncated affine fields, ‖A‖ <= 1, |u| <= 1; K̃ = B((R + 1) e^{m T̄}).
ClassSpec affine_class(int m, int d, TimeInterval interval, double R, FamilyDescriptor encoder);
/// Recurrent fields σ(Ax + u), ‖A‖ <= 1, |u| <= 1; K̃ = B(R + m T̄).
ClassSpec recurrent_class(int m, int d, TimeInterval interval, double R, FamilyDescriptor encoder);

enum class RhoIndex { Encoder = 1, Fields = 2, Initial = 3 };

/// Largest ρ >= 0 with
///   Encoder: Σ_{j<m} β̄^j(L0 B̄ ρ) <= δ
///   Fields:  Σ_{j<m} β̄^j(B̄ ρ) <= δ
///   Initial: β̄^m(ρ) <= δ.
/// +inf when the left side stays below δ; closed form for linear β̄,
/// otherwise bisection to relative tolerance 1e-12 returning a feasible value.
double solve_rho(const ComparisonFn& cf, int m, double L0, double bar_B, double delta, RhoIndex which);

struct DudleyOptions {
    /// γ ranges over {k/resolution : k_i >= 1, Σ k_i = resolution}.
    int gamma_resolution = 50;
    bool optimize_gamma = true;
    /// Adaptive quadrature runs over [εD, D]; the head [εD e^{-30}, εD] is
    /// integrated separately and reported as head_contribution.
    double epsilon = 1e-6;
    double quadrature_rel_tol = 1e-10;
};

struct RhoSample {
    double delta = 0.0;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;
    double integrand = 0.0;
};

/// Closed-form comparison for contractive classes with the Power covering
/// model and γ = (1/3, 1/3, 1/3):
///   (3√π/2)(m^{3/2}/λ (C_A L0 √p + C_F √q) + C_K √d)/√n.
/// The closed form bounds the sum of three separate integrals, so it is tight
/// only when one term dominates.
struct ClosedFormCheck {
    double closed_form = 0.0;
    double constant = 0.0;
    double quadrature = 0.0;
    double relative_gap = 0.0;
};

struct BoundReport {
    int n = 0;
    double bar_B = 0.0;
    double L0 = 0.0;
    double diameter = 0.0;
    std::array<double, 3> gamma{};
    /// ∫_0^D F(δ) dδ, independent of n.
    double entropy_integral = 0.0;
    /// entropy_integral / √n.
    double value = 0.0;
    double head_contribution = 0.0;
    int integrand_evaluations = 0;
    std::vector<RhoSample> rho_samples;
    std::optional<ClosedFormCheck> closed_form;
    DudleyOptions options;
};

/// F(δ) = sqrt(m logN_A(ρ1(γ1δ)) + m logN_F(ρ2(γ2δ)) + logN_K(ρ3(γ3δ))).
double entropy_integrand(const ClassSpec& spec, double bar_B, double delta, const std::array<double, 3>& gamma,
                         RhoSample* sample = nullptr);

BoundReport dudley_bound(const ClassSpec& spec, int n, const DudleyOptions& options = {});

/// Closed form evaluated against quadrature for an ExpStable class.
ClosedFormCheck exp_stable_closed_form(const ClassSpec& spec, int n, const DudleyOptions& options = {});

/// 4 R̂_n + D sqrt(2 log(1/δ)/n), δ the confidence parameter.
double theorem2_certificate(double rademacher, double diameter, int n, double confidence_delta);

// --- Rademacher complexity ----------------------------------------------------

/// A loss class ℓ ∘ 𝒢 on a fixed sample.
class RademacherClass {
public:
    virtual ~RademacherClass() = default;
    virtual void bind(const Mat& points) = 0;
    /// sup over the class of (1/n) Σ ε_i ℓ(x_i, G).
    virtual double sup(std::span<const double> eps, std::uint64_t seed) const = 0;
    /// False when sup() is only an inner-optimization lower estimate.
    virtual bool exact() const = 0;
};

/// Finitely many maps; the supremum is exact.
class FiniteClass final : public RademacherClass {
public:
    explicit FiniteClass(std::vector<ReconstructionMap> maps);
    void bind(const Mat& points) override;
    double sup(std::span<const double> eps, std::uint64_t seed) const override;
    bool exact() const override { return true; }
    int size() const { return static_cast<int>(maps_.size()); }

private:
    std::vector<ReconstructionMap> maps_;
    Mat losses_;  // maps x points
};

/// The full parametric class; the supremum is approximated by minimizing the
/// weighted risk with weights -ε_i/n.
class ParametricClass final : public RademacherClass {
public:
    ParametricClass(ModelSpec spec, TrainConfig inner);
    void bind(const Mat& points) override { points_ = points; }
    double sup(std::span<const double> eps, std::uint64_t seed) const override;
    bool exact() const override { return false; }

private:
    ModelSpec spec_;
    TrainConfig inner_;
    Mat points_;
};

struct RademacherEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    int draws = 0;
    bool lower_estimate = false;
    std::vector<double> values;
};

/// Average of the supremum over n_eps_draws sign vectors. Draw k uses
/// derive_seed(seed, k) for the signs and for the inner optimization.
RademacherEstimate rademacher_estimate(RademacherClass& cls, const Dataset& S, int n_eps_draws, std::uint64_t seed);

/// D sqrt(2 log N / n): finite-class maximal inequality.
double massart_bound(int class_size, double diameter, int n);

// --- perturbation inequality checks -------------------------------------------

/// Field family with its comparison function and invariant balls.
struct VerificationFamily {
    FamilySpec family;
    ComparisonFn cf;
    TimeInterval interval;
    double K_radius = 1.0;
    double K_tilde_radius = 1.0;
    int m = 1;
    std::string name;
};

/// Bump-truncated affine fields with the plateau covering K̃ = B((R+1)e^{mT̄}),
/// compared with r e^{|t|}.
VerificationFamily affine_verification_family(int d, int m, TimeInterval interval, double R);
/// Recurrent fields without bump on K̃ = B(R + mT̄), worst-case comparison with L = L0 = 1.
VerificationFamily recurrent_verification_family(int d, int m, TimeInterval interval, double R,
                                                 Nonlinearity sigma = Nonlinearity::TanhComponentwise);

struct VerifyOptions {
    int trials = 1000;
    std::uint64_t seed = 0;
    double tolerance = 1e-6;
    /// Uniform K̃ samples for sup-norm estimates of field differences.
    int c0_samples = 10000;
    FlowConfig flow{};
};

struct LemmaReport {
    std::string name;
    std::string family;
    int trials = 0;
    int violations = 0;
    /// max of lhs / rhs over trials with rhs > 0.
    double max_ratio = 0.0;
    /// min of rhs + tolerance - lhs.
    double min_slack = 0.0;
    /// Trials re-checked with 10x more sup-norm samples.
    int escalations = 0;
};

/// |e^{tf}ξ - e^{tf'}ξ| <= B̄ ‖f - f'‖.
LemmaReport verify_lemma_one_layer(const VerificationFamily& fam, const VerifyOptions& options);
/// |E ξ - E ξ'| <= β̄^k(|ξ - ξ'|) for k-fold compositions.
LemmaReport verify_lemma_initial_condition(const VerificationFamily& fam, int k, const VerifyOptions& options);
/// |E ξ - E' ξ| <= Σ_j β̄^{m-j}(B̄ ‖f_j - f'_j‖).
LemmaReport verify_lemma_field_perturbation(const VerificationFamily& fam, const VerifyOptions& options);

/// Constant fields |v| <= field_bound in R^d, affine squashed encoders with
/// parameters in [-param_bound, param_bound]^{d+1}, ξ in B(K_radius).
struct ToyClass {
    int d = 1;
    int m = 1;
    TimeInterval interval{-1.0, 1.0};
    double K_radius = 1.0;
    double field_bound = 1.0;
    double param_bound = 1.0;

    void validate() const;
};

struct NetReport {
    int trials = 0;
    int violations = 0;
    /// Grid points per coordinate for encoder parameters, field vectors and ξ.
    std::array<int, 3> grid_points{};
    double net_size = 0.0;
    /// m L0 T̄ δ1 + m T̄ δ2 + δ3 with L0 = field bound.
    double radius = 0.0;
    double max_distance = 0.0;
    bool exhaustive = false;
};

/// Builds product grid nets at radii (δ1, δ2, δ3), samples class members,
/// and checks the C0(K) distance to the net against the composed radius.
/// Throws ConfigError when the net exceeds `budget` elements.
NetReport verify_proposition_net(const ToyClass& toy, double delta1, double delta2, double delta3, int trials,
                                 std::uint64_t seed, double budget = 1e7, bool exhaustive = false);

}  // namespace orbitfit
