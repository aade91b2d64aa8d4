#pragma once

#include <optional>
#include <vector>

#include "orbitfit/common.hpp"
#include "orbitfit/rng.hpp"

/**
 * @file fields.hpp
 *
 * Parametric vector-field families on R^d (constant, affine and continuous-time
 * recurrent), the radial bump used to make them globally bounded and
 * Lipschitz, and comparison functions bounding trajectory divergence.
 */

namespace orbitfit {

/// Radial cutoff equal to 1 on |x| <= inner_radius and 0 on |x| >= outer_radius,
/// with a polynomial smoothstep in between.
struct BumpSpec {
    double inner_radius = 1.0;
    double outer_radius = 2.0;
    /// Continuity order k of the smoothstep; the polynomial has degree 2k+1
    /// (k = 2 is the quintic 6s^5 - 15s^4 + 10s^3).
    int profile = 2;

    void validate() const;
    double value(double radius) const;
    /// d value / d radius. Never positive.
    double slope(double radius) const;
    /// sup over radii of |slope|, attained at the midpoint of the transition band.
    double max_slope() const;

    friend bool operator==(const BumpSpec&, const BumpSpec&) = default;
};

/// Generalized smoothstep S_k on [0,1], clamped outside.
double smoothstep(int order, double s);
double smoothstep_derivative(int order, double s);

enum class FieldKind { Constant, Affine, Recurrent };

/// Componentwise nonlinearities, normalized by 1/sqrt(d) so that |sigma(x)| <= 1
/// and sigma is 1-Lipschitz.
enum class Nonlinearity { TanhComponentwise, ScaledSigmoid };

/// What to do with ‖A‖ > 1 or |u| > 1 at construction.
enum class NormPolicy { Rescale, Reject };

/// Largest singular value of A.
double spectral_norm(const Mat& A);

/// Largest eigenvalue of (A + A^T)/2, an upper bound on max Re(eig(A)).
double symmetric_part_max_eigenvalue(const Mat& A);

class VectorField {
public:
    static VectorField constant(Vec v, std::optional<BumpSpec> bump = std::nullopt);
    static VectorField affine(Mat A, Vec u, std::optional<BumpSpec> bump = std::nullopt,
                              NormPolicy policy = NormPolicy::Rescale);
    static VectorField recurrent(Mat A, Vec u, Nonlinearity sigma = Nonlinearity::TanhComponentwise,
                                 std::optional<BumpSpec> bump = std::nullopt,
                                 NormPolicy policy = NormPolicy::Rescale);

    FieldKind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    const Mat& A() const noexcept { return A_; }
    const Vec& u() const noexcept { return u_; }
    /// Direction of a constant field.
    const Vec& v() const noexcept { return u_; }
    Nonlinearity nonlinearity() const noexcept { return sigma_; }
    const std::optional<BumpSpec>& bump() const noexcept { return bump_; }

    /// bump(x) * f_raw(x). Throws DimensionError on size mismatch.
    Vec operator()(const Vec& x) const;

    /// Unchecked evaluation into a preallocated vector.
    void evaluate(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> out) const;

    /// Value together with the Jacobians with respect to x (d x d) and to the
    /// parameter vector (d x param_count()).
    void evaluate_with_jacobians(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> out,
                                 Eigen::Ref<Mat> d_x, Eigen::Ref<Mat> d_params) const;

    /// Constant: v. Affine/Recurrent: A row-major followed by u.
    int param_count() const noexcept;
    Vec params() const;
    /// Overwrites the parameters without enforcing any constraint.
    void set_params(const Eigen::Ref<const Vec>& p);

private:
    VectorField(FieldKind kind, int dim) : kind_(kind), dim_(dim) {}

    void raw_value(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> out) const;

    FieldKind kind_;
    int dim_;
    Mat A_;
    Vec u_;
    Nonlinearity sigma_ = Nonlinearity::TanhComponentwise;
    std::optional<BumpSpec> bump_;
};

/// A family of fields sharing kind, dimension, bump and norm constraints.
struct FamilySpec {
    FieldKind kind = FieldKind::Affine;
    int dim = 2;
    std::optional<BumpSpec> bump;
    /// |v| <= constant_bound for constant fields.
    double constant_bound = 1.0;
    Nonlinearity nonlinearity = Nonlinearity::TanhComponentwise;
    NormPolicy norm_policy = NormPolicy::Rescale;

    void validate() const;
};

struct FieldConstants {
    double L0 = 0.0;
    double L = 0.0;
};

/// Uniform (sup-norm, Lipschitz) constants valid for every member of the family.
/// Affine families need a bump: L0 = R_out + 1 and L = 1 + (R_out + 1) max|rho'|.
FieldConstants field_constants(const FamilySpec& family);

/// Initialization draw: A entries ~ U(-1/sqrt d, 1/sqrt d) then spectrally
/// clipped, u (or v) uniform in the unit (or constant_bound) ball.
VectorField sample_field(const FamilySpec& family, Rng& rng);

/// Projects parameters onto the family constraints: A <- A / max(1, ‖A‖),
/// u onto the unit ball, v onto the constant_bound ball.
void project_to_family(VectorField& f, const FamilySpec& family);

/// beta(r, t): an upper bound on |e^{tf}xi - e^{tf}xi'| given |xi - xi'| = r.
class ComparisonFn {
public:
    enum class Kind { WorstCase, Exponential, ExpStable, Tabulated, PointwiseMax };

    /// min{r e^{L|t|}, r + 2 L0 |t|}.
    static ComparisonFn worst_case(double L, double L0, TimeInterval interval);
    /// r e^{L|t|}.
    static ComparisonFn exponential(double L, TimeInterval interval);
    /// r e^{-lambda t}, positive times only.
    static ComparisonFn exp_stable(double lambda, TimeInterval interval);
    /// Bilinear interpolation of values(i, j) = beta(r_grid[i], t_grid[j]).
    /// r_grid must start at 0 and t_grid must cover the interval.
    static ComparisonFn tabulated(std::vector<double> r_grid, std::vector<double> t_grid, Mat values,
                                  TimeInterval interval);
    /// Pointwise maximum of several comparison functions on the same interval.
    static ComparisonFn pointwise_max(std::vector<ComparisonFn> parts);

    Kind kind() const noexcept { return kind_; }
    const TimeInterval& interval() const noexcept { return interval_; }
    double L() const noexcept { return L_; }
    double L0() const noexcept { return L0_; }
    double lambda() const noexcept { return lambda_; }
    const std::vector<double>& r_grid() const noexcept { return r_grid_; }
    const std::vector<double>& t_grid() const noexcept { return t_grid_; }
    const Mat& table() const noexcept { return table_; }
    const std::vector<ComparisonFn>& parts() const noexcept { return parts_; }

    /// Throws DomainError for negative t under ExpStable.
    double beta(double r, double t) const;
    /// Right partial derivative of beta in r at r = 0.
    double right_slope_at_zero(double t) const;

    /// max over t in the interval of beta(r, t).
    double bar_beta(double r) const;
    /// j-fold iterate of bar_beta; the 0-th iterate is the identity.
    double bar_beta_j(double r, int j) const;
    /// g when bar_beta(r) = g r for all r (closed-form rho solutions apply).
    std::optional<double> linear_gain() const;

    /// max_t |∫_0^t ∂+beta/∂r(0, t - s) ds|.
    double bar_B() const;

private:
    ComparisonFn(Kind kind, TimeInterval interval) : kind_(kind), interval_(interval) {}

    double table_beta(double r, double t) const;

    Kind kind_;
    TimeInterval interval_;
    double L_ = 0.0;
    double L0_ = 0.0;
    double lambda_ = 0.0;
    std::vector<double> r_grid_;
    std::vector<double> t_grid_;
    Mat table_;
    std::vector<ComparisonFn> parts_;
};

/// Worst-case Gronwall comparison function for a family, from its (L0, L).
ComparisonFn family_comparison(const FamilySpec& family, TimeInterval interval);

/// Pointwise max of the members' worst-case comparison functions.
ComparisonFn mixture_comparison(const std::vector<FamilySpec>& families, TimeInterval interval);

/// True when max eig((A + A^T)/2) <= -lambda, which certifies |e^{tA}| <= e^{-lambda t}.
bool satisfies_exp_stability(const Mat& A, double lambda);

}  // namespace orbitfit
