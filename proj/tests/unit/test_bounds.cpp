#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "orbitfit/bounds.hpp"
#include "orbitfit/data.hpp"
#include "orbitfit/errors.hpp"

using namespace orbitfit;
using doctest::Approx;

namespace {

// Independent bisection for the largest x with phi(x) <= delta, phi increasing.
template <class Phi>
double bisect(Phi phi, double delta, double hi) {
    double lo = 0.0;
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) <= delta ? lo : hi) = mid;
    }
    return lo;
}

ClassSpec singleton_class() {
    ClassSpec s;
    s.m = 2;
    s.d = 2;
    s.interval = {-1.0, 1.0};
    s.encoder = {3, 0.0};
    s.fields = {0, 5.0};
    s.cf = ComparisonFn::worst_case(1.0, 1.0, s.interval);
    s.L0 = 1.0;
    s.K_radius = 0.0;
    s.K_tilde_radius = 2.0;
    s.diameter = 4.0;
    return s;
}

ClassSpec small_class() {
    const TimeInterval I{-0.5, 0.5};
    return recurrent_class(2, 2, I, 1.0, affine_encoder_descriptor(2, I, 1.0, 3.0));
}

DudleyOptions fast_options() {
    DudleyOptions o;
    o.gamma_resolution = 12;
    return o;
}

std::vector<ReconstructionMap> random_finite_class(int N, int d, std::uint64_t seed) {
    Rng rng(seed);
    ModelSpec spec;
    spec.family = {FieldKind::Constant, d};
    spec.encoder.kind = EncoderKind::AffineSquashed;
    spec.encoder.init_scale = 2.0;
    spec.interval = {-1.0, 1.0};
    const Mat pts = Mat::NullaryExpr(4, d, [&] { return uniform(rng, -1.0, 1.0); });
    std::vector<ReconstructionMap> maps;
    for (int k = 0; k < N; ++k) maps.push_back(sample_model(spec, pts, 4, rng));
    return maps;
}

Dataset segment(int n, std::uint64_t seed) {
    GeneratorSpec g;
    g.n = n;
    g.seed = seed;
    return generate(g);
}

}  // namespace

TEST_SUITE("bounds") {
    TEST_CASE("ball covering numbers by hand") {
        CHECK(covering_log_K(1.0, 1, 1.0) == Approx(std::log(3.0)));
        CHECK(covering_log_K(1.0, 3, 0.5) == Approx(3.0 * std::log(5.0)));
        CHECK(covering_log_K(1.0, 2, 2.0) <= 2.0 * std::log(2.0) + 1e-15);
        CHECK(covering_log_K(1.0, 2, 1e12) < 1e-11);
        CHECK_THROWS_AS(covering_log_K(1.0, 2, -1.0), DomainError);
        double prev = INFINITY;
        for (double delta = 1e-6; delta < 10.0; delta *= 1.7) {
            const double v = covering_log_K(2.0, 3, delta);
            CHECK(v >= 0.0);
            CHECK(v <= prev);
            prev = v;
        }
    }

    TEST_CASE("family covering") {
        const auto zero = FamilyDescriptor::from_parametrization(5, 2.0, 0.0);
        CHECK(covering_log_family(zero, 0.1) == 0.0);
        const auto fam = FamilyDescriptor::from_parametrization(4, 2.0, 1.5);
        CHECK(fam.covering_constant == Approx(6.0));
        CHECK(covering_log_family(fam, 0.5) == Approx(4.0 * std::log(13.0)));
        CHECK(covering_log_family(fam, 0.5, CoveringModel::Power) == Approx(4.0 * std::log(12.0)));
        CHECK(covering_log_family(fam, 100.0, CoveringModel::Power) == 0.0);
        const TimeInterval I{-1.0, 1.0};
        const ClassSpec aff = affine_class(2, 3, I, 1.0, affine_encoder_descriptor(3, I, 1.0, 1.0));
        CHECK(aff.fields.params == 3 * 3 + 3);
        const ClassSpec rec = recurrent_class(2, 3, I, 1.5, affine_encoder_descriptor(3, I, 1.5, 1.0));
        CHECK(rec.K_tilde_radius == Approx(1.5 + 2.0 * 1.0));
        CHECK(aff.K_tilde_radius == Approx(2.0 * std::exp(2.0)));
    }

    TEST_CASE("rho closed forms for contractive comparisons") {
        const double lambda = 2.0;
        const auto cf = ComparisonFn::exp_stable(lambda, {0.0, 1.0});
        const double bB = cf.bar_B();
        const int m = 3;
        const double L0 = 1.5;
        for (double delta : {0.0, 0.01, 0.7, 3.0}) {
            CHECK(solve_rho(cf, m, L0, bB, delta, RhoIndex::Encoder) == Approx(lambda * delta / (m * L0)));
            CHECK(solve_rho(cf, m, L0, bB, delta, RhoIndex::Fields) == Approx(lambda * delta / m));
            CHECK(solve_rho(cf, m, L0, bB, delta, RhoIndex::Initial) == Approx(delta));
            // Same answers from an independent bisection on the defining inequality.
            const auto phi1 = [&](double x) { return m * L0 * bB * x; };
            CHECK(solve_rho(cf, m, L0, bB, delta, RhoIndex::Encoder) ==
                  Approx(bisect(phi1, delta, delta / (L0 * bB) + 1.0)).epsilon(1e-10).scale(1e-12));
        }
    }

    TEST_CASE("rho for the exponential comparison by hand") {
        const auto cf = ComparisonFn::exponential(1.0, {0.0, 1.0});
        // β̄^j(r) = r e^j, so (1 + e) ρ2 = 1 + e when B̄ is normalized to 1.
        CHECK(solve_rho(cf, 2, 1.0, 1.0, 1.0 + std::numbers::e, RhoIndex::Fields) == Approx(1.0));
    }

    TEST_CASE("rho by bisection satisfies its inequality and is monotone") {
        const TimeInterval I{-1.0, 1.0};
        const auto cf = ComparisonFn::worst_case(1.0, 0.5, I);
        const double bB = cf.bar_B();
        const int m = 3;
        const double L0 = 0.5;
        for (RhoIndex which : {RhoIndex::Encoder, RhoIndex::Fields, RhoIndex::Initial}) {
            double prev = 0.0;
            for (double delta = 1e-4; delta < 50.0; delta *= 1.5) {
                const double rho = solve_rho(cf, m, L0, bB, delta, which);
                CHECK(rho >= prev);
                prev = rho;
                double lhs = 0.0;
                if (which == RhoIndex::Initial) {
                    lhs = cf.bar_beta_j(rho, m);
                } else {
                    const double c = which == RhoIndex::Encoder ? L0 * bB : bB;
                    for (int j = 0; j < m; ++j) lhs += cf.bar_beta_j(c * rho, j);
                }
                CHECK(lhs <= delta * (1.0 + 1e-10));
                CHECK(lhs >= delta * (1.0 - 1e-10));
            }
        }
        CHECK(solve_rho(cf, m, L0, bB, 0.0, RhoIndex::Fields) == 0.0);
    }

    TEST_CASE("zero entropy gives a zero bound") {
        const auto r = dudley_bound(singleton_class(), 100, fast_options());
        CHECK(r.value == 0.0);
    }

    TEST_CASE("exact inverse square-root scaling in n") {
        const ClassSpec s = small_class();
        const auto a = dudley_bound(s, 100, fast_options());
        const auto b = dudley_bound(s, 200, fast_options());
        const auto c = dudley_bound(s, 400, fast_options());
        CHECK(std::abs(b.value / a.value - 1.0 / std::sqrt(2.0)) <= 1e-12);
        CHECK(std::abs(c.value / a.value - 0.5) <= 1e-12);
        CHECK(a.entropy_integral == b.entropy_integral);
    }

    TEST_CASE("bound is monotone in the covering constants") {
        ClassSpec s = small_class();
        const double base = dudley_bound(s, 50, fast_options()).value;
        s.encoder.covering_constant *= 0.5;
        const double smaller = dudley_bound(s, 50, fast_options()).value;
        CHECK(smaller <= base);
        s.fields.covering_constant *= 0.5;
        CHECK(dudley_bound(s, 50, fast_options()).value <= smaller);
    }

    TEST_CASE("report bookkeeping") {
        const auto r = dudley_bound(small_class(), 64, fast_options());
        CHECK(r.rho_samples.size() == 25);
        for (const auto& s : r.rho_samples) {
            CHECK(s.rho1 >= 0.0);
            CHECK(s.rho2 >= 0.0);
            CHECK(s.rho3 >= 0.0);
            CHECK(std::isfinite(s.integrand));
        }
        CHECK(r.gamma[0] + r.gamma[1] + r.gamma[2] == Approx(1.0));
        CHECK(r.head_contribution >= 0.0);
        CHECK(r.head_contribution < 1e-3 * r.entropy_integral);
        CHECK_FALSE(r.closed_form.has_value());
        DudleyOptions fixed = fast_options();
        fixed.optimize_gamma = false;
        const auto third = dudley_bound(small_class(), 64, fixed);
        CHECK(third.gamma[0] == Approx(1.0 / 3.0));
        CHECK(r.value <= third.value * (1.0 + 1e-3));
    }

    TEST_CASE("entropy integral against an independent quadrature") {
        // Midpoint rule in log δ with many nodes on the whole range.
        const ClassSpec s = small_class();
        DudleyOptions fixed;
        fixed.optimize_gamma = false;
        const auto r = dudley_bound(s, 1, fixed);
        const std::array<double, 3> g{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        const double bB = s.cf.bar_B();
        const double a = std::log(s.diameter * 1e-6 * std::exp(-30.0));
        const double b = std::log(s.diameter);
        const int N = 40000;
        double sum = 0.0;
        for (int i = 0; i < N; ++i) {
            const double u = a + (i + 0.5) * (b - a) / N;
            sum += entropy_integrand(s, bB, std::exp(u), g) * std::exp(u) * (b - a) / N;
        }
        CHECK(r.entropy_integral == Approx(sum).epsilon(1e-6));
    }

    TEST_CASE("generalization certificate") {
        CHECK(theorem2_certificate(0.0, 1.0, 2, std::exp(-1.0)) == Approx(1.0));
        CHECK(theorem2_certificate(0.0, 3.0, 10, 1.0 - 1e-12) < 1e-5);
        const double a = theorem2_certificate(0.0, 2.0, 100, 0.1);
        const double b = theorem2_certificate(0.0, 2.0, 400, 0.1);
        CHECK(b / a == Approx(0.5).epsilon(1e-14));
        CHECK(theorem2_certificate(0.25, 2.0, 100, 0.1) == Approx(1.0 + a));
        CHECK_THROWS_AS(theorem2_certificate(0.0, 1.0, 10, 1.5), ConfigError);
    }

    TEST_CASE("closed form applies only to contractive classes") {
        CHECK_THROWS_AS(exp_stable_closed_form(small_class(), 10), ConfigError);
    }

    TEST_CASE("singleton class has zero-mean Rademacher average") {
        FiniteClass one(random_finite_class(1, 2, 4));
        const auto est = rademacher_estimate(one, segment(64, 1), 200, 8);
        CHECK_FALSE(est.lower_estimate);
        CHECK(std::abs(est.mean) <= 3.0 * est.std_err);
    }

    TEST_CASE("finite class stays under the Massart bound") {
        const auto maps = random_finite_class(32, 2, 5);
        FiniteClass cls(maps);
        for (int n : {64, 256}) {
            const Dataset S = segment(n, 2);
            const auto est = rademacher_estimate(cls, S, 100, 3);
            double D = 0.0;
            for (const auto& G : maps) D = std::max(D, reconstruction_errors(G, S.points()).maxCoeff());
            CHECK(est.mean <= massart_bound(32, D, n) + 3.0 * est.std_err);
        }
        CHECK(massart_bound(32, 2.0, 64) == Approx(2.0 * std::sqrt(2.0 * std::log(32.0) / 64.0)));
    }

    TEST_CASE("Rademacher averages shrink like n^{-1/2}") {
        const auto maps = random_finite_class(16, 2, 6);
        FiniteClass cls(maps);
        double small = 0.0;
        double large = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            small += rademacher_estimate(cls, segment(100, 100 + trial), 50, trial).mean;
            large += rademacher_estimate(cls, segment(400, 200 + trial), 50, trial).mean;
        }
        const double ratio = small / large;
        CHECK(ratio >= 1.6);
        CHECK(ratio <= 2.4);
    }

    TEST_CASE("parametric class gives a reproducible lower estimate") {
        ModelSpec spec;
        spec.family = {FieldKind::Constant, 2};
        spec.encoder.kind = EncoderKind::AffineSquashed;
        TrainConfig inner;
        inner.max_iters = 30;
        inner.restarts = 1;
        ParametricClass cls(spec, inner);
        const Dataset S = segment(20, 3);
        const auto a = rademacher_estimate(cls, S, 4, 9);
        const auto b = rademacher_estimate(cls, S, 4, 9);
        CHECK(a.lower_estimate);
        CHECK(a.values == b.values);
    }

    TEST_CASE("one-layer check: identical and constant fields") {
        const TimeInterval I{-0.8, 0.5};
        const double c = 1.5;
        VerificationFamily fam{FamilySpec{FieldKind::Constant, 2, std::nullopt, c}, ComparisonFn::worst_case(0.0, c, I),
                               I, 1.0, 1.0 + I.max_abs() * c, 1, "constant"};
        CHECK(fam.cf.bar_B() == Approx(I.max_abs()));
        VerifyOptions opt;
        opt.trials = 200;
        opt.c0_samples = 50;
        const auto rep = verify_lemma_one_layer(fam, opt);
        CHECK(rep.violations == 0);
        // |t||v - v'| <= T̄ |v - v'|: the ratio never exceeds one.
        CHECK(rep.max_ratio <= 1.0 + 1e-12);
    }

    TEST_CASE("perturbation checks on both families at small budgets") {
        VerifyOptions opt;
        opt.trials = 40;
        opt.c0_samples = 500;
        opt.seed = 3;
        for (const auto& fam : {affine_verification_family(2, 3, {-1.0, 1.0}, 1.0),
                                recurrent_verification_family(2, 3, {-1.0, 1.0}, 1.0)}) {
            CHECK(verify_lemma_one_layer(fam, opt).violations == 0);
            CHECK(verify_lemma_initial_condition(fam, 1, opt).violations == 0);
            CHECK(verify_lemma_initial_condition(fam, 3, opt).violations == 0);
            CHECK(verify_lemma_field_perturbation(fam, opt).violations == 0);
        }
        CHECK_THROWS_AS(verify_lemma_initial_condition(recurrent_verification_family(2, 2, {-1.0, 1.0}, 1.0), 3, opt),
                        ConfigError);
    }

    TEST_CASE("m = 1 field perturbation reduces to the one-layer bound") {
        const auto fam = recurrent_verification_family(2, 1, {-1.0, 1.0}, 1.0);
        VerifyOptions opt;
        opt.trials = 30;
        opt.c0_samples = 300;
        const auto a = verify_lemma_one_layer(fam, opt);
        const auto b = verify_lemma_field_perturbation(fam, opt);
        CHECK(a.violations == 0);
        CHECK(b.violations == 0);
    }

    TEST_CASE("degenerate nets on a singleton toy class") {
        ToyClass toy{1, 1, {-1.0, 1.0}, 0.0, 0.0, 0.0};
        const auto rep = verify_proposition_net(toy, 0.0, 0.0, 0.0, 10, 1);
        CHECK(rep.violations == 0);
        CHECK(rep.net_size == 1.0);
        CHECK(rep.max_distance == 0.0);
    }

    TEST_CASE("toy nets: sampled and exhaustive") {
        ToyClass toy{1, 2, {-1.0, 1.0}, 1.0, 1.0, 1.0};
        const auto sampled = verify_proposition_net(toy, 0.2, 0.2, 0.2, 100, 2);
        CHECK(sampled.violations == 0);
        CHECK(sampled.radius == Approx(2 * 1.0 * 1.0 * 0.2 + 2 * 1.0 * 0.2 + 0.2));
        CHECK(sampled.max_distance <= sampled.radius);
        ToyClass coarse{1, 1, {-1.0, 1.0}, 1.0, 1.0, 1.0};
        const auto full = verify_proposition_net(coarse, 0.5, 0.5, 0.5, 30, 3, 1e7, true);
        CHECK(full.exhaustive);
        CHECK(full.violations == 0);
        CHECK_THROWS_AS(verify_proposition_net(toy, 1e-3, 1e-3, 1e-3, 5, 1, 1e4), ConfigError);
    }
}
