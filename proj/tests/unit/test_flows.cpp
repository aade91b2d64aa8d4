#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitfit/errors.hpp"
#include "orbitfit/flows.hpp"

using namespace orbitfit;
using doctest::Approx;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat rotation_generator() {
    Mat J(2, 2);
    J << 0.0, -1.0, 1.0, 0.0;
    return J;
}

FlowConfig fine() {
    FlowConfig cfg;
    cfg.step_size_max = 1e-3;
    return cfg;
}

}  // namespace

TEST_SUITE("flows") {
    TEST_CASE("step count") {
        FlowConfig cfg;
        cfg.step_size_max = 0.1;
        CHECK(step_count(cfg, 0.0) == 1);
        CHECK(step_count(cfg, 0.25) == 3);
        CHECK(step_count(cfg, -0.25) == 3);
        cfg.min_steps = 5;
        CHECK(step_count(cfg, 0.25) == 5);
    }

    TEST_CASE("zero time is the identity") {
        const auto f = VectorField::affine(rotation_generator(), vec2(0.3, 0.1));
        const Vec xi = vec2(0.4, -0.7);
        CHECK(flow(f, xi, 0.0) == xi);
    }

    TEST_CASE("constant fields are integrated exactly") {
        const auto f = VectorField::constant(vec2(0.5, -0.25));
        const Vec xi = vec2(1.0, 2.0);
        const Vec y = flow(f, xi, 0.75);
        CHECK(y[0] == Approx(1.375).epsilon(1e-14));
        CHECK(y[1] == Approx(1.8125).epsilon(1e-14));
    }

    TEST_CASE("linear decay e^{-t}") {
        const auto f = VectorField::affine(-Mat::Identity(1, 1), Vec::Zero(1), BumpSpec{5.0, 10.0, 2});
        const Vec y = flow(f, Vec::Constant(1, 1.0), 1.0, fine());
        CHECK(std::abs(y[0] - std::exp(-1.0)) <= 1e-8);
    }

    TEST_CASE("rotation by a quarter turn") {
        const auto f = VectorField::affine(rotation_generator(), Vec::Zero(2));
        const VectorField fs[] = {f};
        const double ts[] = {std::numbers::pi / 2};
        const Vec y = compose_flows(fs, ts, vec2(1.0, 0.0));
        CHECK(std::abs(y[0]) <= 1e-6);
        CHECK(std::abs(y[1] - 1.0) <= 1e-6);
    }

    TEST_CASE("composition of constant flows") {
        const VectorField fs[] = {VectorField::constant(vec2(1.0, 0.0)), VectorField::constant(vec2(0.0, 2.0))};
        const double ts[] = {0.3, -0.4};
        const Vec y = compose_flows(fs, ts, vec2(0.0, 0.0));
        CHECK(y[0] == Approx(0.3));
        CHECK(y[1] == Approx(-0.8));
        const double zeros[] = {0.0, 0.0};
        CHECK(compose_flows(fs, zeros, vec2(0.1, 0.2)) == vec2(0.1, 0.2));
    }

    TEST_CASE("affine flows match the matrix exponential") {
        Rng rng(99);
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 1 + trial % 5;
            Mat A = Mat::NullaryExpr(d, d, [&] { return uniform(rng, -1.0, 1.0); });
            A /= std::max(1.0, oracle::spectral_norm(A));
            const Vec u = uniform_in_ball(rng, d, 1.0);
            const Vec xi = uniform_in_ball(rng, d, 1.0);
            const double t = uniform(rng, -1.0, 1.0);
            const auto f = VectorField::affine(A, u);
            const Vec y = flow(f, xi, t, fine());
            CHECK((y - oracle::affine_flow(A, u, xi, t)).norm() <= 1e-6);
        }
    }

    TEST_CASE("semigroup property") {
        Rng rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 2 + trial % 3;
            Mat A = Mat::NullaryExpr(d, d, [&] { return uniform(rng, -1.0, 1.0); });
            const auto f = trial % 2 ? VectorField::affine(A, uniform_in_ball(rng, d, 1.0))
                                     : VectorField::recurrent(A, uniform_in_ball(rng, d, 1.0));
            const Vec xi = uniform_in_ball(rng, d, 1.0);
            const double s = uniform(rng, -1.0, 1.0);
            const double t = uniform(rng, -1.0, 1.0);
            const Vec direct = flow(f, xi, t, fine());
            const Vec split = flow(f, flow(f, xi, s, fine()), t - s, fine());
            CHECK((direct - split).norm() <= 1e-6);
        }
    }

    TEST_CASE("Gronwall estimate for nearby initial points") {
        Rng rng(17);
        int violations = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int d = 1 + trial % 4;
            Mat A = Mat::NullaryExpr(d, d, [&] { return uniform(rng, -1.0, 1.0); });
            const auto f = trial % 2 ? VectorField::affine(A, uniform_in_ball(rng, d, 1.0))
                                     : VectorField::recurrent(A, uniform_in_ball(rng, d, 1.0));
            const double L = 1.0;
            const Vec xi = uniform_in_ball(rng, d, 1.0);
            const Vec xj = xi + uniform_in_ball(rng, d, trial % 3 ? 1e-2 : 1.0);
            const double t = uniform(rng, -1.0, 1.0);
            FlowConfig cfg;
            cfg.step_size_max = 1e-2;
            const double lhs = (flow(f, xi, t, cfg) - flow(f, xj, t, cfg)).norm();
            if (lhs > (xi - xj).norm() * std::exp(L * std::abs(t)) + 1e-6) ++violations;
        }
        CHECK(violations == 0);
    }

    TEST_CASE("sensitivities against closed forms") {
        const auto decay = VectorField::affine(-Mat::Identity(1, 1), Vec::Zero(1), BumpSpec{5.0, 10.0, 2});
        const auto s = flow_with_sensitivity(decay, Vec::Constant(1, 1.0), 1.0, fine(), Sensitivity::InitialPoint);
        CHECK(std::abs(s.jacobian(0, 0) - std::exp(-1.0)) <= 1e-6);

        const auto c = VectorField::constant(vec2(0.2, -0.3));
        const auto st = flow_with_sensitivity(c, vec2(0.0, 0.0), 0.6, {}, Sensitivity::Time);
        CHECK(st.jacobian(0, 0) == Approx(0.2));
        CHECK(st.jacobian(1, 0) == Approx(-0.3));

        const auto z = flow_with_sensitivity(VectorField::affine(rotation_generator(), vec2(0.1, 0.0)), vec2(0.5, 0.5),
                                             0.0, {}, Sensitivity::InitialPoint);
        CHECK(z.jacobian.isApprox(Mat::Identity(2, 2)));
    }

    TEST_CASE("sensitivities against central differences") {
        Rng rng(23);
        const double h = 1e-5;
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 1 + trial % 3;
            Mat A = Mat::NullaryExpr(d, d, [&] { return uniform(rng, -1.0, 1.0); });
            VectorField f = trial % 2 ? VectorField::affine(A, uniform_in_ball(rng, d, 1.0), BumpSpec{1.0, 3.0, 2})
                                      : VectorField::recurrent(A, uniform_in_ball(rng, d, 1.0));
            const Vec xi = uniform_in_ball(rng, d, 1.5);
            const double t = uniform(rng, -1.0, 1.0);
            const FlowConfig cfg;
            const LayerSensitivity s = flow_layer_sensitivity(f, xi, t, cfg);

            Mat fd_x(d, d);
            for (int k = 0; k < d; ++k) {
                Vec e = Vec::Zero(d);
                e[k] = h;
                fd_x.col(k) = (flow(f, xi + e, t, cfg) - flow(f, xi - e, t, cfg)) / (2 * h);
            }
            CHECK((s.d_initial - fd_x).norm() <= 1e-4 * std::max(1.0, fd_x.norm()));

            const Vec p = f.params();
            Mat fd_p(d, p.size());
            for (Eigen::Index k = 0; k < p.size(); ++k) {
                VectorField fp = f;
                VectorField fm = f;
                Vec pp = p;
                Vec pm = p;
                pp[k] += h;
                pm[k] -= h;
                fp.set_params(pp);
                fm.set_params(pm);
                fd_p.col(k) = (flow(fp, xi, t, cfg) - flow(fm, xi, t, cfg)) / (2 * h);
            }
            CHECK((s.d_params - fd_p).norm() <= 1e-4 * std::max(1.0, fd_p.norm()));

            const Vec fd_t = (flow(f, xi, t + h, cfg) - flow(f, xi, t - h, cfg)) / (2 * h);
            CHECK((s.d_time - fd_t).norm() <= 1e-4 * std::max(1.0, fd_t.norm()));
        }
    }

    TEST_CASE("trajectory records both ends") {
        const auto f = VectorField::constant(vec2(1.0, 0.0));
        FlowConfig cfg;
        cfg.step_size_max = 0.25;
        const auto path = flow_trajectory(f, vec2(0.0, 0.0), 1.0, cfg);
        REQUIRE(path.size() == 5);
        CHECK(path.front() == vec2(0.0, 0.0));
        CHECK(path.back()[0] == Approx(1.0));
    }

    TEST_CASE("escape from the safety radius is an error") {
        const auto f = VectorField::constant(vec2(1.0, 0.0));
        FlowConfig cfg;
        cfg.safety_radius = 2.0;
        const VectorField fs[] = {f};
        const double ts[] = {5.0};
        CHECK_THROWS_AS(compose_flows(fs, ts, vec2(0.0, 0.0), cfg), NumericError);
    }
}
