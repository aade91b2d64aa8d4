#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitfit/encoders.hpp"
#include "orbitfit/errors.hpp"

using namespace orbitfit;
using doctest::Approx;

namespace {

Encoder random_mlp(Rng& rng, int d, TimeInterval I, double scale) {
    EncoderSpec spec;
    spec.widths = {8, 5};
    spec.init_scale = scale;
    return sample_encoder(spec, d, I, rng);
}

/// Hand-written forward pass used as the oracle for MLP encoders.
double mlp_oracle(const Encoder& a, const Vec& x) {
    Vec h = x;
    const auto& W = a.weights();
    const auto& b = a.biases();
    for (std::size_t l = 0; l < W.size(); ++l) {
        Vec z = W[l] * h + b[l];
        if (l + 1 < W.size()) z = z.array().tanh();
        h = z;
    }
    return a.interval().lo + a.interval().length() * oracle::logistic(h[0]);
}

}  // namespace

TEST_SUITE("encoders") {
    TEST_CASE("zero affine encoder returns the midpoint") {
        const auto a = Encoder::affine(Vec::Zero(3), 0.0, {-1.0, 1.0});
        CHECK(a(Vec::Constant(3, 7.0)) == 0.0);
        const auto b = Encoder::affine(Vec::Zero(2), 0.0, {0.0, 4.0});
        CHECK(b(Vec::Zero(2)) == 2.0);
    }

    TEST_CASE("saturation towards the endpoints") {
        const auto a = Encoder::affine(Vec::Zero(1), 40.0, {-1.0, 1.0});
        CHECK(a(Vec::Zero(1)) == Approx(1.0).epsilon(1e-15));
        CHECK(a(Vec::Zero(1)) <= 1.0);
    }

    TEST_CASE("affine encoder at the logistic midpoint") {
        const auto a = Encoder::affine(Vec::Ones(1), 0.0, {0.0, 1.0});
        CHECK(a(Vec::Zero(1)) == 0.5);
        CHECK(a(Vec::Constant(1, 2.0)) == Approx(oracle::logistic(2.0)));
    }

    TEST_CASE("dimension mismatch") {
        const auto a = Encoder::affine(Vec::Ones(2), 0.0, {0.0, 1.0});
        CHECK_THROWS_AS(a(Vec::Zero(3)), DimensionError);
    }

    TEST_CASE("MLP forward pass against a hand-written oracle") {
        Rng rng(8);
        for (int trial = 0; trial < 20; ++trial) {
            const auto a = random_mlp(rng, 3, {-2.0, 1.0}, 1.0);
            const Vec x = uniform_in_ball(rng, 3, 2.0);
            CHECK(a(x) == Approx(mlp_oracle(a, x)).epsilon(1e-13));
        }
    }

    TEST_CASE("product encoder is componentwise") {
        Rng rng(9);
        const TimeInterval I{-1.0, 2.0};
        std::vector<Encoder> parts{Encoder::affine(Vec::Zero(2), 0.0, I), random_mlp(rng, 2, I, 0.5),
                                   Encoder::affine(uniform_vector(rng, 2, -1.0, 1.0), 0.3, I)};
        const ProductEncoder P(parts);
        for (int i = 0; i < 20; ++i) {
            const Vec x = uniform_in_ball(rng, 2, 1.0);
            const Vec t = encode_product(P, x);
            REQUIRE(t.size() == 3);
            for (int j = 0; j < 3; ++j) CHECK(t[j] == encode(parts[static_cast<std::size_t>(j)], x));
        }
        const ProductEncoder single({parts[1]});
        CHECK(single(Vec::Ones(2))[0] == parts[1](Vec::Ones(2)));
        const ProductEncoder mids({parts[0], parts[0]});
        CHECK(mids(Vec::Ones(2)) == Vec::Constant(2, 0.5));
    }

    TEST_CASE("C0 distance over a sample") {
        const TimeInterval I{0.0, 1.0};
        const auto a = Encoder::affine(Vec::Ones(1), 0.0, I);
        const auto b = Encoder::affine(Vec::Ones(1), 1.0, I);
        const std::vector<Vec> pts{Vec::Constant(1, -1.0), Vec::Constant(1, 0.0), Vec::Constant(1, 2.0)};
        double expected = 0.0;
        for (const auto& x : pts) {
            expected = std::max(expected, std::abs(oracle::logistic(x[0]) - oracle::logistic(x[0] + 1.0)));
        }
        CHECK(encoder_c0_distance(a, b, pts) == Approx(expected));
        CHECK(encoder_c0_distance(a, a, pts) == 0.0);
        const auto c1 = Encoder::affine(Vec::Zero(1), -1.0, I);
        const auto c2 = Encoder::affine(Vec::Zero(1), 2.0, I);
        CHECK(encoder_c0_distance(c1, c2, pts) == Approx(oracle::logistic(2.0) - oracle::logistic(-1.0)));
        CHECK_THROWS(encoder_c0_distance(a, b, std::vector<Vec>{}));
    }

    TEST_CASE("range containment") {
        Rng rng(10);
        const TimeInterval I{-0.5, 3.0};
        for (int k = 0; k < 100; ++k) {
            const auto a = random_mlp(rng, 2, I, 5.0);
            for (int i = 0; i < 1000; ++i) {
                const double t = a(uniform_in_ball(rng, 2, 100.0));
                CHECK(t >= I.lo);
                CHECK(t <= I.hi);
            }
        }
    }

    TEST_CASE("declared Lipschitz constant bounds difference quotients") {
        Rng rng(12);
        const TimeInterval I{-1.0, 1.0};
        for (int k = 0; k < 10; ++k) {
            const auto a = random_mlp(rng, 3, I, 2.0);
            const double L = a.lipschitz();
            for (int i = 0; i < 1000; ++i) {
                const Vec x = uniform_in_ball(rng, 3, 2.0);
                const Vec y = i % 2 ? uniform_in_ball(rng, 3, 2.0) : Vec(x + 1e-4 * gaussian_vector(rng, 3));
                CHECK(std::abs(a(x) - a(y)) <= L * (x - y).norm() + 1e-12);
            }
        }
    }

    TEST_CASE("parameter gradient against central differences") {
        Rng rng(13);
        const double h = 1e-6;
        for (int trial = 0; trial < 10; ++trial) {
            Encoder a = trial % 2 ? random_mlp(rng, 2, {-1.0, 2.0}, 1.0)
                                  : Encoder::affine(uniform_vector(rng, 2, -1.0, 1.0), 0.2, {-1.0, 2.0});
            const Vec x = uniform_in_ball(rng, 2, 1.0);
            Vec grad(a.param_count());
            a.value_and_param_gradient(x, grad);
            const Vec p = a.params();
            for (Eigen::Index k = 0; k < p.size(); ++k) {
                Vec pp = p;
                Vec pm = p;
                pp[k] += h;
                pm[k] -= h;
                Encoder ap = a;
                Encoder am = a;
                ap.set_params(pp);
                am.set_params(pm);
                CHECK(grad[k] == Approx((ap(x) - am(x)) / (2 * h)).epsilon(1e-6).scale(1.0));
            }
        }
    }

    TEST_CASE("weight projection") {
        auto a = Encoder::affine(Vec::Constant(3, 10.0), 10.0, {0.0, 1.0});
        project_encoder(a, 2.0);
        CHECK(a.params().norm() == Approx(2.0));
        auto b = Encoder::affine(Vec::Constant(3, 0.1), 0.0, {0.0, 1.0});
        const Vec before = b.params();
        project_encoder(b, 2.0);
        CHECK(b.params() == before);
    }
}
