#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "orbitfit/data.hpp"
#include "orbitfit/errors.hpp"

using namespace orbitfit;
using doctest::Approx;

namespace {

std::vector<std::vector<double>> sorted_rows(const Mat& M) {
    std::vector<std::vector<double>> out;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        out.emplace_back();
        for (Eigen::Index j = 0; j < M.cols(); ++j) out.back().push_back(M(i, j));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_SUITE("data") {
    TEST_CASE("two-point linspace segment hits the endpoints") {
        GeneratorSpec g;
        g.shape = Shape::Segment;
        g.n = 2;
        g.sampling = SamplingMode::Linspace;
        const Mat P = generate(g).points();
        REQUIRE(P.rows() == 2);
        CHECK(P(0, 0) == 0.0);
        CHECK(P(0, 1) == 0.0);
        CHECK(P(1, 0) == 1.0);
        CHECK(P(1, 1) == 0.0);
    }

    TEST_CASE("four-point linspace circle sits at the quarter angles") {
        GeneratorSpec g;
        g.shape = Shape::Circle;
        g.n = 4;
        g.sampling = SamplingMode::Linspace;
        const Mat P = generate(g).points();
        const double pi = std::numbers::pi;
        for (int k = 0; k < 4; ++k) {
            CHECK(P(k, 0) == Approx(std::cos(k * pi / 2)).scale(1.0));
            CHECK(P(k, 1) == Approx(std::sin(k * pi / 2)).scale(1.0));
        }
    }

    TEST_CASE("generation is deterministic") {
        for (Shape s : {Shape::Segment, Shape::Circle, Shape::Helix, Shape::SphereCap, Shape::SwissRoll}) {
            GeneratorSpec g;
            g.shape = s;
            g.d = 5;
            g.n = 40;
            g.noise_sigma = 0.05;
            g.embed = true;
            g.seed = 314;
            CHECK(to_csv(generate(g)) == to_csv(generate(g)));
            GeneratorSpec h = g;
            h.seed = 315;
            CHECK(to_csv(generate(g)) != to_csv(generate(h)));
        }
    }

    TEST_CASE("support stays within shape radius plus clipped noise") {
        for (Shape s : {Shape::Segment, Shape::Circle, Shape::Helix, Shape::SphereCap, Shape::SwissRoll}) {
            for (bool embed : {false, true}) {
                GeneratorSpec g;
                g.shape = s;
                g.d = 4;
                g.n = 2000;
                g.noise_sigma = 0.1;
                g.embed = embed;
                g.seed = 7;
                const Dataset S = generate(g);
                CHECK(S.support_radius() <= shape_radius(s) + 3 * g.noise_sigma + 1e-12);
                CHECK(S.points().allFinite());
            }
        }
    }

    TEST_CASE("noiseless shapes satisfy their equations") {
        GeneratorSpec g;
        g.n = 200;
        g.seed = 3;
        g.shape = Shape::Circle;
        g.d = 3;
        const Mat C = generate(g).points();
        for (Eigen::Index i = 0; i < C.rows(); ++i) {
            CHECK(C.row(i).head(2).norm() == Approx(1.0));
            CHECK(C(i, 2) == 0.0);
        }
        g.shape = Shape::SphereCap;
        const Mat S = generate(g).points();
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            CHECK(S.row(i).norm() == Approx(1.0));
            CHECK(S(i, 2) >= 0.5 - 1e-12);  // polar angle at most π/3
        }
        g.shape = Shape::Helix;
        const Mat H = generate(g).points();
        for (Eigen::Index i = 0; i < H.rows(); ++i) {
            CHECK(H.row(i).head(2).norm() == Approx(1.0));
            CHECK(H(i, 2) >= 0.0);
            CHECK(H(i, 2) <= 1.0);
        }
    }

    TEST_CASE("embedding is an isometry") {
        // The rotation consumes the stream, so compare invariants rather than points.
        GeneratorSpec g;
        g.shape = Shape::Circle;
        g.d = 6;
        g.n = 30;
        g.seed = 11;
        g.embed = true;
        const Mat C = generate(g).points();
        Eigen::JacobiSVD<Mat> svd(C);
        CHECK(svd.singularValues()[2] <= 1e-10);
        for (Eigen::Index i = 0; i < C.rows(); ++i) CHECK(C.row(i).norm() == Approx(1.0));

        g.shape = Shape::Segment;
        g.n = 2;
        g.sampling = SamplingMode::Linspace;
        const Mat S = generate(g).points();
        CHECK((S.row(1) - S.row(0)).norm() == Approx(1.0).epsilon(1e-12));
        CHECK(S.row(0).norm() <= 1e-12);
    }

    TEST_CASE("spec validation carries field paths") {
        GeneratorSpec g;
        g.shape = Shape::Helix;
        g.d = 2;
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("data.d"), ConfigError);
        g.d = 3;
        g.n = 0;
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("data.n"), ConfigError);
        g.n = 5;
        g.noise_sigma = -1.0;
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("data.noise_sigma"), ConfigError);
        CHECK_THROWS_AS(shape_from_string("torus"), ConfigError);
    }

    TEST_CASE("split sizes, disjointness, determinism") {
        GeneratorSpec g;
        g.n = 10;
        g.seed = 2;
        const Dataset S = generate(g);
        const auto [a, b] = split(S, 0.8, 9);
        CHECK(a.size() == 8);
        CHECK(b.size() == 2);
        Mat joined(10, S.dim());
        joined << a.points(), b.points();
        CHECK(sorted_rows(joined) == sorted_rows(S.points()));
        const auto [c, d] = split(S, 0.8, 9);
        CHECK(c.points() == a.points());
        CHECK(d.points() == b.points());
        CHECK_THROWS_AS(split(S, 1.0, 9), ConfigError);
        CHECK_THROWS_AS(split(S, 0.01, 9), ConfigError);
    }

    TEST_CASE("shape sampler matches the generator support") {
        GeneratorSpec g;
        g.shape = Shape::Circle;
        g.d = 3;
        g.embed = true;
        g.seed = 21;
        const Sampler draw = shape_sampler(g);
        Rng rng(1);
        const Mat P = generate(g).points();
        // Points of both lie on the same embedded plane: project onto its span.
        Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeThinV);
        const Mat basis = svd.matrixV().leftCols(2);
        for (int i = 0; i < 50; ++i) {
            const Vec x = draw(rng);
            CHECK(x.norm() == Approx(1.0));
            CHECK((basis * (basis.transpose() * x) - x).norm() <= 1e-9);
        }
    }
}
