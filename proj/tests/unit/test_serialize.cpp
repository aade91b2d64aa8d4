#include <cmath>

#include "doctest.h"
#include "orbitfit/errors.hpp"
#include "orbitfit/serialize.hpp"
#include "orbitfit/train.hpp"

using namespace orbitfit;

TEST_SUITE("serialize") {
    TEST_CASE("FNV-1a reference vectors") {
        CHECK(fnv1a_hex("") == "cbf29ce484222325");
        CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
        CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
    }

    TEST_CASE("unknown keys and missing fields carry paths") {
        const Json j = Json::parse(R"({"a": 1, "zz": 2})");
        CHECK_THROWS_WITH_AS(JsonObject(j, "cfg", {"a"}), doctest::Contains("cfg.zz: unknown key"), ConfigError);
        const JsonObject o(j, "cfg", {"a", "zz", "b"});
        CHECK_THROWS_WITH_AS(o.at("b"), doctest::Contains("cfg.b: missing required field"), ConfigError);
        CHECK(o.integer("a") == 1);
        CHECK(o.number("b", 2.5) == 2.5);
        CHECK_THROWS_AS(o.string("a"), ConfigError);
    }

    TEST_CASE("generator config reports the first missing field") {
        const Json j = Json::parse(R"({"d": 2})");
        CHECK_THROWS_WITH_AS(generator_from_json(j, "data", 1), doctest::Contains("data.n: missing required field"),
                             ConfigError);
    }

    TEST_CASE("non-finite numbers become strings") {
        CHECK(json_value(INFINITY) == "inf");
        CHECK(json_value(-INFINITY) == "-inf");
        CHECK(json_value(std::nan("")) == "nan");
        CHECK(json_value(0.25) == 0.25);
    }

    TEST_CASE("dump is stable and newline terminated") {
        const Json j = Json::parse(R"({"b": [1, 2.5], "a": "x"})");
        const std::string s = dump(j);
        CHECK(s.back() == '\n');
        CHECK(dump(parse_json(s, "test")) == s);
        CHECK_THROWS_AS(parse_json("{", "broken"), ConfigError);
    }

    TEST_CASE("model round trip is bit exact") {
        Rng rng(3);
        for (FieldKind kind : {FieldKind::Constant, FieldKind::Affine, FieldKind::Recurrent}) {
            ModelSpec spec;
            spec.family = {kind, 3, BumpSpec{2.0, 4.0, 2}};
            spec.encoder.kind = EncoderKind::MlpSquashed;
            spec.encoder.widths = {5};
            spec.m = 2;
            spec.interval = {-1.0, 0.5};
            const Mat pts = Mat::NullaryExpr(6, 3, [&] { return uniform(rng, -1.0, 1.0); });
            const ReconstructionMap G = sample_model(spec, pts, 3, rng);
            const ReconstructionMap H = model_from_json(parse_json(dump(to_json(G)), "model"));
            CHECK(H.params() == G.params());
            CHECK(H.xi == G.xi);
            const Vec x = pts.row(0).transpose();
            CHECK(H(x) == G(x));
            CHECK(dump(to_json(H)) == dump(to_json(G)));
        }
    }

    TEST_CASE("out-of-family parameters are rejected on load") {
        Mat A = Mat::Identity(2, 2) * 3.0;
        const VectorField f = VectorField::affine(Mat::Identity(2, 2), Vec::Zero(2));
        Json j = to_json(f);
        j["A"] = json_value(A);
        CHECK_THROWS_AS(field_from_json(j, "model.fields[0]"), ConfigError);
    }

    TEST_CASE("train config round trip keeps the schedule") {
        TrainConfig cfg;
        cfg.schedule = LrSchedule::Cosine;
        cfg.max_iters = 17;
        const TrainConfig back = train_from_json(to_json(cfg), "train", cfg.seed);
        CHECK(back.schedule == LrSchedule::Cosine);
        CHECK(back.max_iters == 17);
        Json bad = to_json(cfg);
        bad["schedule"] = "linear";
        CHECK_THROWS_WITH_AS(train_from_json(bad, "train", 0), doctest::Contains("train.schedule"), ConfigError);
    }

    TEST_CASE("class specs from JSON") {
        const Json j = Json::parse(R"({"kind": "recurrent", "m": 2, "d": 2, "R": 1.0, "interval": [-0.5, 0.5],
                                       "encoder": {"kind": "affine", "param_radius": 3.0}})");
        const ClassSpec s = class_from_json(j, "bounds.class");
        CHECK(s.m == 2);
        CHECK(s.fields.params == 2 * 2 + 2);
        Json bad = j;
        bad["kind"] = "quadratic";
        CHECK_THROWS_WITH_AS(class_from_json(bad, "bounds.class"), doctest::Contains("bounds.class.kind"), ConfigError);
    }
}
