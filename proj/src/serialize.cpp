#include "orbitfit/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "orbitfit/errors.hpp"

namespace orbitfit {

// --- generic readers ------------------------------------------------------------------

JsonObject::JsonObject(const Json& j, std::string path, std::initializer_list<const char*> allowed)
    : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) throw ConfigError(child(item.key()), "unknown key");
    }
}

std::string JsonObject::child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool JsonObject::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

const Json& JsonObject::at(const std::string& key) const {
    if (!has(key)) throw ConfigError(child(key), "missing required field");
    return j_.at(key);
}

double JsonObject::number(const std::string& key) const { return json_number(at(key), child(key)); }

double JsonObject::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

int JsonObject::integer(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < -2147483647 || x > 2147483647) throw ConfigError(child(key), "integer out of range");
    return static_cast<int>(x);
}

int JsonObject::integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

std::uint64_t JsonObject::unsigned64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(child(key), "expected a nonnegative integer");
}

bool JsonObject::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v.get<bool>();
}

std::string JsonObject::string(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
}

std::string JsonObject::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

double json_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
}

Vec json_vector(const Json& j, const std::string& path, Eigen::Index expected) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) {
        throw ConfigError(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = json_number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Mat json_matrix(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
    Mat m;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vec row = json_vector(j[i], path + "[" + std::to_string(i) + "]", i == 0 ? -1 : m.cols());
        if (i == 0) m.resize(static_cast<Eigen::Index>(j.size()), row.size());
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

TimeInterval json_interval(const Json& j, const std::string& path) {
    const Vec v = json_vector(j, path, 2);
    const TimeInterval interval{v[0], v[1]};
    validate_interval(interval, path);
    return interval;
}

Json json_value(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

Json json_value(const Vec& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_value(v[i]));
    return out;
}

Json json_value(const Mat& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(json_value(Vec(m.row(i).transpose())));
    return out;
}

Json json_value(const TimeInterval& interval) { return Json::array({interval.lo, interval.hi}); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(what, std::string("malformed JSON: ") + e.what());
    }
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

// --- enums ------------------------------------------------------------------------------

namespace {

// Re-roots an error path produced by a validate() method under `base`.
ConfigError rebase(const std::string& base, const ConfigError& e, const std::string& prefix) {
    const std::string& inner = e.path();
    if (inner == prefix) return ConfigError(base, e.message());
    if (inner.rfind(prefix + ".", 0) == 0) return ConfigError(base + inner.substr(prefix.size()), e.message());
    if (inner.rfind(base, 0) == 0) return e;
    return ConfigError(inner.empty() ? base : base + "." + inner, e.message());
}

template <class E>
E enum_from(const std::string& value, const std::string& path, std::initializer_list<std::pair<const char*, E>> table) {
    std::string choices;
    for (const auto& [name, e] : table) {
        if (value == name) return e;
        choices += choices.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(path, "unknown value '" + value + "' (expected one of: " + choices + ")");
}

}  // namespace

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Constant: return "constant";
        case FieldKind::Affine: return "affine";
        case FieldKind::Recurrent: return "recurrent";
    }
    return "";
}

std::string to_string(Nonlinearity sigma) {
    return sigma == Nonlinearity::TanhComponentwise ? "tanh" : "scaled_sigmoid";
}

std::string to_string(EncoderKind kind) { return kind == EncoderKind::AffineSquashed ? "affine" : "mlp"; }

std::string to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::GradientDescent: return "gd";
        case OptimizerKind::Momentum: return "momentum";
        case OptimizerKind::Adam: return "adam";
    }
    return "";
}

std::string to_string(SamplingMode mode) { return mode == SamplingMode::Uniform ? "uniform" : "linspace"; }

namespace {

FieldKind field_kind_from(const std::string& s, const std::string& path) {
    return enum_from<FieldKind>(
        s, path, {{"constant", FieldKind::Constant}, {"affine", FieldKind::Affine}, {"recurrent", FieldKind::Recurrent}});
}

Nonlinearity nonlinearity_from(const std::string& s, const std::string& path) {
    return enum_from<Nonlinearity>(
        s, path, {{"tanh", Nonlinearity::TanhComponentwise}, {"scaled_sigmoid", Nonlinearity::ScaledSigmoid}});
}

EncoderKind encoder_kind_from(const std::string& s, const std::string& path) {
    return enum_from<EncoderKind>(s, path, {{"affine", EncoderKind::AffineSquashed}, {"mlp", EncoderKind::MlpSquashed}});
}

CoveringModel covering_from(const std::string& s, const std::string& path) {
    return enum_from<CoveringModel>(s, path, {{"ball", CoveringModel::Ball}, {"power", CoveringModel::Power}});
}

}  // namespace

// --- specs ---------------------------------------------------------------------------------

Json to_json(const BumpSpec& bump) {
    return Json{{"inner_radius", bump.inner_radius}, {"outer_radius", bump.outer_radius}, {"profile", bump.profile}};
}

BumpSpec bump_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"inner_radius", "outer_radius", "profile"});
    BumpSpec b;
    b.inner_radius = o.number("inner_radius");
    b.outer_radius = o.number("outer_radius");
    b.profile = o.integer("profile", b.profile);
    try {
        b.validate();
    } catch (const ConfigError& e) {
        throw rebase(path, e, "bump");
    }
    return b;
}

Json to_json(const FamilySpec& family) {
    Json j{{"kind", to_string(family.kind)}, {"dim", family.dim}};
    if (family.bump) j["bump"] = to_json(*family.bump);
    if (family.kind == FieldKind::Constant) j["constant_bound"] = family.constant_bound;
    if (family.kind == FieldKind::Recurrent) j["nonlinearity"] = to_string(family.nonlinearity);
    return j;
}

FamilySpec family_from_json(const Json& j, const std::string& path, int dim) {
    const JsonObject o(j, path, {"kind", "dim", "bump", "constant_bound", "nonlinearity"});
    FamilySpec f;
    f.kind = field_kind_from(o.string("kind"), o.child("kind"));
    f.dim = o.integer("dim", dim);
    if (o.has("bump")) f.bump = bump_from_json(o.at("bump"), o.child("bump"));
    f.constant_bound = o.number("constant_bound", f.constant_bound);
    if (o.has("nonlinearity")) f.nonlinearity = nonlinearity_from(o.string("nonlinearity"), o.child("nonlinearity"));
    try {
        f.validate();
    } catch (const ConfigError& e) {
        throw rebase(path, e, "family");
    }
    return f;
}

Json to_json(const EncoderSpec& spec) {
    return Json{{"kind", to_string(spec.kind)}, {"widths", spec.widths}, {"init_scale", spec.init_scale}};
}

EncoderSpec encoder_spec_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"kind", "widths", "init_scale"});
    EncoderSpec s;
    if (o.has("kind")) s.kind = encoder_kind_from(o.string("kind"), o.child("kind"));
    if (o.has("widths")) {
        const Json& w = o.at("widths");
        if (!w.is_array()) throw ConfigError(o.child("widths"), "expected an array of integers");
        s.widths.clear();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!w[i].is_number_integer() || w[i].get<std::int64_t>() < 1 || w[i].get<std::int64_t>() > 100000) {
                throw ConfigError(o.child("widths") + "[" + std::to_string(i) + "]", "expected a positive integer");
            }
            s.widths.push_back(w[i].get<int>());
        }
    }
    s.init_scale = o.number("init_scale", s.init_scale);
    if (!(s.init_scale >= 0.0)) throw ConfigError(o.child("init_scale"), "must be nonnegative");
    return s;
}

Json to_json(const FlowConfig& cfg) {
    Json j{{"step_size_max", cfg.step_size_max}, {"min_steps", cfg.min_steps}};
    if (cfg.safety_radius) j["safety_radius"] = *cfg.safety_radius;
    return j;
}

FlowConfig flow_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"step_size_max", "min_steps", "safety_radius"});
    FlowConfig cfg;
    cfg.step_size_max = o.number("step_size_max", cfg.step_size_max);
    cfg.min_steps = o.integer("min_steps", cfg.min_steps);
    if (o.has("safety_radius")) cfg.safety_radius = o.number("safety_radius");
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw rebase(path, e, "flow");
    }
    return cfg;
}

Json to_json(const TrainConfig& cfg) {
    return Json{{"optimizer", to_string(cfg.optimizer)},
                {"learning_rate", cfg.learning_rate},
                {"schedule", cfg.schedule == LrSchedule::Cosine ? "cosine" : "constant"},
                {"max_iters", cfg.max_iters},
                {"restarts", cfg.restarts},
                {"seed", cfg.seed},
                {"tolerance", cfg.tolerance},
                {"anchor_count", cfg.anchor_count},
                {"weight_projection_radius", cfg.weight_projection_radius},
                {"momentum", cfg.momentum},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2},
                {"epsilon", cfg.epsilon}};
}

TrainConfig train_from_json(const Json& j, const std::string& path, std::uint64_t seed) {
    const JsonObject o(j, path,
                       {"optimizer", "learning_rate", "schedule", "max_iters", "restarts", "seed", "tolerance",
                        "anchor_count", "weight_projection_radius", "momentum", "beta1", "beta2", "epsilon"});
    TrainConfig c;
    if (o.has("optimizer")) {
        c.optimizer = enum_from<OptimizerKind>(o.string("optimizer"), o.child("optimizer"),
                                               {{"gd", OptimizerKind::GradientDescent},
                                                {"momentum", OptimizerKind::Momentum},
                                                {"adam", OptimizerKind::Adam}});
    }
    c.learning_rate = o.number("learning_rate", c.learning_rate);
    if (o.has("schedule")) {
        c.schedule = enum_from<LrSchedule>(o.string("schedule"), o.child("schedule"),
                                           {{"constant", LrSchedule::Constant}, {"cosine", LrSchedule::Cosine}});
    }
    c.max_iters = o.integer("max_iters", c.max_iters);
    c.restarts = o.integer("restarts", c.restarts);
    c.seed = o.unsigned64("seed", seed);
    c.tolerance = o.number("tolerance", c.tolerance);
    c.anchor_count = o.integer("anchor_count", c.anchor_count);
    c.weight_projection_radius = o.number("weight_projection_radius", c.weight_projection_radius);
    c.momentum = o.number("momentum", c.momentum);
    c.beta1 = o.number("beta1", c.beta1);
    c.beta2 = o.number("beta2", c.beta2);
    c.epsilon = o.number("epsilon", c.epsilon);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw rebase(path, e, "train");
    }
    return c;
}

Json to_json(const GeneratorSpec& spec) {
    return Json{{"shape", to_string(spec.shape)},     {"d", spec.d},
                {"n", spec.n},                        {"noise_sigma", spec.noise_sigma},
                {"seed", spec.seed},                  {"embed", spec.embed},
                {"sampling", to_string(spec.sampling)}};
}

GeneratorSpec generator_from_json(const Json& j, const std::string& path, std::uint64_t seed) {
    const JsonObject o(j, path, {"shape", "d", "n", "noise_sigma", "seed", "embed", "sampling"});
    GeneratorSpec s;
    s.d = o.integer("d");
    s.n = o.integer("n");
    const std::string shape = o.string("shape");
    try {
        s.shape = shape_from_string(shape);
    } catch (const ConfigError& e) {
        throw ConfigError(o.child("shape"), e.message());
    }
    s.noise_sigma = o.number("noise_sigma", 0.0);
    s.seed = o.unsigned64("seed", seed);
    s.embed = o.boolean("embed", false);
    if (o.has("sampling")) {
        s.sampling = enum_from<SamplingMode>(o.string("sampling"), o.child("sampling"),
                                             {{"uniform", SamplingMode::Uniform}, {"linspace", SamplingMode::Linspace}});
    }
    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw rebase(path, e, "data");
    }
    return s;
}

// --- models -------------------------------------------------------------------------------

Json to_json(const VectorField& f) {
    Json j{{"kind", to_string(f.kind())}};
    if (f.kind() == FieldKind::Constant) {
        j["v"] = json_value(f.v());
    } else {
        j["A"] = json_value(f.A());
        j["u"] = json_value(f.u());
        if (f.kind() == FieldKind::Recurrent) j["nonlinearity"] = to_string(f.nonlinearity());
    }
    if (f.bump()) j["bump"] = to_json(*f.bump());
    return j;
}

VectorField field_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"kind", "v", "A", "u", "nonlinearity", "bump"});
    const FieldKind kind = field_kind_from(o.string("kind"), o.child("kind"));
    std::optional<BumpSpec> bump;
    if (o.has("bump")) bump = bump_from_json(o.at("bump"), o.child("bump"));
    try {
        if (kind == FieldKind::Constant) return VectorField::constant(json_vector(o.at("v"), o.child("v")), bump);
        Mat A = json_matrix(o.at("A"), o.child("A"));
        Vec u = json_vector(o.at("u"), o.child("u"), A.rows());
        if (A.rows() != A.cols()) throw ConfigError(o.child("A"), "must be square");
        if (kind == FieldKind::Affine) return VectorField::affine(std::move(A), std::move(u), bump, NormPolicy::Reject);
        const Nonlinearity sigma = o.has("nonlinearity")
                                       ? nonlinearity_from(o.string("nonlinearity"), o.child("nonlinearity"))
                                       : Nonlinearity::TanhComponentwise;
        return VectorField::recurrent(std::move(A), std::move(u), sigma, bump, NormPolicy::Reject);
    } catch (const ConfigError& e) {
        throw rebase(path, e, "field");
    } catch (const DimensionError& e) {
        throw ConfigError(path, e.what());
    }
}

Json to_json(const Encoder& a) {
    Json j{{"kind", to_string(a.kind())}, {"interval", json_value(a.interval())}};
    if (a.kind() == EncoderKind::AffineSquashed) {
        j["w"] = json_value(Vec(a.weights().front().row(0).transpose()));
        j["b"] = a.biases().front()[0];
        return j;
    }
    Json layers = Json::array();
    for (std::size_t l = 0; l < a.weights().size(); ++l)
        layers.push_back(Json{{"W", json_value(a.weights()[l])}, {"b", json_value(a.biases()[l])}});
    j["layers"] = layers;
    return j;
}

Encoder encoder_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"kind", "interval", "w", "b", "layers"});
    const EncoderKind kind = encoder_kind_from(o.string("kind"), o.child("kind"));
    const TimeInterval interval = json_interval(o.at("interval"), o.child("interval"));
    try {
        if (kind == EncoderKind::AffineSquashed) {
            return Encoder::affine(json_vector(o.at("w"), o.child("w")), o.number("b"), interval);
        }
        const Json& layers = o.at("layers");
        if (!layers.is_array() || layers.empty()) throw ConfigError(o.child("layers"), "expected a non-empty array");
        std::vector<Mat> weights;
        std::vector<Vec> biases;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const JsonObject layer(layers[l], o.child("layers") + "[" + std::to_string(l) + "]", {"W", "b"});
            weights.push_back(json_matrix(layer.at("W"), layer.child("W")));
            biases.push_back(json_vector(layer.at("b"), layer.child("b"), weights.back().rows()));
        }
        return Encoder::mlp(std::move(weights), std::move(biases), interval);
    } catch (const DimensionError& e) {
        throw ConfigError(path, e.what());
    }
}

Json to_json(const ReconstructionMap& G) {
    Json enc = Json::array();
    for (const auto& a : G.encoder.parts()) enc.push_back(to_json(a));
    Json fields = Json::array();
    for (const auto& f : G.fields) fields.push_back(to_json(f));
    return Json{{"format", "orbitfit-model"}, {"version", 1},        {"m", G.m()},       {"dim", G.dim()},
                {"xi", json_value(G.xi)},     {"flow", to_json(G.flow)}, {"encoder", enc}, {"fields", fields}};
}

ReconstructionMap model_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"format", "version", "m", "dim", "xi", "flow", "encoder", "fields"});
    if (o.string("format") != "orbitfit-model") throw ConfigError(o.child("format"), "expected \"orbitfit-model\"");
    if (o.integer("version") != 1) throw ConfigError(o.child("version"), "unsupported model version");
    const int m = o.integer("m");
    const int d = o.integer("dim");
    ReconstructionMap G;
    G.xi = json_vector(o.at("xi"), o.child("xi"), d);
    G.flow = flow_from_json(o.at("flow"), o.child("flow"));
    const Json& enc = o.at("encoder");
    const Json& fields = o.at("fields");
    if (!enc.is_array() || static_cast<int>(enc.size()) != m) {
        throw ConfigError(o.child("encoder"), "expected an array of m encoders");
    }
    if (!fields.is_array() || static_cast<int>(fields.size()) != m) {
        throw ConfigError(o.child("fields"), "expected an array of m fields");
    }
    std::vector<Encoder> parts;
    for (int k = 0; k < m; ++k) {
        parts.push_back(encoder_from_json(enc[static_cast<std::size_t>(k)], o.child("encoder") + "[" + std::to_string(k) + "]"));
        G.fields.push_back(field_from_json(fields[static_cast<std::size_t>(k)], o.child("fields") + "[" + std::to_string(k) + "]"));
    }
    try {
        G.encoder = ProductEncoder(std::move(parts));
        G.validate();
    } catch (const DimensionError& e) {
        throw ConfigError(path, e.what());
    }
    return G;
}

// --- bounds ---------------------------------------------------------------------------------

Json to_json(const ComparisonFn& cf) {
    switch (cf.kind()) {
        case ComparisonFn::Kind::WorstCase:
            return Json{{"kind", "worst_case"}, {"L", cf.L()}, {"L0", cf.L0()}};
        case ComparisonFn::Kind::Exponential:
            return Json{{"kind", "exponential"}, {"L", cf.L()}};
        case ComparisonFn::Kind::ExpStable:
            return Json{{"kind", "exp_stable"}, {"lambda", cf.lambda()}};
        case ComparisonFn::Kind::Tabulated:
            return Json{{"kind", "tabulated"}, {"r_grid", cf.r_grid()}, {"t_grid", cf.t_grid()}, {"values", json_value(cf.table())}};
        case ComparisonFn::Kind::PointwiseMax: {
            Json parts = Json::array();
            for (const auto& p : cf.parts()) parts.push_back(to_json(p));
            return Json{{"kind", "pointwise_max"}, {"parts", parts}};
        }
    }
    return {};
}

namespace {

std::vector<double> std_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

ComparisonFn comparison_from_json(const Json& j, const std::string& path, TimeInterval interval) {
    const JsonObject o(j, path, {"kind", "L", "L0", "lambda", "r_grid", "t_grid", "values", "parts"});
    const std::string kind = o.string("kind");
    try {
        if (kind == "worst_case") return ComparisonFn::worst_case(o.number("L"), o.number("L0"), interval);
        if (kind == "exponential") return ComparisonFn::exponential(o.number("L"), interval);
        if (kind == "exp_stable") return ComparisonFn::exp_stable(o.number("lambda"), interval);
        if (kind == "tabulated") {
            return ComparisonFn::tabulated(std_vector(json_vector(o.at("r_grid"), o.child("r_grid"))),
                                           std_vector(json_vector(o.at("t_grid"), o.child("t_grid"))),
                                           json_matrix(o.at("values"), o.child("values")), interval);
        }
        if (kind == "pointwise_max") {
            const Json& parts = o.at("parts");
            if (!parts.is_array() || parts.empty()) throw ConfigError(o.child("parts"), "expected a non-empty array");
            std::vector<ComparisonFn> fns;
            for (std::size_t k = 0; k < parts.size(); ++k)
                fns.push_back(comparison_from_json(parts[k], o.child("parts") + "[" + std::to_string(k) + "]", interval));
            return ComparisonFn::pointwise_max(std::move(fns));
        }
    } catch (const ConfigError& e) {
        throw rebase(path, e, "comparison");
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(o.child("kind"), "unknown comparison kind '" + kind + "'");
}

Json to_json(const FamilyDescriptor& d) {
    return Json{{"params", d.params}, {"covering_constant", d.covering_constant}};
}

FamilyDescriptor descriptor_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"params", "covering_constant"});
    FamilyDescriptor d{o.integer("params"), o.number("covering_constant")};
    if (d.params < 0) throw ConfigError(o.child("params"), "must be nonnegative");
    if (d.covering_constant < 0.0) throw ConfigError(o.child("covering_constant"), "must be nonnegative");
    return d;
}

Json to_json(const ClassSpec& spec) {
    return Json{{"kind", "explicit"},
                {"name", spec.name},
                {"m", spec.m},
                {"d", spec.d},
                {"interval", json_value(spec.interval)},
                {"comparison", to_json(spec.cf)},
                {"encoder", to_json(spec.encoder)},
                {"fields", to_json(spec.fields)},
                {"L0", spec.L0},
                {"R", spec.K_radius},
                {"K_tilde_radius", spec.K_tilde_radius},
                {"diameter", spec.diameter},
                {"covering", to_string(spec.covering)}};
}

namespace {

// Explicit descriptor, or an encoder family with a parameter radius.
FamilyDescriptor class_encoder(const Json& j, const std::string& path, int d, TimeInterval interval, double R) {
    if (j.is_object() && j.contains("params")) return descriptor_from_json(j, path);
    const JsonObject o(j, path, {"kind", "widths", "init_scale", "param_radius"});
    Json spec_json = Json::object();
    for (const char* key : {"kind", "widths", "init_scale"})
        if (o.has(key)) spec_json[key] = o.at(key);
    const EncoderSpec spec = encoder_spec_from_json(spec_json, path);
    const double radius = o.number("param_radius", 10.0);
    if (!(radius > 0.0)) throw ConfigError(o.child("param_radius"), "must be positive");
    return mlp_encoder_descriptor(spec, d, interval, R, radius);
}

}  // namespace

ClassSpec class_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path,
                       {"kind", "name", "m", "d", "T", "lambda", "L", "L0", "interval", "comparison", "encoder", "fields",
                        "R", "K_tilde_radius", "diameter", "covering", "constant_bound"});
    const std::string kind = o.string("kind");
    const int m = o.integer("m");
    const int d = o.integer("d");
    const double R = o.number("R");
    if (m < 1) throw ConfigError(o.child("m"), "must be >= 1");
    if (d < 1) throw ConfigError(o.child("d"), "must be >= 1");
    if (!(R >= 0.0)) throw ConfigError(o.child("R"), "must be nonnegative");
    ClassSpec spec;
    try {
        if (kind == "exp_stable") {
            const double T = o.number("T");
            if (!(T > 0.0)) throw ConfigError(o.child("T"), "must be positive");
            const double lambda = o.number("lambda");
            if (!(lambda > 0.0)) throw ConfigError(o.child("lambda"), "must be positive");
            spec = exp_stable_class(m, d, T, lambda, o.number("L0"),
                                    class_encoder(o.at("encoder"), o.child("encoder"), d, {0.0, T}, R),
                                    descriptor_from_json(o.at("fields"), o.child("fields")), R, o.number("diameter"));
        } else if (kind == "affine" || kind == "recurrent") {
            const TimeInterval interval = json_interval(o.at("interval"), o.child("interval"));
            const FamilyDescriptor enc = class_encoder(o.at("encoder"), o.child("encoder"), d, interval, R);
            spec = kind == "affine" ? affine_class(m, d, interval, R, enc) : recurrent_class(m, d, interval, R, enc);
        } else if (kind == "constant") {
            const TimeInterval interval = json_interval(o.at("interval"), o.child("interval"));
            const FamilyDescriptor enc = class_encoder(o.at("encoder"), o.child("encoder"), d, interval, R);
            spec = constant_class(m, d, interval, R, o.number("constant_bound"), enc);
        } else if (kind == "explicit") {
            spec.m = m;
            spec.d = d;
            spec.interval = json_interval(o.at("interval"), o.child("interval"));
            spec.L0 = o.number("L0");
            const Json& cmp = o.at("comparison");
            if (cmp.is_object() && cmp.value("kind", "") == "exp_stable" && spec.interval.lo < 0.0) {
                // Contraction on negative times is not available; use the generic comparison.
                spec.cf = ComparisonFn::worst_case(o.number("L"), spec.L0, spec.interval);
            } else {
                spec.cf = comparison_from_json(cmp, o.child("comparison"), spec.interval);
            }
            spec.encoder = class_encoder(o.at("encoder"), o.child("encoder"), d, spec.interval, R);
            spec.fields = descriptor_from_json(o.at("fields"), o.child("fields"));
            spec.K_radius = R;
            spec.K_tilde_radius = o.number("K_tilde_radius", R);
            spec.diameter = o.number("diameter");
        } else {
            throw ConfigError(o.child("kind"), "unknown class kind '" + kind + "'");
        }
        if (o.has("covering")) spec.covering = covering_from(o.string("covering"), o.child("covering"));
        spec.name = o.string("name", kind);
        spec.validate();
    } catch (const ConfigError& e) {
        throw rebase(path, e, "bounds.class");
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
    return spec;
}

Json to_json(const DudleyOptions& opt) {
    return Json{{"gamma_resolution", opt.gamma_resolution},
                {"optimize_gamma", opt.optimize_gamma},
                {"epsilon", opt.epsilon},
                {"quadrature_rel_tol", opt.quadrature_rel_tol},
                {"bisection_rel_tol", 1e-12}};
}

DudleyOptions dudley_options_from_json(const Json& j, const std::string& path) {
    const JsonObject o(j, path, {"gamma_resolution", "optimize_gamma", "epsilon", "quadrature_rel_tol"});
    DudleyOptions opt;
    opt.gamma_resolution = o.integer("gamma_resolution", opt.gamma_resolution);
    opt.optimize_gamma = o.boolean("optimize_gamma", opt.optimize_gamma);
    opt.epsilon = o.number("epsilon", opt.epsilon);
    opt.quadrature_rel_tol = o.number("quadrature_rel_tol", opt.quadrature_rel_tol);
    if (opt.gamma_resolution < 3) throw ConfigError(o.child("gamma_resolution"), "must be >= 3");
    if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0)) throw ConfigError(o.child("epsilon"), "must lie in (0, 1)");
    if (!(opt.quadrature_rel_tol > 0.0)) throw ConfigError(o.child("quadrature_rel_tol"), "must be positive");
    return opt;
}

Json to_json(const BoundReport& r) {
    Json samples = Json::array();
    for (const auto& s : r.rho_samples) {
        samples.push_back(Json{{"delta", json_value(s.delta)},
                               {"rho1", json_value(s.rho1)},
                               {"rho2", json_value(s.rho2)},
                               {"rho3", json_value(s.rho3)},
                               {"integrand", json_value(s.integrand)}});
    }
    Json j{{"constant", "up to absolute constant (C = 1)"},
           {"n", r.n},
           {"bar_B", json_value(r.bar_B)},
           {"L0", r.L0},
           {"diameter", r.diameter},
           {"gamma", r.gamma},
           {"entropy_integral", json_value(r.entropy_integral)},
           {"head_contribution", json_value(r.head_contribution)},
           {"dudley_value", json_value(r.value)},
           {"integrand_evaluations", r.integrand_evaluations},
           {"rho_samples", samples},
           {"tolerances", to_json(r.options)}};
    if (r.closed_form) {
        j["closed_form_match"] = Json{{"closed_form", r.closed_form->closed_form},
                                      {"constant", r.closed_form->constant},
                                      {"quadrature", r.closed_form->quadrature},
                                      {"relative_gap", r.closed_form->relative_gap}};
    }
    return j;
}

Json to_json(const LemmaReport& r) {
    return Json{{"name", r.name},
                {"family", r.family},
                {"trials", r.trials},
                {"violations", r.violations},
                {"max_ratio", json_value(r.max_ratio)},
                {"min_slack", json_value(r.min_slack)},
                {"escalations", r.escalations}};
}

Json to_json(const NetReport& r) {
    return Json{{"trials", r.trials},
                {"violations", r.violations},
                {"grid_points", r.grid_points},
                {"net_size", r.net_size},
                {"radius", r.radius},
                {"max_distance", r.max_distance},
                {"exhaustive", r.exhaustive}};
}

Json to_json(const RademacherEstimate& est) {
    return Json{{"mean", est.mean},
                {"std_err", est.std_err},
                {"draws", est.draws},
                {"lower_estimate", est.lower_estimate},
                {"values", est.values}};
}

Json to_json(const FitReport& r) {
    Json risks = Json::array();
    for (double x : r.restart_risks) risks.push_back(json_value(x));
    return Json{{"final_empirical_risk", r.final_empirical_risk},
                {"best_restart", r.best_restart},
                {"restart_risks", risks},
                {"restart_errors", r.restart_errors},
                {"iterations", r.history.size()},
                {"seed_used", r.seed_used}};
}

}  // namespace orbitfit
