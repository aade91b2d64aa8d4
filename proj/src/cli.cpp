#include "orbitfit/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "orbitfit/errors.hpp"
#include "orbitfit/serialize.hpp"

#ifndef ORBITFIT_VERSION
#define ORBITFIT_VERSION "0.0.0"
#endif

namespace orbitfit {

namespace fs = std::filesystem;

std::string version_string() { return ORBITFIT_VERSION; }

void write_file_atomic(const std::string& path, const std::string& contents) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + target.string());
    }
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path.string());
    return ss.str();
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

// --- parsed configuration -------------------------------------------------------------

struct DataSection {
    bool present = false;
    std::optional<GeneratorSpec> generator;
    std::optional<fs::path> input;
    std::optional<fs::path> test_input;
    std::optional<double> train_fraction;
};

struct ModelSection {
    bool present = false;
    Json family_json;
    std::string family_path;
    EncoderSpec encoder;
    int m = 1;
    TimeInterval interval{-1.0, 1.0};
    std::optional<fs::path> file;
};

struct BoundsSection {
    std::optional<ClassSpec> cls;
    std::optional<int> n;
    std::optional<double> R;
    std::optional<double> param_radius;
    DudleyOptions options;
    double confidence = 0.1;
    int draws = 20;
    int inner_max_iters = 200;
    int inner_restarts = 1;
};

struct VerifySection {
    std::vector<std::string> families{"affine", "recurrent"};
    int d = 2;
    int m = 3;
    int k = 3;
    TimeInterval interval{-1.0, 1.0};
    double R = 1.0;
    VerifyOptions options;
    bool net = true;
    ToyClass toy{1, 1, {-1.0, 1.0}, 1.0, 1.0, 1.0};
    std::array<double, 3> deltas{0.1, 0.1, 0.1};
    int net_trials = 200;
    double budget = 1e7;
    bool exhaustive = false;
};

struct Context {
    std::string command;
    fs::path config_dir;
    fs::path output_dir;
    std::uint64_t seed = 0;
    std::string config_hash;
    DataSection data;
    ModelSection model;
    FlowConfig flow;
    TrainConfig train;
    BoundsSection bounds;
    VerifySection verify;
};

fs::path resolve(const Context& ctx, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : ctx.config_dir / path;
}

void parse_data(Context& ctx, const Json& j) {
    const JsonObject o(j, "data",
                       {"shape", "d", "n", "noise_sigma", "seed", "embed", "sampling", "input", "test_input",
                        "train_fraction"});
    DataSection& s = ctx.data;
    s.present = true;
    if (o.has("input")) {
        for (const char* key : {"shape", "n", "noise_sigma", "embed", "sampling"}) {
            if (o.has(key)) throw ConfigError(o.child(key), "cannot be combined with data.input");
        }
        s.input = resolve(ctx, o.string("input"));
    } else {
        Json gen = Json::object();
        for (const char* key : {"shape", "d", "n", "noise_sigma", "seed", "embed", "sampling"})
            if (j.contains(key)) gen[key] = j.at(key);
        s.generator = generator_from_json(gen, "data", ctx.seed);
    }
    if (o.has("test_input")) s.test_input = resolve(ctx, o.string("test_input"));
    if (o.has("train_fraction")) {
        const double f = o.number("train_fraction");
        if (!(f > 0.0 && f < 1.0)) throw ConfigError(o.child("train_fraction"), "must lie strictly between 0 and 1");
        s.train_fraction = f;
    }
}

void parse_model(Context& ctx, const Json& j) {
    const JsonObject o(j, "model", {"m", "interval", "family", "encoder", "file"});
    ModelSection& s = ctx.model;
    s.present = true;
    if (o.has("file")) s.file = resolve(ctx, o.string("file"));
    if (o.has("family") || o.has("m")) {
        s.m = o.integer("m");
        if (s.m < 1) throw ConfigError(o.child("m"), "must be >= 1");
        if (o.has("interval")) s.interval = json_interval(o.at("interval"), o.child("interval"));
        s.family_json = o.at("family");
        s.family_path = o.child("family");
        // Validate the structure now; the dimension is fixed once data is loaded.
        const int d = ctx.data.generator ? ctx.data.generator->d : 1;
        family_from_json(s.family_json, s.family_path, d);
        if (o.has("encoder")) s.encoder = encoder_spec_from_json(o.at("encoder"), o.child("encoder"));
    }
}

void parse_bounds(Context& ctx, const Json& j) {
    const JsonObject o(j, "bounds",
                       {"class", "n", "R", "param_radius", "gamma_resolution", "optimize_gamma", "epsilon",
                        "quadrature_rel_tol", "confidence", "rademacher"});
    BoundsSection& s = ctx.bounds;
    if (o.has("class")) s.cls = class_from_json(o.at("class"), o.child("class"));
    if (o.has("n")) {
        s.n = o.integer("n");
        if (*s.n < 1) throw ConfigError(o.child("n"), "must be >= 1");
    }
    if (o.has("R")) {
        s.R = o.number("R");
        if (!(*s.R >= 0.0)) throw ConfigError(o.child("R"), "must be nonnegative");
    }
    if (o.has("param_radius")) {
        s.param_radius = o.number("param_radius");
        if (!(*s.param_radius > 0.0)) throw ConfigError(o.child("param_radius"), "must be positive");
    }
    Json opt = Json::object();
    for (const char* key : {"gamma_resolution", "optimize_gamma", "epsilon", "quadrature_rel_tol"})
        if (j.contains(key)) opt[key] = j.at(key);
    s.options = dudley_options_from_json(opt, "bounds");
    s.confidence = o.number("confidence", s.confidence);
    if (!(s.confidence > 0.0 && s.confidence < 1.0)) throw ConfigError(o.child("confidence"), "must lie in (0, 1)");
    if (o.has("rademacher")) {
        const JsonObject r(o.at("rademacher"), o.child("rademacher"), {"draws", "max_iters", "restarts"});
        s.draws = r.integer("draws", s.draws);
        s.inner_max_iters = r.integer("max_iters", s.inner_max_iters);
        s.inner_restarts = r.integer("restarts", s.inner_restarts);
        if (s.draws < 2) throw ConfigError(r.child("draws"), "must be >= 2");
        if (s.inner_max_iters < 1) throw ConfigError(r.child("max_iters"), "must be >= 1");
        if (s.inner_restarts < 1) throw ConfigError(r.child("restarts"), "must be >= 1");
    }
}

void parse_verify(Context& ctx, const Json& j) {
    const JsonObject o(j, "verify",
                       {"families", "d", "m", "k", "interval", "R", "trials", "c0_samples", "tolerance", "net"});
    VerifySection& s = ctx.verify;
    if (o.has("families")) {
        const Json& f = o.at("families");
        if (!f.is_array()) throw ConfigError(o.child("families"), "expected an array of family names");
        s.families.clear();
        for (std::size_t i = 0; i < f.size(); ++i) {
            const std::string path = o.child("families") + "[" + std::to_string(i) + "]";
            if (!f[i].is_string()) throw ConfigError(path, "expected a string");
            const std::string name = f[i].get<std::string>();
            if (name != "affine" && name != "recurrent") throw ConfigError(path, "expected affine or recurrent");
            s.families.push_back(name);
        }
    }
    s.d = o.integer("d", s.d);
    s.m = o.integer("m", s.m);
    s.k = o.integer("k", s.m);
    if (s.d < 1) throw ConfigError(o.child("d"), "must be >= 1");
    if (s.m < 1) throw ConfigError(o.child("m"), "must be >= 1");
    if (s.k < 1 || s.k > s.m) throw ConfigError(o.child("k"), "must lie in [1, m]");
    if (o.has("interval")) s.interval = json_interval(o.at("interval"), o.child("interval"));
    s.R = o.number("R", s.R);
    if (!(s.R > 0.0)) throw ConfigError(o.child("R"), "must be positive");
    s.options.trials = o.integer("trials", s.options.trials);
    s.options.c0_samples = o.integer("c0_samples", s.options.c0_samples);
    s.options.tolerance = o.number("tolerance", s.options.tolerance);
    if (s.options.trials < 1) throw ConfigError(o.child("trials"), "must be >= 1");
    if (s.options.c0_samples < 1) throw ConfigError(o.child("c0_samples"), "must be >= 1");
    if (!(s.options.tolerance >= 0.0)) throw ConfigError(o.child("tolerance"), "must be nonnegative");
    if (o.has("net")) {
        const Json& nj = o.at("net");
        if (nj.is_boolean()) {
            s.net = nj.get<bool>();
        } else {
            const JsonObject n(nj, o.child("net"),
                               {"d", "m", "interval", "R", "field_bound", "param_bound", "deltas", "trials", "budget",
                                "exhaustive"});
            s.toy.d = n.integer("d", s.toy.d);
            s.toy.m = n.integer("m", s.toy.m);
            if (n.has("interval")) s.toy.interval = json_interval(n.at("interval"), n.child("interval"));
            s.toy.K_radius = n.number("R", s.toy.K_radius);
            s.toy.field_bound = n.number("field_bound", s.toy.field_bound);
            s.toy.param_bound = n.number("param_bound", s.toy.param_bound);
            try {
                s.toy.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(n.path() + e.path().substr(std::string("verify.toy").size()), e.message());
            }
            if (n.has("deltas")) {
                const Vec dl = json_vector(n.at("deltas"), n.child("deltas"), 3);
                for (int i = 0; i < 3; ++i) {
                    if (!(dl[i] >= 0.0)) throw ConfigError(n.child("deltas"), "radii must be nonnegative");
                    s.deltas[static_cast<std::size_t>(i)] = dl[i];
                }
            }
            s.net_trials = n.integer("trials", s.net_trials);
            s.budget = n.number("budget", s.budget);
            s.exhaustive = n.boolean("exhaustive", s.exhaustive);
            if (s.net_trials < 1) throw ConfigError(n.child("trials"), "must be >= 1");
        }
    }
}

Context load_context(const std::string& command, const std::string& config_path,
                     const std::optional<std::string>& output_override, const std::optional<std::uint64_t>& seed_override) {
    Context ctx;
    ctx.command = command;
    const fs::path path(config_path);
    Json raw = parse_json(read_file(path), "config");
    ctx.config_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    const JsonObject top(raw, "", {"data", "model", "flow", "train", "bounds", "verify", "output_dir", "seed"});

    ctx.seed = seed_override ? *seed_override : top.unsigned64("seed", 0);
    if (output_override) {
        ctx.output_dir = fs::path(*output_override);
    } else {
        ctx.output_dir = resolve(ctx, top.string("output_dir", "out"));
    }

    Json hashed = raw;
    hashed.erase("output_dir");
    hashed["seed"] = ctx.seed;
    ctx.config_hash = "fnv1a64:" + fnv1a_hex(hashed.dump());

    if (top.has("data")) parse_data(ctx, top.at("data"));
    if (top.has("flow")) ctx.flow = flow_from_json(top.at("flow"), "flow");
    if (top.has("model")) parse_model(ctx, top.at("model"));
    ctx.train = train_from_json(top.has("train") ? top.at("train") : Json::object(), "train", ctx.seed);
    if (top.has("bounds")) parse_bounds(ctx, top.at("bounds"));
    if (top.has("verify")) parse_verify(ctx, top.at("verify"));
    return ctx;
}

// --- helpers shared by the commands ------------------------------------------------------

Dataset load_dataset(const Context& ctx) {
    if (!ctx.data.present) throw ConfigError("data", "missing required section");
    if (ctx.data.input) return read_csv_file(ctx.data.input->string());
    return generate(*ctx.data.generator);
}

Dataset train_part(const Context& ctx, const Dataset& all) {
    if (!ctx.data.train_fraction) return all;
    return split(all, *ctx.data.train_fraction, ctx.seed).first;
}

ModelSpec model_spec(const Context& ctx, int dim) {
    if (!ctx.model.present || ctx.model.family_json.is_null()) throw ConfigError("model.family", "missing required field");
    ModelSpec spec;
    spec.family = family_from_json(ctx.model.family_json, ctx.model.family_path, dim);
    if (spec.family.dim != dim) throw ConfigError(ctx.model.family_path + ".dim", "differs from the data dimension");
    spec.encoder = ctx.model.encoder;
    spec.m = ctx.model.m;
    spec.interval = ctx.model.interval;
    spec.flow = ctx.flow;
    return spec;
}

fs::path model_file(const Context& ctx) { return ctx.model.file ? *ctx.model.file : ctx.output_dir / "model.json"; }

Json integrator_tolerances(const Context& ctx) {
    return Json{{"step_size_max", ctx.flow.step_size_max}, {"min_steps", ctx.flow.min_steps}};
}

Json envelope(const Context& ctx, Json tolerances, Json result) {
    return Json{{"tool", "orbitfit"},
                {"version", version_string()},
                {"command", ctx.command},
                {"config_hash", ctx.config_hash},
                {"seed", ctx.seed},
                {"tolerances", std::move(tolerances)},
                {"result", std::move(result)}};
}

void ensure_output_dir(const Context& ctx) {
    std::error_code ec;
    fs::create_directories(ctx.output_dir, ec);
    if (ec || !fs::is_directory(ctx.output_dir)) throw IoError("cannot create output directory " + ctx.output_dir.string());
}

void write_output(const Context& ctx, const std::string& name, const std::string& contents) {
    write_file_atomic((ctx.output_dir / name).string(), contents);
}

ClassSpec class_for(const Context& ctx, const std::optional<Dataset>& data) {
    if (ctx.bounds.cls) return *ctx.bounds.cls;
    double R = 0.0;
    if (ctx.bounds.R) {
        R = *ctx.bounds.R;
    } else if (data) {
        R = data->support_radius();
    } else {
        throw ConfigError("bounds.R", "needed when neither bounds.class nor data is given");
    }
    const int d = data ? data->dim() : (ctx.data.generator ? ctx.data.generator->d : 0);
    if (d < 1) throw ConfigError("data.d", "needed to derive the class");
    const ModelSpec spec = model_spec(ctx, d);
    const double radius = ctx.bounds.param_radius.value_or(ctx.train.weight_projection_radius);
    const FamilyDescriptor enc = mlp_encoder_descriptor(spec.encoder, d, spec.interval, R, radius);
    switch (spec.family.kind) {
        case FieldKind::Constant:
            return constant_class(spec.m, d, spec.interval, R, spec.family.constant_bound, enc);
        case FieldKind::Affine:
            return affine_class(spec.m, d, spec.interval, R, enc);
        case FieldKind::Recurrent:
            return recurrent_class(spec.m, d, spec.interval, R, enc);
    }
    throw ConfigError("model.family.kind", "unsupported");
}

std::optional<Dataset> optional_dataset(const Context& ctx) {
    if (!ctx.data.present) return std::nullopt;
    return train_part(ctx, load_dataset(ctx));
}

// --- commands --------------------------------------------------------------------------------

int cmd_gen(const Context& ctx, std::ostream& out) {
    if (!ctx.data.present) throw ConfigError("data", "missing required section");
    if (!ctx.data.generator) throw ConfigError("data.input", "gen needs generator fields instead of an input file");
    const Dataset S = generate(*ctx.data.generator);
    ensure_output_dir(ctx);
    write_output(ctx, "data.csv", to_csv(S));
    Json files = Json::array({"data.csv"});
    Json result{{"generator", to_json(*ctx.data.generator)},
                {"n", S.size()},
                {"d", S.dim()},
                {"support_radius", S.support_radius()}};
    if (ctx.data.train_fraction) {
        const auto [train, test] = split(S, *ctx.data.train_fraction, ctx.seed);
        write_output(ctx, "train.csv", to_csv(train));
        write_output(ctx, "test.csv", to_csv(test));
        files.push_back("train.csv");
        files.push_back("test.csv");
        result["train_fraction"] = *ctx.data.train_fraction;
        result["n_train"] = train.size();
        result["n_test"] = test.size();
    }
    result["files"] = files;
    write_output(ctx, "manifest.json", dump(envelope(ctx, Json::object(), result)));
    out << "gen: wrote " << S.size() << " points to " << (ctx.output_dir / "data.csv").string() << "\n";
    return kExitOk;
}

int cmd_fit(const Context& ctx, std::ostream& out) {
    const Dataset S = train_part(ctx, load_dataset(ctx));
    const ModelSpec spec = model_spec(ctx, S.dim());
    const FitReport report = fit(S, spec, ctx.train);
    ensure_output_dir(ctx);
    write_output(ctx, "model.json", dump(to_json(report.best_model)));
    std::string history = "restart,iter,risk,grad_norm,best_so_far\n";
    for (const auto& h : report.history) {
        history += std::to_string(h.restart) + "," + std::to_string(h.iter) + "," + format_double(h.risk) + "," +
                   format_double(h.grad_norm) + "," + format_double(h.best_so_far) + "\n";
    }
    write_output(ctx, "history.csv", history);
    Json result = to_json(report);
    result["n_train"] = S.size();
    result["model_spec"] = Json{{"m", spec.m},
                                {"interval", json_value(spec.interval)},
                                {"family", to_json(spec.family)},
                                {"encoder", to_json(spec.encoder)}};
    result["train"] = to_json(ctx.train);
    Json tol = integrator_tolerances(ctx);
    tol["gradient_tolerance"] = ctx.train.tolerance;
    write_output(ctx, "fit_report.json", dump(envelope(ctx, tol, result)));
    out << "fit: final empirical risk " << format_double(report.final_empirical_risk) << " (restart "
        << report.best_restart << ")\n";
    return kExitOk;
}

int cmd_eval(const Context& ctx, std::ostream& out) {
    const fs::path path = model_file(ctx);
    const ReconstructionMap G = model_from_json(parse_json(read_file(path), path.string()));
    std::optional<Dataset> test;
    std::string source;
    if (ctx.data.test_input) {
        test = read_csv_file(ctx.data.test_input->string());
        source = "test_input";
    } else {
        const Dataset all = load_dataset(ctx);
        if (ctx.data.train_fraction) {
            test = split(all, *ctx.data.train_fraction, ctx.seed).second;
            source = "held_out_split";
        } else {
            test = all;
            source = "full_dataset";
        }
    }
    if (test->dim() != G.dim()) throw ConfigError("data", "test data dimension differs from the model dimension");
    const double risk = evaluate(G, *test);
    ensure_output_dir(ctx);
    const Json result{{"risk", risk}, {"n", test->size()}, {"source", source}};
    write_output(ctx, "eval_report.json", dump(envelope(ctx, integrator_tolerances(ctx), result)));
    out << "eval: risk " << format_double(risk) << " on " << test->size() << " points\n";
    return kExitOk;
}

int cmd_bound(const Context& ctx, std::ostream& out) {
    const std::optional<Dataset> data = ctx.bounds.cls && ctx.bounds.n ? std::nullopt : optional_dataset(ctx);
    const ClassSpec cls = class_for(ctx, data);
    int n = 0;
    if (ctx.bounds.n) {
        n = *ctx.bounds.n;
    } else if (data) {
        n = data->size();
    } else {
        throw ConfigError("bounds.n", "missing required field");
    }
    const BoundReport report = dudley_bound(cls, n, ctx.bounds.options);
    Json result = to_json(report);
    result["class"] = to_json(cls);
    result["theorem2_rhs"] = Json{{"confidence", ctx.bounds.confidence},
                                  {"rademacher_proxy", "dudley_value"},
                                  {"value", theorem2_certificate(report.value, cls.diameter, n, ctx.bounds.confidence)}};
    Json tol = to_json(ctx.bounds.options);
    tol["integrator"] = integrator_tolerances(ctx);
    ensure_output_dir(ctx);
    write_output(ctx, "bound_report.json", dump(envelope(ctx, tol, result)));
    out << "bound: dudley value " << format_double(report.value) << " (n = " << n << ", up to absolute constant)\n";
    if (report.closed_form) out << "bound: closed-form relative gap " << format_double(report.closed_form->relative_gap) << "\n";
    return kExitOk;
}

int cmd_rademacher(const Context& ctx, std::ostream& out) {
    const Dataset S = train_part(ctx, load_dataset(ctx));
    const ModelSpec spec = model_spec(ctx, S.dim());
    TrainConfig inner = ctx.train;
    inner.max_iters = ctx.bounds.inner_max_iters;
    inner.restarts = ctx.bounds.inner_restarts;
    ParametricClass cls(spec, inner);
    const RademacherEstimate est = rademacher_estimate(cls, S, ctx.bounds.draws, ctx.seed);
    const ClassSpec cspec = class_for(ctx, S);
    Json result = to_json(est);
    result["n"] = S.size();
    result["diameter"] = cspec.diameter;
    result["theorem2_certificate"] =
        Json{{"confidence", ctx.bounds.confidence},
             {"value", theorem2_certificate(est.mean, cspec.diameter, S.size(), ctx.bounds.confidence)}};
    Json tol = integrator_tolerances(ctx);
    tol["inner_max_iters"] = inner.max_iters;
    tol["inner_restarts"] = inner.restarts;
    ensure_output_dir(ctx);
    write_output(ctx, "rademacher_report.json", dump(envelope(ctx, tol, result)));
    out << "rademacher: " << format_double(est.mean) << " +- " << format_double(est.std_err)
        << " (lower estimate over " << est.draws << " sign draws)\n";
    return kExitOk;
}

int cmd_verify(const Context& ctx, std::ostream& out) {
    const VerifySection& v = ctx.verify;
    VerifyOptions opt = v.options;
    opt.flow = ctx.flow;
    Json lemmas = Json::array();
    int violations = 0;
    std::uint64_t stream = 0;
    for (const auto& name : v.families) {
        const VerificationFamily fam = name == "affine" ? affine_verification_family(v.d, v.m, v.interval, v.R)
                                                        : recurrent_verification_family(v.d, v.m, v.interval, v.R);
        const LemmaReport reports[] = {
            (opt.seed = derive_seed(ctx.seed, stream++), verify_lemma_one_layer(fam, opt)),
            (opt.seed = derive_seed(ctx.seed, stream++), verify_lemma_initial_condition(fam, v.k, opt)),
            (opt.seed = derive_seed(ctx.seed, stream++), verify_lemma_field_perturbation(fam, opt)),
        };
        for (const auto& r : reports) {
            violations += r.violations;
            lemmas.push_back(to_json(r));
            out << "verify: " << r.name << " [" << r.family << "] violations " << r.violations << "/" << r.trials
                << ", min slack " << format_double(r.min_slack) << "\n";
        }
    }
    Json result{{"lemmas", lemmas}};
    if (v.net) {
        const NetReport net = verify_proposition_net(v.toy, v.deltas[0], v.deltas[1], v.deltas[2], v.net_trials,
                                                     derive_seed(ctx.seed, stream++), v.budget, v.exhaustive);
        violations += net.violations;
        Json nj = to_json(net);
        nj["deltas"] = v.deltas;
        result["net"] = nj;
        out << "verify: product net violations " << net.violations << "/" << net.trials << ", max distance "
            << format_double(net.max_distance) << " <= radius " << format_double(net.radius) << "\n";
    }
    result["violations"] = violations;
    Json tol = integrator_tolerances(ctx);
    tol["verify_tolerance"] = opt.tolerance;
    tol["c0_samples"] = opt.c0_samples;
    tol["trials"] = opt.trials;
    ensure_output_dir(ctx);
    write_output(ctx, "verify_report.json", dump(envelope(ctx, tol, result)));
    return violations == 0 ? kExitOk : kExitViolations;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fit submanifolds with composed flows and evaluate generalization bounds."};
    app.name("orbitfit");
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    std::string config;
    std::string output_dir;
    std::uint64_t seed = 0;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"gen", "generate a synthetic dataset"},
        {"fit", "fit a reconstruction map"},
        {"eval", "evaluate a fitted model"},
        {"bound", "entropy-integral generalization bound"},
        {"rademacher", "Monte-Carlo Rademacher estimate"},
        {"verify", "numerical checks of the perturbation inequalities"},
    };
    std::vector<CLI::App*> subs;
    std::vector<CLI::Option*> out_opts;
    std::vector<CLI::Option*> seed_opts;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON configuration file")->required();
        out_opts.push_back(sub->add_option("--output-dir", output_dir, "override output_dir"));
        seed_opts.push_back(sub->add_option("--seed", seed, "override seed"));
        subs.push_back(sub);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::size_t which = 0;
    while (which < subs.size() && !subs[which]->parsed()) ++which;
    const std::string command = commands[which].first;
    try {
        const std::optional<std::string> out_override =
            out_opts[which]->count() ? std::optional<std::string>(output_dir) : std::nullopt;
        const std::optional<std::uint64_t> seed_override =
            seed_opts[which]->count() ? std::optional<std::uint64_t>(seed) : std::nullopt;
        const Context ctx = load_context(command, config, out_override, seed_override);
        if (command == "gen") return cmd_gen(ctx, out);
        if (command == "fit") return cmd_fit(ctx, out);
        if (command == "eval") return cmd_eval(ctx, out);
        if (command == "bound") return cmd_bound(ctx, out);
        if (command == "rademacher") return cmd_rademacher(ctx, out);
        return cmd_verify(ctx, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DimensionError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace orbitfit
