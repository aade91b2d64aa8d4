#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "orbitfit/cli.hpp"
#include "orbitfit/serialize.hpp"

using namespace orbitfit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const char* env = std::getenv("ORBITFIT_TEST_TMP");
    const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "orbitfit_unit";
    const fs::path dir = root / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kSegment = R"({"seed": 1, "output_dir": "out",
 "data": {"shape": "segment", "d": 2, "n": 60, "train_fraction": 0.5},
 "model": {"m": 1, "interval": [-1, 1], "family": {"kind": "constant", "constant_bound": 1}},
 "train": {"max_iters": 40, "restarts": 1},
 "bounds": {"n": 30, "rademacher": {"draws": 2, "max_iters": 5, "restarts": 1}},
 "verify": {"trials": 4, "c0_samples": 50, "net": false}})";

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("full pipeline and byte-identical reruns") {
        const fs::path dir = scratch("pipeline");
        const std::string cfg = write_config(dir, kSegment).string();
        for (const char* cmd : {"gen", "fit", "eval", "bound", "rademacher", "verify"}) {
            const Run r = run({cmd, "--config", cfg});
            INFO(cmd << ": " << r.err);
            CHECK(r.code == 0);
        }
        const fs::path out = dir / "out";
        for (const char* f : {"data.csv", "manifest.json", "model.json", "fit_report.json", "eval_report.json",
                              "bound_report.json", "rademacher_report.json", "verify_report.json"}) {
            CHECK(fs::exists(out / f));
        }
        const Json report = parse_json(slurp(out / "bound_report.json"), "report");
        for (const char* key : {"tool", "version", "command", "config_hash", "seed", "tolerances", "result"}) {
            CHECK(report.contains(key));
        }
        CHECK(report["version"] == version_string());

        const std::string first = slurp(out / "fit_report.json") + slurp(out / "model.json");
        fs::remove_all(out);
        CHECK(run({"gen", "--config", cfg}).code == 0);
        CHECK(run({"fit", "--config", cfg}).code == 0);
        CHECK(slurp(out / "fit_report.json") + slurp(out / "model.json") == first);
    }

    TEST_CASE("flags override output directory and seed") {
        const fs::path dir = scratch("flags");
        const std::string cfg = write_config(dir, kSegment).string();
        const fs::path other = dir / "elsewhere";
        CHECK(run({"gen", "--config", cfg, "--output-dir", other.string(), "--seed", "9"}).code == 0);
        CHECK(fs::exists(other / "data.csv"));
        CHECK(run({"gen", "--config", cfg}).code == 0);
        CHECK(slurp(other / "data.csv") != slurp(dir / "out" / "data.csv"));
    }

    TEST_CASE("configuration errors exit with 2 and name the field") {
        const fs::path dir = scratch("config_errors");
        const Run missing = run({"gen", "--config", write_config(dir, R"({"data": {"d": 2}})").string()});
        CHECK(missing.code == 2);
        CHECK(missing.err.find("data.n: missing required field") != std::string::npos);
        const Run unknown = run({"gen", "--config", write_config(dir, R"({"datta": 1})").string()});
        CHECK(unknown.code == 2);
        CHECK(unknown.err.find("datta") != std::string::npos);
        CHECK(run({}).code == 2);
        CHECK(run({"gen"}).code == 2);
    }

    TEST_CASE("missing files exit with 3") {
        const fs::path dir = scratch("io_errors");
        CHECK(run({"gen", "--config", (dir / "nope.json").string()}).code == 3);
        const std::string cfg = write_config(dir, R"({"data": {"input": "absent.csv"}, "output_dir": "o",
            "model": {"m": 1, "family": {"kind": "constant"}}})").string();
        CHECK(run({"fit", "--config", cfg}).code == 3);
    }

    TEST_CASE("clean verification exits with 0 and counts no violations") {
        const fs::path dir = scratch("verify_clean");
        const std::string cfg = write_config(dir, R"({"output_dir": "o",
            "verify": {"trials": 4, "c0_samples": 20, "net": false}})").string();
        const Run r = run({"verify", "--config", cfg});
        INFO(r.err);
        CHECK(r.code == 0);
        const Json report = parse_json(slurp(dir / "o" / "verify_report.json"), "report");
        CHECK(report["result"]["violations"] == 0);
        const std::string neg = write_config(dir, R"({"verify": {"tolerance": -1.0}})").string();
        CHECK(run({"verify", "--config", neg}).code == 2);
    }

    TEST_CASE("atomic writes leave no temporary file") {
        const fs::path dir = scratch("atomic");
        const fs::path p = dir / "x.txt";
        write_file_atomic(p.string(), "hello\n");
        CHECK(slurp(p) == "hello\n");
        CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
    }
}
