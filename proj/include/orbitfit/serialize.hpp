#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>

#include "json.hpp"
#include "orbitfit/bounds.hpp"
#include "orbitfit/data.hpp"
#include "orbitfit/train.hpp"

/**
 * @file serialize.hpp
 *
 * JSON forms of models, specs and reports. Readers validate against a fixed
 * schema, reject unknown keys, and report failures as ConfigError carrying a
 * dotted field path such as "model.fields[1].A".
 */

namespace orbitfit {

using Json = nlohmann::ordered_json;

/// Object view that rejects keys outside `allowed` on construction.
class JsonObject {
public:
    JsonObject(const Json& j, std::string path, std::initializer_list<const char*> allowed);

    const std::string& path() const noexcept { return path_; }
    std::string child(const std::string& key) const;
    bool has(const std::string& key) const;
    /// Throws ConfigError "<path>.<key>: missing required field".
    const Json& at(const std::string& key) const;

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key) const;
    int integer(const std::string& key, int fallback) const;
    std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;

private:
    const Json& j_;
    std::string path_;
};

double json_number(const Json& j, const std::string& path);
Vec json_vector(const Json& j, const std::string& path, Eigen::Index expected = -1);
Mat json_matrix(const Json& j, const std::string& path);
TimeInterval json_interval(const Json& j, const std::string& path);

/// Finite numbers as JSON numbers, non-finite ones as "inf", "-inf" or "nan".
Json json_value(double x);
Json json_value(const Vec& v);
Json json_value(const Mat& m);
Json json_value(const TimeInterval& interval);

/// Two-space indented dump with a trailing newline; byte-stable.
std::string dump(const Json& j);
Json parse_json(const std::string& text, const std::string& what);

/// 64-bit FNV-1a of a string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// --- enums ---------------------------------------------------------------------------
std::string to_string(FieldKind kind);
std::string to_string(Nonlinearity sigma);
std::string to_string(EncoderKind kind);
std::string to_string(OptimizerKind kind);
std::string to_string(SamplingMode mode);

// --- specs -----------------------------------------------------------------------------
Json to_json(const BumpSpec& bump);
BumpSpec bump_from_json(const Json& j, const std::string& path);
Json to_json(const FamilySpec& family);
/// `dim` fills the family dimension when the object omits it.
FamilySpec family_from_json(const Json& j, const std::string& path, int dim);
Json to_json(const EncoderSpec& spec);
EncoderSpec encoder_spec_from_json(const Json& j, const std::string& path);
Json to_json(const FlowConfig& cfg);
FlowConfig flow_from_json(const Json& j, const std::string& path);
Json to_json(const TrainConfig& cfg);
TrainConfig train_from_json(const Json& j, const std::string& path, std::uint64_t seed);
Json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_from_json(const Json& j, const std::string& path, std::uint64_t seed);

// --- models ----------------------------------------------------------------------------
Json to_json(const VectorField& f);
/// Rejects (rather than rescales) out-of-family parameters so that loading is exact.
VectorField field_from_json(const Json& j, const std::string& path);
Json to_json(const Encoder& a);
Encoder encoder_from_json(const Json& j, const std::string& path);
Json to_json(const ReconstructionMap& G);
ReconstructionMap model_from_json(const Json& j, const std::string& path = "model");

// --- bounds ----------------------------------------------------------------------------
Json to_json(const ComparisonFn& cf);
ComparisonFn comparison_from_json(const Json& j, const std::string& path, TimeInterval interval);
Json to_json(const FamilyDescriptor& d);
FamilyDescriptor descriptor_from_json(const Json& j, const std::string& path);
Json to_json(const ClassSpec& spec);
/// Accepts {"kind": "exp_stable" | "affine" | "recurrent" | "explicit", ...}.
/// An exp_stable comparison on an interval reaching below 0 falls back to the
/// worst-case comparison with the given L and L0.
ClassSpec class_from_json(const Json& j, const std::string& path);
Json to_json(const DudleyOptions& opt);
DudleyOptions dudley_options_from_json(const Json& j, const std::string& path);
Json to_json(const BoundReport& report);
Json to_json(const LemmaReport& report);
Json to_json(const NetReport& report);
Json to_json(const RademacherEstimate& est);
/// Summary without the per-iteration history.
Json to_json(const FitReport& report);

}  // namespace orbitfit
