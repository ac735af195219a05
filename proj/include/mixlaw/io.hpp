#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mixlaw/core.hpp"
#include "mixlaw/fit.hpp"
#include "mixlaw/optimize.hpp"
#include "mixlaw/pipeline.hpp"

namespace mixlaw {

// --- run tables ---------------------------------------------------------------
//
// Comma-separated text with a header row:
//   run_id,model_size,step,batch_tokens,r_<domain>...,loss_<domain>...,loss_overall
// An empty loss cell means "not measured". loss_overall is optional.

std::vector<RunRecord> parse_runs(std::istream& in, const std::string& source = "<input>");
std::vector<RunRecord> load_runs(const std::filesystem::path& path);
std::string format_runs(std::span<const RunRecord> records);
void save_runs(const std::filesystem::path& path, std::span<const RunRecord> records);

// Mixture lists: a header of r_<domain> columns, one mixture per row.
std::vector<Mixture> parse_mixtures(std::istream& in, const std::string& source = "<input>");
std::vector<Mixture> load_mixtures(const std::filesystem::path& path);
std::string format_mixtures(std::span<const Mixture> mixtures);

// "sha256:<hex>" of the canonical text form of `records`.
std::string data_digest(std::span<const RunRecord> records);

// --- law artifacts --------------------------------------------------------------

inline constexpr int kSchemaVersion = 1;

struct Provenance {
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string data_digest;
    std::map<std::string, double> stage_maes;
};

/// Model prediction at one fitting input, stored for later consistency checks.
struct FittedPoint {
    std::vector<double> input;  // mixture proportions, or {x} for power laws
    double prediction = 0.0;
};

using ArtifactModel = std::variant<PowerLaw, MixingLawModel, EnsembleModel, PipelinePrediction>;

struct LawArtifact {
    int schema_version = kSchemaVersion;
    ArtifactModel model;
    Provenance provenance;
    std::vector<FittedPoint> fitted;

    // "power", "mixing", "ensemble" or "pipeline".
    std::string kind() const;
    std::size_t dims() const;  // 0 for power laws
    std::vector<std::string> training_domains() const;
};

nlohmann::json to_json(const LawArtifact& artifact);
LawArtifact artifact_from_json(const nlohmann::json& j);

// Canonical text: stable key order, round-trip float precision.
std::string serialize_artifact(const LawArtifact& artifact);
LawArtifact parse_artifact(const std::string& text);
LawArtifact load_artifact(const std::filesystem::path& path);
void save_artifact(const std::filesystem::path& path, const LawArtifact& artifact);

nlohmann::json model_to_json(const MixingLawModel& model);
MixingLawModel mixing_model_from_json(const nlohmann::json& j);

// --- operations on loaded artifacts, shared by the CLI and the server ------------

struct ArtifactPrediction {
    double overall = 0.0;
    std::vector<std::pair<std::string, double>> per_domain;
};

ArtifactPrediction predict_artifact(const LawArtifact& artifact, std::span<const double> r);
double predict_power(const LawArtifact& artifact, double x);

// Empty `chain` picks the artifact's default objective (see argmin_mixture).
ArgminResult optimize_artifact(const LawArtifact& artifact, const OptimizeConfig& config, const std::string& chain = {});

nlohmann::json artifact_metadata(const LawArtifact& artifact);

// Parses a mixture from JSON: an array of M numbers, or an object keyed by
// training-domain name. Throws Schema errors naming the rule.
std::vector<double> mixture_from_json(const nlohmann::json& j, std::span<const std::string> domains);

}  // namespace mixlaw
