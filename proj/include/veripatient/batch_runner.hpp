#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veripatient/case_model.hpp"
#include "veripatient/conversation_runner.hpp"
#include "veripatient/llm_gateway.hpp"
#include "veripatient/patient_engine.hpp"
#include "veripatient/umls_context.hpp"

namespace veripatient::run {

struct RunConfig {
    std::string corpus_path;
    std::string cache_path; // required when modes include hybrid
    std::string output_dir;
    std::uint64_t seed = 0;
    int width = 1;
    std::vector<engine::EngineMode> modes = {engine::EngineMode::hybrid};
    int max_turns = 40;
    int max_attempts = 2;
    std::string fallback_text; // empty = engine default
    llm::EndpointConfig patient_endpoint;
    llm::EndpointConfig verifier_endpoint;
    std::vector<llm::EndpointConfig> doctor_endpoints;
    std::optional<llm::EndpointConfig> judge_endpoint;
    std::string audit_log_path; // optional JSON-lines request log
    bool resume = false;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

struct CellResult {
    std::string case_id;
    std::string doctor_id;
    std::string mode;
    std::string transcript_path;
    bool ok = false;     // terminated != error
    bool skipped = false; // resume skipped an existing valid transcript
};

struct BatchSummary {
    int total = 0;
    int succeeded = 0;
    int failed = 0;
    int skipped = 0;
    std::vector<CellResult> cells;
};

/// Reproducibility record written once per batch; the only artifact
/// allowed to carry wall-clock timestamps.
struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> modes;
    std::string corpus_fingerprint;
    std::string cache_fingerprint;
    std::string tool_version;
    std::string created_at;
};

nlohmann::json manifest_to_json(const RunManifest& m);

/// Noise profile for a case: the case's own profile when set, otherwise
/// a standard-protocol profile sampled from the case seed.
noise::NoiseProfile effective_profile(const cases::PatientCase& c);

/// Context handed to the verifier for one case: cache entries for each
/// normalized symptom, overridden by any case-embedded fragments.
std::map<std::string, umls::SemanticContext> resolve_case_context(
    const cases::PatientCase& c, const umls::ContextCache* cache);

/// Execute every (case x doctor x mode) cell up to `width` conversations
/// in parallel. Per-cell failures become error transcripts; the batch
/// continues. Writes transcripts, outcomes.jsonl, summary.json and
/// manifest.json into the output directory.
BatchSummary run_batch(const RunConfig& config);

} // namespace veripatient::run
