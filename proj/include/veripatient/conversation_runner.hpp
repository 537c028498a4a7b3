#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veripatient/patient_engine.hpp"

namespace veripatient::run {

/// One doctor message + patient reply pair. A final-diagnosis message
/// closes the conversation without a patient reply (attempts = 0).
struct TurnRecord {
    int index = 1;
    std::string doctor_text;
    std::string patient_text;
    int attempts = 0;
    std::vector<engine::Verdict> verdicts;
    bool fallback_used = false;
};

enum class Termination { diagnosis, turn_cap, error };

std::string_view termination_name(Termination t);

struct TranscriptError {
    int turn = 0;
    std::string message;
};

struct Transcript {
    std::string case_id;
    std::string doctor_id;
    std::string mode;
    std::vector<TurnRecord> turns;
    std::optional<std::string> final_diagnosis;
    Termination terminated = Termination::error;
    std::uint64_t run_seed = 0;
    std::optional<TranscriptError> error;
};

struct RunnerOptions {
    std::string doctor_id;
    engine::EngineMode mode = engine::EngineMode::hybrid;
    int max_turns = 40;
    std::uint64_t run_seed = 0;
};

/// Text following the first case-insensitive "Final Diagnosis:" marker,
/// trimmed to end of line; nullopt when the marker is absent.
std::optional<std::string> extract_final_diagnosis(const std::string& doctor_text);

/// Drive one doctor<->patient dialogue: alternate doctor question and
/// engine reply until a final diagnosis appears or the turn cap is hit,
/// then force one diagnosis request. Gateway failures terminate the
/// conversation with an error record instead of propagating.
Transcript run_conversation(engine::PatientEngine& patient, llm::Gateway& doctor,
                            const RunnerOptions& options);

nlohmann::json transcript_to_json(const Transcript& t);
std::string serialize_transcript(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& doc);

/// "<case_id>__<doctor_id>__<mode>.json"
std::string transcript_file_name(const std::string& case_id, const std::string& doctor_id,
                                 const std::string& mode);

} // namespace veripatient::run
