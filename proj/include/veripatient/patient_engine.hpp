#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "veripatient/case_model.hpp"
#include "veripatient/llm_gateway.hpp"
#include "veripatient/umls_context.hpp"

namespace veripatient::engine {

/// One generator attempt (1-based).
struct CandidateResponse {
    std::string text;
    int attempt_index = 1;
};

enum class VerdictKind { pass, regenerate };

struct Verdict {
    VerdictKind verdict = VerdictKind::regenerate;
    std::string reasoning;
    std::optional<std::string> issue; // present whenever verdict = regenerate
};

enum class EngineMode { hybrid, prompt_only, no_controller };

std::string_view engine_mode_name(EngineMode mode);
std::optional<EngineMode> engine_mode_from_name(std::string_view name);

struct EngineConfig {
    int max_attempts = 2;
    EngineMode mode = EngineMode::hybrid;
    std::string fallback_text = "I'm not sure, can you ask me something else?";
};

/// One completed doctor/patient exchange, as the engine sees history.
struct Exchange {
    std::string doctor_text;
    std::string patient_text;
};

using History = std::vector<Exchange>;

struct ConversationState {
    int turn_index = 1;
    History history;
};

/// What a respond() call produced: the emitted text is either a
/// PASS-verified, leak-clean candidate or the fallback text, never a
/// rejected candidate.
struct PatientTurn {
    std::string text;
    int attempts = 0;
    std::vector<Verdict> verdicts;
    bool fallback_used = false;
};

struct LeakScanResult {
    bool leak = false;
    std::string term; // the matched ground-truth term (internal use only)
};

/// "Doctor: ...\nPatient: ..." rendering of the history for prompts.
std::string render_history(const History& history);

/// Build the blinded generator message list: patient system prompt,
/// alternating history, the current doctor utterance, and (when
/// regenerating) the feedback as a trailing system note.
std::vector<llm::ChatMessage> build_generator_messages(
    const cases::GeneratorView& view, const History& history, const std::string& profile_block,
    const std::string& doctor_utterance, const std::optional<std::string>& feedback);

CandidateResponse generate_candidate(const cases::GeneratorView& view, const History& history,
                                     const std::string& profile_block,
                                     const std::string& doctor_utterance,
                                     const std::optional<std::string>& feedback,
                                     int attempt_index, llm::Gateway& gateway);

/// Deterministic pre-check run before the LLM verdict: case-insensitive
/// containment of the diagnosis label, its whitespace-normalized form,
/// or the ICD code.
LeakScanResult leak_scan(const CandidateResponse& candidate, const std::string& diagnosis,
                         const std::string& icd10);

/// LLM verification against the per-symptom semantic context (hybrid) or
/// an empty context object (prompt_only ablation). Unparseable verifier
/// output fails closed as REGENERATE("unparseable_verdict").
Verdict verify_candidate(const CandidateResponse& candidate, const cases::PatientCase& c,
                         const std::map<std::string, umls::SemanticContext>& context,
                         const History& history, llm::Gateway& gateway, EngineMode mode);

/// One patient simulator: blinded generation, leak scanning, grounded
/// verification and conservative fallback for a single conversation.
/// Instances are independent; use one per conversation.
class PatientEngine {
public:
    PatientEngine(cases::PatientCase patient_case,
                  std::map<std::string, umls::SemanticContext> context, EngineConfig config,
                  std::shared_ptr<llm::Gateway> generator,
                  std::shared_ptr<llm::Gateway> verifier);

    PatientTurn respond(const std::string& doctor_utterance, const ConversationState& state);

    const EngineConfig& config() const { return config_; }
    const cases::PatientCase& patient_case() const { return case_; }
    const std::string& profile_block() const { return profile_block_; }

private:
    std::string sanitize_feedback(std::string feedback) const;

    cases::PatientCase case_;
    cases::GeneratorView view_;
    std::map<std::string, umls::SemanticContext> context_;
    EngineConfig config_;
    std::string profile_block_;
    std::shared_ptr<llm::Gateway> generator_;
    std::shared_ptr<llm::Gateway> verifier_;
};

} // namespace veripatient::engine
