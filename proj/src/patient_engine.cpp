#include "veripatient/patient_engine.hpp"

#include "veripatient/noise_taxonomy.hpp"
#include "veripatient/prompt_templates.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::engine {

namespace {

constexpr std::string_view kLeakIssue = "a diagnosis term the patient should not know";

std::string demographics_line(const cases::PatientCase& c) {
    std::string line = "age " + std::to_string(c.demographics.age) + ", sex " +
                       c.demographics.sex;
    if (c.demographics.occupation) line += ", occupation " + *c.demographics.occupation;
    return line;
}

std::optional<Verdict> parse_verdict_json(const std::string& raw) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        // Tolerate prose around the object: parse the outermost {...}.
        const auto open = raw.find('{');
        const auto close = raw.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close <= open) {
            return std::nullopt;
        }
        try {
            doc = nlohmann::json::parse(raw.substr(open, close - open + 1));
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;
        }
    }
    if (!doc.is_object() || !doc.contains("verdict") || !doc.at("verdict").is_string()) {
        return std::nullopt;
    }
    const std::string kind = text::to_lower(doc.at("verdict").get<std::string>());

    Verdict verdict;
    if (kind == "pass") {
        verdict.verdict = VerdictKind::pass;
    } else if (kind == "regenerate") {
        verdict.verdict = VerdictKind::regenerate;
    } else {
        return std::nullopt;
    }
    verdict.reasoning = doc.value("reasoning", "");
    if (doc.contains("issue") && doc.at("issue").is_string()) {
        const std::string issue = doc.at("issue").get<std::string>();
        if (!issue.empty() && text::to_lower(issue) != "null") verdict.issue = issue;
    }
    if (verdict.verdict == VerdictKind::regenerate && !verdict.issue) {
        verdict.issue = verdict.reasoning.empty() ? "unspecified_issue" : verdict.reasoning;
    }
    return verdict;
}

} // namespace

std::string_view engine_mode_name(EngineMode mode) {
    switch (mode) {
    case EngineMode::hybrid: return "hybrid";
    case EngineMode::prompt_only: return "prompt_only";
    case EngineMode::no_controller: return "no_controller";
    }
    return "hybrid";
}

std::optional<EngineMode> engine_mode_from_name(std::string_view name) {
    if (name == "hybrid") return EngineMode::hybrid;
    if (name == "prompt_only" || name == "prompt-only") return EngineMode::prompt_only;
    if (name == "no_controller" || name == "no-controller") return EngineMode::no_controller;
    return std::nullopt;
}

std::string render_history(const History& history) {
    if (history.empty()) return "(no prior exchanges)";
    std::string out;
    for (const Exchange& e : history) {
        out += "Doctor: " + e.doctor_text + "\n";
        if (!e.patient_text.empty()) out += "Patient: " + e.patient_text + "\n";
    }
    return out;
}

std::vector<llm::ChatMessage> build_generator_messages(
    const cases::GeneratorView& view, const History& history, const std::string& profile_block,
    const std::string& doctor_utterance, const std::optional<std::string>& feedback) {
    const std::map<std::string, std::string> vars = {
        {"age", std::to_string(view.age)},
        {"sex", view.sex},
        {"symptoms_list", text::join(view.symptoms, ", ")},
        {"noise_profile_block", profile_block},
    };

    std::vector<llm::ChatMessage> messages;
    messages.push_back({llm::MessageRole::system,
                        llm::render_template(llm::TemplateId::patient, vars)});
    for (const Exchange& e : history) {
        messages.push_back({llm::MessageRole::user, e.doctor_text});
        if (!e.patient_text.empty()) {
            messages.push_back({llm::MessageRole::assistant, e.patient_text});
        }
    }
    messages.push_back({llm::MessageRole::user, doctor_utterance});
    if (feedback) {
        messages.push_back({llm::MessageRole::system, *feedback});
    }
    return messages;
}

CandidateResponse generate_candidate(const cases::GeneratorView& view, const History& history,
                                     const std::string& profile_block,
                                     const std::string& doctor_utterance,
                                     const std::optional<std::string>& feedback,
                                     int attempt_index, llm::Gateway& gateway) {
    const auto messages =
        build_generator_messages(view, history, profile_block, doctor_utterance, feedback);
    const std::string raw =
        gateway.complete(messages, llm::role_preset(llm::AgentRole::patient_generator));
    return CandidateResponse{text::trim(raw), attempt_index};
}

LeakScanResult leak_scan(const CandidateResponse& candidate, const std::string& diagnosis,
                         const std::string& icd10) {
    const std::string collapsed = text::collapse_whitespace(candidate.text);
    if (!diagnosis.empty()) {
        if (text::icontains(candidate.text, diagnosis) ||
            text::icontains(collapsed, text::collapse_whitespace(diagnosis))) {
            return {true, diagnosis};
        }
    }
    if (!icd10.empty() && text::icontains(candidate.text, icd10)) {
        return {true, icd10};
    }
    return {};
}

Verdict verify_candidate(const CandidateResponse& candidate, const cases::PatientCase& c,
                         const std::map<std::string, umls::SemanticContext>& context,
                         const History& history, llm::Gateway& gateway, EngineMode mode) {
    if (mode == EngineMode::no_controller) {
        throw std::invalid_argument("verify_candidate is unavailable in no_controller mode");
    }

    std::string context_json = "{}";
    if (mode == EngineMode::hybrid) {
        nlohmann::json ctx = nlohmann::json::object();
        for (const auto& [key, value] : context) ctx[key] = value;
        context_json = ctx.dump(2);
    }

    const noise::NoiseProfile profile =
        c.noise_profile ? *c.noise_profile : noise::NoiseProfile{};
    const std::map<std::string, std::string> vars = {
        {"ground_truth_symptoms", text::join(c.symptoms, ", ")},
        {"demographics", demographics_line(c)},
        {"noise_profile", noise::profile_summary(profile)},
        {"conversation_history", render_history(history)},
        {"umls_context_json", context_json},
        {"candidate_response", candidate.text},
    };
    const std::string prompt = llm::render_template(llm::TemplateId::verifier, vars);

    const std::string raw = gateway.complete({{llm::MessageRole::system, prompt}},
                                             llm::role_preset(llm::AgentRole::verifier));

    if (auto verdict = parse_verdict_json(raw)) {
        return *verdict;
    }
    // Fail closed: an unreadable verdict never lets a candidate through.
    Verdict rejected;
    rejected.verdict = VerdictKind::regenerate;
    rejected.reasoning = "verifier output could not be parsed";
    rejected.issue = "unparseable_verdict";
    return rejected;
}

PatientEngine::PatientEngine(cases::PatientCase patient_case,
                             std::map<std::string, umls::SemanticContext> context,
                             EngineConfig config, std::shared_ptr<llm::Gateway> generator,
                             std::shared_ptr<llm::Gateway> verifier)
    : case_(std::move(patient_case)),
      view_(cases::generator_view(case_)),
      context_(std::move(context)),
      config_(std::move(config)),
      generator_(std::move(generator)),
      verifier_(std::move(verifier)) {
    if (config_.max_attempts < 1) {
        throw std::invalid_argument("max_attempts must be >= 1");
    }
    const noise::NoiseProfile profile =
        case_.noise_profile ? *case_.noise_profile : noise::NoiseProfile{};
    profile_block_ = noise::render_profile_block(profile);
}

std::string PatientEngine::sanitize_feedback(std::string feedback) const {
    if (text::icontains(feedback, case_.diagnosis) ||
        text::icontains(feedback, case_.icd10_code)) {
        return "Response contains " + std::string(kLeakIssue);
    }
    return feedback;
}

PatientTurn PatientEngine::respond(const std::string& doctor_utterance,
                                   const ConversationState& state) {
    PatientTurn turn;
    std::optional<std::string> feedback;

    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        const CandidateResponse candidate =
            generate_candidate(view_, state.history, profile_block_, doctor_utterance,
                               feedback, attempt, *generator_);
        turn.attempts = attempt;

        if (candidate.text.empty()) {
            Verdict verdict;
            verdict.reasoning = "generator returned an empty response";
            verdict.issue = "empty_response";
            turn.verdicts.push_back(verdict);
            feedback = sanitize_feedback("Response contains " + *verdict.issue);
            continue;
        }

        const LeakScanResult leak = leak_scan(candidate, case_.diagnosis, case_.icd10_code);
        if (leak.leak) {
            Verdict verdict;
            verdict.reasoning = "deterministic leak scan matched a ground-truth term";
            verdict.issue = std::string(kLeakIssue);
            turn.verdicts.push_back(verdict);
            // The matched term never flows back into the generator prompt.
            feedback = "Response contains " + std::string(kLeakIssue);
            continue;
        }

        if (config_.mode == EngineMode::no_controller) {
            Verdict verdict;
            verdict.verdict = VerdictKind::pass;
            verdict.reasoning = "verification disabled (no_controller mode)";
            turn.verdicts.push_back(verdict);
            turn.text = candidate.text;
            return turn;
        }

        const Verdict verdict = verify_candidate(candidate, case_, context_, state.history,
                                                 *verifier_, config_.mode);
        turn.verdicts.push_back(verdict);
        if (verdict.verdict == VerdictKind::pass) {
            turn.text = candidate.text;
            return turn;
        }
        feedback = sanitize_feedback("Response contains " + verdict.issue.value());
    }

    turn.text = config_.fallback_text;
    turn.fallback_used = true;
    return turn;
}

} // namespace veripatient::engine
