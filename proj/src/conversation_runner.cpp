#include "veripatient/conversation_runner.hpp"

#include <algorithm>

#include "veripatient/errors.hpp"
#include "veripatient/json_io.hpp"
#include "veripatient/prompt_templates.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::run {

namespace {

constexpr std::string_view kDiagnosisMarker = "final diagnosis:";
constexpr std::string_view kForcedInstruction = "You must now provide your Final Diagnosis.";

std::string doctor_prompt(const engine::History& history) {
    return llm::render_template(llm::TemplateId::doctor,
                                {{"conversation_history", engine::render_history(history)}});
}

nlohmann::json verdict_to_json(const engine::Verdict& v) {
    nlohmann::json j;
    j["verdict"] = (v.verdict == engine::VerdictKind::pass) ? "PASS" : "REGENERATE";
    j["reasoning"] = v.reasoning;
    j["issue"] = v.issue ? nlohmann::json(*v.issue) : nlohmann::json();
    return j;
}

engine::Verdict verdict_from_json(const nlohmann::json& j) {
    engine::Verdict v;
    v.verdict = (j.value("verdict", "REGENERATE") == "PASS") ? engine::VerdictKind::pass
                                                             : engine::VerdictKind::regenerate;
    v.reasoning = j.value("reasoning", "");
    if (j.contains("issue") && j.at("issue").is_string()) v.issue = j.at("issue");
    return v;
}

} // namespace

std::string_view termination_name(Termination t) {
    switch (t) {
    case Termination::diagnosis: return "diagnosis";
    case Termination::turn_cap: return "turn_cap";
    case Termination::error: return "error";
    }
    return "error";
}

std::optional<std::string> extract_final_diagnosis(const std::string& doctor_text) {
    const std::string lowered = text::to_lower(doctor_text);
    const auto pos = lowered.find(kDiagnosisMarker);
    if (pos == std::string::npos) return std::nullopt;

    size_t begin = pos + kDiagnosisMarker.size();
    size_t end = doctor_text.find('\n', begin);
    if (end == std::string::npos) end = doctor_text.size();
    const std::string label = text::trim(doctor_text.substr(begin, end - begin));
    if (label.empty()) return std::nullopt;
    return label;
}

Transcript run_conversation(engine::PatientEngine& patient, llm::Gateway& doctor,
                            const RunnerOptions& options) {
    Transcript t;
    t.case_id = patient.patient_case().patient_id;
    t.doctor_id = options.doctor_id;
    t.mode = std::string(engine::engine_mode_name(options.mode));
    t.run_seed = options.run_seed;

    engine::ConversationState state;
    const auto doctor_params = llm::role_preset(llm::AgentRole::doctor);

    for (int index = 1; index <= options.max_turns; ++index) {
        std::string doctor_text;
        try {
            doctor_text = text::trim(doctor.complete(
                {{llm::MessageRole::system, doctor_prompt(state.history)}}, doctor_params));
        } catch (const std::exception& e) {
            t.terminated = Termination::error;
            t.error = TranscriptError{index, std::string("doctor call failed: ") + e.what()};
            return t;
        }

        if (auto diagnosis = extract_final_diagnosis(doctor_text)) {
            TurnRecord record;
            record.index = index;
            record.doctor_text = doctor_text;
            t.turns.push_back(std::move(record));
            t.final_diagnosis = std::move(diagnosis);
            t.terminated = Termination::diagnosis;
            return t;
        }

        engine::PatientTurn reply;
        try {
            reply = patient.respond(doctor_text, state);
        } catch (const std::exception& e) {
            t.terminated = Termination::error;
            t.error = TranscriptError{index, std::string("patient turn failed: ") + e.what()};
            return t;
        }

        TurnRecord record;
        record.index = index;
        record.doctor_text = doctor_text;
        record.patient_text = reply.text;
        record.attempts = reply.attempts;
        record.verdicts = reply.verdicts;
        record.fallback_used = reply.fallback_used;
        t.turns.push_back(std::move(record));

        state.history.push_back({doctor_text, reply.text});
        state.turn_index = index + 1;
    }

    // Cap reached without a diagnosis: one forced request, recorded in
    // final_diagnosis but not as an extra turn.
    t.terminated = Termination::turn_cap;
    try {
        const std::string forced = doctor.complete(
            {{llm::MessageRole::system, doctor_prompt(state.history)},
             {llm::MessageRole::user, std::string(kForcedInstruction)}},
            doctor_params);
        t.final_diagnosis = extract_final_diagnosis(forced);
    } catch (const std::exception& e) {
        t.terminated = Termination::error;
        t.error = TranscriptError{options.max_turns,
                                  std::string("forced diagnosis failed: ") + e.what()};
    }
    return t;
}

nlohmann::json transcript_to_json(const Transcript& t) {
    nlohmann::json doc;
    doc["case_id"] = t.case_id;
    doc["doctor_id"] = t.doctor_id;
    doc["mode"] = t.mode;
    doc["final_diagnosis"] =
        t.final_diagnosis ? nlohmann::json(*t.final_diagnosis) : nlohmann::json();
    doc["terminated"] = std::string(termination_name(t.terminated));
    doc["run_seed"] = t.run_seed;

    nlohmann::json turns = nlohmann::json::array();
    for (const TurnRecord& record : t.turns) {
        nlohmann::json j;
        j["index"] = record.index;
        j["doctor_text"] = record.doctor_text;
        j["patient_text"] = record.patient_text;
        j["attempts"] = record.attempts;
        j["fallback_used"] = record.fallback_used;
        nlohmann::json verdicts = nlohmann::json::array();
        for (const engine::Verdict& v : record.verdicts) verdicts.push_back(verdict_to_json(v));
        j["verdicts"] = std::move(verdicts);
        turns.push_back(std::move(j));
    }
    doc["turns"] = std::move(turns);

    if (t.error) {
        doc["error"] = {{"turn", t.error->turn}, {"message", t.error->message}};
    }
    return doc;
}

std::string serialize_transcript(const Transcript& t) {
    return io::canonical_dump(transcript_to_json(t));
}

Transcript transcript_from_json(const nlohmann::json& doc) {
    Transcript t;
    t.case_id = doc.at("case_id").get<std::string>();
    t.doctor_id = doc.at("doctor_id").get<std::string>();
    t.mode = doc.at("mode").get<std::string>();
    if (doc.contains("final_diagnosis") && doc.at("final_diagnosis").is_string()) {
        t.final_diagnosis = doc.at("final_diagnosis").get<std::string>();
    }
    const std::string term = doc.value("terminated", "error");
    t.terminated = (term == "diagnosis") ? Termination::diagnosis
                  : (term == "turn_cap") ? Termination::turn_cap
                                         : Termination::error;
    t.run_seed = doc.value("run_seed", std::uint64_t{0});
    for (const auto& j : doc.at("turns")) {
        TurnRecord record;
        record.index = j.at("index").get<int>();
        record.doctor_text = j.value("doctor_text", "");
        record.patient_text = j.value("patient_text", "");
        record.attempts = j.value("attempts", 0);
        record.fallback_used = j.value("fallback_used", false);
        if (j.contains("verdicts")) {
            for (const auto& v : j.at("verdicts")) record.verdicts.push_back(verdict_from_json(v));
        }
        t.turns.push_back(std::move(record));
    }
    if (doc.contains("error") && doc.at("error").is_object()) {
        t.error = TranscriptError{doc.at("error").value("turn", 0),
                                  doc.at("error").value("message", "")};
    }
    return t;
}

std::string transcript_file_name(const std::string& case_id, const std::string& doctor_id,
                                 const std::string& mode) {
    auto safe = [](std::string s) {
        std::replace_if(
            s.begin(), s.end(),
            [](unsigned char c) { return !(std::isalnum(c) || c == '-' || c == '.'); }, '_');
        return s;
    };
    return safe(case_id) + "__" + safe(doctor_id) + "__" + safe(mode) + ".json";
}

} // namespace veripatient::run
