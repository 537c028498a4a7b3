#include "veripatient/evaluation.hpp"

#include <stdexcept>

#include "veripatient/noise_taxonomy.hpp"
#include "veripatient/prompt_templates.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::eval {

namespace {

std::string normalize_label(const std::string& label) {
    std::string s = text::collapse_whitespace(text::to_lower(label));
    while (!s.empty()) {
        const char c = s.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
            s.pop_back();
        } else {
            break;
        }
    }
    return text::trim(s);
}

std::string transcript_text(const run::Transcript& t) {
    std::string out;
    for (const run::TurnRecord& turn : t.turns) {
        out += "Doctor: " + turn.doctor_text + "\n";
        if (!turn.patient_text.empty()) out += "Patient: " + turn.patient_text + "\n";
    }
    if (out.empty()) out = "(empty transcript)";
    return out;
}

/// Parse one judge reply. Yes/no items accept booleans, "yes"/"no"
/// strings, or 0/1; Likert items require an integer.
struct ParsedJudgeReply {
    bool yes = false;
    int score = 0;
    std::string reasoning;
};

ParsedJudgeReply parse_judge_reply(const std::string& raw, const JudgeCriterion& criterion) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        const auto open = raw.find('{');
        const auto close = raw.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close <= open) {
            throw JudgeParseError("judge reply is not JSON", raw);
        }
        try {
            doc = nlohmann::json::parse(raw.substr(open, close - open + 1));
        } catch (const nlohmann::json::exception&) {
            throw JudgeParseError("judge reply is not JSON", raw);
        }
    }
    if (!doc.is_object() || !doc.contains("score")) {
        throw JudgeParseError("judge reply lacks a score field", raw);
    }

    ParsedJudgeReply reply;
    reply.reasoning = doc.value("reasoning", "");
    const nlohmann::json& score = doc.at("score");

    if (criterion.yes_no) {
        if (score.is_boolean()) {
            reply.yes = score.get<bool>();
        } else if (score.is_string()) {
            const std::string s = text::to_lower(text::trim(score.get<std::string>()));
            if (s == "yes") {
                reply.yes = true;
            } else if (s == "no") {
                reply.yes = false;
            } else {
                throw JudgeParseError("expected yes/no for " + criterion.id, raw);
            }
        } else if (score.is_number_integer()) {
            const int v = score.get<int>();
            if (v != 0 && v != 1) {
                throw JudgeParseError("expected yes/no for " + criterion.id, raw);
            }
            reply.yes = (v == 1);
        } else {
            throw JudgeParseError("expected yes/no for " + criterion.id, raw);
        }
        return reply;
    }

    if (!score.is_number_integer()) {
        throw JudgeParseError("expected an integer score for " + criterion.id, raw);
    }
    reply.score = score.get<int>();
    if (reply.score < 1 || reply.score > 5) {
        throw JudgeParseError("score out of range 1-5 for " + criterion.id, raw);
    }
    return reply;
}

} // namespace

std::string_view condition_name(Condition c) {
    return c == Condition::clean ? "clean" : "noisy";
}

bool match_diagnosis(const std::string& predicted, const std::string& gold_label,
                     const std::string& gold_icd10) {
    if (!predicted.empty() && normalize_label(predicted) == normalize_label(gold_label)) {
        return true;
    }
    return !gold_icd10.empty() && text::icontains(predicted, gold_icd10);
}

PerformanceMetrics performance_metrics(const std::vector<Outcome>& outcomes) {
    if (outcomes.empty()) {
        throw std::invalid_argument("performance_metrics: no outcomes");
    }

    double clean_total = 0, clean_correct = 0, clean_turns = 0;
    double noisy_total = 0, noisy_correct = 0, noisy_turns = 0;
    for (const Outcome& o : outcomes) {
        if (o.condition == Condition::clean) {
            clean_total += 1;
            clean_correct += o.correct ? 1 : 0;
            clean_turns += o.turns;
        } else {
            noisy_total += 1;
            noisy_correct += o.correct ? 1 : 0;
            noisy_turns += o.turns;
        }
    }

    PerformanceMetrics m;
    if (clean_total > 0) {
        m.clean_accuracy_pct = 100.0 * clean_correct / clean_total;
        m.clean_avg_turns = clean_turns / clean_total;
    }
    if (noisy_total > 0) {
        m.noisy_accuracy_pct = 100.0 * noisy_correct / noisy_total;
        m.noisy_avg_turns = noisy_turns / noisy_total;
    }
    if (clean_total > 0 && noisy_total > 0) {
        m.delta_acc_points = *m.noisy_accuracy_pct - *m.clean_accuracy_pct;
        m.delta_turns_pct =
            100.0 * (*m.noisy_avg_turns - *m.clean_avg_turns) / *m.clean_avg_turns;
    }
    return m;
}

const std::vector<JudgeCriterion>& judge_questionnaire() {
    static const std::string yes_no = "Yes or No";
    static const std::string likert_agree = "1 (Strongly Disagree) to 5 (Strongly Agree)";
    static const std::vector<JudgeCriterion> criteria = {
        {"A1", "Hallucinated Symptom",
         "Patient mentioned a symptom not in the ground truth?", yes_no, true},
        {"A2", "Impossible Claim",
         "Patient made a medically impossible claim or contradiction?", yes_no, true},
        {"A3", "Diagnosis Reveal",
         "Patient revealed the diagnosis or physician-only information?", yes_no, true},
        {"B1", "Humanlike Naturalness", "Responses were humanlike and natural.", likert_agree,
         false},
        {"B2", "Noise Behavior Fidelity", "Exhibited assigned noise behaviors.", likert_agree,
         false},
        {"B3", "Personality Consistency", "Maintained consistent personality.", likert_agree,
         false},
        {"B4", "Authentic Language", "Used authentic patient language.", likert_agree, false},
        {"B5", "Disclosure Fidelity", "Disclosure matched noise profile.", likert_agree, false},
        {"C1", "History-Taking Difficulty",
         "Difficulty obtaining a complete history?",
         "1 (Too easy), 3 (Appropriately challenging), 5 (Unrealistically difficult)", false},
        {"C2", "Diagnostic Reachability",
         "Could a clinician reach the correct diagnosis?",
         "1 (Impossible), 3 (Challenging but achievable), 5 (Straightforward)", false},
        {"C3", "Training Usefulness", "Usefulness for training students?",
         "1 (Not useful) to 5 (Highly useful)", false},
    };
    return criteria;
}

JudgeScores judge_conversation(const run::Transcript& transcript, const cases::PatientCase& c,
                               llm::Gateway& gateway,
                               const std::vector<JudgeCriterion>& criteria) {
    const noise::NoiseProfile profile =
        c.noise_profile ? *c.noise_profile : noise::NoiseProfile{};
    const std::string transcript_block = transcript_text(transcript);
    const std::string profile_block = noise::render_profile_block(profile);
    const auto params = llm::role_preset(llm::AgentRole::judge);

    JudgeScores scores;
    for (const JudgeCriterion& criterion : criteria) {
        const std::map<std::string, std::string> vars = {
            {"ground_truth_symptoms", text::join(c.symptoms, ", ")},
            {"noise_profile", profile_block},
            {"transcript", transcript_block},
            {"criterion_name", criterion.name},
            {"criterion_definition", criterion.definition},
            {"criterion_scale", criterion.scale},
        };
        const std::string prompt = llm::render_template(llm::TemplateId::judge, vars);
        const std::string raw =
            gateway.complete({{llm::MessageRole::system, prompt}}, params);
        const ParsedJudgeReply reply = parse_judge_reply(raw, criterion);

        if (!scores.reasoning.empty()) scores.reasoning += "\n";
        scores.reasoning += criterion.id + ": " + reply.reasoning;

        if (criterion.id == "A1") scores.a1 = reply.yes;
        else if (criterion.id == "A2") scores.a2 = reply.yes;
        else if (criterion.id == "A3") scores.a3 = reply.yes;
        else if (criterion.id == "B1") scores.b1 = reply.score;
        else if (criterion.id == "B2") scores.b2 = reply.score;
        else if (criterion.id == "B3") scores.b3 = reply.score;
        else if (criterion.id == "B4") scores.b4 = reply.score;
        else if (criterion.id == "B5") scores.b5 = reply.score;
        else if (criterion.id == "C1") scores.c1 = reply.score;
        else if (criterion.id == "C2") scores.c2 = reply.score;
        else if (criterion.id == "C3") scores.c3 = reply.score;
    }
    return scores;
}

TruthPreservationRates truth_preservation_rates(const std::vector<JudgeScores>& judgments) {
    if (judgments.empty()) {
        throw std::invalid_argument("truth_preservation_rates: no judgments");
    }
    double hallucinated = 0;
    double consistent = 0;
    for (const JudgeScores& j : judgments) {
        if (j.a1) hallucinated += 1;
        if (!j.a1 && !j.a2 && !j.a3) consistent += 1;
    }
    const double n = static_cast<double>(judgments.size());
    return {100.0 * hallucinated / n, 100.0 * consistent / n};
}

double realism_score(const JudgeScores& scores) {
    return (scores.b1 + scores.b2 + scores.b3 + scores.b4) / 4.0;
}

std::vector<DimensionAgreement> agreement_by_dimension(const std::vector<JudgeScores>& rater_a,
                                                       const std::vector<JudgeScores>& rater_b) {
    if (rater_a.size() != rater_b.size() || rater_a.size() < 2) {
        throw std::invalid_argument("agreement_by_dimension: need two equal lists of >= 2");
    }

    std::vector<int> truth_a, truth_b, fidelity_a, fidelity_b;
    std::vector<double> realism_a, realism_b, utility_a, utility_b;
    for (size_t i = 0; i < rater_a.size(); ++i) {
        const JudgeScores& a = rater_a[i];
        const JudgeScores& b = rater_b[i];
        truth_a.insert(truth_a.end(), {a.a1, a.a2, a.a3});
        truth_b.insert(truth_b.end(), {b.a1, b.a2, b.a3});
        fidelity_a.insert(fidelity_a.end(), {a.b2, a.b5});
        fidelity_b.insert(fidelity_b.end(), {b.b2, b.b5});
        realism_a.push_back(realism_score(a));
        realism_b.push_back(realism_score(b));
        utility_a.push_back((a.c1 + a.c2 + a.c3) / 3.0);
        utility_b.push_back((b.c1 + b.c2 + b.c3) / 3.0);
    }

    std::vector<DimensionAgreement> out;
    out.push_back({"Truth Preservation", "kappa", cohens_kappa(truth_a, truth_b),
                   static_cast<int>(truth_a.size())});
    out.push_back({"Realism Assessment", "r", pearson_r(realism_a, realism_b),
                   static_cast<int>(realism_a.size())});
    out.push_back({"Clinical Utility", "r", pearson_r(utility_a, utility_b),
                   static_cast<int>(utility_a.size())});
    out.push_back({"Noise Fidelity", "kappa", cohens_kappa(fidelity_a, fidelity_b),
                   static_cast<int>(fidelity_a.size())});
    return out;
}

AgreementStats agreement_stats(const std::vector<JudgeScores>& rater_a,
                               const std::vector<JudgeScores>& rater_b) {
    if (rater_a.size() != rater_b.size() || rater_a.size() < 2) {
        throw std::invalid_argument("agreement_stats: need two equal lists of >= 2");
    }
    std::vector<int> truth_a, truth_b;
    std::vector<double> realism_a, realism_b;
    for (size_t i = 0; i < rater_a.size(); ++i) {
        truth_a.insert(truth_a.end(), {rater_a[i].a1, rater_a[i].a2, rater_a[i].a3});
        truth_b.insert(truth_b.end(), {rater_b[i].a1, rater_b[i].a2, rater_b[i].a3});
        realism_a.push_back(realism_score(rater_a[i]));
        realism_b.push_back(realism_score(rater_b[i]));
    }
    AgreementStats stats;
    stats.kappa = cohens_kappa(truth_a, truth_b);
    stats.pearson = pearson_r(realism_a, realism_b);
    stats.n = static_cast<int>(rater_a.size());
    return stats;
}

nlohmann::json judge_scores_to_json(const JudgeScores& s) {
    return nlohmann::json{
        {"a1", s.a1}, {"a2", s.a2}, {"a3", s.a3}, {"b1", s.b1}, {"b2", s.b2},
        {"b3", s.b3}, {"b4", s.b4}, {"b5", s.b5}, {"c1", s.c1}, {"c2", s.c2},
        {"c3", s.c3}, {"reasoning", s.reasoning},
    };
}

JudgeScores judge_scores_from_json(const nlohmann::json& j) {
    JudgeScores s;
    s.a1 = j.value("a1", false);
    s.a2 = j.value("a2", false);
    s.a3 = j.value("a3", false);
    s.b1 = j.value("b1", 0);
    s.b2 = j.value("b2", 0);
    s.b3 = j.value("b3", 0);
    s.b4 = j.value("b4", 0);
    s.b5 = j.value("b5", 0);
    s.c1 = j.value("c1", 0);
    s.c2 = j.value("c2", 0);
    s.c3 = j.value("c3", 0);
    s.reasoning = j.value("reasoning", "");
    return s;
}

} // namespace veripatient::eval
