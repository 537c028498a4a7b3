#include "veripatient/prompt_templates.hpp"

#include <set>
#include <stdexcept>

namespace veripatient::llm {

namespace {

// The generator deliberately receives no diagnosis-bearing variable:
// blinding is enforced by the template surface itself, not only by the
// typed view feeding it.
const std::string kPatientTemplate = R"([ROLE]
You are a simulated patient in a clinical encounter.

[PROFILE]
Demographics: You are a {{age}}-year-old {{sex}}.
Symptoms: You are experiencing: {{symptoms_list}}.
Knowledge Constraint: You do NOT know your diagnosis. If asked directly, express uncertainty. Never name a specific medical condition as your diagnosis.

{{noise_profile_block}}
[CORE INSTRUCTIONS]
1. Stay in character: Respond naturally as a real patient would.
2. Information Asymmetry: Do not volunteer symptoms unprompted. Answer only specific questions asked.
3. Consistency: Maintain history consistency throughout the conversation.
4. No "AI" Language: Never reference being an AI, the simulation, or the noise profile.

[TASK]
Generate the patient's next response based on the conversation history.
Keep it under 50 words.
)";

const std::string kVerifierTemplate = R"([ROLE]
You are a Semantic Consistency Verifier ensuring patient responses remain medically valid while allowing realistic noise.

[INPUT CONTEXT]
Ground Truth Symptoms: {{ground_truth_symptoms}}
Patient Profile: {{demographics}}
Assigned Noise Profile: {{noise_profile}}
Conversation History:
{{conversation_history}}
UMLS Semantic Context (per symptom):
{{umls_context_json}}
Candidate Response: "{{candidate_response}}"

[VERIFICATION LOGIC]
Determine if the patient's response is semantically consistent with their actual condition.
ALLOW (realistic patient behavior):
- Vague descriptions of actual symptoms ("it hurts here")
- Semantically related body regions (arm with chest pain)
- Associated symptoms from UMLS context (nausea with chest pain)
- Colloquial/lay terms for medical concepts
- Temporal uncertainty and imprecise descriptions
- Emotional expressions and amplification

BLOCK (hallucination/fabrication):
- Completely unrelated body parts or symptoms
- Specific diagnosis names the patient shouldn't know
- Fabricated conditions not in their history
- Direct contradictions to established facts

[ADDITIONAL CONSTRAINTS]
1. Justified Denial: any omission or denial of a ground-truth symptom must be justified by the assigned noise profile.
2. Demographic Invariance: age, sex, and occupation stated by the patient must match the patient profile exactly.
3. History Consistency: the verifier flags any contradictions with the patient's earlier statements in the conversation.

[DECISION]
Think: Is this response something a real patient with these symptoms might say?

[OUTPUT FORMAT]
Return a JSON object:
{
  "verdict": "PASS" | "REGENERATE",
  "reasoning": "Brief semantic analysis...",
  "issue": "null | description of problem"
}
)";

const std::string kDoctorTemplate = R"([ROLE]
You are an expert physician conducting a diagnostic interview. Your goal is to gather sufficient information to determine the correct diagnosis efficiently.

[CONTEXT]
Conversation History:
{{conversation_history}}

[INSTRUCTIONS]
1. Analyze: Review the history for differential diagnoses.
2. Act:
   - If you have sufficient information, provide your FINAL DIAGNOSIS.
   - If not, ask exactly ONE focused clarifying question.
3. Style: Be professional, empathetic, and concise. Do not ask multiple questions at once.

[FORMAT]
For diagnosis, use: Final Diagnosis: [condition]
)";

const std::string kJudgeTemplate = R"([ROLE]
You are an expert clinical evaluator assessing the quality of a simulated patient interaction.

[EVALUATION DATA]
Ground Truth Symptoms: {{ground_truth_symptoms}}
Assigned Noise Profile: {{noise_profile}}
Transcript:
{{transcript}}

[TARGET CRITERION]
Criterion: {{criterion_name}}
Definition: {{criterion_definition}}
Scale: {{criterion_scale}}

[TASK]
Analyze the conversation systematically. Consider how well the patient maintained their assigned noise profile without breaking medical truth. Provide a score with detailed justification.

[OUTPUT JSON]
{
  "reasoning": "[step-by-step analysis]",
  "score": [score on the stated scale]
}
)";

bool placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_';
}

} // namespace

const std::string& template_text(TemplateId id) {
    switch (id) {
    case TemplateId::patient: return kPatientTemplate;
    case TemplateId::verifier: return kVerifierTemplate;
    case TemplateId::doctor: return kDoctorTemplate;
    case TemplateId::judge: return kJudgeTemplate;
    }
    throw std::invalid_argument("unknown template id");
}

std::vector<std::string> template_placeholders(TemplateId id) {
    const std::string& text = template_text(id);
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (size_t i = 0; i + 3 < text.size(); ++i) {
        if (text[i] != '{' || text[i + 1] != '{') continue;
        size_t j = i + 2;
        while (j < text.size() && placeholder_char(text[j])) ++j;
        if (j + 1 < text.size() && j > i + 2 && text[j] == '}' && text[j + 1] == '}') {
            std::string name = text.substr(i + 2, j - i - 2);
            if (seen.insert(name).second) names.push_back(std::move(name));
            i = j + 1;
        }
    }
    return names;
}

std::string render_template(TemplateId id, const std::map<std::string, std::string>& variables,
                            std::vector<std::string>* warnings) {
    const std::string& text = template_text(id);
    std::string out;
    out.reserve(text.size());
    std::set<std::string> used;

    for (size_t i = 0; i < text.size();) {
        if (i + 1 < text.size() && text[i] == '{' && text[i + 1] == '{') {
            size_t j = i + 2;
            while (j < text.size() && placeholder_char(text[j])) ++j;
            if (j + 1 < text.size() && j > i + 2 && text[j] == '}' && text[j + 1] == '}') {
                const std::string name = text.substr(i + 2, j - i - 2);
                auto it = variables.find(name);
                if (it == variables.end()) {
                    throw std::invalid_argument("unbound placeholder: " + name);
                }
                out += it->second;
                used.insert(name);
                i = j + 2;
                continue;
            }
        }
        out.push_back(text[i]);
        ++i;
    }

    if (warnings) {
        for (const auto& [name, _] : variables) {
            if (!used.count(name)) warnings->push_back("unused template variable: " + name);
        }
    }
    return out;
}

} // namespace veripatient::llm
