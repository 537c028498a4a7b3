#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veripatient/case_model.hpp"
#include "veripatient/conversation_runner.hpp"
#include "veripatient/llm_gateway.hpp"
#include "veripatient/stats.hpp"

namespace veripatient::eval {

enum class Condition { clean, noisy };

std::string_view condition_name(Condition c);

/// One scored conversation.
struct Outcome {
    std::string case_id;
    std::string doctor_id;
    Condition condition = Condition::clean;
    bool correct = false;
    int turns = 1;
};

/// Exact match after normalization (lowercase, trimmed, collapsed
/// whitespace, trailing punctuation stripped), with ICD containment as
/// an escape hatch for free-text diagnoses.
bool match_diagnosis(const std::string& predicted, const std::string& gold_label,
                     const std::string& gold_icd10);

struct PerformanceMetrics {
    std::optional<double> clean_accuracy_pct;
    std::optional<double> noisy_accuracy_pct;
    std::optional<double> clean_avg_turns;
    std::optional<double> noisy_avg_turns;
    // Filled only when both conditions are present.
    std::optional<double> delta_acc_points;
    std::optional<double> delta_turns_pct;
};

/// Accuracy and turn averages per condition plus clean->noisy deltas.
/// Throws on an empty outcome list.
PerformanceMetrics performance_metrics(const std::vector<Outcome>& outcomes);

// ---------------------------------------------------------------------------
// LLM-as-judge

/// Completed questionnaire for one conversation: three yes/no truth
/// items and eight 5-point items.
struct JudgeScores {
    bool a1 = false; // symptom not in ground truth mentioned
    bool a2 = false; // impossible claim / contradiction
    bool a3 = false; // diagnosis or physician-only info revealed
    int b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0;
    int c1 = 0, c2 = 0, c3 = 0;
    std::string reasoning;
};

struct JudgeCriterion {
    std::string id;         // "A1".."C3"
    std::string name;
    std::string definition;
    std::string scale;      // text injected into the judge prompt
    bool yes_no = false;
};

/// The eleven questionnaire items (A1-A3, B1-B5, C1-C3).
const std::vector<JudgeCriterion>& judge_questionnaire();

/// Raised when a judge reply cannot be parsed or scores out of range;
/// preserves the raw model output.
class JudgeParseError : public std::runtime_error {
public:
    JudgeParseError(const std::string& message, std::string raw)
        : std::runtime_error(message + "; raw output: " + raw), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

/// Score one transcript: one gateway call per criterion at judge
/// temperature, each reply parsed as {"reasoning", "score"}.
JudgeScores judge_conversation(const run::Transcript& transcript, const cases::PatientCase& c,
                               llm::Gateway& gateway,
                               const std::vector<JudgeCriterion>& criteria = judge_questionnaire());

struct TruthPreservationRates {
    double hallucination_rate_pct = 0.0; // share of judgments with A1 = yes
    double consistency_rate_pct = 0.0;   // share with A1 = A2 = A3 = no
};

TruthPreservationRates truth_preservation_rates(const std::vector<JudgeScores>& judgments);

/// Mean of the realism items B1-B4 for one judgment.
double realism_score(const JudgeScores& scores);

/// Agreement between two raters' questionnaires along the four report
/// dimensions: Truth Preservation (kappa over A items), Realism (r over
/// mean B1-B4), Clinical Utility (r over mean C1-C3), Noise Fidelity
/// (kappa over B2/B5 categories).
struct DimensionAgreement {
    std::string dimension;
    std::string metric; // "kappa" or "r"
    double value = 0.0;
    int n = 0;
};

std::vector<DimensionAgreement> agreement_by_dimension(const std::vector<JudgeScores>& rater_a,
                                                       const std::vector<JudgeScores>& rater_b);

/// Overall agreement snapshot between two raters: kappa over the binary
/// truth items, Pearson r over per-judgment realism means.
AgreementStats agreement_stats(const std::vector<JudgeScores>& rater_a,
                               const std::vector<JudgeScores>& rater_b);

nlohmann::json judge_scores_to_json(const JudgeScores& s);
JudgeScores judge_scores_from_json(const nlohmann::json& j);

} // namespace veripatient::eval
