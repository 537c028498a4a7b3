#include <doctest.h>

#include <random>

#include "stat_oracles.hpp"
#include "test_support.hpp"
#include "veripatient/evaluation.hpp"
#include "veripatient/report.hpp"

using namespace veripatient;
using namespace veripatient::eval;

namespace {

std::vector<Outcome> synthetic_outcomes(int clean_total, int clean_correct, double clean_turns,
                                        int noisy_total, int noisy_correct, double noisy_turns) {
    // integer turn counts engineered to hit the requested averages exactly
    auto build = [](int total, int correct, double avg, Condition condition) {
        std::vector<Outcome> outcomes;
        const long target = std::lround(avg * total);
        const int base = static_cast<int>(target / total);
        const int remainder = static_cast<int>(target - static_cast<long>(base) * total);
        for (int i = 0; i < total; ++i) {
            Outcome o;
            o.case_id = "c" + std::to_string(i);
            o.doctor_id = "d";
            o.condition = condition;
            o.correct = i < correct;
            o.turns = base + (i < remainder ? 1 : 0);
            outcomes.push_back(o);
        }
        return outcomes;
    };
    auto all = build(clean_total, clean_correct, clean_turns, Condition::clean);
    auto noisy = build(noisy_total, noisy_correct, noisy_turns, Condition::noisy);
    all.insert(all.end(), noisy.begin(), noisy.end());
    return all;
}

JudgeScores scores_with(bool a1, bool a2, bool a3, int likert = 4) {
    JudgeScores s;
    s.a1 = a1;
    s.a2 = a2;
    s.a3 = a3;
    s.b1 = s.b2 = s.b3 = s.b4 = s.b5 = likert;
    s.c1 = s.c2 = s.c3 = likert;
    return s;
}

} // namespace

TEST_CASE("match_diagnosis normalizes case, whitespace and trailing punctuation") {
    CHECK(match_diagnosis("myocardial infarction", "Myocardial Infarction", "I21.9"));
    CHECK(match_diagnosis("  Myocardial   Infarction. ", "Myocardial Infarction", "I21.9"));
    CHECK(match_diagnosis("likely I21.9 per criteria", "Myocardial Infarction", "I21.9"));
    CHECK(match_diagnosis("i21.9", "Myocardial Infarction", "I21.9"));
    CHECK_FALSE(match_diagnosis("", "Myocardial Infarction", "I21.9"));
    CHECK_FALSE(match_diagnosis("Myocardial", "Myocardial Infarction", "I21.9"));
}

TEST_CASE("match_diagnosis scores the documented misdiagnosis fixtures as misses") {
    CHECK_FALSE(match_diagnosis("Acute Sinusitis", "Chronic Rhinosinusitis", "J32"));
    CHECK_FALSE(match_diagnosis("Infectious Mononucleosis", "HIV Initial Infection", "B20"));
    CHECK_FALSE(match_diagnosis("Suspected Cardiac Event", "Panic Attack", "F41"));
}

TEST_CASE("performance metrics reproduce the documented arithmetic") {
    const auto outcomes = synthetic_outcomes(200, 169, 10.00, 2000, 1384, 13.45);
    const PerformanceMetrics m = performance_metrics(outcomes);
    CHECK(m.clean_accuracy_pct == doctest::Approx(84.5).epsilon(1e-9));
    CHECK(m.noisy_accuracy_pct == doctest::Approx(69.2).epsilon(1e-9));
    CHECK(m.delta_acc_points == doctest::Approx(-15.3).epsilon(1e-9));
    CHECK(m.clean_avg_turns == doctest::Approx(10.00));
    CHECK(m.noisy_avg_turns == doctest::Approx(13.45));
    CHECK(m.delta_turns_pct == doctest::Approx(34.5).epsilon(1e-9));
}

TEST_CASE("performance metrics demand outcomes and both conditions for deltas") {
    CHECK_THROWS_AS(performance_metrics({}), std::invalid_argument);

    std::vector<Outcome> clean_only;
    Outcome o;
    o.condition = Condition::clean;
    o.correct = true;
    o.turns = 5;
    clean_only.push_back(o);
    const PerformanceMetrics m = performance_metrics(clean_only);
    CHECK(m.clean_accuracy_pct.has_value());
    CHECK_FALSE(m.delta_acc_points.has_value());

    CHECK_THROWS_AS(render_performance_report({{"doc", m}}), std::invalid_argument);
}

TEST_CASE("performance report renders the documented row formatting") {
    const auto outcomes = synthetic_outcomes(200, 169, 10.00, 2000, 1384, 13.45);
    const ReportOutput out = render_performance_report({{"qwen", performance_metrics(outcomes)}});
    CHECK(out.markdown.find("| Clean | Noisy |") != std::string::npos);
    CHECK(out.markdown.find("84.5") != std::string::npos);
    CHECK(out.markdown.find("69.2") != std::string::npos);
    CHECK(out.markdown.find("-15.3") != std::string::npos);
    CHECK(out.markdown.find("+34.5%") != std::string::npos);
    CHECK(out.csv.find("84.5,69.2,-15.3,+34.5%") != std::string::npos);
}

TEST_CASE("empty report renders header-only tables") {
    const ReportOutput out = render_performance_report({});
    CHECK(out.markdown.find("| Doctor | Clean | Noisy |") != std::string::npos);
    CHECK(std::count(out.markdown.begin(), out.markdown.end(), '\n') == 2);
    CHECK(out.csv == "Doctor,Clean,Noisy,ΔAcc,ΔTurns\n");
}

TEST_CASE("ablation report uses the fixed three configuration columns") {
    AblationReport report;
    report.no_controller = AblationCell{24.2, 67.5, 4.18};
    report.prompt_only = AblationCell{17.8, 79.8, 4.11};
    report.hybrid = AblationCell{9.3, 91.4, 4.04};
    const ReportOutput out = render_ablation_report(report);
    CHECK(out.markdown.find("| Metric | No Ctrl | Prompt | Ours |") != std::string::npos);
    CHECK(out.markdown.find("24.2%") != std::string::npos);
    CHECK(out.markdown.find("9.3%") != std::string::npos);
    CHECK(out.markdown.find("4.04") != std::string::npos);
    CHECK(out.markdown.find("Halluc. Rate") != std::string::npos);
}

TEST_CASE("agreement report formats kappa and r to two decimals") {
    const ReportOutput out = render_agreement_report({
        {"Truth Preservation", 0.90, 0.85, "kappa"},
        {"Realism Assessment", 0.84, 0.78, "r"},
    });
    CHECK(out.markdown.find("0.90") != std::string::npos);
    CHECK(out.markdown.find("0.85") != std::string::npos);
    CHECK(out.markdown.find("κ") != std::string::npos);
    CHECK(out.markdown.find("| Dimension | H1-H2 | LLM-H | Metric |") != std::string::npos);
}

TEST_CASE("truth preservation rates follow the item-A definitions") {
    std::vector<JudgeScores> judgments;
    for (int i = 0; i < 1000; ++i) judgments.push_back(scores_with(i < 93, false, false));
    const TruthPreservationRates rates = truth_preservation_rates(judgments);
    CHECK(rates.hallucination_rate_pct == doctest::Approx(9.3).epsilon(1e-12));
    CHECK(rates.consistency_rate_pct == doctest::Approx(90.7).epsilon(1e-12));

    std::vector<JudgeScores> all_clean(10, scores_with(false, false, false));
    CHECK(truth_preservation_rates(all_clean).hallucination_rate_pct == doctest::Approx(0.0));
    CHECK(truth_preservation_rates(all_clean).consistency_rate_pct == doctest::Approx(100.0));

    CHECK_THROWS_AS(truth_preservation_rates({}), std::invalid_argument);

    // a2/a3 violations break consistency without touching hallucination
    std::vector<JudgeScores> mixed = {scores_with(false, true, false),
                                      scores_with(false, false, true),
                                      scores_with(false, false, false)};
    const auto r = truth_preservation_rates(mixed);
    CHECK(r.hallucination_rate_pct == doctest::Approx(0.0));
    CHECK(r.consistency_rate_pct == doctest::Approx(100.0 / 3).epsilon(1e-9));
}

TEST_CASE("cohens_kappa anchors") {
    // identical vectors with >= 2 categories
    const std::vector<int> v = {1, 2, 1, 2, 3};
    CHECK(cohens_kappa(v, v) == doctest::Approx(1.0));

    // 2x2 table a=20 b=5 c=10 d=15 over n=50: p_o=0.7, p_e=0.5, kappa=0.4
    std::vector<int> a, b;
    auto add = [&](int count, int ra, int rb) {
        for (int i = 0; i < count; ++i) {
            a.push_back(ra);
            b.push_back(rb);
        }
    };
    add(20, 1, 1);
    add(5, 1, 0);
    add(10, 0, 1);
    add(15, 0, 0);
    CHECK(cohens_kappa(a, b) == doctest::Approx(0.4).epsilon(1e-12));

    // both raters constant on the same category: 1.0 by convention
    CHECK(cohens_kappa({2, 2, 2}, {2, 2, 2}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(cohens_kappa({1, 2}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(cohens_kappa({1}, {1}), std::invalid_argument);
}

TEST_CASE("kappa is symmetric and bounded on random instances") {
    std::mt19937 rng(11);
    for (int i = 0; i < 200; ++i) {
        const size_t n = 2 + rng() % 40;
        std::vector<int> a(n), b(n);
        for (size_t j = 0; j < n; ++j) {
            a[j] = static_cast<int>(rng() % 4);
            b[j] = static_cast<int>(rng() % 4);
        }
        try {
            const double forward = cohens_kappa(a, b);
            const double backward = cohens_kappa(b, a);
            CHECK(forward == doctest::Approx(backward).epsilon(1e-12));
            CHECK(forward >= -1.0 - 1e-12);
            CHECK(forward <= 1.0 + 1e-12);
        } catch (const std::invalid_argument&) {
        }
        // any vector agrees perfectly with itself
        CHECK(cohens_kappa(a, a) == doctest::Approx(1.0));
    }
}

TEST_CASE("pearson_r anchors and invariances") {
    CHECK(pearson_r({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(pearson_r({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(pearson_r({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(pearson_r({1, 2}, {1}), std::invalid_argument);

    std::mt19937 rng(13);
    std::uniform_real_distribution<double> dist(-5, 5);
    for (int i = 0; i < 100; ++i) {
        const size_t n = 3 + rng() % 20;
        std::vector<double> x(n), y(n), y_affine(n);
        for (size_t j = 0; j < n; ++j) {
            x[j] = dist(rng);
            y[j] = dist(rng);
            y_affine[j] = 2.5 * y[j] + 7.0;
        }
        const double r = pearson_r(x, y);
        CHECK(r == doctest::Approx(pearson_r(y, x)).epsilon(1e-12));
        CHECK(r == doctest::Approx(pearson_r(x, y_affine)).epsilon(1e-9));
        CHECK(std::fabs(r) <= 1.0 + 1e-12);
    }
}

TEST_CASE("paired_t_test reproduces the hand-computed example") {
    const TestStats stats = paired_t_test({2, 4, 5}, {1, 2, 3});
    CHECK(stats.t == doctest::Approx(-5.0).epsilon(1e-9));
    CHECK(stats.df == 2);
    CHECK(stats.cohens_d == doctest::Approx(-2.8868).epsilon(1e-3));
    CHECK(stats.p_two_tailed > 0.0);
    CHECK(stats.p_two_tailed < 1.0);

    CHECK_THROWS_AS(paired_t_test({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(paired_t_test({1}, {2}), std::invalid_argument);
}

TEST_CASE("paired_t_test flips sign under argument swap; p is invariant") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(0, 20);
    for (int i = 0; i < 100; ++i) {
        const size_t n = 2 + rng() % 30;
        std::vector<double> clean(n), noisy(n);
        for (size_t j = 0; j < n; ++j) {
            clean[j] = dist(rng);
            noisy[j] = dist(rng);
        }
        try {
            const TestStats forward = paired_t_test(clean, noisy);
            const TestStats backward = paired_t_test(noisy, clean);
            CHECK(forward.t == doctest::Approx(-backward.t).epsilon(1e-10));
            CHECK(forward.p_two_tailed ==
                  doctest::Approx(backward.p_two_tailed).epsilon(1e-10));
            CHECK(forward.cohens_d == doctest::Approx(-backward.cohens_d).epsilon(1e-10));
        } catch (const std::invalid_argument&) {
        }
    }
}

TEST_CASE("statistics agree with the brute-force oracle on random instances") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dist(-10, 10);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const size_t n = 2 + rng() % 49;

        std::vector<int> ka(n), kb(n);
        for (size_t j = 0; j < n; ++j) {
            ka[j] = static_cast<int>(rng() % 3);
            kb[j] = static_cast<int>(rng() % 3);
        }
        try {
            const double mine = cohens_kappa(ka, kb);
            CHECK(mine ==
                  doctest::Approx(static_cast<double>(stat_oracle::kappa(ka, kb))).epsilon(1e-9));
            ++checked;
        } catch (const std::invalid_argument&) {
        }

        std::vector<double> x(n), y(n);
        for (size_t j = 0; j < n; ++j) {
            x[j] = dist(rng);
            y[j] = dist(rng);
        }
        try {
            CHECK(pearson_r(x, y) ==
                  doctest::Approx(static_cast<double>(stat_oracle::pearson(x, y)))
                      .epsilon(1e-9));
            const TestStats stats = paired_t_test(x, y);
            const stat_oracle::TOracle oracle = stat_oracle::paired_t(x, y);
            CHECK(stats.t == doctest::Approx(static_cast<double>(oracle.t)).epsilon(1e-9));
            CHECK(stats.cohens_d ==
                  doctest::Approx(static_cast<double>(oracle.cohens_d)).epsilon(1e-9));
            CHECK(stats.p_two_tailed ==
                  doctest::Approx(static_cast<double>(oracle.p_two_tailed)).epsilon(1e-7));
            ++checked;
        } catch (const std::invalid_argument&) {
        }
    }
    CHECK(checked > 400);
}

TEST_CASE("judge_conversation maps per-criterion replies onto the questionnaire") {
    std::vector<std::string> replies = {
        R"({"reasoning": "no invented symptom", "score": "no"})",  // A1
        R"({"reasoning": "nothing impossible", "score": "No"})",   // A2
        R"({"reasoning": "kept blinded", "score": "no"})",         // A3
        R"({"reasoning": "natural tone", "score": 4})",            // B1
        R"({"reasoning": "noise visible", "score": 5})",           // B2
        R"({"reasoning": "steady persona", "score": 4})",          // B3
        R"({"reasoning": "plain language", "score": 3})",          // B4
        R"({"reasoning": "withheld as assigned", "score": 4})",    // B5
        R"({"reasoning": "hard but fair", "score": 3})",           // C1
        R"({"reasoning": "reachable", "score": 3})",               // C2
        R"({"reasoning": "useful", "score": 5})",                  // C3
    };
    auto judge = test_support::make_scripted_gateway(replies);

    run::Transcript transcript;
    transcript.case_id = "T001";
    run::TurnRecord turn;
    turn.index = 1;
    turn.doctor_text = "What brings you in?";
    turn.patient_text = "My chest feels heavy.";
    transcript.turns.push_back(turn);

    const JudgeScores scores =
        judge_conversation(transcript, test_support::chest_pain_case(), *judge.gateway);
    CHECK_FALSE(scores.a1);
    CHECK_FALSE(scores.a2);
    CHECK_FALSE(scores.a3);
    CHECK(scores.b1 == 4);
    CHECK(scores.b2 == 5);
    CHECK(scores.b4 == 3);
    CHECK(scores.c3 == 5);
    CHECK(judge.calls() == 11);
    CHECK(scores.reasoning.find("A1: no invented symptom") != std::string::npos);

    // every criterion prompt carries the assigned noise profile text
    for (const auto& record : *judge.audit) {
        const std::string prompt = test_support::ScriptedGateway::request_text(record);
        CHECK(prompt.find("Health Literacy (Level 3)") != std::string::npos);
        CHECK(prompt.find("Patient: My chest feels heavy.") != std::string::npos);
    }
    REQUIRE(judge.audit->size() == 11);
    CHECK((*judge.audit)[0].params.temperature == doctest::Approx(0.0));
}

TEST_CASE("judge replies out of range or unparseable raise errors preserving raw text") {
    auto judge7 = test_support::make_scripted_gateway(std::vector<std::string>(
        11, R"({"reasoning": "x", "score": 7})"));
    run::Transcript transcript;
    transcript.case_id = "T001";
    try {
        judge_conversation(transcript, test_support::chest_pain_case(), *judge7.gateway);
        FAIL("expected JudgeParseError");
    } catch (const JudgeParseError& e) {
        CHECK(e.raw().find("\"score\": 7") != std::string::npos);
    }

    auto garbled = test_support::make_scripted_gateway(std::vector<std::string>(11, "not json"));
    CHECK_THROWS_AS(
        judge_conversation(transcript, test_support::chest_pain_case(), *garbled.gateway),
        JudgeParseError);
}

TEST_CASE("agreement dimensions reach 1.0 between identical raters") {
    std::vector<JudgeScores> rater;
    std::mt19937 rng(31);
    for (int i = 0; i < 12; ++i) {
        JudgeScores s = scores_with(i % 3 == 0, i % 5 == 0, false, 1 + static_cast<int>(rng() % 5));
        s.b2 = 1 + static_cast<int>(rng() % 5);
        s.b5 = 1 + static_cast<int>(rng() % 5);
        s.c2 = 1 + static_cast<int>(rng() % 5);
        rater.push_back(s);
    }
    const auto rows = agreement_by_dimension(rater, rater);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        CAPTURE(row.dimension);
        CHECK(row.value == doctest::Approx(1.0));
    }
    CHECK(rows[0].metric == "kappa");
    CHECK(rows[1].metric == "r");
}

TEST_CASE("agreement_stats bundles kappa and pearson with the sample size") {
    std::vector<JudgeScores> a, b;
    std::mt19937 rng(41);
    for (int i = 0; i < 10; ++i) {
        JudgeScores s = scores_with(i % 2 == 0, false, i % 3 == 0,
                                    1 + static_cast<int>(rng() % 5));
        a.push_back(s);
        b.push_back(s);
    }
    const AgreementStats stats = agreement_stats(a, b);
    CHECK(stats.kappa == doctest::Approx(1.0));
    CHECK(stats.pearson == doctest::Approx(1.0));
    CHECK(stats.n == 10);
    CHECK(stats.kappa >= -1.0);
    CHECK(stats.kappa <= 1.0);
    CHECK_THROWS_AS(agreement_stats({}, {}), std::invalid_argument);
}

TEST_CASE("judge scores round-trip through JSON") {
    const JudgeScores s = scores_with(true, false, true, 3);
    const JudgeScores parsed = judge_scores_from_json(judge_scores_to_json(s));
    CHECK(parsed.a1 == s.a1);
    CHECK(parsed.a3 == s.a3);
    CHECK(parsed.b2 == s.b2);
    CHECK(parsed.c3 == s.c3);
}
