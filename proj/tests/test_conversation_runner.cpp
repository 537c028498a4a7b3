#include <doctest.h>

#include "test_support.hpp"
#include "veripatient/conversation_runner.hpp"
#include "veripatient/json_io.hpp"

using namespace veripatient;
using namespace veripatient::run;
using test_support::chest_pain_case;
using test_support::chest_pain_context;
using test_support::make_scripted_gateway;
using test_support::pass_verdict_json;

namespace {

struct RunFixture {
    test_support::ScriptedGateway generator;
    test_support::ScriptedGateway verifier;
    test_support::ScriptedGateway doctor;
    std::unique_ptr<engine::PatientEngine> engine;
};

RunFixture make_run(std::vector<std::string> doctor_script, bool doctor_cycles = false,
                    std::vector<std::string> patient_script = {"My chest feels heavy.",
                                                               "It started last week."},
                    bool patient_cycles = true) {
    RunFixture f;
    f.generator = make_scripted_gateway(std::move(patient_script), patient_cycles);
    f.verifier = make_scripted_gateway({pass_verdict_json()}, true);
    f.doctor = make_scripted_gateway(std::move(doctor_script), doctor_cycles);
    engine::EngineConfig config;
    f.engine = std::make_unique<engine::PatientEngine>(
        chest_pain_case(), chest_pain_context(), config, f.generator.gateway,
        f.verifier.gateway);
    return f;
}

RunnerOptions options_for(const std::string& doctor_id) {
    RunnerOptions options;
    options.doctor_id = doctor_id;
    options.mode = engine::EngineMode::hybrid;
    options.max_turns = 40;
    options.run_seed = 42;
    return options;
}

} // namespace

TEST_CASE("extract_final_diagnosis reads the text after the first marker") {
    CHECK(extract_final_diagnosis("Final Diagnosis: Myocardial Infarction") ==
          "Myocardial Infarction");
    CHECK(extract_final_diagnosis("final diagnosis:   Influenza  ") == "Influenza");
    CHECK_FALSE(extract_final_diagnosis("Can you describe the pain?").has_value());
    CHECK(extract_final_diagnosis(
              "Final Diagnosis: Migraine\nFinal Diagnosis: Tension Headache") == "Migraine");
    CHECK(extract_final_diagnosis("Thanks.\nFinal Diagnosis: Panic Attack\nTake care.") ==
          "Panic Attack");
    CHECK_FALSE(extract_final_diagnosis("Final Diagnosis:   ").has_value());
}

TEST_CASE("a scripted three-exchange interview terminates with a diagnosis") {
    auto f = make_run({"What brings you in today?", "Can you describe the pain?",
                       "Final Diagnosis: Myocardial Infarction"});
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("doc3"));

    CHECK(t.terminated == Termination::diagnosis);
    CHECK(t.final_diagnosis == "Myocardial Infarction");
    REQUIRE(t.turns.size() == 3);
    CHECK(t.turns[0].index == 1);
    CHECK(t.turns[0].patient_text == "My chest feels heavy.");
    CHECK(t.turns[2].doctor_text == "Final Diagnosis: Myocardial Infarction");
    CHECK(t.turns[2].patient_text.empty());
    CHECK(t.turns[2].attempts == 0);
    CHECK(t.case_id == "T001");
    CHECK(t.doctor_id == "doc3");
    CHECK(t.run_seed == 42);
}

TEST_CASE("a doctor that never diagnoses hits the cap and gets one forced request") {
    auto f = make_run({"Tell me more."}, true);
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("stubborn"));

    CHECK(t.terminated == Termination::turn_cap);
    CHECK(t.turns.size() == 40);
    CHECK(f.doctor.calls() == 41); // 40 turns + the forced diagnosis request
    CHECK_FALSE(t.final_diagnosis.has_value()); // forced answer carries no marker
}

TEST_CASE("the forced request parses a final diagnosis when given") {
    std::vector<std::string> script(40, "Tell me more.");
    script.push_back("Final Diagnosis: Influenza");
    auto f = make_run(script);
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("late"));
    CHECK(t.terminated == Termination::turn_cap);
    CHECK(t.turns.size() == 40);
    CHECK(t.final_diagnosis == "Influenza");
}

TEST_CASE("doctor prompts carry the running conversation history") {
    auto f = make_run({"What brings you in today?", "Where exactly is the pain?",
                       "Final Diagnosis: Myocardial Infarction"});
    run_conversation(*f.engine, *f.doctor.gateway, options_for("doc"));
    REQUIRE(f.doctor.audit->size() == 3);
    const std::string second =
        test_support::ScriptedGateway::request_text((*f.doctor.audit)[1]);
    CHECK(second.find("Doctor: What brings you in today?") != std::string::npos);
    CHECK(second.find("Patient: My chest feels heavy.") != std::string::npos);
    const std::string first =
        test_support::ScriptedGateway::request_text((*f.doctor.audit)[0]);
    CHECK(first.find("(no prior exchanges)") != std::string::npos);
}

TEST_CASE("gateway failure terminates with an error record at the failing turn") {
    // doctor sequence exhausts after one message and no diagnosis
    auto f = make_run({"What brings you in today?"}, false);
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("flaky"));
    CHECK(t.terminated == Termination::error);
    REQUIRE(t.error.has_value());
    CHECK(t.error->turn == 2);
    CHECK(t.turns.size() == 1);
}

TEST_CASE("patient-side failure is attributed to the right turn") {
    auto f = make_run({"Q1", "Q2", "Q3"}, false, {"only one patient line"}, false);
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("d"));
    CHECK(t.terminated == Termination::error);
    REQUIRE(t.error.has_value());
    CHECK(t.error->turn == 2);
    CHECK(t.error->message.find("patient turn failed") != std::string::npos);
}

TEST_CASE("identical scripts produce byte-identical transcripts") {
    auto once = [] {
        auto f = make_run({"What brings you in today?", "Can you describe the pain?",
                           "Final Diagnosis: Myocardial Infarction"});
        return serialize_transcript(
            run_conversation(*f.engine, *f.doctor.gateway, options_for("doc3")));
    };
    CHECK(once() == once());
}

TEST_CASE("transcripts round-trip through JSON") {
    auto f = make_run({"What brings you in today?", "Final Diagnosis: Myocardial Infarction"});
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("doc"));
    const Transcript parsed = transcript_from_json(transcript_to_json(t));
    CHECK(serialize_transcript(parsed) == serialize_transcript(t));
}

TEST_CASE("transcript file names are sanitized and structured") {
    CHECK(transcript_file_name("P042", "doc-1", "hybrid") == "P042__doc-1__hybrid.json");
    CHECK(transcript_file_name("case 9/x", "m:3", "no_controller") ==
          "case_9_x__m_3__no_controller.json");
}

TEST_CASE("every persisted turn satisfies the fail-closed invariant") {
    auto f = make_run({"Q1", "Q2", "Q3", "Final Diagnosis: Myocardial Infarction"});
    const Transcript t = run_conversation(*f.engine, *f.doctor.gateway, options_for("doc"));
    for (const TurnRecord& turn : t.turns) {
        if (turn.patient_text.empty()) {
            CHECK(turn.attempts == 0); // diagnosis turn carries no reply
            continue;
        }
        const bool pass_verified =
            !turn.verdicts.empty() &&
            turn.verdicts.back().verdict == engine::VerdictKind::pass && !turn.fallback_used;
        const bool is_fallback =
            turn.fallback_used &&
            turn.patient_text == "I'm not sure, can you ask me something else?";
        CHECK((pass_verified || is_fallback));
    }
}
