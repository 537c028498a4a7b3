#include <doctest.h>

#include <regex>

#include "test_support.hpp"
#include "veripatient/errors.hpp"
#include "veripatient/json_io.hpp"
#include "veripatient/llm_gateway.hpp"
#include "veripatient/net_instrumentation.hpp"
#include "veripatient/prompt_templates.hpp"

using namespace veripatient;
using namespace veripatient::llm;

namespace {

const std::map<std::string, std::string> kPatientVars = {
    {"age", "45"},
    {"sex", "F"},
    {"symptoms_list", "Chest pain, Sweating"},
    {"noise_profile_block", "[NOISE PROFILE]\n- Health Literacy (Level 3): use simple words\n"},
};

bool has_unresolved_placeholder(const std::string& text) {
    static const std::regex pattern(R"(\{\{[A-Za-z0-9_]+\}\})");
    return std::regex_search(text, pattern);
}

} // namespace

TEST_CASE("role presets pin the per-role temperatures and shared defaults") {
    CHECK(role_preset(AgentRole::patient_generator).temperature == doctest::Approx(0.7));
    CHECK(role_preset(AgentRole::doctor).temperature == doctest::Approx(0.3));
    CHECK(role_preset(AgentRole::verifier).temperature == doctest::Approx(0.0));
    CHECK(role_preset(AgentRole::judge).temperature == doctest::Approx(0.0));

    for (AgentRole role : {AgentRole::patient_generator, AgentRole::doctor, AgentRole::verifier,
                           AgentRole::judge}) {
        const GenerationParams params = role_preset(role);
        CHECK(params.top_p == doctest::Approx(0.95));
        CHECK(params.max_input_tokens == 4096);
        CHECK(params.max_output_tokens == 256);
        CHECK(params.frequency_penalty == doctest::Approx(0.0));
    }
}

TEST_CASE("patient template renders with the full variable set") {
    const std::string prompt = render_template(TemplateId::patient, kPatientVars);
    CHECK(prompt.find("Keep it under 50 words.") != std::string::npos);
    CHECK(prompt.find("You are a simulated patient") != std::string::npos);
    CHECK(prompt.find("45-year-old F") != std::string::npos);
    CHECK(prompt.find("[NOISE PROFILE]") != std::string::npos);
    CHECK_FALSE(has_unresolved_placeholder(prompt));
    CHECK(render_template(TemplateId::patient, kPatientVars) == prompt);
}

TEST_CASE("doctor template carries the diagnosis format instruction") {
    const std::string prompt =
        render_template(TemplateId::doctor, {{"conversation_history", "Doctor: Hi\n"}});
    CHECK(prompt.find("Final Diagnosis: [condition]") != std::string::npos);
    CHECK(prompt.find("exactly ONE focused clarifying question") != std::string::npos);
    CHECK_FALSE(has_unresolved_placeholder(prompt));
}

TEST_CASE("verifier template carries allow/block logic and the three constraints") {
    const std::string prompt = render_template(
        TemplateId::verifier, {{"ground_truth_symptoms", "Chest pain"},
                               {"demographics", "age 45, sex F"},
                               {"noise_profile", "health_literacy L3"},
                               {"conversation_history", "(no prior exchanges)"},
                               {"umls_context_json", "{}"},
                               {"candidate_response", "my chest hurts"}});
    CHECK(prompt.find("Semantic Consistency Verifier") != std::string::npos);
    CHECK(prompt.find("\"PASS\" | \"REGENERATE\"") != std::string::npos);
    CHECK(prompt.find("justified by the assigned noise profile") != std::string::npos);
    CHECK(prompt.find("must match the patient profile exactly") != std::string::npos);
    CHECK(prompt.find("flags any contradictions") != std::string::npos);
    CHECK_FALSE(has_unresolved_placeholder(prompt));
}

TEST_CASE("missing variables raise an error naming the placeholder") {
    auto vars = kPatientVars;
    vars.erase("age");
    try {
        render_template(TemplateId::patient, vars);
        FAIL("expected error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()) == "unbound placeholder: age");
    }
}

TEST_CASE("extra variables are ignored with a warning") {
    auto vars = kPatientVars;
    vars["flavor"] = "unused";
    std::vector<std::string> warnings;
    const std::string prompt = render_template(TemplateId::patient, vars, &warnings);
    CHECK(prompt == render_template(TemplateId::patient, kPatientVars));
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("flavor") != std::string::npos);
}

TEST_CASE("replay backend echoes its script in request order") {
    auto g = test_support::make_scripted_gateway({"hello", "second"});
    CHECK(g.gateway->complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor)) ==
          "hello");
    CHECK(g.gateway->complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor)) ==
          "second");
    CHECK(g.calls() == 2);
    CHECK_THROWS_AS(
        g.gateway->complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor)),
        TransportError);
}

TEST_CASE("gateway audit observer records params per request") {
    auto g = test_support::make_scripted_gateway({"ok"});
    g.gateway->complete({{MessageRole::user, "hi"}},
                        role_preset(AgentRole::patient_generator));
    REQUIRE(g.audit->size() == 1);
    CHECK((*g.audit)[0].params.temperature == doctest::Approx(0.7));
    CHECK((*g.audit)[0].correlation_id == 1);
    CHECK((*g.audit)[0].request.size() == 1);
}

TEST_CASE("three scripted transient failures exhaust a retry limit of two") {
    std::vector<ReplayChatBackend::Entry> entries = {
        {"", true, 0}, {"", true, 0}, {"", true, 0}, {"never reached", false, 0}};
    auto backend = std::make_shared<ReplayChatBackend>(entries);
    Gateway gateway(backend, RetryPolicy{2, 0, 2.0});
    CHECK_THROWS_AS(
        gateway.complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor)),
        TransportError);
    CHECK(backend->consumed() == 3); // exactly 1 + 2 retries
}

TEST_CASE("two transient failures then success recovers within the retry budget") {
    std::vector<ReplayChatBackend::Entry> entries = {{"", true, 0}, {"", true, 0},
                                                     {"recovered", false, 0}};
    auto backend = std::make_shared<ReplayChatBackend>(entries);
    Gateway gateway(backend, RetryPolicy{2, 0, 2.0});
    CHECK(gateway.complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor)) ==
          "recovered");
    CHECK(backend->consumed() == 3);
}

TEST_CASE("definitive backend errors preserve the body and skip retries") {
    // status 400: a non-retryable client error
    std::vector<ReplayChatBackend::Entry> entries = {{"quota exceeded", false, 400},
                                                     {"unused", false, 0}};
    auto backend = std::make_shared<ReplayChatBackend>(entries);
    Gateway gateway(backend, RetryPolicy{2, 0, 2.0});
    try {
        gateway.complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor));
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.status() == 400);
        CHECK(e.body() == "quota exceeded");
    }
    CHECK(backend->consumed() == 1);
}

TEST_CASE("input budgeting drops oldest non-system history first") {
    std::vector<ChatMessage> messages;
    messages.push_back({MessageRole::system, "system prompt"});
    for (int i = 0; i < 6; ++i) {
        messages.push_back({MessageRole::user, std::string(3000, 'a' + i)});
    }
    // budget: 4096 tokens * 4 chars = 16384 chars; 6*3000=18000 + system
    const auto fitted = fit_input_budget(messages, 4096);
    REQUIRE(fitted.size() >= 2);
    CHECK(fitted.front().role == MessageRole::system);
    CHECK(fitted.back().content == messages.back().content); // newest survives
    size_t total = 0;
    for (const auto& m : fitted) total += m.content.size();
    CHECK(total <= 4096u * 4u);
}

TEST_CASE("empty user messages are rejected before transport") {
    auto g = test_support::make_scripted_gateway({"x"});
    CHECK_THROWS_AS(g.gateway->complete({{MessageRole::user, ""}},
                                        role_preset(AgentRole::doctor)),
                    std::invalid_argument);
    CHECK(g.calls() == 0);
}

TEST_CASE("audit log writes one JSON line per request") {
    test_support::TempDir dir("audit");
    const std::string path = (dir.path() / "audit.jsonl").string();
    auto backend = std::make_shared<ReplayChatBackend>(
        std::vector<ReplayChatBackend::Entry>{{"one", false, 0}, {"two", false, 0}});
    Gateway gateway(backend, RetryPolicy{0, 0, 2.0});
    gateway.set_observer(JsonLinesAuditLog(path));
    gateway.complete({{MessageRole::user, "q1"}}, role_preset(AgentRole::doctor));
    gateway.complete({{MessageRole::user, "q2"}}, role_preset(AgentRole::doctor));

    std::istringstream lines(io::read_text_file(path));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        const auto doc = nlohmann::json::parse(line);
        CHECK(doc.at("correlation_id") == ++count);
        CHECK(doc.contains("response"));
    }
    CHECK(count == 2);
}

TEST_CASE("replay-backed runs perform zero network operations") {
    const auto before = net::network_op_counter().load();
    auto g = test_support::make_scripted_gateway({"a", "b", "c"});
    for (int i = 0; i < 3; ++i) {
        g.gateway->complete({{MessageRole::user, "hi"}}, role_preset(AgentRole::doctor));
    }
    CHECK(net::network_op_counter().load() == before);
}

TEST_CASE("endpoint config parses defaults and replay base urls") {
    const auto config = endpoint_from_json(
        nlohmann::json{{"base_url", "replay:/tmp/script.json"}, {"model", "sim"}}, "fallback");
    CHECK(config.api_key_env == "VERIPATIENT_LLM_API_KEY");
    CHECK(config.id == "fallback");
    CHECK(config.max_retries == 2);
    CHECK_THROWS_AS(endpoint_from_json(nlohmann::json::object(), "x"), ConfigError);
}
