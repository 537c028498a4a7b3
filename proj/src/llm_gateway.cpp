#include "veripatient/llm_gateway.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "veripatient/errors.hpp"
#include "veripatient/json_io.hpp"

namespace veripatient::llm {

std::string_view message_role_name(MessageRole role) {
    switch (role) {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
    }
    return "user";
}

std::string_view agent_role_name(AgentRole role) {
    switch (role) {
    case AgentRole::patient_generator: return "patient_generator";
    case AgentRole::doctor: return "doctor";
    case AgentRole::verifier: return "verifier";
    case AgentRole::judge: return "judge";
    }
    return "unknown";
}

GenerationParams role_preset(AgentRole role) {
    GenerationParams params;
    switch (role) {
    case AgentRole::patient_generator: params.temperature = 0.7; break;
    case AgentRole::doctor: params.temperature = 0.3; break;
    case AgentRole::verifier:
    case AgentRole::judge: params.temperature = 0.0; break;
    }
    return params;
}

// ---------------------------------------------------------------------------
// ReplayChatBackend

ReplayChatBackend::ReplayChatBackend(std::vector<Entry> entries, bool cycle)
    : entries_(std::move(entries)), cycle_(cycle) {}

std::shared_ptr<ReplayChatBackend> ReplayChatBackend::from_file(const std::string& path) {
    return from_json(io::read_json_file(path));
}

std::shared_ptr<ReplayChatBackend> ReplayChatBackend::from_json(const nlohmann::json& script) {
    std::vector<Entry> entries;
    const bool cycle = script.value("mode", "sequence") == "cycle";
    for (const auto& item : script.at("responses")) {
        Entry entry;
        if (item.is_string()) {
            entry.text = item.get<std::string>();
        } else if (item.contains("error")) {
            const std::string kind = item.at("error").get<std::string>();
            if (kind == "transient") {
                entry.transient_error = true;
            } else if (kind == "http") {
                entry.http_status = item.value("status", 500);
                entry.text = item.value("body", "");
            } else {
                throw ConfigError("unknown replay error kind: " + kind);
            }
        } else {
            entry.text = item.at("text").get<std::string>();
        }
        entries.push_back(std::move(entry));
    }
    return std::make_shared<ReplayChatBackend>(std::move(entries), cycle);
}

std::string ReplayChatBackend::complete(const std::vector<ChatMessage>&,
                                        const GenerationParams&) {
    Entry entry;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (cursor_ >= entries_.size()) {
            if (cycle_ && !entries_.empty()) {
                cursor_ = 0;
            } else {
                throw TransportError("replay script exhausted after " +
                                     std::to_string(entries_.size()) + " responses");
            }
        }
        entry = entries_[cursor_++];
        ++served_;
    }
    if (entry.transient_error) {
        throw TransportError("scripted transient failure");
    }
    if (entry.http_status != 0) {
        throw BackendError(entry.http_status, entry.text);
    }
    return entry.text;
}

std::string ReplayChatBackend::describe() const { return "replay"; }

size_t ReplayChatBackend::consumed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return served_;
}

// ---------------------------------------------------------------------------
// Config + factory

EndpointConfig endpoint_from_json(const nlohmann::json& doc, const std::string& fallback_id) {
    EndpointConfig config;
    if (!doc.is_object() || !doc.contains("base_url")) {
        throw ConfigError("endpoint config requires a base_url");
    }
    config.base_url = doc.at("base_url").get<std::string>();
    config.model = doc.value("model", "");
    config.id = doc.value("id", fallback_id.empty() ? config.model : fallback_id);
    config.api_key_env = doc.value("api_key_env", std::string("VERIPATIENT_LLM_API_KEY"));
    config.max_retries = doc.value("max_retries", 2);
    config.retry_base_delay_ms = doc.value("retry_base_delay_ms", 500);
    if (config.id.empty()) {
        throw ConfigError("endpoint config requires an id or model name");
    }
    return config;
}

std::shared_ptr<ChatBackend> make_backend(const EndpointConfig& config) {
    constexpr std::string_view kReplayPrefix = "replay:";
    if (config.base_url.rfind(kReplayPrefix, 0) == 0) {
        return ReplayChatBackend::from_file(
            config.base_url.substr(kReplayPrefix.size()));
    }
    return std::make_shared<HttpChatBackend>(config);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry)
    : backend_(std::move(backend)), retry_(retry) {}

void Gateway::set_observer(RequestObserver observer) { observer_ = std::move(observer); }

std::string Gateway::complete(const std::vector<ChatMessage>& messages,
                              const GenerationParams& params) {
    if (messages.empty()) {
        throw std::invalid_argument("complete() requires at least one message");
    }
    for (const ChatMessage& m : messages) {
        if (m.role != MessageRole::system && m.content.empty()) {
            throw std::invalid_argument("user/assistant messages must be non-empty");
        }
    }
    if (params.temperature < 0.0 || params.temperature > 2.0) {
        throw std::invalid_argument("temperature must be within 0-2");
    }

    const std::vector<ChatMessage> budgeted = fit_input_budget(messages, params.max_input_tokens);

    AuditRecord record;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        record.correlation_id = next_correlation_++;
    }
    record.backend = backend_->describe();
    record.request = budgeted;
    record.params = params;

    std::string last_error;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        if (attempt > 0 && retry_.base_delay_ms > 0) {
            double delay = retry_.base_delay_ms;
            for (int i = 1; i < attempt; ++i) delay *= retry_.backoff_factor;
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(delay)));
        }
        try {
            record.response = backend_->complete(budgeted, params);
            if (observer_) observer_(record);
            return record.response;
        } catch (const TransportError& e) {
            last_error = e.what();
        }
        // BackendError (definitive non-2xx) propagates without retry.
    }
    record.error = "retries exhausted: " + last_error;
    if (observer_) observer_(record);
    throw TransportError("transport failed after " + std::to_string(retry_.max_retries + 1) +
                         " attempts: " + last_error);
}

std::vector<ChatMessage> fit_input_budget(std::vector<ChatMessage> messages,
                                          int max_input_tokens) {
    const size_t budget_chars = static_cast<size_t>(max_input_tokens) * 4;
    auto total = [&messages]() {
        size_t chars = 0;
        for (const ChatMessage& m : messages) chars += m.content.size();
        return chars;
    };
    while (total() > budget_chars && messages.size() > 1) {
        // Oldest non-system message first; never drop the final message.
        bool dropped = false;
        for (size_t i = 0; i + 1 < messages.size(); ++i) {
            if (messages[i].role != MessageRole::system) {
                messages.erase(messages.begin() + static_cast<std::ptrdiff_t>(i));
                dropped = true;
                break;
            }
        }
        if (!dropped) {
            // Only system messages precede the last one; drop the oldest.
            messages.erase(messages.begin());
        }
    }
    return messages;
}

// ---------------------------------------------------------------------------
// Audit log

JsonLinesAuditLog::JsonLinesAuditLog(const std::string& path)
    : mutex_(std::make_shared<std::mutex>()), path_(path) {}

void JsonLinesAuditLog::operator()(const AuditRecord& record) {
    nlohmann::json line;
    line["correlation_id"] = record.correlation_id;
    line["backend"] = record.backend;
    nlohmann::json request = nlohmann::json::array();
    for (const ChatMessage& m : record.request) {
        request.push_back({{"role", std::string(message_role_name(m.role))},
                           {"content", m.content}});
    }
    line["request"] = std::move(request);
    line["params"] = {{"temperature", record.params.temperature},
                      {"top_p", record.params.top_p},
                      {"max_output_tokens", record.params.max_output_tokens},
                      {"frequency_penalty", record.params.frequency_penalty}};
    if (record.error.empty()) {
        line["response"] = record.response;
    } else {
        line["error"] = record.error;
    }
    std::lock_guard<std::mutex> lock(*mutex_);
    std::ofstream out(path_, std::ios::app);
    out << line.dump() << "\n";
}

} // namespace veripatient::llm
