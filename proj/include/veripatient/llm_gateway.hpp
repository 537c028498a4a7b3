#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace veripatient::llm {

enum class MessageRole { system, user, assistant };

std::string_view message_role_name(MessageRole role);

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct GenerationParams {
    double temperature = 0.0;
    double top_p = 0.95;
    int max_input_tokens = 4096;
    int max_output_tokens = 256;
    double frequency_penalty = 0.0;
};

enum class AgentRole { patient_generator, doctor, verifier, judge };

std::string_view agent_role_name(AgentRole role);

/// Generation parameters for each agent role; only the temperature
/// differs (patient 0.7, doctor 0.3, verifier and judge 0.0).
GenerationParams role_preset(AgentRole role);

/// One chat-completion backend. Implementations must be safe for
/// concurrent calls.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages,
                                 const GenerationParams& params) = 0;
    virtual std::string describe() const = 0;
};

/// Scripted backend for offline runs. Entries are consumed in request
/// order behind a cursor; error entries reproduce transport/backend
/// failures. `cycle` repeats the script once exhausted (useful for
/// doctors that must never diagnose).
class ReplayChatBackend : public ChatBackend {
public:
    struct Entry {
        std::string text;
        bool transient_error = false;
        int http_status = 0; // non-zero: fail with this status + text as body
    };

    ReplayChatBackend(std::vector<Entry> entries, bool cycle = false);

    /// Load from a script file: {"mode": "sequence"|"cycle", "responses":
    /// [ "text" | {"text": ...} | {"error": "transient"} | {"error":
    /// "http", "status": N, "body": ...} ]}.
    static std::shared_ptr<ReplayChatBackend> from_file(const std::string& path);
    static std::shared_ptr<ReplayChatBackend> from_json(const nlohmann::json& script);

    std::string complete(const std::vector<ChatMessage>& messages,
                         const GenerationParams& params) override;
    std::string describe() const override;

    /// Total entries served, monotonic across cycle wraparound.
    size_t consumed() const;

private:
    std::vector<Entry> entries_;
    bool cycle_ = false;
    mutable std::mutex mutex_;
    size_t cursor_ = 0;
    size_t served_ = 0;
};

struct EndpointConfig {
    std::string id;      // used in transcript names for doctor endpoints
    std::string base_url; // "replay:<script path>" or an http(s) origin
    std::string model;
    std::string api_key_env = "VERIPATIENT_LLM_API_KEY";
    int max_retries = 2;
    int retry_base_delay_ms = 500;
};

EndpointConfig endpoint_from_json(const nlohmann::json& doc, const std::string& fallback_id);

/// HTTP chat-completions backend (JSON body with model, role-tagged
/// messages and sampling parameters). Works against any compatible
/// inference server.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(EndpointConfig config);
    ~HttpChatBackend() override;

    std::string complete(const std::vector<ChatMessage>& messages,
                         const GenerationParams& params) override;
    std::string describe() const override;

private:
    EndpointConfig config_;
    std::string api_key_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Instantiate the backend a config describes. "replay:<path>" yields a
/// fresh scripted backend (cursor per instance); anything else an HTTP
/// backend.
std::shared_ptr<ChatBackend> make_backend(const EndpointConfig& config);

struct AuditRecord {
    std::uint64_t correlation_id = 0;
    std::string backend;
    std::vector<ChatMessage> request;
    GenerationParams params;
    std::string response; // empty on error
    std::string error;    // empty on success
};

using RequestObserver = std::function<void(const AuditRecord&)>;

struct RetryPolicy {
    int max_retries = 2;
    int base_delay_ms = 0;
    double backoff_factor = 2.0;
};

/// Front door for all model calls: bounded retries with exponential
/// backoff on transient failures, client-side input budgeting (4 chars
/// per token, oldest non-system history dropped first), and an audit
/// trail via observer.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry = {});

    std::string complete(const std::vector<ChatMessage>& messages,
                         const GenerationParams& params);

    void set_observer(RequestObserver observer);
    const std::shared_ptr<ChatBackend>& backend() const { return backend_; }
    std::uint64_t calls() const { return next_correlation_ - 1; }

private:
    std::shared_ptr<ChatBackend> backend_;
    RetryPolicy retry_;
    RequestObserver observer_;
    std::mutex mutex_;
    std::uint64_t next_correlation_ = 1;
};

/// Drop oldest non-system messages until the 4-chars-per-token estimate
/// fits the input budget. The most recent message always survives.
std::vector<ChatMessage> fit_input_budget(std::vector<ChatMessage> messages,
                                          int max_input_tokens);

/// Writes audit records as JSON-lines; plug into Gateway::set_observer.
class JsonLinesAuditLog {
public:
    explicit JsonLinesAuditLog(const std::string& path);
    void operator()(const AuditRecord& record);

private:
    std::shared_ptr<std::mutex> mutex_;
    std::string path_;
};

} // namespace veripatient::llm
