#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "veripatient/errors.hpp"
#include "veripatient/llm_gateway.hpp"
#include "veripatient/net_instrumentation.hpp"

namespace veripatient::llm {

struct HttpChatBackend::Impl {
    explicit Impl(const std::string& origin) : client(origin.c_str()) {
        client.set_connection_timeout(15);
        client.set_read_timeout(300);
    }
    httplib::Client client;
    std::string path = "/v1/chat/completions";
};

HttpChatBackend::HttpChatBackend(EndpointConfig config) : config_(std::move(config)) {
    std::string origin = config_.base_url;
    std::string path_prefix;
    const auto scheme_end = origin.find("://");
    if (scheme_end != std::string::npos) {
        const auto slash = origin.find('/', scheme_end + 3);
        if (slash != std::string::npos) {
            path_prefix = origin.substr(slash);
            origin = origin.substr(0, slash);
        }
    }
    impl_ = std::make_unique<Impl>(origin);
    if (!path_prefix.empty() && path_prefix != "/") {
        impl_->path = path_prefix + "/chat/completions";
    }
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key_ = key;
    }
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params) {
    nlohmann::json body;
    body["model"] = config_.model;
    nlohmann::json msgs = nlohmann::json::array();
    for (const ChatMessage& m : messages) {
        msgs.push_back({{"role", std::string(message_role_name(m.role))},
                        {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["max_tokens"] = params.max_output_tokens;
    body["frequency_penalty"] = params.frequency_penalty;

    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    net::network_op_counter()++;
    auto res = impl_->client.Post(impl_->path.c_str(), headers, body.dump(),
                                  "application/json");
    if (!res) {
        throw TransportError("connection failure (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status >= 500 || res->status == 429 || res->status == 408) {
        // Retryable class; the gateway's retry loop handles it.
        throw TransportError("retryable status " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendError(res->status, res->body);
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw BackendError(res->status, res->body);
    }
}

std::string HttpChatBackend::describe() const {
    return config_.id + " (" + config_.model + ")";
}

} // namespace veripatient::llm
