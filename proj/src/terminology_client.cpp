#include "veripatient/terminology_client.hpp"

#include <chrono>
#include <ctime>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "veripatient/errors.hpp"
#include "veripatient/json_io.hpp"
#include "veripatient/net_instrumentation.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::umls {

namespace {

std::string percent_encode(std::string_view value) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(value.size());
    for (unsigned char c : value) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string fixture_file_name(std::string_view endpoint, std::string_view query) {
    return std::string(endpoint) + "__" + normalize_symptom(query) + ".json";
}

// ---------------------------------------------------------------------------
// ReplayTerminologyClient

ReplayTerminologyClient::ReplayTerminologyClient(std::filesystem::path fixtures_dir)
    : dir_(std::move(fixtures_dir)) {}

nlohmann::json ReplayTerminologyClient::load(std::string_view endpoint,
                                             std::string_view query) const {
    const auto path = dir_ / fixture_file_name(endpoint, query);
    if (!std::filesystem::exists(path)) {
        if (endpoint == "search") {
            throw NotFoundError(std::string(query));
        }
        throw TransportError("missing terminology fixture: " + path.string());
    }
    return io::read_json_file(path);
}

ConceptRef ReplayTerminologyClient::resolve_concept(const std::string& term) {
    const nlohmann::json doc = load("search", term);
    if (doc.is_null() || !doc.contains("cui") || doc.at("cui").is_null()) {
        throw NotFoundError(term);
    }
    ConceptRef ref;
    ref.cui = doc.at("cui").get<std::string>();
    ref.preferred_name = doc.value("preferred_name", term);
    if (doc.contains("snomed_id") && !doc.at("snomed_id").is_null()) {
        ref.snomed_id = doc.at("snomed_id").get<std::string>();
    }
    return ref;
}

std::vector<std::string> ReplayTerminologyClient::atoms(const std::string& cui) {
    return load("atoms", cui).at("atoms").get<std::vector<std::string>>();
}

std::vector<std::string> ReplayTerminologyClient::word_search(const std::string& term) {
    return load("wordsearch", term).at("concepts").get<std::vector<std::string>>();
}

std::vector<std::string> ReplayTerminologyClient::snomed_relations(const std::string& snomed_id) {
    return load("relations", snomed_id).at("relations").get<std::vector<std::string>>();
}

CacheMeta ReplayTerminologyClient::snapshot_meta() const {
    const auto path = dir_ / "__snapshot__.json";
    CacheMeta meta;
    if (std::filesystem::exists(path)) {
        const nlohmann::json doc = io::read_json_file(path);
        meta.snapshot_id = doc.value("snapshot_id", "");
        meta.extracted_at = doc.value("recorded_at", "");
    }
    return meta;
}

// ---------------------------------------------------------------------------
// RestTerminologyClient

struct RestTerminologyClient::Impl {
    explicit Impl(const std::string& base_url) : client(base_url.c_str()) {
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        client.set_follow_location(true);
    }
    httplib::Client client;
};

RestTerminologyClient::RestTerminologyClient(RestClientConfig config)
    : config_(std::move(config)) {
    // Split scheme://host from any path prefix so httplib gets only the
    // origin; the prefix rides along on each request path.
    auto pos = config_.base_url.find('/', config_.base_url.find("://") + 3);
    std::string origin = config_.base_url;
    std::string prefix;
    if (pos != std::string::npos) {
        origin = config_.base_url.substr(0, pos);
        prefix = config_.base_url.substr(pos);
    }
    impl_ = std::make_unique<Impl>(origin);
    config_.base_url = prefix;
}

RestTerminologyClient::~RestTerminologyClient() = default;

nlohmann::json RestTerminologyClient::get_json(const std::string& path_and_query) {
    const std::string path = config_.base_url + path_and_query +
                             (path_and_query.find('?') == std::string::npos ? "?" : "&") +
                             "apiKey=" + percent_encode(config_.api_key);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(
                config_.retry_base_delay_ms * (1 << (attempt - 1))));
        }
        net::network_op_counter()++;
        auto res = impl_->client.Get(path.c_str());
        if (!res) {
            last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status >= 500 || res->status == 429 || res->status == 408) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError(res->status, res->body);
        }
        return nlohmann::json::parse(res->body);
    }
    throw TransportError("terminology request failed after " +
                         std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

ConceptRef RestTerminologyClient::resolve_concept(const std::string& term) {
    const auto doc = get_json("/search/current?string=" + percent_encode(term));
    const auto& results = doc.at("result").at("results");
    if (results.empty() ||
        (results.size() == 1 && results[0].value("ui", "NONE") == "NONE")) {
        throw NotFoundError(term);
    }
    ConceptRef ref;
    ref.cui = results[0].at("ui").get<std::string>();
    ref.preferred_name = results[0].value("name", term);

    // Second lookup for the SNOMED code of the same term; absence is not
    // an error, it only skips relation traversal.
    try {
        const auto snomed = get_json("/search/current?string=" + percent_encode(term) +
                                     "&returnIdType=code&sabs=" + config_.snomed_source);
        const auto& snomed_results = snomed.at("result").at("results");
        if (!snomed_results.empty() &&
            snomed_results[0].value("ui", "NONE") != "NONE") {
            ref.snomed_id = snomed_results[0].at("ui").get<std::string>();
        }
    } catch (const BackendError&) {
    } catch (const TransportError&) {
    }
    return ref;
}

std::vector<std::string> RestTerminologyClient::atoms(const std::string& cui) {
    const auto doc = get_json("/content/current/CUI/" + percent_encode(cui) +
                              "/atoms?language=ENG&pageSize=100");
    std::vector<std::string> names;
    for (const auto& atom : doc.at("result")) {
        if (atom.contains("name")) names.push_back(atom.at("name").get<std::string>());
    }
    return names;
}

std::vector<std::string> RestTerminologyClient::word_search(const std::string& term) {
    const auto doc = get_json("/search/current?string=" + percent_encode(term) +
                              "&searchType=words&pageSize=" +
                              std::to_string(kVariationLimit));
    std::vector<std::string> names;
    for (const auto& hit : doc.at("result").at("results")) {
        const std::string name = hit.value("name", "");
        if (!name.empty() && name != "NO RESULTS") names.push_back(name);
    }
    return names;
}

std::vector<std::string> RestTerminologyClient::snomed_relations(const std::string& snomed_id) {
    const auto doc = get_json("/content/current/source/" + config_.snomed_source + "/" +
                              percent_encode(snomed_id) + "/relations?pageSize=" +
                              std::to_string(kRelationLimit));
    std::vector<std::string> labels;
    for (const auto& rel : doc.at("result")) {
        const std::string name = rel.value("relatedIdName", "");
        if (!name.empty()) labels.push_back(name);
    }
    return labels;
}

CacheMeta RestTerminologyClient::snapshot_meta() const {
    return CacheMeta{"uts-current", utc_timestamp()};
}

// ---------------------------------------------------------------------------
// RecordingTerminologyClient

RecordingTerminologyClient::RecordingTerminologyClient(TerminologyClient& upstream,
                                                       std::filesystem::path fixtures_dir)
    : upstream_(upstream), dir_(std::move(fixtures_dir)) {
    std::filesystem::create_directories(dir_);
}

void RecordingTerminologyClient::record(std::string_view endpoint, std::string_view query,
                                        const nlohmann::json& doc) {
    std::lock_guard<std::mutex> lock(mutex_);
    io::atomic_write(dir_ / fixture_file_name(endpoint, query), io::canonical_dump(doc));
}

ConceptRef RecordingTerminologyClient::resolve_concept(const std::string& term) {
    const ConceptRef ref = upstream_.resolve_concept(term);
    nlohmann::json doc = {
        {"cui", ref.cui},
        {"preferred_name", ref.preferred_name},
        {"snomed_id", ref.snomed_id ? nlohmann::json(*ref.snomed_id) : nlohmann::json()},
    };
    record("search", term, doc);
    return ref;
}

std::vector<std::string> RecordingTerminologyClient::atoms(const std::string& cui) {
    auto result = upstream_.atoms(cui);
    record("atoms", cui, nlohmann::json{{"atoms", result}});
    return result;
}

std::vector<std::string> RecordingTerminologyClient::word_search(const std::string& term) {
    auto result = upstream_.word_search(term);
    record("wordsearch", term, nlohmann::json{{"concepts", result}});
    return result;
}

std::vector<std::string> RecordingTerminologyClient::snomed_relations(
    const std::string& snomed_id) {
    auto result = upstream_.snomed_relations(snomed_id);
    record("relations", snomed_id, nlohmann::json{{"relations", result}});
    return result;
}

CacheMeta RecordingTerminologyClient::snapshot_meta() const {
    const CacheMeta meta = upstream_.snapshot_meta();
    nlohmann::json doc = {{"snapshot_id", meta.snapshot_id}, {"recorded_at", meta.extracted_at}};
    io::atomic_write(dir_ / "__snapshot__.json", io::canonical_dump(doc));
    return meta;
}

} // namespace veripatient::umls
