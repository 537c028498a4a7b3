#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "veripatient/umls_context.hpp"

namespace veripatient::umls {

/// Abstract terminology service used by context extraction. Implementations
/// must be safe for concurrent requests.
class TerminologyClient {
public:
    virtual ~TerminologyClient() = default;

    /// Resolve a term to its primary concept. Throws NotFoundError when the
    /// service has no matching concept.
    virtual ConceptRef resolve_concept(const std::string& term) = 0;

    /// English lexical variants (atoms) of a concept.
    virtual std::vector<std::string> atoms(const std::string& cui) = 0;

    /// Related concept names from a word-based search on the term.
    virtual std::vector<std::string> word_search(const std::string& term) = 0;

    /// Source-asserted relation labels for a SNOMED concept id.
    virtual std::vector<std::string> snomed_relations(const std::string& snomed_id) = 0;

    /// Terminology snapshot descriptor stored in cache metadata. Replay
    /// clients return the recorded snapshot so rebuilt caches stay
    /// byte-identical; live clients describe the session.
    virtual CacheMeta snapshot_meta() const { return {}; }
};

/// Fixture filename for an (endpoint, query) pair, e.g.
/// ("search", "chest pain") -> "search__chest_pain.json".
std::string fixture_file_name(std::string_view endpoint, std::string_view query);

/// Replays recorded fixtures from a directory; never touches the network.
/// A missing search fixture maps to NotFoundError (the recorded service
/// had no concept for the term).
class ReplayTerminologyClient : public TerminologyClient {
public:
    explicit ReplayTerminologyClient(std::filesystem::path fixtures_dir);

    ConceptRef resolve_concept(const std::string& term) override;
    std::vector<std::string> atoms(const std::string& cui) override;
    std::vector<std::string> word_search(const std::string& term) override;
    std::vector<std::string> snomed_relations(const std::string& snomed_id) override;

    /// Snapshot metadata recorded alongside the fixtures, if present.
    CacheMeta snapshot_meta() const override;

private:
    nlohmann::json load(std::string_view endpoint, std::string_view query) const;

    std::filesystem::path dir_;
};

struct RestClientConfig {
    std::string base_url = "https://uts-ws.nlm.nih.gov/rest";
    std::string api_key;
    std::string snomed_source = "SNOMEDCT_US";
    int max_retries = 2;
    int retry_base_delay_ms = 500;
};

/// Live REST client for a UMLS-style terminology service: term search for
/// the CUI, atom listing per CUI, and source-asserted relations per SNOMED
/// id. Requires an API key.
class RestTerminologyClient : public TerminologyClient {
public:
    explicit RestTerminologyClient(RestClientConfig config);
    ~RestTerminologyClient() override;

    ConceptRef resolve_concept(const std::string& term) override;
    std::vector<std::string> atoms(const std::string& cui) override;
    std::vector<std::string> word_search(const std::string& term) override;
    std::vector<std::string> snomed_relations(const std::string& snomed_id) override;
    CacheMeta snapshot_meta() const override;

private:
    nlohmann::json get_json(const std::string& path_and_query);

    RestClientConfig config_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Decorator that records every upstream answer into fixture files so a
/// later replay run reproduces the live session byte-for-byte.
class RecordingTerminologyClient : public TerminologyClient {
public:
    RecordingTerminologyClient(TerminologyClient& upstream, std::filesystem::path fixtures_dir);

    ConceptRef resolve_concept(const std::string& term) override;
    std::vector<std::string> atoms(const std::string& cui) override;
    std::vector<std::string> word_search(const std::string& term) override;
    std::vector<std::string> snomed_relations(const std::string& snomed_id) override;
    CacheMeta snapshot_meta() const override;

private:
    void record(std::string_view endpoint, std::string_view query, const nlohmann::json& doc);

    TerminologyClient& upstream_;
    std::filesystem::path dir_;
    std::mutex mutex_;
};

} // namespace veripatient::umls
