#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace veripatient::umls {

class TerminologyClient;

/// Resolved terminology concept.
struct ConceptRef {
    std::string cui;
    std::optional<std::string> snomed_id;
    std::string preferred_name;
};

inline constexpr size_t kSynonymLimit = 50;
inline constexpr size_t kVariationLimit = 25;
inline constexpr size_t kRelationLimit = 100;

/// Per-symptom semantic neighborhood: lexical variants plus relation-
/// derived associations, locations and modifiers. Lists are deduplicated
/// and stored in lexicographic order; caps apply to the service's
/// returned order before sorting.
struct SemanticContext {
    std::vector<std::string> synonyms;
    std::vector<std::string> variations;
    std::vector<std::string> associations;
    std::vector<std::string> locations;
    std::vector<std::string> modifiers;

    bool operator==(const SemanticContext&) const = default;
};

void to_json(nlohmann::json& j, const SemanticContext& ctx);
void from_json(const nlohmann::json& j, SemanticContext& ctx);

struct CacheMeta {
    std::string snapshot_id;
    std::string extracted_at;

    bool operator==(const CacheMeta&) const = default;
};

/// On-disk map from normalized symptom key to its context. Byte-stable
/// for identical (corpus, fixture) inputs.
struct ContextCache {
    std::map<std::string, SemanticContext> entries;
    CacheMeta meta;

    bool operator==(const ContextCache&) const = default;
};

enum class RelationCategory { association, location, modifier };

/// Symptom list of one case, tagged with its id so extraction failures
/// can name the affected cases.
struct CaseSymptoms {
    std::string case_id;
    std::vector<std::string> symptoms;
};

/// Cache key for a symptom: lowercase, punctuation stripped, whitespace
/// collapsed to single underscores. Idempotent. Throws
/// std::invalid_argument for empty/whitespace-only input.
std::string normalize_symptom(std::string_view symptom);

/// Deterministic keyword classification of a relation label. Exacerbation
/// and relief cues take precedence, then co-occurrence cues, then
/// anatomical cues; anything unmatched is a modifier.
RelationCategory classify_relation(std::string_view relation_text);

/// Run the five-step extraction (concept resolution, synonyms via atoms,
/// variations via word search, relation traversal, aggregation) for one
/// symptom against the given client.
SemanticContext extract_context(const std::string& symptom, TerminologyClient& client);

/// One extraction per unique normalized symptom across the corpus.
/// Fails the build on any extraction error, reporting every failing
/// symptom and the cases that mention it. `on_symptom` (optional)
/// observes per-symptom extraction timings.
using SymptomTimingHook = std::function<void(const std::string& key, double millis)>;

ContextCache build_cache(const std::vector<CaseSymptoms>& corpus, TerminologyClient& client,
                         const SymptomTimingHook& on_symptom = nullptr);

std::string serialize_cache(const ContextCache& cache);
ContextCache parse_cache(const nlohmann::json& doc);

} // namespace veripatient::umls
