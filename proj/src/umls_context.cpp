#include "veripatient/umls_context.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <set>
#include <stdexcept>

#include "veripatient/errors.hpp"
#include "veripatient/terminology_client.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::umls {

namespace {

// Cue lists for relation classification. Exacerbation/relief/temporal
// cues run first because such labels routinely mention body parts
// ("made worse by arm movement") that would otherwise read as locations.
constexpr std::array<std::string_view, 12> kModifierCues = {
    "worse",     "worsening", "exacerbat", "aggravat",  "reliev",   "lasting",
    "sudden onset", "awakening", "at rest",  "at night", "triggered by", "induced by",
};

constexpr std::array<std::string_view, 3> kAssociationCues = {
    "accompanied by",
    "associated with",
    "with ",
};

constexpr std::array<std::string_view, 6> kLocationCues = {
    "radiating", "left-sided", "right-sided", "below", "between", "deep in",
};

constexpr std::array<std::string_view, 20> kBodyRegionTokens = {
    "arm",      "shoulder", "clavicle", "rib",     "blade",    "back",
    "jaw",      "neck",     "zygomatic", "cheekbone", "temple", "occipital",
    "flank",    "sternum",  "epigastr", "abdom",   "groin",    "pelvi",
    "thigh",    "forearm",
};

/// Dedup preserving first-seen order, truncate to the cap, then sort for
/// byte-stable storage.
std::vector<std::string> dedup_cap_sort(const std::vector<std::string>& raw, size_t cap) {
    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (const std::string& item : raw) {
        if (kept.size() >= cap) break;
        if (seen.insert(item).second) kept.push_back(item);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<std::string> sorted_dedup(std::vector<std::string> items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    return items;
}

} // namespace

std::string normalize_symptom(std::string_view symptom) {
    std::string key;
    key.reserve(symptom.size());
    bool pending_sep = false;
    for (unsigned char c : symptom) {
        if (std::isalnum(c)) {
            if (pending_sep && !key.empty()) key.push_back('_');
            key.push_back(static_cast<char>(std::tolower(c)));
            pending_sep = false;
        } else if (std::isspace(c) || c == '_' || c == '-') {
            pending_sep = true;
        }
        // remaining punctuation dropped entirely
    }
    if (key.empty()) {
        throw std::invalid_argument("cannot normalize empty symptom text");
    }
    return key;
}

RelationCategory classify_relation(std::string_view relation_text) {
    const std::string label = text::to_lower(relation_text);
    auto has_any = [&label](const auto& cues) {
        return std::any_of(cues.begin(), cues.end(), [&label](std::string_view cue) {
            return label.find(cue) != std::string::npos;
        });
    };
    if (has_any(kModifierCues)) return RelationCategory::modifier;
    if (has_any(kAssociationCues)) return RelationCategory::association;
    if (has_any(kLocationCues) || has_any(kBodyRegionTokens)) return RelationCategory::location;
    return RelationCategory::modifier;
}

SemanticContext extract_context(const std::string& symptom, TerminologyClient& client) {
    const ConceptRef resolved = client.resolve_concept(symptom);

    SemanticContext ctx;
    ctx.synonyms = dedup_cap_sort(client.atoms(resolved.cui), kSynonymLimit);
    ctx.variations = dedup_cap_sort(client.word_search(symptom), kVariationLimit);

    if (resolved.snomed_id && !resolved.snomed_id->empty()) {
        std::vector<std::string> relations = client.snomed_relations(*resolved.snomed_id);
        if (relations.size() > kRelationLimit) relations.resize(kRelationLimit);
        for (const std::string& label : relations) {
            switch (classify_relation(label)) {
            case RelationCategory::association: ctx.associations.push_back(label); break;
            case RelationCategory::location: ctx.locations.push_back(label); break;
            case RelationCategory::modifier: ctx.modifiers.push_back(label); break;
            }
        }
        ctx.associations = sorted_dedup(std::move(ctx.associations));
        ctx.locations = sorted_dedup(std::move(ctx.locations));
        ctx.modifiers = sorted_dedup(std::move(ctx.modifiers));
    }
    return ctx;
}

ContextCache build_cache(const std::vector<CaseSymptoms>& corpus, TerminologyClient& client,
                         const SymptomTimingHook& on_symptom) {
    if (corpus.empty()) {
        throw std::invalid_argument("empty corpus: nothing to preprocess");
    }

    struct Pending {
        std::string raw_text;            // first-seen spelling, used for queries
        std::vector<std::string> cases;  // ids mentioning the symptom
    };
    std::map<std::string, Pending> unique_symptoms;
    for (const CaseSymptoms& item : corpus) {
        for (const std::string& symptom : item.symptoms) {
            const std::string key = normalize_symptom(symptom);
            auto [it, inserted] = unique_symptoms.try_emplace(key, Pending{symptom, {}});
            it->second.cases.push_back(item.case_id);
        }
    }

    ContextCache cache;
    cache.meta = client.snapshot_meta();

    std::vector<std::string> failures;
    for (const auto& [key, pending] : unique_symptoms) {
        const auto started = std::chrono::steady_clock::now();
        try {
            cache.entries.emplace(key, extract_context(pending.raw_text, client));
            if (on_symptom) {
                const std::chrono::duration<double, std::milli> elapsed =
                    std::chrono::steady_clock::now() - started;
                on_symptom(key, elapsed.count());
            }
        } catch (const std::exception& e) {
            failures.push_back(key + " (cases: " + text::join(pending.cases, ", ") +
                               "): " + e.what());
        }
    }
    if (!failures.empty()) {
        throw std::runtime_error("context extraction failed for " +
                                 std::to_string(failures.size()) + " symptom(s):\n  " +
                                 text::join(failures, "\n  "));
    }
    return cache;
}

void to_json(nlohmann::json& j, const SemanticContext& ctx) {
    j = nlohmann::json{
        {"synonyms", ctx.synonyms},       {"variations", ctx.variations},
        {"associations", ctx.associations}, {"locations", ctx.locations},
        {"modifiers", ctx.modifiers},
    };
}

void from_json(const nlohmann::json& j, SemanticContext& ctx) {
    auto list = [&j](const char* field) -> std::vector<std::string> {
        if (!j.contains(field) || j.at(field).is_null()) return {};
        return j.at(field).get<std::vector<std::string>>();
    };
    ctx.synonyms = list("synonyms");
    ctx.variations = list("variations");
    ctx.associations = list("associations");
    ctx.locations = list("locations");
    ctx.modifiers = list("modifiers");
}

std::string serialize_cache(const ContextCache& cache) {
    nlohmann::json doc;
    doc["__meta__"] = {
        {"snapshot_id", cache.meta.snapshot_id},
        {"extracted_at", cache.meta.extracted_at},
    };
    for (const auto& [key, ctx] : cache.entries) {
        doc[key] = ctx;
    }
    return doc.dump(2) + "\n";
}

ContextCache parse_cache(const nlohmann::json& doc) {
    ContextCache cache;
    for (const auto& [key, value] : doc.items()) {
        if (key == "__meta__") {
            cache.meta.snapshot_id = value.value("snapshot_id", "");
            cache.meta.extracted_at = value.value("extracted_at", "");
        } else {
            cache.entries.emplace(key, value.get<SemanticContext>());
        }
    }
    return cache;
}

} // namespace veripatient::umls
