#include "veripatient/case_model.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

#include "veripatient/errors.hpp"
#include "veripatient/json_io.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::cases {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
}

void reject_unknown_fields(const json& j, const std::set<std::string>& allowed,
                           const std::string& path) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            throw SchemaError(path + "." + key, "unknown field");
        }
    }
}

const json& require_field(const json& j, const char* field, const std::string& path) {
    if (!j.contains(field)) {
        throw SchemaError(path + "." + field, "missing required field");
    }
    return j.at(field);
}

std::string get_string(const json& j, const char* field, const std::string& path) {
    const json& value = require_field(j, field, path);
    if (!value.is_string()) throw SchemaError(path + "." + field, "expected a string");
    return value.get<std::string>();
}

std::string get_nonempty_string(const json& j, const char* field, const std::string& path) {
    std::string s = get_string(j, field, path);
    if (text::trim(s).empty()) throw SchemaError(path + "." + field, "must be non-empty");
    return s;
}

// Opaque label with a shape check only: letter, digits, optional .digits.
bool icd10_shape_ok(const std::string& code) {
    if (code.size() < 2 || !std::isalpha(static_cast<unsigned char>(code[0]))) return false;
    size_t i = 1;
    size_t digits = 0;
    while (i < code.size() && std::isdigit(static_cast<unsigned char>(code[i]))) {
        ++i;
        ++digits;
    }
    if (digits == 0) return false;
    if (i == code.size()) return true;
    if (code[i] != '.') return false;
    ++i;
    if (i == code.size()) return false;
    while (i < code.size()) {
        if (!std::isalnum(static_cast<unsigned char>(code[i]))) return false;
        ++i;
    }
    return true;
}

Demographics parse_demographics(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown_fields(j, {"age", "sex", "occupation"}, path);

    const json& age = require_field(j, "age", path);
    if (!age.is_number_integer()) throw SchemaError(path + ".age", "expected an integer");
    const int age_value = age.get<int>();
    if (age_value < 0 || age_value > 120) {
        throw SchemaError(path + ".age", "age out of range 0-120");
    }

    Demographics d;
    d.age = age_value;
    d.sex = get_nonempty_string(j, "sex", path);
    if (j.contains("occupation") && !j.at("occupation").is_null()) {
        if (!j.at("occupation").is_string()) {
            throw SchemaError(path + ".occupation", "expected a string");
        }
        d.occupation = j.at("occupation").get<std::string>();
    }
    return d;
}

noise::NoiseProfile parse_noise_profile(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array");
    noise::NoiseProfile profile;
    std::set<noise::NoisePillar> seen;
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string item_path = path + "[" + std::to_string(i) + "]";
        const json& item = j.at(i);
        require_object(item, item_path);
        reject_unknown_fields(item, {"type", "level"}, item_path);

        const std::string type = get_nonempty_string(item, "type", item_path);
        const auto pillar = noise::pillar_from_id(type);
        if (!pillar) throw SchemaError(item_path + ".type", "unknown noise pillar: " + type);

        const json& level = require_field(item, "level", item_path);
        if (!level.is_number_integer()) {
            throw SchemaError(item_path + ".level", "expected an integer");
        }
        const int level_value = level.get<int>();
        if (level_value < noise::kMinLevel || level_value > noise::kMaxLevel) {
            throw SchemaError(item_path + ".level", "level out of range 0-4");
        }
        if (!seen.insert(*pillar).second) {
            throw SchemaError(item_path + ".type", "duplicate noise pillar: " + type);
        }
        profile.specs.push_back({*pillar, level_value});
    }
    return profile;
}

std::map<std::string, umls::SemanticContext> parse_umls_context(
    const json& j, const std::vector<std::string>& symptoms, const std::string& path) {
    require_object(j, path);
    std::vector<std::string> normalized;
    normalized.reserve(symptoms.size());
    for (const std::string& s : symptoms) normalized.push_back(umls::normalize_symptom(s));

    std::map<std::string, umls::SemanticContext> out;
    for (const auto& [key, value] : j.items()) {
        const std::string key_path = path + "." + key;
        std::string canonical;
        try {
            canonical = umls::normalize_symptom(key);
        } catch (const std::invalid_argument&) {
            throw SchemaError(key_path, "invalid symptom key");
        }
        if (canonical != key) {
            throw SchemaError(key_path, "key is not in normalized form (expected " +
                                             canonical + ")");
        }
        // A key corresponds to a symptom when it equals, or is contained
        // in, that symptom's normalized form ("chest_pain" may annotate
        // "chest_pain_radiating_to_left_arm").
        const bool corresponds = std::any_of(
            normalized.begin(), normalized.end(), [&key](const std::string& n) {
                return n == key || n.find(key) != std::string::npos;
            });
        if (!corresponds) {
            throw SchemaError(key_path, "key does not correspond to any case symptom");
        }

        require_object(value, key_path);
        reject_unknown_fields(
            value, {"synonyms", "variations", "associations", "locations", "modifiers"},
            key_path);
        out.emplace(key, value.get<umls::SemanticContext>());
    }
    return out;
}

std::uint64_t parse_seed(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        if (v < 0) throw SchemaError(path, "seed must be non-negative");
        return static_cast<std::uint64_t>(v);
    }
    throw SchemaError(path, "expected an integer");
}

PatientCase ingest_ddxplus(const json& record) {
    if (!record.is_object()) throw IngestError("", "source record must be an object");
    auto need = [&record](const char* field) -> const json& {
        if (!record.contains(field) || record.at(field).is_null()) {
            throw IngestError(field, std::string("source record missing field: ") + field);
        }
        return record.at(field);
    };

    PatientCase c;
    c.demographics.age = need("age").get<int>();
    c.demographics.sex = need("sex").get<std::string>();
    c.diagnosis = need("pathology").get<std::string>();
    c.icd10_code = need("icd10").get<std::string>();
    const json& evidences = need("evidences");
    if (!evidences.is_array() || evidences.empty()) {
        throw IngestError("evidences", "evidences must be a non-empty array");
    }
    for (const auto& e : evidences) c.symptoms.push_back(e.get<std::string>());

    if (record.contains("id")) {
        c.patient_id = record.at("id").get<std::string>();
    } else if (record.contains("patient_id")) {
        c.patient_id = record.at("patient_id").get<std::string>();
    } else {
        c.patient_id = "ddx_" + text::fingerprint(record.dump());
    }
    if (record.contains("seed")) {
        c.seed = parse_seed(record.at("seed"), "$.seed");
    } else {
        // Stable per-record seed so profile sampling varies across a batch.
        std::uint64_t state = 0;
        for (unsigned char ch : c.patient_id) state = state * 31 + ch;
        c.seed = text::splitmix64(state);
    }
    return c;
}

PatientCase ingest_triage(const json& record) {
    if (!record.is_object()) throw IngestError("", "source record must be an object");
    auto need = [&record](const char* field) -> const json& {
        if (!record.contains(field) || record.at(field).is_null()) {
            throw IngestError(field, std::string("source record missing field: ") + field);
        }
        return record.at(field);
    };

    PatientCase c;
    c.patient_id = need("patient_id").get<std::string>();
    c.demographics.age = need("age").get<int>();
    c.demographics.sex = need("sex").get<std::string>();
    if (record.contains("occupation") && !record.at("occupation").is_null()) {
        c.demographics.occupation = record.at("occupation").get<std::string>();
    }
    c.diagnosis = need("diagnosis").get<std::string>();
    c.icd10_code = need("icd10_code").get<std::string>();
    const json& symptoms = need("symptoms");
    if (!symptoms.is_array() || symptoms.empty()) {
        throw IngestError("symptoms", "symptoms must be a non-empty array");
    }
    for (const auto& s : symptoms) c.symptoms.push_back(s.get<std::string>());
    if (record.contains("seed")) c.seed = parse_seed(record.at("seed"), "$.seed");
    return c;
}

} // namespace

PatientCase load_case(const json& document) {
    const std::string root = "$";
    require_object(document, root);
    reject_unknown_fields(document,
                          {"patient_id", "demographics", "symptoms", "diagnosis",
                           "icd10_code", "noise_profile", "umls_context", "seed"},
                          root);

    PatientCase c;
    c.patient_id = get_nonempty_string(document, "patient_id", root);
    c.demographics =
        parse_demographics(require_field(document, "demographics", root), root + ".demographics");

    const json& symptoms = require_field(document, "symptoms", root);
    if (!symptoms.is_array() || symptoms.empty()) {
        throw SchemaError(root + ".symptoms", "expected a non-empty array");
    }
    for (size_t i = 0; i < symptoms.size(); ++i) {
        const json& s = symptoms.at(i);
        if (!s.is_string() || text::trim(s.get<std::string>()).empty()) {
            throw SchemaError(root + ".symptoms[" + std::to_string(i) + "]",
                              "expected a non-empty string");
        }
        c.symptoms.push_back(s.get<std::string>());
    }

    c.diagnosis = get_nonempty_string(document, "diagnosis", root);
    c.icd10_code = get_nonempty_string(document, "icd10_code", root);
    if (!icd10_shape_ok(c.icd10_code)) {
        throw SchemaError(root + ".icd10_code",
                          "expected letter+digits(+.digits), got: " + c.icd10_code);
    }

    if (document.contains("noise_profile") && !document.at("noise_profile").is_null()) {
        c.noise_profile =
            parse_noise_profile(document.at("noise_profile"), root + ".noise_profile");
    }
    if (document.contains("umls_context") && !document.at("umls_context").is_null()) {
        c.umls_context =
            parse_umls_context(document.at("umls_context"), c.symptoms, root + ".umls_context");
    }
    if (document.contains("seed")) {
        c.seed = parse_seed(document.at("seed"), root + ".seed");
    }
    return c;
}

PatientCase load_case_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return load_case(doc);
}

nlohmann::json case_to_json(const PatientCase& c) {
    json doc;
    doc["patient_id"] = c.patient_id;
    json demo;
    demo["age"] = c.demographics.age;
    demo["sex"] = c.demographics.sex;
    if (c.demographics.occupation) demo["occupation"] = *c.demographics.occupation;
    doc["demographics"] = std::move(demo);
    doc["symptoms"] = c.symptoms;
    doc["diagnosis"] = c.diagnosis;
    doc["icd10_code"] = c.icd10_code;
    if (c.noise_profile) {
        json profile = json::array();
        for (const noise::NoiseSpec& spec : c.noise_profile->specs) {
            profile.push_back({{"type", std::string(noise::pillar_id(spec.pillar))},
                               {"level", spec.level}});
        }
        doc["noise_profile"] = std::move(profile);
    }
    if (!c.umls_context.empty()) {
        json ctx = json::object();
        for (const auto& [key, value] : c.umls_context) ctx[key] = value;
        doc["umls_context"] = std::move(ctx);
    }
    doc["seed"] = c.seed;
    return doc;
}

std::string serialize_case(const PatientCase& c) { return io::canonical_dump(case_to_json(c)); }

GeneratorView generator_view(const PatientCase& c) {
    GeneratorView v;
    v.age = c.demographics.age;
    v.sex = c.demographics.sex;
    v.occupation = c.demographics.occupation;
    v.symptoms = c.symptoms;
    v.noise_profile = c.noise_profile;
    v.seed = c.seed;
    return v;
}

nlohmann::json view_to_json(const GeneratorView& v) {
    json doc;
    doc["age"] = v.age;
    doc["sex"] = v.sex;
    if (v.occupation) doc["occupation"] = *v.occupation;
    doc["symptoms"] = v.symptoms;
    if (v.noise_profile) {
        json profile = json::array();
        for (const noise::NoiseSpec& spec : v.noise_profile->specs) {
            profile.push_back({{"type", std::string(noise::pillar_id(spec.pillar))},
                               {"level", spec.level}});
        }
        doc["noise_profile"] = std::move(profile);
    }
    doc["seed"] = v.seed;
    return doc;
}

std::string serialize_view(const GeneratorView& v) { return io::canonical_dump(view_to_json(v)); }

PatientCase ingest_record(const nlohmann::json& source_record, const std::string& adapter_id) {
    PatientCase c;
    if (adapter_id == "ddxplus") {
        c = ingest_ddxplus(source_record);
    } else if (adapter_id == "triage") {
        c = ingest_triage(source_record);
    } else {
        throw ConfigError("unknown ingestion adapter: " + adapter_id);
    }

    // Revalidate through the strict schema so every ingested case obeys
    // the same invariants as hand-written ones.
    return load_case(case_to_json(c));
}

std::vector<PatientCase> ingest_batch(const nlohmann::json& records,
                                      const std::string& adapter_id) {
    if (!records.is_array()) {
        throw IngestError("", "batch ingestion expects an array of records");
    }
    std::vector<PatientCase> out;
    std::set<std::string> ids;
    for (const auto& record : records) {
        PatientCase c = ingest_record(record, adapter_id);
        if (!ids.insert(c.patient_id).second) {
            throw IngestError("patient_id", "duplicate patient_id in batch: " + c.patient_id);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<PatientCase> load_corpus(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw ConfigError("corpus path does not exist: " + path);
    }

    std::vector<PatientCase> corpus;
    std::set<std::string> ids;
    for (const fs::path& file : files) {
        json doc = io::read_json_file(file);
        std::vector<json> docs;
        if (doc.is_array()) {
            docs.assign(doc.begin(), doc.end());
        } else {
            docs.push_back(std::move(doc));
        }
        for (const json& one : docs) {
            PatientCase c = load_case(one);
            if (!ids.insert(c.patient_id).second) {
                throw IngestError("patient_id",
                                  "duplicate patient_id in corpus: " + c.patient_id +
                                      " (file " + file.string() + ")");
            }
            corpus.push_back(std::move(c));
        }
    }
    if (corpus.empty()) {
        throw ConfigError("corpus is empty: " + path);
    }
    return corpus;
}

std::vector<umls::CaseSymptoms> corpus_symptoms(const std::vector<PatientCase>& corpus) {
    std::vector<umls::CaseSymptoms> out;
    out.reserve(corpus.size());
    for (const PatientCase& c : corpus) out.push_back({c.patient_id, c.symptoms});
    return out;
}

} // namespace veripatient::cases
