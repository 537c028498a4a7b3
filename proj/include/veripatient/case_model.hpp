#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veripatient/noise_taxonomy.hpp"
#include "veripatient/umls_context.hpp"

namespace veripatient::cases {

struct Demographics {
    int age = 0;
    std::string sex;
    std::optional<std::string> occupation;

    bool operator==(const Demographics&) const = default;
};

/// The ground-truth record for one simulated patient. The diagnosis and
/// ICD code live only here and in views derived for the verifier; the
/// generator path receives a GeneratorView instead.
struct PatientCase {
    std::string patient_id;
    Demographics demographics;
    std::vector<std::string> symptoms;
    std::string diagnosis;
    std::string icd10_code;
    std::optional<noise::NoiseProfile> noise_profile;
    std::map<std::string, umls::SemanticContext> umls_context;
    std::uint64_t seed = 0;

    bool operator==(const PatientCase&) const = default;
};

/// Projection of a case for the response generator: structurally unable
/// to carry the diagnosis, the ICD code, or the semantic context.
struct GeneratorView {
    int age = 0;
    std::string sex;
    std::optional<std::string> occupation;
    std::vector<std::string> symptoms;
    std::optional<noise::NoiseProfile> noise_profile;
    std::uint64_t seed = 0;
};

/// Parse and validate one case document against the closed schema.
/// Unknown fields and invariant violations raise SchemaError with the
/// offending field path.
PatientCase load_case(const nlohmann::json& document);
PatientCase load_case_text(const std::string& json_text);

nlohmann::json case_to_json(const PatientCase& c);
std::string serialize_case(const PatientCase& c);

GeneratorView generator_view(const PatientCase& c);
nlohmann::json view_to_json(const GeneratorView& v);
std::string serialize_view(const GeneratorView& v);

/// Map a source export record onto the unified schema. Built-in adapter
/// ids: "ddxplus" (age/sex/pathology/icd10/evidences) and "triage"
/// (unified field names minus profile/context). The produced case has no
/// noise profile and an empty context; both are assigned by later steps.
PatientCase ingest_record(const nlohmann::json& source_record, const std::string& adapter_id);

/// Ingest a batch, rejecting duplicate patient ids.
std::vector<PatientCase> ingest_batch(const nlohmann::json& records,
                                      const std::string& adapter_id);

/// Load a corpus: a directory of case files, a single-case file, or a
/// file holding an array of cases. Duplicate ids across files are
/// rejected. Files are visited in sorted path order.
std::vector<PatientCase> load_corpus(const std::string& path);

std::vector<umls::CaseSymptoms> corpus_symptoms(const std::vector<PatientCase>& corpus);

} // namespace veripatient::cases
