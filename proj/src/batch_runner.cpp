#include "veripatient/batch_runner.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <thread>

#include "veripatient/errors.hpp"
#include "veripatient/evaluation.hpp"
#include "veripatient/json_io.hpp"
#include "veripatient/text_util.hpp"
#include "veripatient/version.hpp"

namespace veripatient::run {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Cell {
    size_t case_index = 0;
    size_t doctor_index = 0;
    engine::EngineMode mode = engine::EngineMode::hybrid;
};

bool transcript_valid(const fs::path& path) {
    try {
        transcript_from_json(io::read_json_file(path));
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace

RunConfig run_config_from_json(const nlohmann::json& doc) {
    RunConfig config;
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
    if (!doc.contains("corpus")) throw ConfigError("run config requires \"corpus\"");
    config.corpus_path = doc.at("corpus").get<std::string>();
    config.cache_path = doc.value("cache", "");
    config.output_dir = doc.value("output_dir", "out");
    config.seed = doc.value("seed", std::uint64_t{0});
    config.width = doc.value("width", 1);
    if (config.width < 1) throw ConfigError("width must be >= 1");
    config.max_turns = doc.value("max_turns", 40);
    config.max_attempts = doc.value("max_attempts", 2);
    if (config.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    config.fallback_text = doc.value("fallback_text", "");
    config.audit_log_path = doc.value("audit_log", "");

    if (doc.contains("modes")) {
        config.modes.clear();
        for (const auto& name : doc.at("modes")) {
            const auto mode = engine::engine_mode_from_name(name.get<std::string>());
            if (!mode) throw ConfigError("unknown mode: " + name.get<std::string>());
            config.modes.push_back(*mode);
        }
        if (config.modes.empty()) throw ConfigError("modes must not be empty");
    }

    if (!doc.contains("endpoints")) throw ConfigError("run config requires \"endpoints\"");
    const auto& endpoints = doc.at("endpoints");
    if (!endpoints.contains("patient_generator") || !endpoints.contains("verifier")) {
        throw ConfigError("endpoints require patient_generator and verifier blocks");
    }
    config.patient_endpoint =
        llm::endpoint_from_json(endpoints.at("patient_generator"), "patient");
    config.verifier_endpoint = llm::endpoint_from_json(endpoints.at("verifier"), "verifier");
    if (!endpoints.contains("doctor")) {
        throw ConfigError("endpoints require a doctor block (object or array)");
    }
    const auto& doctors = endpoints.at("doctor");
    if (doctors.is_array()) {
        for (size_t i = 0; i < doctors.size(); ++i) {
            config.doctor_endpoints.push_back(
                llm::endpoint_from_json(doctors.at(i), "doctor" + std::to_string(i + 1)));
        }
    } else {
        config.doctor_endpoints.push_back(llm::endpoint_from_json(doctors, "doctor"));
    }
    if (config.doctor_endpoints.empty()) throw ConfigError("doctor endpoint list is empty");
    if (endpoints.contains("judge")) {
        config.judge_endpoint = llm::endpoint_from_json(endpoints.at("judge"), "judge");
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(io::read_json_file(path));
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    return nlohmann::json{
        {"config_hash", m.config_hash},     {"seed", m.seed},
        {"modes", m.modes},
        {"corpus_fingerprint", m.corpus_fingerprint},
        {"cache_fingerprint", m.cache_fingerprint},
        {"tool_version", m.tool_version},   {"created_at", m.created_at},
    };
}

noise::NoiseProfile effective_profile(const cases::PatientCase& c) {
    if (c.noise_profile) return *c.noise_profile;
    return noise::sample_profile(c.seed);
}

std::map<std::string, umls::SemanticContext> resolve_case_context(
    const cases::PatientCase& c, const umls::ContextCache* cache) {
    std::map<std::string, umls::SemanticContext> context;
    if (cache) {
        for (const std::string& symptom : c.symptoms) {
            const std::string key = umls::normalize_symptom(symptom);
            auto it = cache->entries.find(key);
            if (it != cache->entries.end()) context[key] = it->second;
        }
    }
    for (const auto& [key, value] : c.umls_context) {
        context[key] = value; // case-embedded fragments win
    }
    return context;
}

BatchSummary run_batch(const RunConfig& config) {
    const std::vector<cases::PatientCase> corpus = cases::load_corpus(config.corpus_path);

    const bool wants_hybrid =
        std::any_of(config.modes.begin(), config.modes.end(),
                    [](engine::EngineMode m) { return m == engine::EngineMode::hybrid; });

    std::optional<umls::ContextCache> cache;
    std::string cache_bytes;
    if (!config.cache_path.empty()) {
        cache_bytes = io::read_text_file(config.cache_path);
        cache = umls::parse_cache(nlohmann::json::parse(cache_bytes));
    } else if (wants_hybrid) {
        throw ConfigError("hybrid mode requires a context cache (\"cache\" in the run config)");
    }

    if (wants_hybrid) {
        std::vector<std::string> missing;
        for (const cases::PatientCase& c : corpus) {
            const auto context = resolve_case_context(c, cache ? &*cache : nullptr);
            for (const std::string& symptom : c.symptoms) {
                const std::string key = umls::normalize_symptom(symptom);
                const bool covered = std::any_of(
                    context.begin(), context.end(), [&key](const auto& entry) {
                        return entry.first == key || key.find(entry.first) != std::string::npos;
                    });
                if (!covered) missing.push_back(c.patient_id + ": " + symptom);
            }
        }
        if (!missing.empty()) {
            throw ConfigError("hybrid mode: no semantic context for " +
                              std::to_string(missing.size()) + " symptom(s), e.g. " +
                              missing.front() + " (run preprocess first)");
        }
    }

    const fs::path out_dir(config.output_dir);
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !config.resume) {
        bool has_transcripts = false;
        for (const auto& entry : fs::directory_iterator(out_dir)) {
            if (entry.path().extension() == ".json") has_transcripts = true;
        }
        if (has_transcripts) {
            throw ConfigError("output directory already holds results: " + config.output_dir +
                              " (pass --resume to continue)");
        }
    }
    fs::create_directories(out_dir);

    // Deterministic cell order: case x doctor x mode.
    std::vector<Cell> cells;
    for (size_t ci = 0; ci < corpus.size(); ++ci) {
        for (size_t di = 0; di < config.doctor_endpoints.size(); ++di) {
            for (engine::EngineMode mode : config.modes) {
                cells.push_back({ci, di, mode});
            }
        }
    }

    std::optional<llm::JsonLinesAuditLog> audit;
    if (!config.audit_log_path.empty()) {
        audit.emplace(config.audit_log_path);
    }

    std::vector<CellResult> results(cells.size());
    std::atomic<size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const size_t index = next.fetch_add(1);
            if (index >= cells.size()) return;
            const Cell& cell = cells[index];
            const cases::PatientCase& base_case = corpus[cell.case_index];
            const llm::EndpointConfig& doctor_cfg = config.doctor_endpoints[cell.doctor_index];
            const std::string mode_name{engine::engine_mode_name(cell.mode)};

            CellResult& result = results[index];
            result.case_id = base_case.patient_id;
            result.doctor_id = doctor_cfg.id;
            result.mode = mode_name;

            const fs::path path =
                out_dir / transcript_file_name(base_case.patient_id, doctor_cfg.id, mode_name);
            result.transcript_path = path.string();

            if (config.resume && fs::exists(path) && transcript_valid(path)) {
                result.skipped = true;
                result.ok = true;
                continue;
            }

            try {
                cases::PatientCase prepared = base_case;
                prepared.noise_profile = effective_profile(base_case);

                engine::EngineConfig engine_config;
                engine_config.max_attempts = config.max_attempts;
                engine_config.mode = cell.mode;
                if (!config.fallback_text.empty()) {
                    engine_config.fallback_text = config.fallback_text;
                }

                auto make_gateway = [&audit](const llm::EndpointConfig& ep) {
                    auto gw = std::make_shared<llm::Gateway>(
                        llm::make_backend(ep),
                        llm::RetryPolicy{ep.max_retries, ep.retry_base_delay_ms, 2.0});
                    if (audit) gw->set_observer(*audit);
                    return gw;
                };

                engine::PatientEngine patient(
                    prepared, resolve_case_context(prepared, cache ? &*cache : nullptr),
                    engine_config, make_gateway(config.patient_endpoint),
                    make_gateway(config.verifier_endpoint));
                auto doctor = make_gateway(doctor_cfg);

                RunnerOptions options;
                options.doctor_id = doctor_cfg.id;
                options.mode = cell.mode;
                options.max_turns = config.max_turns;
                options.run_seed = config.seed;

                const Transcript transcript = run_conversation(patient, *doctor, options);
                io::atomic_write(path, serialize_transcript(transcript));
                result.ok = (transcript.terminated != Termination::error);
            } catch (const std::exception& e) {
                // Startup-grade failure inside a cell (bad script path,
                // unwritable output): record an error transcript.
                Transcript failed;
                failed.case_id = base_case.patient_id;
                failed.doctor_id = doctor_cfg.id;
                failed.mode = mode_name;
                failed.run_seed = config.seed;
                failed.terminated = Termination::error;
                failed.error = TranscriptError{0, e.what()};
                try {
                    io::atomic_write(path, serialize_transcript(failed));
                } catch (const std::exception&) {
                }
                result.ok = false;
            }
        }
    };

    const size_t width = std::min<size_t>(static_cast<size_t>(config.width), cells.size());
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(width);
        for (size_t i = 0; i < width; ++i) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    BatchSummary summary;
    summary.total = static_cast<int>(results.size());
    summary.cells = results;
    for (const CellResult& r : results) {
        if (r.skipped) summary.skipped++;
        if (r.ok) summary.succeeded++;
        else summary.failed++;
    }

    // outcomes.jsonl: per-cell correctness for the report command.
    std::string outcomes;
    for (size_t i = 0; i < cells.size(); ++i) {
        const CellResult& r = results[i];
        const cases::PatientCase& c = corpus[cells[i].case_index];
        Transcript t;
        try {
            t = transcript_from_json(io::read_json_file(r.transcript_path));
        } catch (const std::exception&) {
            continue;
        }
        if (t.terminated == Termination::error) continue;
        const noise::NoiseProfile profile = effective_profile(c);
        nlohmann::json line;
        line["case_id"] = r.case_id;
        line["doctor_id"] = r.doctor_id;
        line["mode"] = r.mode;
        line["condition"] = profile.empty() ? "clean" : "noisy";
        line["correct"] = t.final_diagnosis
                              ? eval::match_diagnosis(*t.final_diagnosis, c.diagnosis,
                                                      c.icd10_code)
                              : false;
        line["turns"] = static_cast<int>(t.turns.size());
        outcomes += line.dump() + "\n";
    }
    io::atomic_write(out_dir / "outcomes.jsonl", outcomes);

    nlohmann::json summary_doc;
    summary_doc["total"] = summary.total;
    summary_doc["succeeded"] = summary.succeeded;
    summary_doc["failed"] = summary.failed;
    summary_doc["skipped"] = summary.skipped;
    nlohmann::json cell_list = nlohmann::json::array();
    for (const CellResult& r : summary.cells) {
        cell_list.push_back({{"case_id", r.case_id},
                             {"doctor_id", r.doctor_id},
                             {"mode", r.mode},
                             {"transcript", r.transcript_path},
                             {"ok", r.ok},
                             {"skipped", r.skipped}});
    }
    summary_doc["cells"] = std::move(cell_list);
    io::atomic_write(out_dir / "summary.json", io::canonical_dump(summary_doc));

    const fs::path manifest_path = out_dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        std::string corpus_bytes;
        for (const cases::PatientCase& c : corpus) corpus_bytes += cases::serialize_case(c);

        RunManifest manifest;
        nlohmann::json config_doc;
        config_doc["corpus"] = config.corpus_path;
        config_doc["cache"] = config.cache_path;
        config_doc["seed"] = config.seed;
        std::vector<std::string> mode_names;
        for (engine::EngineMode m : config.modes) {
            mode_names.push_back(std::string(engine::engine_mode_name(m)));
        }
        config_doc["modes"] = mode_names;
        config_doc["max_turns"] = config.max_turns;
        config_doc["max_attempts"] = config.max_attempts;
        manifest.config_hash = text::fingerprint(config_doc.dump());
        manifest.seed = config.seed;
        manifest.modes = mode_names;
        manifest.corpus_fingerprint = text::fingerprint(corpus_bytes);
        manifest.cache_fingerprint = text::fingerprint(cache_bytes);
        manifest.tool_version = kToolVersion;
        manifest.created_at = utc_now();
        io::atomic_write(manifest_path, io::canonical_dump(manifest_to_json(manifest)));
    }

    return summary;
}

} // namespace veripatient::run
