#include "veripatient/cli_commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "veripatient/batch_runner.hpp"
#include "veripatient/case_model.hpp"
#include "veripatient/errors.hpp"
#include "veripatient/evaluation.hpp"
#include "veripatient/json_io.hpp"
#include "veripatient/noise_taxonomy.hpp"
#include "veripatient/report.hpp"
#include "veripatient/terminology_client.hpp"
#include "veripatient/text_util.hpp"

namespace veripatient::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kUmlsKeyEnv = "VERIPATIENT_UMLS_API_KEY";

int classify_failure(const std::exception& e, std::ostream& err) {
    err << "error: " << e.what() << "\n";
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfigError;
    return kExitProcessingFailure;
}

std::vector<fs::path> transcript_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        if (entry.path().filename().string().find("__") == std::string::npos) continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

struct JudgmentLine {
    std::string transcript;
    std::string rater;
    std::string mode;
    eval::JudgeScores scores;
};

std::vector<JudgmentLine> read_judgments(const std::string& path) {
    std::istringstream stream(io::read_text_file(path));
    std::vector<JudgmentLine> lines;
    std::string line;
    while (std::getline(stream, line)) {
        if (text::trim(line).empty()) continue;
        const json doc = json::parse(line);
        JudgmentLine j;
        j.transcript = doc.value("transcript", "");
        j.rater = doc.value("rater", "llm");
        j.mode = doc.value("mode", "");
        j.scores = eval::judge_scores_from_json(doc.at("scores"));
        lines.push_back(std::move(j));
    }
    return lines;
}

} // namespace

int cmd_preprocess(const PreprocessArgs& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.cache_out.empty()) throw ConfigError("--cache output path is required");
        if (!args.live && args.fixtures_dir.empty()) {
            throw ConfigError("either --fixtures <dir> or --live is required");
        }

        const auto corpus = cases::load_corpus(args.corpus);

        std::unique_ptr<umls::TerminologyClient> live;
        std::unique_ptr<umls::ReplayTerminologyClient> replay;
        std::unique_ptr<umls::RecordingTerminologyClient> recording;
        umls::TerminologyClient* client = nullptr;

        if (args.live) {
            const char* key = std::getenv(kUmlsKeyEnv);
            if (!key || std::string(key).empty()) {
                throw ConfigError(std::string("--live requires the ") + kUmlsKeyEnv +
                                  " environment variable");
            }
            umls::RestClientConfig rest;
            rest.api_key = key;
            live = std::make_unique<umls::RestTerminologyClient>(rest);
            client = live.get();
            if (args.record) {
                if (args.fixtures_dir.empty()) {
                    throw ConfigError("--record requires --fixtures <dir> as destination");
                }
                recording =
                    std::make_unique<umls::RecordingTerminologyClient>(*live, args.fixtures_dir);
                client = recording.get();
            }
        } else {
            replay = std::make_unique<umls::ReplayTerminologyClient>(args.fixtures_dir);
            client = replay.get();
        }

        std::vector<std::pair<std::string, double>> timings;
        const umls::ContextCache cache =
            umls::build_cache(cases::corpus_symptoms(corpus), *client,
                              [&timings](const std::string& key, double ms) {
                                  timings.emplace_back(key, ms);
                              });

        io::atomic_write(args.cache_out, umls::serialize_cache(cache));

        double total_ms = 0.0;
        out << "extracted context for " << timings.size() << " unique symptom(s):\n";
        for (const auto& [key, ms] : timings) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%8.1f ms", ms);
            out << "  " << buf << "  " << key << "\n";
            total_ms += ms;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", total_ms);
        out << "total: " << buf << " ms; cache written to " << args.cache_out << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    try {
        run::RunConfig config = run::load_run_config(args.config_path);
        if (args.mode) {
            const auto mode = engine::engine_mode_from_name(*args.mode);
            if (!mode) throw ConfigError("unknown mode: " + *args.mode);
            config.modes = {*mode};
        }
        if (args.seed) config.seed = *args.seed;
        if (args.width) {
            if (*args.width < 1) throw ConfigError("--width must be >= 1");
            config.width = *args.width;
        }
        config.resume = args.resume;

        const run::BatchSummary summary = run::run_batch(config);
        out << "cells: " << summary.total << ", succeeded: " << summary.succeeded
            << ", failed: " << summary.failed << ", skipped: " << summary.skipped << "\n";
        out << "output: " << config.output_dir << "\n";
        return summary.failed > 0 ? kExitPartial : kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

int cmd_chat(const ChatArgs& args, std::istream& in, std::ostream& out, std::ostream& err) {
    try {
        const auto mode = engine::engine_mode_from_name(args.mode);
        if (!mode) throw ConfigError("unknown mode: " + args.mode);
        if (args.config_path.empty()) {
            throw ConfigError("--config with patient_generator/verifier endpoints is required");
        }

        cases::PatientCase patient_case =
            cases::load_case(io::read_json_file(args.case_path));
        patient_case.noise_profile = run::effective_profile(patient_case);

        const run::RunConfig config = run::load_run_config(args.config_path);

        std::optional<umls::ContextCache> cache;
        if (!args.cache_path.empty()) {
            cache = umls::parse_cache(io::read_json_file(args.cache_path));
        }
        auto context = run::resolve_case_context(patient_case, cache ? &*cache : nullptr);
        if (*mode == engine::EngineMode::hybrid && context.empty()) {
            throw ConfigError("hybrid mode requires a context cache or case-embedded context");
        }

        engine::EngineConfig engine_config;
        engine_config.mode = *mode;
        engine_config.max_attempts = config.max_attempts;

        auto make_gateway = [](const llm::EndpointConfig& ep) {
            return std::make_shared<llm::Gateway>(
                llm::make_backend(ep),
                llm::RetryPolicy{ep.max_retries, ep.retry_base_delay_ms, 2.0});
        };
        engine::PatientEngine patient(patient_case, std::move(context), engine_config,
                                      make_gateway(config.patient_endpoint),
                                      make_gateway(config.verifier_endpoint));

        run::Transcript transcript;
        transcript.case_id = patient_case.patient_id;
        transcript.doctor_id = "human";
        transcript.mode = std::string(engine::engine_mode_name(*mode));
        transcript.terminated = run::Termination::turn_cap;

        engine::ConversationState state;
        constexpr int kMaxTurns = 40;

        out << "interactive interview with case " << patient_case.patient_id
            << " (" << transcript.mode << "); /diagnose <condition> to finish\n";

        int index = 1;
        while (index <= kMaxTurns) {
            out << "doctor> " << std::flush;
            std::string line;
            if (!std::getline(in, line)) break; // EOF: saved as turn-capped
            line = text::trim(line);
            if (line.empty()) continue; // re-prompt, no turn consumed

            if (line.rfind("/diagnose", 0) == 0) {
                const std::string label = text::trim(line.substr(std::string("/diagnose").size()));
                if (label.empty()) {
                    out << "usage: /diagnose <condition>\n";
                    continue;
                }
                run::TurnRecord record;
                record.index = index;
                record.doctor_text = "Final Diagnosis: " + label;
                transcript.turns.push_back(std::move(record));
                transcript.final_diagnosis = label;
                transcript.terminated = run::Termination::diagnosis;
                const bool matched =
                    eval::match_diagnosis(label, patient_case.diagnosis,
                                          patient_case.icd10_code);
                out << "final diagnosis recorded; match: " << (matched ? "yes" : "no") << "\n";
                break;
            }

            const engine::PatientTurn reply = patient.respond(line, state);
            out << "patient> " << reply.text << "\n";

            run::TurnRecord record;
            record.index = index;
            record.doctor_text = line;
            record.patient_text = reply.text;
            record.attempts = reply.attempts;
            record.verdicts = reply.verdicts;
            record.fallback_used = reply.fallback_used;
            transcript.turns.push_back(std::move(record));

            state.history.push_back({line, reply.text});
            ++index;
        }

        const fs::path path =
            fs::path(args.out_dir) /
            run::transcript_file_name(transcript.case_id, "human", transcript.mode);
        io::atomic_write(path, run::serialize_transcript(transcript));
        out << "transcript: " << path.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
    try {
        eval::ReportOutput rendered;
        std::string csv_name;

        if (args.layout == "performance") {
            const fs::path outcomes_path = fs::path(args.in_dir) / "outcomes.jsonl";
            if (!fs::exists(outcomes_path)) {
                throw ConfigError("no outcomes.jsonl in " + args.in_dir +
                                  " (produced by `veripatient simulate`)");
            }
            std::istringstream stream(io::read_text_file(outcomes_path));
            std::map<std::string, std::vector<eval::Outcome>> by_doctor;
            std::string line;
            while (std::getline(stream, line)) {
                if (text::trim(line).empty()) continue;
                const json doc = json::parse(line);
                eval::Outcome o;
                o.case_id = doc.value("case_id", "");
                o.doctor_id = doc.value("doctor_id", "");
                o.condition = doc.value("condition", "noisy") == "clean"
                                  ? eval::Condition::clean
                                  : eval::Condition::noisy;
                o.correct = doc.value("correct", false);
                o.turns = doc.value("turns", 1);
                by_doctor[o.doctor_id].push_back(o);
            }
            if (by_doctor.empty()) throw ConfigError("outcomes.jsonl is empty");

            std::vector<eval::PerformanceReportRow> rows;
            for (const auto& [doctor, outcomes] : by_doctor) {
                rows.push_back({doctor, eval::performance_metrics(outcomes)});
            }
            try {
                rendered = eval::render_performance_report(rows);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            csv_name = "report_performance.csv";
        } else if (args.layout == "ablation") {
            if (args.judgments_path.empty()) {
                throw ConfigError("ablation layout requires --judgments <file>");
            }
            const auto lines = read_judgments(args.judgments_path);
            std::map<std::string, std::vector<eval::JudgeScores>> by_mode;
            for (const JudgmentLine& j : lines) by_mode[j.mode].push_back(j.scores);
            if (by_mode.empty()) throw ConfigError("judgments file is empty");

            auto cell = [&by_mode](const char* mode) -> std::optional<eval::AblationCell> {
                auto it = by_mode.find(mode);
                if (it == by_mode.end()) return std::nullopt;
                const auto rates = eval::truth_preservation_rates(it->second);
                double realism = 0.0;
                for (const eval::JudgeScores& s : it->second) realism += eval::realism_score(s);
                realism /= static_cast<double>(it->second.size());
                return eval::AblationCell{rates.hallucination_rate_pct,
                                          rates.consistency_rate_pct, realism};
            };
            eval::AblationReport report;
            report.no_controller = cell("no_controller");
            report.prompt_only = cell("prompt_only");
            report.hybrid = cell("hybrid");
            rendered = eval::render_ablation_report(report);
            csv_name = "report_ablation.csv";
        } else if (args.layout == "agreement") {
            if (args.judgments_path.empty()) {
                throw ConfigError("agreement layout requires --judgments <file>");
            }
            auto lines = read_judgments(args.judgments_path);
            std::map<std::string, std::map<std::string, eval::JudgeScores>> by_rater;
            for (const JudgmentLine& j : lines) by_rater[j.rater][j.transcript] = j.scores;
            if (!by_rater.count("h1") || !by_rater.count("h2") || !by_rater.count("llm")) {
                throw ConfigError("agreement layout needs raters h1, h2 and llm in judgments");
            }

            // Align the three raters on the transcripts all of them scored.
            std::vector<eval::JudgeScores> h1, h2, llm_scores;
            for (const auto& [ref, scores] : by_rater.at("h1")) {
                auto it2 = by_rater.at("h2").find(ref);
                auto itl = by_rater.at("llm").find(ref);
                if (it2 == by_rater.at("h2").end() || itl == by_rater.at("llm").end()) continue;
                h1.push_back(scores);
                h2.push_back(it2->second);
                llm_scores.push_back(itl->second);
            }
            if (h1.size() < 2) {
                throw ConfigError("agreement layout needs >= 2 transcripts scored by all raters");
            }

            const auto human = eval::agreement_by_dimension(h1, h2);
            const auto llm_h1 = eval::agreement_by_dimension(llm_scores, h1);
            const auto llm_h2 = eval::agreement_by_dimension(llm_scores, h2);

            std::vector<eval::AgreementReportRow> rows;
            for (size_t i = 0; i < human.size(); ++i) {
                rows.push_back({human[i].dimension, human[i].value,
                                (llm_h1[i].value + llm_h2[i].value) / 2.0, human[i].metric});
            }
            rendered = eval::render_agreement_report(rows);
            csv_name = "report_agreement.csv";
        } else {
            throw ConfigError("unknown layout: " + args.layout +
                              " (expected performance|agreement|ablation)");
        }

        out << rendered.markdown;
        const fs::path csv_path = fs::path(args.in_dir.empty() ? "." : args.in_dir) / csv_name;
        io::atomic_write(csv_path, rendered.csv);
        return kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

int cmd_judge(const JudgeArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const run::RunConfig config = run::load_run_config(args.config_path);
        if (!config.judge_endpoint) {
            throw ConfigError("run config has no judge endpoint");
        }
        const auto corpus = cases::load_corpus(args.corpus);
        std::map<std::string, const cases::PatientCase*> by_id;
        for (const cases::PatientCase& c : corpus) by_id[c.patient_id] = &c;

        const auto files = transcript_files(args.in_dir);
        if (files.empty()) throw ConfigError("no transcripts in " + args.in_dir);

        std::string output;
        int failed = 0;
        for (const fs::path& file : files) {
            try {
                const run::Transcript t = run::transcript_from_json(io::read_json_file(file));
                auto it = by_id.find(t.case_id);
                if (it == by_id.end()) {
                    throw std::runtime_error("case not in corpus: " + t.case_id);
                }
                cases::PatientCase judged_case = *it->second;
                judged_case.noise_profile = run::effective_profile(judged_case);

                llm::Gateway gateway(llm::make_backend(*config.judge_endpoint),
                                     llm::RetryPolicy{config.judge_endpoint->max_retries,
                                                      config.judge_endpoint->retry_base_delay_ms,
                                                      2.0});
                const eval::JudgeScores scores =
                    eval::judge_conversation(t, judged_case, gateway);

                json line;
                line["transcript"] = file.filename().string();
                line["rater"] = args.rater;
                line["mode"] = t.mode;
                line["scores"] = eval::judge_scores_to_json(scores);
                output += line.dump() + "\n";
            } catch (const std::exception& e) {
                err << "judge failed for " << file.filename().string() << ": " << e.what()
                    << "\n";
                ++failed;
            }
        }
        io::atomic_write(args.out_path, output);
        out << "judged " << (files.size() - static_cast<size_t>(failed)) << "/" << files.size()
            << " transcripts -> " << args.out_path << "\n";
        if (failed == static_cast<int>(files.size())) return kExitProcessingFailure;
        return failed > 0 ? kExitPartial : kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

int cmd_taxonomy(const TaxonomyArgs& args, std::ostream& out, std::ostream& err) {
    try {
        std::vector<noise::NoisePillar> pillars;
        if (args.pillar.empty()) {
            pillars.assign(noise::kAllPillars.begin(), noise::kAllPillars.end());
        } else {
            const auto pillar = noise::pillar_from_id(args.pillar);
            if (!pillar) throw ConfigError("unknown pillar: " + args.pillar);
            pillars.push_back(*pillar);
        }
        if (args.level != -1 && (args.level < noise::kMinLevel || args.level > noise::kMaxLevel)) {
            throw ConfigError("level must be 0-4");
        }

        for (noise::NoisePillar pillar : pillars) {
            for (int level = noise::kMinLevel; level <= noise::kMaxLevel; ++level) {
                if (args.level != -1 && level != args.level) continue;
                out << noise::pillar_display_name(pillar) << " (Level " << level
                    << "): " << noise::behavior_text(pillar, level) << "\n";
            }
        }
        return kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const json doc = io::read_json_file(args.input);
        std::vector<cases::PatientCase> ingested;
        if (doc.is_array()) {
            ingested = cases::ingest_batch(doc, args.adapter);
        } else {
            ingested.push_back(cases::ingest_record(doc, args.adapter));
        }
        for (const cases::PatientCase& c : ingested) {
            const fs::path path = fs::path(args.out_dir) / (c.patient_id + ".json");
            io::atomic_write(path, cases::serialize_case(c));
        }
        out << "ingested " << ingested.size() << " case(s) into " << args.out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        return classify_failure(e, err);
    }
}

} // namespace veripatient::cli
