#include <iostream>

#include <CLI11.hpp>

#include "veripatient/cli_commands.hpp"
#include "veripatient/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"veripatient - truth-preserving simulated-patient engine and evaluation harness"};
    app.set_version_flag("--version", veripatient::kToolVersion);
    app.require_subcommand(1);

    using namespace veripatient::cli;

    PreprocessArgs preprocess;
    auto* cmd_pre = app.add_subcommand(
        "preprocess", "Extract and cache per-symptom semantic context for a corpus");
    cmd_pre->add_option("--corpus", preprocess.corpus, "Case file or directory")->required();
    cmd_pre->add_option("--cache", preprocess.cache_out, "Output cache file")->required();
    cmd_pre->add_option("--fixtures", preprocess.fixtures_dir,
                        "Fixture directory (replay source; --record destination)");
    cmd_pre->add_flag("--live", preprocess.live, "Query the live terminology service");
    cmd_pre->add_flag("--record", preprocess.record, "Record live responses as fixtures");

    SimulateArgs simulate;
    std::string simulate_mode;
    std::uint64_t simulate_seed = 0;
    int simulate_width = 0;
    auto* cmd_sim = app.add_subcommand("simulate", "Run a (case x doctor x mode) batch");
    cmd_sim->add_option("--config", simulate.config_path, "Run-config JSON file")->required();
    auto* mode_opt = cmd_sim->add_option("--mode", simulate_mode,
                                         "Restrict to one mode: hybrid|prompt-only|no-controller");
    auto* seed_opt = cmd_sim->add_option("--seed", simulate_seed, "Override the run seed");
    auto* width_opt = cmd_sim->add_option("--width", simulate_width, "Concurrent conversations");
    cmd_sim->add_flag("--resume", simulate.resume, "Skip cells with existing valid transcripts");

    ChatArgs chat;
    auto* cmd_chat_app = app.add_subcommand("chat", "Interview a simulated patient interactively");
    cmd_chat_app->add_option("--case", chat.case_path, "Patient case file")->required();
    cmd_chat_app->add_option("--mode", chat.mode, "hybrid|prompt-only|no-controller");
    cmd_chat_app->add_option("--config", chat.config_path, "Run-config with endpoints")
        ->required();
    cmd_chat_app->add_option("--cache", chat.cache_path, "Context cache file");
    cmd_chat_app->add_option("--out", chat.out_dir, "Transcript output directory");

    ReportArgs report;
    auto* cmd_rep = app.add_subcommand("report", "Render result tables (markdown + CSV)");
    cmd_rep->add_option("--in", report.in_dir, "Batch output directory")->required();
    cmd_rep->add_option("--judgments", report.judgments_path, "Judgments JSON-lines file");
    cmd_rep->add_option("--layout", report.layout, "performance|agreement|ablation")->required();

    JudgeArgs judge;
    auto* cmd_jdg = app.add_subcommand("judge", "Score transcripts with the judge endpoint");
    cmd_jdg->add_option("--config", judge.config_path, "Run-config with a judge endpoint")
        ->required();
    cmd_jdg->add_option("--in", judge.in_dir, "Transcript directory")->required();
    cmd_jdg->add_option("--corpus", judge.corpus, "Case file or directory")->required();
    cmd_jdg->add_option("--out", judge.out_path, "Judgments JSON-lines output")->required();
    cmd_jdg->add_option("--rater", judge.rater, "Rater tag for the output lines");

    TaxonomyArgs taxonomy;
    auto* cmd_tax = app.add_subcommand("taxonomy", "Print noise-pillar behavior descriptions");
    cmd_tax->add_option("--pillar", taxonomy.pillar, "Pillar id (snake_case)");
    cmd_tax->add_option("--level", taxonomy.level, "Severity level 0-4");

    IngestArgs ingest;
    auto* cmd_ing = app.add_subcommand("ingest", "Convert source exports to the unified schema");
    cmd_ing->add_option("--adapter", ingest.adapter, "ddxplus|triage")->required();
    cmd_ing->add_option("--in", ingest.input, "Source record file")->required();
    cmd_ing->add_option("--out", ingest.out_dir, "Case output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (cmd_pre->parsed()) return cmd_preprocess(preprocess, std::cout, std::cerr);
    if (cmd_sim->parsed()) {
        if (*mode_opt) simulate.mode = simulate_mode;
        if (*seed_opt) simulate.seed = simulate_seed;
        if (*width_opt) simulate.width = simulate_width;
        return cmd_simulate(simulate, std::cout, std::cerr);
    }
    if (cmd_chat_app->parsed()) return cmd_chat(chat, std::cin, std::cout, std::cerr);
    if (cmd_rep->parsed()) return cmd_report(report, std::cout, std::cerr);
    if (cmd_jdg->parsed()) return cmd_judge(judge, std::cout, std::cerr);
    if (cmd_tax->parsed()) return cmd_taxonomy(taxonomy, std::cout, std::cerr);
    if (cmd_ing->parsed()) return cmd_ingest(ingest, std::cout, std::cerr);
    return veripatient::cli::kExitConfigError;
}
