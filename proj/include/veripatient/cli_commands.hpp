#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace veripatient::cli {

// Exit-code contract shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitProcessingFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitPartial = 3;

struct PreprocessArgs {
    std::string corpus;
    std::string cache_out;
    std::string fixtures_dir; // replay source (and --record destination)
    bool live = false;
    bool record = false;
};

struct SimulateArgs {
    std::string config_path;
    std::optional<std::string> mode; // restricts the config's mode list
    std::optional<std::uint64_t> seed;
    std::optional<int> width;
    bool resume = false;
};

struct ChatArgs {
    std::string case_path;
    std::string mode = "hybrid";
    std::string config_path; // endpoints for patient generator + verifier
    std::string cache_path;
    std::string out_dir = ".";
};

struct ReportArgs {
    std::string in_dir;
    std::string judgments_path;
    std::string layout; // performance | agreement | ablation
};

struct JudgeArgs {
    std::string config_path; // provides the judge endpoint
    std::string in_dir;      // transcripts
    std::string corpus;
    std::string out_path;    // judgments JSON-lines
    std::string rater = "llm";
};

struct TaxonomyArgs {
    std::string pillar; // empty = all pillars
    int level = -1;     // -1 = all levels
};

struct IngestArgs {
    std::string adapter; // ddxplus | triage
    std::string input;   // file with one record or an array
    std::string out_dir;
};

int cmd_preprocess(const PreprocessArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_chat(const ChatArgs& args, std::istream& in, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);
int cmd_judge(const JudgeArgs& args, std::ostream& out, std::ostream& err);
int cmd_taxonomy(const TaxonomyArgs& args, std::ostream& out, std::ostream& err);
int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err);

} // namespace veripatient::cli
