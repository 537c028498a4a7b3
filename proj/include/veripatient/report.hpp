#pragma once

#include <optional>
#include <string>
#include <vector>

#include "veripatient/evaluation.hpp"

namespace veripatient::eval {

struct ReportOutput {
    std::string markdown;
    std::string csv;
};

struct PerformanceReportRow {
    std::string label; // doctor endpoint id
    PerformanceMetrics metrics;
};

/// Columns: Doctor | Clean | Noisy | dAcc | dTurns. Accuracies to one
/// decimal; deltas carry an explicit sign, dTurns a trailing percent.
/// Rows lacking either condition make the delta columns impossible and
/// raise an error.
ReportOutput render_performance_report(const std::vector<PerformanceReportRow>& rows);

struct AgreementReportRow {
    std::string dimension;
    double h1_h2 = 0.0;
    double llm_h = 0.0;
    std::string metric; // "kappa" or "r"
};

ReportOutput render_agreement_report(const std::vector<AgreementReportRow>& rows);

struct AblationCell {
    double halluc_rate_pct = 0.0;
    double consist_rate_pct = 0.0;
    double realism_mean = 0.0;
};

struct AblationReport {
    std::optional<AblationCell> no_controller;
    std::optional<AblationCell> prompt_only;
    std::optional<AblationCell> hybrid;
};

/// Columns fixed as "No Ctrl", "Prompt", "Ours"; missing configurations
/// render as "-".
ReportOutput render_ablation_report(const AblationReport& report);

} // namespace veripatient::eval
