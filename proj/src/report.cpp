#include "veripatient/report.hpp"

#include <cstdio>
#include <stdexcept>

namespace veripatient::eval {

namespace {

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string signed_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.*f", decimals, value);
    return buf;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    std::string out = "|";
    for (const std::string& h : header) out += " " + h + " |";
    out += "\n|";
    for (size_t i = 0; i < header.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& row : rows) {
        out += "|";
        for (const std::string& cell : row) out += " " + cell + " |";
        out += "\n";
    }
    return out;
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    auto escape = [](const std::string& cell) {
        if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
        std::string quoted = "\"";
        for (char c : cell) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    };
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ",";
        out += escape(header[i]);
    }
    out += "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += escape(row[i]);
        }
        out += "\n";
    }
    return out;
}

ReportOutput make_output(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
    return {markdown_table(header, rows), csv_table(header, rows)};
}

} // namespace

ReportOutput render_performance_report(const std::vector<PerformanceReportRow>& rows) {
    const std::vector<std::string> header = {"Doctor", "Clean", "Noisy", "ΔAcc", "ΔTurns"};
    std::vector<std::vector<std::string>> cells;
    for (const PerformanceReportRow& row : rows) {
        const PerformanceMetrics& m = row.metrics;
        if (!m.delta_acc_points || !m.delta_turns_pct) {
            throw std::invalid_argument(
                "performance layout needs both clean and noisy outcomes for " + row.label);
        }
        cells.push_back({
            row.label,
            fixed(m.clean_accuracy_pct.value(), 1),
            fixed(m.noisy_accuracy_pct.value(), 1),
            signed_fixed(m.delta_acc_points.value(), 1),
            signed_fixed(m.delta_turns_pct.value(), 1) + "%",
        });
    }
    return make_output(header, cells);
}

ReportOutput render_agreement_report(const std::vector<AgreementReportRow>& rows) {
    const std::vector<std::string> header = {"Dimension", "H1-H2", "LLM-H", "Metric"};
    std::vector<std::vector<std::string>> cells;
    for (const AgreementReportRow& row : rows) {
        cells.push_back({
            row.dimension,
            fixed(row.h1_h2, 2),
            fixed(row.llm_h, 2),
            row.metric == "kappa" ? "κ" : "r",
        });
    }
    return make_output(header, cells);
}

ReportOutput render_ablation_report(const AblationReport& report) {
    const std::vector<std::string> header = {"Metric", "No Ctrl", "Prompt", "Ours"};
    auto cell = [](const std::optional<AblationCell>& column, int which) -> std::string {
        if (!column) return "-";
        switch (which) {
        case 0: return fixed(column->halluc_rate_pct, 1) + "%";
        case 1: return fixed(column->consist_rate_pct, 1) + "%";
        default: return fixed(column->realism_mean, 2);
        }
    };
    std::vector<std::vector<std::string>> cells;
    const std::vector<std::string> metric_names = {"Halluc. Rate", "Consist. Rate",
                                                   "Realism (1-5)"};
    for (int which = 0; which < 3; ++which) {
        cells.push_back({
            metric_names[static_cast<size_t>(which)],
            cell(report.no_controller, which),
            cell(report.prompt_only, which),
            cell(report.hybrid, which),
        });
    }
    return make_output(header, cells);
}

} // namespace veripatient::eval
