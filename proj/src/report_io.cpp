#include "evolab/report_io.hpp"

#include "evolab/config.hpp"
#include "evolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace evolab {

std::string format_real(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

namespace {

bool has_neg_half_column(const RateReport& report)
{
    return report.spec.kind != ExperimentKind::FullyDiscrete &&
           std::find(report.spec.norms.begin(), report.spec.norms.end(), ErrorNorm::NegHalf) !=
               report.spec.norms.end();
}

double parse_field(const std::string& field, int line)
{
    if (field == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (field == "inf" || field == "-inf") {
        return field[0] == '-' ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
    }
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
        throw ParseError("malformed CSV number '" + field + "'", line);
    }
    return value;
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> fields;
    std::istringstream in(line);
    for (std::string field; std::getline(in, field, ',');) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    writer(out);
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path);
    }
}

std::string escape_cell(const std::string& text)
{
    std::string escaped;
    for (char c : text) {
        if (c == '|') {
            escaped += '\\';
        }
        escaped += c;
    }
    return escaped;
}

void write_table(const ConstantsTable& table, std::ostream& out)
{
    out << "\n**" << table.title << "**\n\n|  |";
    for (const auto& column : table.columns) {
        out << ' ' << escape_cell(column) << " |";
    }
    out << "\n|---|";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << "---|";
    }
    out << '\n';
    for (std::size_t r = 0; r < table.values.size(); ++r) {
        out << "| " << escape_cell(table.row_labels[r]) << " |";
        for (double value : table.values[r]) {
            out << ' ' << format_real(value) << " |";
        }
        out << '\n';
    }
}

void write_verdicts(const ExperimentReport& report, std::ostream& out)
{
    out << "\n### Acceptance\n\n";
    for (const auto& check : acceptance_checks(report)) {
        out << "- [" << (check.passed ? 'x' : ' ') << "] " << (check.passed ? "PASS " : "FAIL ") << check.name
            << ": " << format_real(check.value);
        if (!std::isnan(check.lo) || !std::isnan(check.hi)) {
            out << " (accepted range [" << format_real(check.lo) << ", " << format_real(check.hi) << "])";
        }
        out << '\n';
    }
}

void write_rate_report(const RateReport& report, std::ostream& out)
{
    const bool time_rows = report.spec.kind == ExperimentKind::FullyDiscrete;
    out << "\n## " << to_string(report.spec.kind) << " experiment\n\n";
    out << "Seed: " << report.spec.seed << "\n\n```\n" << config_echo(report.spec) << "```\n\n";
    const bool neg_half = has_neg_half_column(report);
    if (time_rows) {
        out << "| n_steps | dt | err_l2 | method |\n|---|---|---|---|\n";
    } else {
        out << "| level | h | err_l2 | err_energy |" << (neg_half ? " err_neg_half |" : "")
            << " method |\n|---|---|---|---|" << (neg_half ? "---|" : "") << "---|\n";
    }
    for (const auto& row : report.rows) {
        out << "| " << row.refinement << " | " << format_real(row.scale) << " | " << format_real(row.err_l2)
            << " |";
        if (!time_rows) {
            out << ' ' << format_real(row.err_energy) << " |";
            if (neg_half) {
                out << ' ' << format_real(row.err_neg_half) << " |";
            }
        }
        out << ' ' << row.method << " |\n";
    }
    for (const auto& slope : report.slopes) {
        out << "| slope_" << to_string(slope.norm) << " | " << format_real(slope.fit.slope) << " | residual "
            << format_real(slope.fit.residual) << " |" << (slope.applicable ? "" : " not applicable |") << '\n';
    }
    for (const auto& table : report.tables) {
        write_table(table, out);
    }
    if (!report.notes.empty()) {
        out << "\n### Notes\n\n";
        for (const auto& note : report.notes) {
            out << "- " << note << '\n';
        }
    }
    write_verdicts(report, out);
}

void write_oracle_report(const OracleReport& report, std::ostream& out)
{
    out << "\n## oracle suite\n\nSeed: " << report.seed << "\n\n### Checklist\n\n";
    for (const auto& check : report.checks) {
        out << "- [" << (check.passed ? 'x' : ' ') << "] " << (check.passed ? "PASS " : "FAIL ") << check.name
            << ": measured " << format_real(check.measured) << ", reference " << format_real(check.bound);
        if (!check.detail.empty()) {
            out << " (" << check.detail << ')';
        }
        out << '\n';
    }
    for (const auto& table : report.tables) {
        write_table(table, out);
    }
    out << "\nOverall: " << (report.all_passed() ? "PASS" : "FAIL") << '\n';
}

}  // namespace

void write_csv(const RateReport& report, std::ostream& out)
{
    if (report.rows.empty()) {
        throw DomainError("write_csv: report has no rows");
    }
    const bool neg_half = has_neg_half_column(report);
    if (report.spec.kind == ExperimentKind::FullyDiscrete) {
        out << "n_steps,dt,err_l2\n";
    } else {
        out << "level,h,err_l2,err_energy" << (neg_half ? ",err_neg_half" : "") << '\n';
    }
    for (const auto& row : report.rows) {
        out << row.refinement << ',' << format_real(row.scale) << ',' << format_real(row.err_l2);
        if (report.spec.kind != ExperimentKind::FullyDiscrete) {
            out << ',' << format_real(row.err_energy);
            if (neg_half) {
                out << ',' << format_real(row.err_neg_half);
            }
        }
        out << '\n';
    }
    for (const auto& slope : report.slopes) {
        out << "slope_" << to_string(slope.norm) << ',' << format_real(slope.fit.slope) << '\n';
    }
    if (!out) {
        throw IoError("write_csv: stream failure");
    }
}

void write_csv(const RateReport& report, const std::string& path)
{
    if (report.rows.empty()) {
        throw DomainError("write_csv: report has no rows");
    }
    write_file(path, [&](std::ostream& out) { write_csv(report, out); });
}

CsvSeries read_csv(std::istream& in)
{
    CsvSeries series;
    int line_number = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (series.header.empty()) {
            series.header = fields;
            continue;
        }
        if (fields.front().rfind("slope_", 0) == 0) {
            if (fields.size() != 2) {
                throw ParseError("summary row needs 2 fields", line_number);
            }
            series.summary.emplace_back(fields[0], parse_field(fields[1], line_number));
            continue;
        }
        if (fields.size() != series.header.size()) {
            throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(series.header.size()),
                             line_number);
        }
        std::vector<double> row;
        for (const auto& field : fields) {
            row.push_back(parse_field(field, line_number));
        }
        series.rows.push_back(std::move(row));
    }
    if (series.header.empty()) {
        throw ParseError("empty CSV", 0);
    }
    return series;
}

CsvSeries read_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return read_csv(in);
}

void write_report(const std::vector<ExperimentReport>& reports, std::ostream& out)
{
    if (reports.empty()) {
        throw DomainError("write_report: at least one report required");
    }
    out << "# Convergence report\n\nTool: " << kToolVersion << '\n';
    for (const auto& report : reports) {
        if (const auto* rates = std::get_if<RateReport>(&report)) {
            write_rate_report(*rates, out);
        } else {
            write_oracle_report(std::get<OracleReport>(report), out);
        }
    }
    if (!out) {
        throw IoError("write_report: stream failure");
    }
}

void write_report(const std::vector<ExperimentReport>& reports, const std::string& path)
{
    if (reports.empty()) {
        throw DomainError("write_report: at least one report required");
    }
    write_file(path, [&](std::ostream& out) { write_report(reports, out); });
}

}  // namespace evolab
