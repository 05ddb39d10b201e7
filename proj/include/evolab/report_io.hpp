#pragma once

// CSV series and markdown reports.

#include "evolab/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace evolab {

inline constexpr const char* kToolVersion = "evolab 0.1.0";

/// Header row, one row per refinement, then one "slope_<norm>,value" row per
/// fitted norm. Numbers use 17 significant digits; NaN is written as "nan".
void write_csv(const RateReport& report, std::ostream& out);
void write_csv(const RateReport& report, const std::string& path);

struct CsvSeries {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> summary;
};

CsvSeries read_csv(std::istream& in);
CsvSeries read_csv(const std::string& path);

/// Markdown: version header, then per report the configuration echo, tables,
/// slopes or the oracle checklist, and acceptance verdicts.
void write_report(const std::vector<ExperimentReport>& reports, std::ostream& out);
void write_report(const std::vector<ExperimentReport>& reports, const std::string& path);

/// "%.17g"; non-finite values become "nan", "inf" or "-inf".
std::string format_real(double value);

}  // namespace evolab
