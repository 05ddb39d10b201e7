#include "evolab/config.hpp"

#include "evolab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace evolab {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view text)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        parts.push_back(trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                : comma - start)));
        if (comma == std::string_view::npos) {
            return parts;
        }
        start = comma + 1;
    }
}

const char* const kKeys[] = {"kind", "levels", "T", "t_query", "steps", "data",
                             "norms", "seed", "out_csv", "out_report"};

bool known_key(std::string_view key)
{
    for (const char* k : kKeys) {
        if (key == k) {
            return true;
        }
    }
    return false;
}

}  // namespace

ExperimentKind parse_kind(std::string_view text)
{
    text = trim(text);
    if (text == "elliptic") {
        return ExperimentKind::Elliptic;
    }
    if (text == "semidiscrete") {
        return ExperimentKind::Semidiscrete;
    }
    if (text == "fully-discrete") {
        return ExperimentKind::FullyDiscrete;
    }
    if (text == "oracle") {
        return ExperimentKind::Oracle;
    }
    throw DomainError("kind: expected elliptic, semidiscrete, fully-discrete or oracle, got '" +
                      std::string(text) + "'");
}

std::vector<int> parse_int_list(std::string_view text, const char* key)
{
    std::vector<int> values;
    for (std::string_view part : split_commas(text)) {
        int value = 0;
        const auto result = std::from_chars(part.data(), part.data() + part.size(), value);
        if (part.empty() || result.ec != std::errc() || result.ptr != part.data() + part.size()) {
            throw DomainError(std::string(key) + ": malformed integer '" + std::string(part) + "'");
        }
        values.push_back(value);
    }
    return values;
}

std::vector<ErrorNorm> parse_norms(std::string_view text)
{
    std::vector<ErrorNorm> norms;
    for (std::string_view part : split_commas(text)) {
        ErrorNorm norm;
        if (part == "l2") {
            norm = ErrorNorm::L2;
        } else if (part == "energy") {
            norm = ErrorNorm::Energy;
        } else if (part == "neg-half") {
            norm = ErrorNorm::NegHalf;
        } else {
            throw DomainError("norms: unknown norm '" + std::string(part) + "'");
        }
        if (std::find(norms.begin(), norms.end(), norm) == norms.end()) {
            norms.push_back(norm);
        }
    }
    return norms;
}

double parse_real(std::string_view text, const char* key)
{
    text = trim(text);
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size() ||
        !std::isfinite(value)) {
        throw DomainError(std::string(key) + ": malformed number '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_seed(std::string_view text)
{
    text = trim(text);
    std::uint64_t value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
        throw DomainError("seed: malformed integer '" + std::string(text) + "'");
    }
    return value;
}

std::vector<ConfigEntry> parse_config_entries(std::string_view text)
{
    std::vector<ConfigEntry> entries;
    int line_number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto newline = text.find('\n', start);
        std::string_view line =
            text.substr(start, newline == std::string_view::npos ? std::string_view::npos : newline - start);
        start = newline == std::string_view::npos ? text.size() + 1 : newline + 1;
        ++line_number;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto equals = line.find('=');
        if (equals == std::string_view::npos) {
            throw ParseError("expected 'key = value'", line_number);
        }
        ConfigEntry entry{std::string(trim(line.substr(0, equals))), std::string(trim(line.substr(equals + 1))),
                          line_number};
        if (!known_key(entry.key)) {
            throw ParseError("unknown key '" + entry.key + "'", line_number);
        }
        for (const auto& previous : entries) {
            if (previous.key == entry.key) {
                throw ParseError("duplicate key '" + entry.key + "' (first on line " +
                                     std::to_string(previous.line) + ")",
                                 line_number);
            }
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

ExperimentSpec spec_from_entries(const std::vector<ConfigEntry>& entries)
{
    ExperimentSpec spec;
    bool have_kind = false;
    std::map<std::string, int> lines;
    for (const auto& [key, value, line] : entries) {
        if (!known_key(key)) {
            throw ParseError("unknown key '" + key + "'", line);
        }
        lines[key] = line;
        try {
            if (key == "kind") {
                spec.kind = parse_kind(value);
                have_kind = true;
            } else if (key == "levels") {
                spec.levels = parse_int_list(value, "levels");
            } else if (key == "T") {
                spec.T = parse_real(value, "T");
            } else if (key == "t_query") {
                spec.t_query = parse_real(value, "t_query");
            } else if (key == "steps") {
                spec.steps = parse_int_list(value, "steps");
            } else if (key == "data") {
                spec.data = value;
            } else if (key == "norms") {
                spec.norms = parse_norms(value);
            } else if (key == "seed") {
                spec.seed = parse_seed(value);
            } else if (key == "out_csv") {
                spec.out_csv = value;
            } else if (key == "out_report") {
                spec.out_report = value;
            }
        } catch (const DomainError& e) {
            throw ParseError(e.what(), line);
        }
    }
    if (!have_kind) {
        throw ParseError("missing required key 'kind'", 0);
    }
    try {
        spec.validate();
    } catch (const DomainError& e) {
        // Attribute the violation to the line of the key it names, when present.
        const std::string message = e.what();
        const auto colon = message.find(':');
        int line = 0;
        if (colon != std::string::npos) {
            if (const auto it = lines.find(message.substr(0, colon)); it != lines.end()) {
                line = it->second;
            }
        }
        throw ParseError(message, line);
    }
    return spec;
}

ExperimentSpec parse_config(std::string_view text)
{
    return spec_from_entries(parse_config_entries(text));
}

ExperimentSpec parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_echo(const ExperimentSpec& spec)
{
    const auto join = [](const auto& values, auto format) {
        std::string out;
        for (std::size_t i = 0; i < values.size(); ++i) {
            out += (i ? "," : "") + format(values[i]);
        }
        return out;
    };
    const auto real = [](double v) {
        char buffer[32];
        std::snprintf(buffer, sizeof buffer, "%.17g", v);
        return std::string(buffer);
    };
    std::ostringstream out;
    out << "kind = " << to_string(spec.kind) << '\n';
    if (!spec.levels.empty()) {
        out << "levels = " << join(spec.levels, [](int v) { return std::to_string(v); }) << '\n';
    }
    out << "T = " << real(spec.T) << '\n';
    out << "t_query = " << real(spec.t_query) << '\n';
    if (!spec.steps.empty()) {
        out << "steps = " << join(spec.steps, [](int v) { return std::to_string(v); }) << '\n';
    }
    if (!spec.data.empty()) {
        out << "data = " << spec.data << '\n';
    }
    out << "norms = " << join(spec.norms, [](ErrorNorm n) { return to_string(n); }) << '\n';
    out << "seed = " << spec.seed << '\n';
    if (!spec.out_csv.empty()) {
        out << "out_csv = " << spec.out_csv << '\n';
    }
    if (!spec.out_report.empty()) {
        out << "out_report = " << spec.out_report << '\n';
    }
    return out.str();
}

}  // namespace evolab
