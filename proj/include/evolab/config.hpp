#pragma once

// Flat "key = value" experiment configuration.

#include "evolab/harness.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace evolab {

/// Parses and validates a configuration document. Keys: kind, levels, T,
/// t_query, steps, data, norms, seed, out_csv, out_report; '#' starts a comment.
/// Throws ParseError carrying the offending line (0 for missing keys and
/// cross-field violations).
ExperimentSpec parse_config(std::string_view text);

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;  ///< 0 for entries that did not come from a file
};

/// Syntax pass only: comments, "key = value" shape, unknown and duplicate keys.
std::vector<ConfigEntry> parse_config_entries(std::string_view text);

/// Applies entries over the defaults and validates the result.
ExperimentSpec spec_from_entries(const std::vector<ConfigEntry>& entries);
ExperimentSpec parse_config_file(const std::string& path);

/// Single-value parsers shared with the command line; throw DomainError.
ExperimentKind parse_kind(std::string_view text);
std::vector<int> parse_int_list(std::string_view text, const char* key);
std::vector<ErrorNorm> parse_norms(std::string_view text);
double parse_real(std::string_view text, const char* key);
std::uint64_t parse_seed(std::string_view text);

/// key = value lines that reproduce `spec` through parse_config.
std::string config_echo(const ExperimentSpec& spec);

}  // namespace evolab
