#include "evolab/cli.hpp"

#include "evolab/config.hpp"
#include "evolab/errors.hpp"
#include "evolab/harness.hpp"
#include "evolab/report_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

namespace evolab {

namespace {

// Inline flags that mirror configuration keys; unset flags leave the config alone.
struct ExperimentFlags {
    std::string config;
    std::optional<std::string> levels;
    std::optional<std::string> data;
    std::optional<std::string> T;
    std::optional<std::string> t_query;
    std::optional<std::string> steps;
    std::optional<std::string> norms;
    std::optional<std::string> seed;
    std::optional<std::string> out_csv;
    std::optional<std::string> out_report;
    bool check = false;
};

void add_experiment_flags(CLI::App& command, ExperimentFlags& flags, bool spatial)
{
    command.add_option("--config", flags.config, "key = value configuration file");
    if (spatial) {
        command.add_option("--levels", flags.levels, "comma-separated mesh levels");
        command.add_option("--data", flags.data, "initial data, e.g. y1, y1+y3, mix");
        command.add_option("--T", flags.T, "final time");
        command.add_option("--t-query", flags.t_query, "evaluation time");
        command.add_option("--steps", flags.steps, "comma-separated step counts");
        command.add_option("--norms", flags.norms, "subset of l2,energy,neg-half");
        command.add_option("--out-csv", flags.out_csv, "CSV output path");
    }
    command.add_option("--seed", flags.seed, "random seed");
    command.add_option("--out-report", flags.out_report, "markdown report path");
    command.add_flag("--check", flags.check, "exit 2 when acceptance thresholds fail");
}

ExperimentSpec resolve_spec(ExperimentKind kind, const ExperimentFlags& flags)
{
    std::vector<ConfigEntry> entries;
    if (!flags.config.empty()) {
        std::ifstream in(flags.config);
        if (!in) {
            throw IoError("cannot open config " + flags.config);
        }
        std::ostringstream text;
        text << in.rdbuf();
        entries = parse_config_entries(text.str());
    }
    const auto set = [&entries](const std::string& key, const std::string& value) {
        const auto it = std::find_if(entries.begin(), entries.end(),
                                     [&key](const ConfigEntry& e) { return e.key == key; });
        if (it != entries.end()) {
            it->value = value;
            it->line = 0;
        } else {
            entries.push_back({key, value, 0});
        }
    };
    const auto kind_entry = std::find_if(entries.begin(), entries.end(),
                                         [](const ConfigEntry& e) { return e.key == "kind"; });
    if (kind_entry != entries.end()) {
        ExperimentKind configured;
        try {
            configured = parse_kind(kind_entry->value);
        } catch (const DomainError& e) {
            throw ParseError(e.what(), kind_entry->line);
        }
        if (configured != kind) {
            throw ParseError("kind: config declares " + to_string(configured) + " but the subcommand is " +
                                 to_string(kind),
                             kind_entry->line);
        }
    }
    set("kind", to_string(kind));
    const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
        {"levels", &flags.levels}, {"data", &flags.data},       {"T", &flags.T},
        {"t_query", &flags.t_query}, {"steps", &flags.steps},   {"norms", &flags.norms},
        {"seed", &flags.seed},     {"out_csv", &flags.out_csv}, {"out_report", &flags.out_report},
    };
    for (const auto& [key, value] : overrides) {
        if (value->has_value()) {
            set(key, **value);
        }
    }
    return spec_from_entries(entries);
}

void print_summary(const ExperimentReport& report, std::ostream& out)
{
    if (const auto* rates = std::get_if<RateReport>(&report)) {
        const bool time_rows = rates->spec.kind == ExperimentKind::FullyDiscrete;
        out << (time_rows ? "n_steps  dt  err_l2" : "level  h  err_l2  err_energy") << '\n';
        for (const auto& row : rates->rows) {
            out << row.refinement << "  " << format_real(row.scale) << "  " << format_real(row.err_l2);
            if (!time_rows) {
                out << "  " << format_real(row.err_energy);
            }
            out << "  [" << row.method << "]\n";
        }
        for (const auto& slope : rates->slopes) {
            out << "slope_" << to_string(slope.norm) << " = " << format_real(slope.fit.slope)
                << (slope.applicable ? "" : " (not applicable)") << '\n';
        }
        for (const auto& note : rates->notes) {
            out << "note: " << note << '\n';
        }
    } else {
        const auto& oracle = std::get<OracleReport>(report);
        for (const auto& check : oracle.checks) {
            out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << format_real(check.measured)
                << '\n';
        }
    }
}

bool thresholds_pass(const ExperimentReport& report, std::ostream& err)
{
    bool passed = true;
    for (const auto& check : acceptance_checks(report)) {
        if (!check.passed) {
            err << "threshold failed: " << check.name << " = " << format_real(check.value) << '\n';
            passed = false;
        }
    }
    return passed;
}

int run_experiment_command(ExperimentKind kind, const ExperimentFlags& flags, std::ostream& out,
                           std::ostream& err)
{
    const ExperimentSpec spec = resolve_spec(kind, flags);
    const ExperimentReport report = run_experiment(spec);
    print_summary(report, out);
    if (const auto* rates = std::get_if<RateReport>(&report); rates && !spec.out_csv.empty()) {
        write_csv(*rates, spec.out_csv);
    }
    if (!spec.out_report.empty()) {
        write_report({report}, spec.out_report);
    }
    if (flags.check && !thresholds_pass(report, err)) {
        return kExitThreshold;
    }
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{std::string(kToolVersion) + ": surface FEM and backward Euler convergence studies", "evolab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    int mesh_level = 0;
    std::string mesh_out;
    auto* mesh = app.add_subcommand("mesh", "write an icosphere as OFF");
    mesh->add_option("--level", mesh_level, "refinement level")->required();
    mesh->add_option("--out", mesh_out, "output path")->required();

    const std::pair<const char*, ExperimentKind> kinds[] = {
        {"elliptic", ExperimentKind::Elliptic},
        {"semidiscrete", ExperimentKind::Semidiscrete},
        {"fully-discrete", ExperimentKind::FullyDiscrete},
        {"oracle", ExperimentKind::Oracle},
    };
    std::vector<ExperimentFlags> flags(std::size(kinds));
    std::vector<CLI::App*> experiment_commands;
    for (std::size_t i = 0; i < std::size(kinds); ++i) {
        auto* command = app.add_subcommand(kinds[i].first, "run the " + std::string(kinds[i].first) + " experiment");
        add_experiment_flags(*command, flags[i], kinds[i].second != ExperimentKind::Oracle);
        experiment_commands.push_back(command);
    }

    std::vector<std::string> report_configs;
    std::string report_out;
    bool report_check = false;
    auto* report = app.add_subcommand("report", "run several configurations into one markdown report");
    report->add_option("--config", report_configs, "configuration files, run in order")->required();
    report->add_option("--out", report_out, "markdown output path")->required();
    report->add_flag("--check", report_check, "exit 2 when acceptance thresholds fail");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return kExitError;
    }

    try {
        if (mesh->parsed()) {
            const TriangulatedSurface surface = build_icosphere(mesh_level);
            write_off(surface, mesh_out);
            out << "wrote " << mesh_out << ": " << surface.vertex_count() << " vertices, "
                << surface.triangle_count() << " triangles\n";
            return kExitOk;
        }
        for (std::size_t i = 0; i < experiment_commands.size(); ++i) {
            if (experiment_commands[i]->parsed()) {
                return run_experiment_command(kinds[i].second, flags[i], out, err);
            }
        }
        // report: validate every configuration before running any of them.
        std::vector<ExperimentSpec> specs;
        for (const auto& path : report_configs) {
            try {
                specs.push_back(parse_config_file(path));
            } catch (const ParseError& e) {
                throw ParseError(path + ": " + e.what(), 0);
            }
        }
        std::vector<ExperimentReport> reports;
        bool passed = true;
        for (const auto& spec : specs) {
            reports.push_back(run_experiment(spec));
            print_summary(reports.back(), out);
            passed = thresholds_pass(reports.back(), err) && passed;
        }
        write_report(reports, report_out);
        return report_check && !passed ? kExitThreshold : kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace evolab
