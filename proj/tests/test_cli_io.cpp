#include "evolab/cli.hpp"
#include "evolab/config.hpp"
#include "evolab/errors.hpp"
#include "evolab/report_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace evolab;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
    {
        path_ = fs::temp_directory_path() / ("evolab_test_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
    static inline int counter_ = 0;
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void spit(const std::string& path, const std::string& text)
{
    std::ofstream(path) << text;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

RateReport handmade_report()
{
    RateReport report;
    report.spec.kind = ExperimentKind::Elliptic;
    report.spec.levels = {1, 2, 3};
    report.spec.data = "y1";
    report.spec.norms = {ErrorNorm::L2, ErrorNorm::Energy};
    const double h[] = {0.5, 0.25, 0.125};
    for (int i = 0; i < 3; ++i) {
        RateRow row;
        row.refinement = i + 1;
        row.scale = h[i];
        row.err_l2 = h[i] * h[i];
        row.err_energy = h[i];
        report.rows.push_back(row);
    }
    report.slopes.push_back({ErrorNorm::L2, RateFit{2.0, 0.0, 0.0, {}, 3}, true});
    report.slopes.push_back({ErrorNorm::Energy, RateFit{1.0, 0.0, 0.0, {}, 3}, true});
    return report;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndDefaults)
{
    const ExperimentSpec spec = parse_config("# study\nkind = elliptic\nlevels = 1, 2,3\n\ndata = y1+y3  # two modes\n");
    EXPECT_EQ(spec.kind, ExperimentKind::Elliptic);
    EXPECT_EQ(spec.levels, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(spec.data, "y1+y3");
    EXPECT_EQ(spec.T, 1.0);
    EXPECT_EQ(spec.t_query, 0.5);
    EXPECT_EQ(spec.seed, 42u);
    EXPECT_EQ(spec.norms, (std::vector<ErrorNorm>{ErrorNorm::L2}));

    const ExperimentSpec full =
        parse_config("kind = fully-discrete\nlevels = 2\nsteps = 4,8,16\ndata = mix\nT = 2\nt_query = 1.5\n");
    EXPECT_EQ(full.steps, (std::vector<int>{4, 8, 16}));
    EXPECT_EQ(full.T, 2.0);
    EXPECT_EQ(full.t_query, 1.5);
    EXPECT_EQ(parse_config("kind = oracle\nseed = 7\n").seed, 7u);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    const auto line_of = [](const char* text) {
        try {
            parse_config(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("levels = 1,2,3\ndata = y1\n"), 0);                   // missing kind
    EXPECT_EQ(line_of("kind = elliptic\ndata = y1\nlevels = 3,1\n"), 3);    // descending levels
    EXPECT_EQ(line_of("kind = elliptic\n\nspeed = 4\n"), 3);                // unknown key
    EXPECT_EQ(line_of("kind = elliptic\nkind = oracle\n"), 2);              // duplicate key
    EXPECT_EQ(line_of("kind = elliptic\nlevels 1\n"), 2);                   // no '='
    EXPECT_EQ(line_of("kind = elliptic\nlevels = 1\ndata = y1\nT = -1\n"), 4);
    EXPECT_EQ(line_of("kind = sideways\n"), 1);
    EXPECT_EQ(line_of("kind = elliptic\nlevels = 1,x\ndata = y1\n"), 2);
    try {
        parse_config("kind = elliptic\nlevels = 3,1\ndata = y1\n");
    } catch (const ParseError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("line 2: ", 0), 0u) << e.what();
    }
    EXPECT_THROW(parse_config_file("/nonexistent/evolab.cfg"), IoError);
}

TEST(Config, ValueParsers)
{
    EXPECT_EQ(parse_norms("l2, energy,neg-half"),
              (std::vector<ErrorNorm>{ErrorNorm::L2, ErrorNorm::Energy, ErrorNorm::NegHalf}));
    EXPECT_THROW(parse_norms("h1"), DomainError);
    EXPECT_THROW(parse_int_list("", "levels"), DomainError);
    EXPECT_DOUBLE_EQ(parse_real("1e-2", "T"), 0.01);
    EXPECT_THROW(parse_real("0.5s", "T"), DomainError);
    EXPECT_EQ(parse_seed("18446744073709551615"), 18446744073709551615ULL);
    EXPECT_THROW(parse_seed("-1"), DomainError);
}

TEST(Config, EchoRoundTrips)
{
    const ExperimentSpec spec =
        parse_config("kind = semidiscrete\nlevels = 1,2\ndata = mix\nnorms = l2,neg-half\nt_query = 0.25\n");
    const ExperimentSpec again = parse_config(config_echo(spec));
    EXPECT_EQ(again.kind, spec.kind);
    EXPECT_EQ(again.levels, spec.levels);
    EXPECT_EQ(again.data, spec.data);
    EXPECT_EQ(again.norms, spec.norms);
    EXPECT_EQ(again.t_query, spec.t_query);
}

TEST(Csv, ExactBytesForKnownReport)
{
    std::ostringstream out;
    write_csv(handmade_report(), out);
    EXPECT_EQ(out.str(),
              "level,h,err_l2,err_energy\n"
              "1,0.5,0.25,0.5\n"
              "2,0.25,0.0625,0.25\n"
              "3,0.125,0.015625,0.125\n"
              "slope_l2,2\n"
              "slope_energy,1\n");
    EXPECT_EQ(format_real(kNaN), "nan");
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
}

TEST(Csv, ExperimentOutputIsStableAndRoundTrips)
{
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Elliptic;
    spec.levels = {1, 2, 3};
    spec.data = "y1";
    const RateReport report = run_elliptic(spec);
    std::ostringstream first;
    std::ostringstream second;
    write_csv(report, first);
    write_csv(run_elliptic(spec), second);
    EXPECT_EQ(first.str(), second.str());

    std::istringstream in(first.str());
    const CsvSeries series = read_csv(in);
    ASSERT_EQ(series.rows.size(), 3u);
    ASSERT_EQ(series.summary.size(), 2u);
    EXPECT_EQ(series.header.size(), 4u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(series.rows[i][1], report.rows[i].scale);
        EXPECT_EQ(series.rows[i][2], report.rows[i].err_l2);
        EXPECT_EQ(series.rows[i][3], report.rows[i].err_energy);
    }
    EXPECT_EQ(series.summary[0].first, "slope_l2");
    EXPECT_EQ(series.summary[0].second, report.slope(ErrorNorm::L2)->fit.slope);
}

TEST(Csv, EmptyReportsAndMalformedInput)
{
    EXPECT_THROW(write_csv(RateReport{}, std::cout), DomainError);
    std::istringstream ragged("level,h,err_l2,err_energy\n1,0.5,0.25\n");
    EXPECT_THROW(read_csv(ragged), Error);
    EXPECT_THROW(write_csv(handmade_report(), std::string("/nonexistent/dir/out.csv")), IoError);
}

TEST(Report, ContainsVersionSlopesAndChecklist)
{
    ExperimentSpec oracle_spec;
    oracle_spec.kind = ExperimentKind::Oracle;
    oracle_spec.seed = 7;
    std::ostringstream out;
    write_report({ExperimentReport(handmade_report()), ExperimentReport(run_oracle_suite(oracle_spec))}, out);
    const std::string text = out.str();
    EXPECT_NE(text.find(kToolVersion), std::string::npos);
    EXPECT_NE(text.find("Seed: 42"), std::string::npos);
    EXPECT_NE(text.find("kind = elliptic"), std::string::npos);
    EXPECT_NE(text.find("### Acceptance"), std::string::npos);
    EXPECT_NE(text.find("Seed: 7"), std::string::npos);
    EXPECT_NE(text.find("Overall: PASS"), std::string::npos);
    EXPECT_EQ(text.find("FAIL"), std::string::npos);
    EXPECT_THROW(write_report({}, out), DomainError);
}

TEST(Cli, MeshWritesOff)
{
    TempDir dir;
    const auto result = run_cli({"mesh", "--level", "1", "--out", dir.file("m.off")});
    EXPECT_EQ(result.code, kExitOk);
    EXPECT_NE(result.out.find("42 vertices"), std::string::npos);
    EXPECT_EQ(read_off(dir.file("m.off")).vertex_count(), 42u);
}

TEST(Cli, EllipticCheckPassesAndWritesOutputs)
{
    TempDir dir;
    const auto result = run_cli({"elliptic", "--levels", "1,2,3", "--data", "y1", "--check", "--out-csv",
                                 dir.file("e.csv"), "--out-report", dir.file("e.md")});
    EXPECT_EQ(result.code, kExitOk) << result.err;
    EXPECT_NE(result.out.find("slope_l2"), std::string::npos);
    EXPECT_EQ(read_csv(dir.file("e.csv")).rows.size(), 3u);
    EXPECT_NE(slurp(dir.file("e.md")).find("### Acceptance"), std::string::npos);
}

TEST(Cli, ConfigFileWithInlineOverride)
{
    TempDir dir;
    spit(dir.file("c.cfg"), "kind = elliptic\nlevels = 1,2,3\ndata = y0\n");
    auto result = run_cli({"elliptic", "--config", dir.file("c.cfg"), "--data", "y1", "--out-csv", dir.file("o.csv")});
    EXPECT_EQ(result.code, kExitOk) << result.err;
    EXPECT_GT(read_csv(dir.file("o.csv")).rows[0][2], kExactReproduction);
    result = run_cli({"semidiscrete", "--config", dir.file("c.cfg")});
    EXPECT_EQ(result.code, kExitError);
    EXPECT_NE(result.err.find("line 1"), std::string::npos) << result.err;
}

TEST(Cli, ThresholdFailureExitsTwo)
{
    // Two levels give no slope, which the check treats as a failure.
    const auto result = run_cli({"elliptic", "--levels", "1,2", "--data", "y1", "--check"});
    EXPECT_EQ(result.code, kExitThreshold);
    EXPECT_NE(result.err.find("threshold failed"), std::string::npos);
    EXPECT_EQ(run_cli({"elliptic", "--levels", "1,2", "--data", "y1"}).code, kExitOk);
}

TEST(Cli, OracleIsDeterministic)
{
    TempDir dir;
    const auto first = run_cli({"oracle", "--seed", "7", "--out-report", dir.file("a.md"), "--check"});
    const auto second = run_cli({"oracle", "--seed", "7", "--out-report", dir.file("b.md")});
    EXPECT_EQ(first.code, kExitOk) << first.err;
    EXPECT_EQ(first.out, second.out);
    EXPECT_EQ(slurp(dir.file("a.md")), slurp(dir.file("b.md")));
}

TEST(Cli, ReportSubcommandRunsConfigsInOrder)
{
    TempDir dir;
    spit(dir.file("a.cfg"), "kind = elliptic\nlevels = 1,2,3\ndata = y1\n");
    spit(dir.file("b.cfg"), "kind = fully-discrete\nlevels = 1\nsteps = 4,8,16\ndata = y1\n");
    const auto result =
        run_cli({"report", "--config", dir.file("a.cfg"), "--config", dir.file("b.cfg"), "--out", dir.file("r.md")});
    EXPECT_EQ(result.code, kExitOk) << result.err;
    const std::string text = slurp(dir.file("r.md"));
    EXPECT_LT(text.find("elliptic"), text.find("fully-discrete"));
    spit(dir.file("bad.cfg"), "kind = elliptic\nlevels = 1\n");
    const auto bad = run_cli({"report", "--config", dir.file("bad.cfg"), "--out", dir.file("x.md")});
    EXPECT_EQ(bad.code, kExitError);
    EXPECT_NE(bad.err.find("bad.cfg"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir.file("x.md")));
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run_cli({}).code, kExitError);
    EXPECT_EQ(run_cli({"warp"}).code, kExitError);
    EXPECT_EQ(run_cli({"elliptic", "--bogus"}).code, kExitError);
    EXPECT_EQ(run_cli({"mesh", "--level", "1"}).code, kExitError);
    EXPECT_EQ(run_cli({"elliptic", "--levels", "1,2,3"}).code, kExitError);  // no data
    EXPECT_EQ(run_cli({"mesh", "--level", "9", "--out", "/tmp/never.off"}).code, kExitError);
    const auto version = run_cli({"--version"});
    EXPECT_EQ(version.code, kExitOk);
    EXPECT_NE(version.out.find(kToolVersion), std::string::npos);
}

TEST(Cli, InstalledBinaryExitCodes)
{
    const std::string binary = EVOLAB_CLI_PATH;
    const auto status = [&](const std::string& args) {
        const int raw = std::system((binary + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("elliptic --levels 1,2,3 --data y1 --check"), kExitOk);
    EXPECT_EQ(status("elliptic --levels 1,2 --data y1 --check"), kExitThreshold);
    EXPECT_EQ(status("nonsense"), kExitError);
}
