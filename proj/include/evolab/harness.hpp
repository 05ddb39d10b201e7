#pragma once

// Convergence experiments on the sphere and the operator-level oracle suite.
// Every experiment returns a report; nothing here touches the filesystem.

#include "evolab/sfem.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace evolab {

/// Zonal harmonic P_l(z), l in {0, 1, 2, 3}.
double zonal_profile(int degree, double z);
double zonal_profile_derivative(int degree, double z);

struct ZonalMode {
    int degree = 0;
    double coefficient = 1.0;
};

/// u(t) = sum_l c_l e^{-l(l+1) t} P_l(z): the heat flow generated by the
/// Laplace-Beltrami operator applied to a mixture of zonal harmonics.
class ExactSphereSolution {
public:
    explicit ExactSphereSolution(std::vector<ZonalMode> modes);

    /// "y<l>" terms joined by '+', e.g. "y1" or "y1+y3"; "mix" is y0+y1+y2+y3.
    static ExactSphereSolution parse(std::string_view descriptor);

    const std::vector<ZonalMode>& modes() const noexcept { return modes_; }

    double value(const Vec3& y, double t) const;
    Vec3 surface_gradient(const Vec3& y, double t) const;

    /// f with (1 - Laplace-Beltrami) u(0) = f: coefficients scaled by 1 + l(l+1).
    SurfaceFunction elliptic_source() const;

private:
    std::vector<ZonalMode> modes_;
};

/// x -> u(t)(x) with its surface gradient.
SurfaceFunction exact_solution(const ExactSphereSolution& solution, double t);

enum class ExperimentKind { Elliptic, Semidiscrete, FullyDiscrete, Oracle };
enum class ErrorNorm { L2, Energy, NegHalf };

std::string to_string(ExperimentKind kind);
std::string to_string(ErrorNorm norm);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Elliptic;
    std::vector<int> levels;
    double T = 1.0;
    double t_query = 0.5;
    std::vector<int> steps;
    std::string data;
    std::vector<ErrorNorm> norms{ErrorNorm::L2};
    std::uint64_t seed = 42;
    std::string out_csv;
    std::string out_report;

    /// Throws DomainError naming the offending field.
    void validate() const;
};

struct RateFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    /// max |pairwise slope - fitted slope| over consecutive used points
    double residual = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::size_t> excluded;  ///< points with nonpositive error
    std::size_t used = 0;

    bool valid() const { return used >= 2 && slope == slope; }
};

/// Least-squares slope of log(error) against log(scale). Needs at least three
/// points with positive scales; nonpositive errors are excluded and flagged.
RateFit fit_rate(std::span<const std::pair<double, double>> series);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RateRow {
    int refinement = 0;  ///< mesh level, or step count N
    double scale = 0.0;  ///< h, or dt
    double err_l2 = kNaN;
    double err_energy = kNaN;
    double err_neg_half = kNaN;
    std::string method;

    double error(ErrorNorm norm) const;
};

struct NormSlope {
    ErrorNorm norm = ErrorNorm::L2;
    RateFit fit;
    bool applicable = false;  ///< false when errors sit at solver precision
};

/// Labelled table of normalized errors, e.g. error / h^theta per level.
struct ConstantsTable {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> values;
};

struct RateReport {
    ExperimentSpec spec;
    std::vector<RateRow> rows;
    std::vector<NormSlope> slopes;
    std::vector<ConstantsTable> tables;
    std::vector<std::string> notes;

    const NormSlope* slope(ErrorNorm norm) const;
};

struct OracleCheck {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;  ///< threshold or reference value the check compares against
    bool passed = false;
    std::string detail;
};

struct OracleReport {
    std::uint64_t seed = 0;
    std::vector<OracleCheck> checks;
    std::vector<ConstantsTable> tables;

    bool all_passed() const;
};

using ExperimentReport = std::variant<RateReport, OracleReport>;

/// Errors of one norm below this are treated as exact reproduction.
inline constexpr double kExactReproduction = 1e-8;

/// Meshes with at most this many dofs use the full eigen-expansion of the pencil
/// as the exact semidiscrete solution (icosphere levels 0..3).
inline constexpr Index kExactEigenDofs = 1000;

/// Upper bound on the over-resolved time stepping used above kExactEigenDofs.
inline constexpr int kMaxReferenceSteps = 50000;

RateReport run_elliptic(const ExperimentSpec& spec);
RateReport run_semidiscrete(const ExperimentSpec& spec);
RateReport run_fully_discrete(const ExperimentSpec& spec);
OracleReport run_oracle_suite(const ExperimentSpec& spec);

/// Semidiscrete error at several times on the first level of `spec`: rows carry
/// the time in `scale`, the table tracks error * t / h^2.
RateReport run_time_smoothing(const ExperimentSpec& spec, std::span<const double> times);

ExperimentReport run_experiment(const ExperimentSpec& spec);

/// sup over n = 1..N and the lambda grid of |F_n(lambda dt)| s^a n^b, s = lambda dt.
/// With a = -rho/2 and b = a + theta/2 this is the normalized defect of the
/// negative-rho fully discrete estimate.
double weighted_defect_sup(const TimeGrid& grid, std::span<const double> lambdas,
                           double lambda_power, double step_power);

/// Grid used by the time-defect witnesses: lambda in [1e-3, 1e3], 512 points per
/// decade, with T = 1 and N = 1024.
std::vector<double> defect_lambda_grid();
TimeGrid defect_time_grid();

/// Frozen sweeps over those grids: sup |F_n| t_n / dt and sup |F_n| sqrt(lambda t_n).
inline constexpr double kInverseTimeDefectSup = 0.27058226826031273;
inline constexpr double kHalfPowerDefectSup = 0.15950689883271951;

/// Threshold verdicts used by `--check` and the markdown report.
struct ThresholdCheck {
    std::string name;
    double value = kNaN;
    double lo = kNaN;
    double hi = kNaN;
    bool passed = false;
};

std::vector<ThresholdCheck> acceptance_checks(const ExperimentReport& report);

/// Worker count from EVOLAB_THREADS, else the hardware concurrency.
unsigned harness_threads();

}  // namespace evolab
