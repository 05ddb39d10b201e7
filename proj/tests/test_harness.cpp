#include "evolab/errors.hpp"
#include "evolab/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

using namespace evolab;

namespace {

ExperimentSpec rate_spec(ExperimentKind kind, std::vector<int> levels, const char* data)
{
    ExperimentSpec spec;
    spec.kind = kind;
    spec.levels = std::move(levels);
    spec.data = data;
    spec.norms = {ErrorNorm::L2, ErrorNorm::Energy};
    return spec;
}

}  // namespace

TEST(ExactSolution, ZonalModesDecayAtTheirEigenvalues)
{
    const auto y1 = ExactSphereSolution::parse("y1");
    const Vec3 point = Vec3(0.3, -0.4, std::sqrt(0.75)).normalized();
    EXPECT_NEAR(y1.value(point, 0.5), std::exp(-1.0) * point.z(), 1e-16);
    const auto mix = ExactSphereSolution::parse("mix");
    EXPECT_DOUBLE_EQ(mix.value(Vec3::UnitZ(), 0.0), 4.0);
    const double t = 0.1;
    const double expected = 1.0 + std::exp(-2.0 * t) + std::exp(-6.0 * t) + std::exp(-12.0 * t);
    EXPECT_NEAR(mix.value(Vec3::UnitZ(), t), expected, 1e-15);
    EXPECT_NEAR(exact_solution(mix, t).value(Vec3::UnitZ()), expected, 1e-15);
}

TEST(ExactSolution, GradientMatchesGreatCircleDifference)
{
    const auto solution = ExactSphereSolution::parse("0.5*y2 + y3");
    const Vec3 y = Vec3(0.2, 0.6, -0.5).normalized();
    const Vec3 direction = (Vec3(1.0, -0.3, 0.8) - Vec3(1.0, -0.3, 0.8).dot(y) * y).normalized();
    const double eps = 1e-6;
    const auto along = [&](double s) { return solution.value(std::cos(s) * y + std::sin(s) * direction, 0.2); };
    const double derivative = (along(eps) - along(-eps)) / (2.0 * eps);
    EXPECT_NEAR(solution.surface_gradient(y, 0.2).dot(direction), derivative, 1e-8);
    EXPECT_NEAR(solution.surface_gradient(y, 0.2).dot(y), 0.0, 1e-15);
}

TEST(ExactSolution, EllipticSourceScalesByOnePlusEigenvalue)
{
    const auto solution = ExactSphereSolution::parse("y2");
    const Vec3 y = Vec3(0.1, 0.2, 0.9).normalized();
    EXPECT_NEAR(solution.elliptic_source().value(y), 7.0 * zonal_profile(2, y.z()), 1e-15);
}

TEST(ExactSolution, ParseErrors)
{
    EXPECT_EQ(ExactSphereSolution::parse(" y0 + 2*y3 ").modes().size(), 2u);
    EXPECT_DOUBLE_EQ(ExactSphereSolution::parse("2*y3").modes()[0].coefficient, 2.0);
    EXPECT_THROW(ExactSphereSolution::parse("y4"), DomainError);
    EXPECT_THROW(ExactSphereSolution::parse("x*y1"), DomainError);
    EXPECT_THROW(ExactSphereSolution::parse("y1+"), DomainError);
    EXPECT_THROW(ExactSphereSolution::parse(""), DomainError);
    EXPECT_THROW(zonal_profile(4, 0.0), DomainError);
    EXPECT_THROW(exact_solution(ExactSphereSolution::parse("y1"), -1.0), DomainError);
}

TEST(FitRate, ExactPowerLaws)
{
    std::vector<std::pair<double, double>> quadratic;
    std::vector<std::pair<double, double>> linear;
    for (double h : {0.4, 0.2, 0.1, 0.05}) {
        quadratic.emplace_back(h, 3.0 * h * h);
        linear.emplace_back(h, 5.0 * h);
    }
    const RateFit q = fit_rate(quadratic);
    EXPECT_NEAR(q.slope, 2.0, 1e-12);
    EXPECT_NEAR(q.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(q.residual, 0.0, 1e-12);
    EXPECT_EQ(q.used, 4u);
    EXPECT_NEAR(fit_rate(linear).slope, 1.0, 1e-12);
}

TEST(FitRate, NoiseAndExclusions)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<std::pair<double, double>> series;
    for (double h = 0.5; h > 0.01; h /= 2.0) {
        series.emplace_back(h, h * h * (1.0 + noise(rng)));
    }
    EXPECT_NEAR(fit_rate(series).slope, 2.0, 0.05);

    series = {{0.4, 0.16}, {0.2, 0.0}, {0.1, 0.01}, {0.05, kNaN}};
    const RateFit fit = fit_rate(series);
    EXPECT_EQ(fit.excluded, (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(fit.used, 2u);
    EXPECT_NEAR(fit.slope, 2.0, 1e-12);

    series = {{0.4, 0.0}, {0.2, 0.0}, {0.1, 0.01}};
    EXPECT_FALSE(fit_rate(series).valid());
    series = {{0.4, 1.0}, {0.2, 1.0}};
    EXPECT_THROW(fit_rate(series), DomainError);
    series = {{0.4, 1.0}, {-0.2, 1.0}, {0.1, 1.0}};
    EXPECT_THROW(fit_rate(series), DomainError);
}

TEST(Spec, Validation)
{
    ExperimentSpec spec = rate_spec(ExperimentKind::Elliptic, {1, 2, 3}, "y1");
    EXPECT_NO_THROW(spec.validate());
    spec.levels = {2, 1};
    EXPECT_THROW(spec.validate(), DomainError);
    spec.levels = {1, 8};
    EXPECT_THROW(spec.validate(), DomainError);
    spec.levels = {1};
    spec.data = "";
    EXPECT_THROW(spec.validate(), DomainError);
    spec.data = "y1";
    spec.t_query = 1.5;
    EXPECT_THROW(spec.validate(), DomainError);

    ExperimentSpec full = rate_spec(ExperimentKind::FullyDiscrete, {1}, "y1");
    full.norms = {ErrorNorm::L2};
    full.steps = {4, 8, 16};
    EXPECT_NO_THROW(full.validate());
    full.steps = {4, 8};
    EXPECT_THROW(full.validate(), DomainError);
    full.steps = {4, 4, 8};
    EXPECT_THROW(full.validate(), DomainError);
    full.steps = {4, 8, 16};
    full.levels = {1, 2};
    EXPECT_THROW(full.validate(), DomainError);
    full.levels = {1};
    full.norms = {ErrorNorm::Energy};
    EXPECT_THROW(full.validate(), DomainError);

    ExperimentSpec oracle;
    oracle.kind = ExperimentKind::Oracle;
    EXPECT_NO_THROW(oracle.validate());
    EXPECT_THROW(run_elliptic(oracle), DomainError);
}

TEST(Elliptic, ConstantDataIsReproducedExactly)
{
    const RateReport report = run_elliptic(rate_spec(ExperimentKind::Elliptic, {0, 1, 2}, "y0"));
    ASSERT_EQ(report.rows.size(), 3u);
    for (const auto& row : report.rows) {
        EXPECT_LT(row.err_l2, kExactReproduction);
    }
    ASSERT_NE(report.slope(ErrorNorm::L2), nullptr);
    EXPECT_FALSE(report.slope(ErrorNorm::L2)->applicable);
    for (const auto& check : acceptance_checks(report)) {
        EXPECT_TRUE(check.passed) << check.name;
    }
}

TEST(Elliptic, FewerThanThreeRowsHaveNoSlopes)
{
    const RateReport report = run_elliptic(rate_spec(ExperimentKind::Elliptic, {1, 2}, "y1"));
    EXPECT_TRUE(report.slopes.empty());
    EXPECT_FALSE(report.notes.empty());
    for (const auto& check : acceptance_checks(report)) {
        EXPECT_FALSE(check.passed) << check.name;
    }
}

TEST(Semidiscrete, ErrorsDecreaseUnderRefinement)
{
    ExperimentSpec spec = rate_spec(ExperimentKind::Semidiscrete, {1, 2, 3}, "y2");
    spec.norms.push_back(ErrorNorm::NegHalf);
    const RateReport report = run_semidiscrete(spec);
    ASSERT_EQ(report.rows.size(), 3u);
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        EXPECT_LT(report.rows[i].scale, report.rows[i - 1].scale);
        EXPECT_LT(report.rows[i].err_l2, report.rows[i - 1].err_l2);
        EXPECT_LT(report.rows[i].err_energy, report.rows[i - 1].err_energy);
        EXPECT_LT(report.rows[i].err_neg_half, report.rows[i - 1].err_neg_half);
    }
    for (const auto& row : report.rows) {
        EXPECT_LE(row.err_neg_half, row.err_l2 * (1.0 + 1e-12));
    }
    ASSERT_NE(report.slope(ErrorNorm::NegHalf), nullptr);
    EXPECT_FALSE(report.tables.empty());
}

TEST(FullyDiscrete, SingleStepMatchesDenseOracle)
{
    ExperimentSpec spec = rate_spec(ExperimentKind::FullyDiscrete, {1}, "y1");
    spec.norms = {ErrorNorm::L2};
    spec.steps = {1, 2, 4};
    const RateReport report = run_fully_discrete(spec);
    ASSERT_EQ(report.rows.size(), 3u);

    const FemSystem fem = assemble(build_icosphere(1));
    const Matrix mass = fem.mass();
    const Matrix stiffness = fem.stiffness();
    const Vector c0 = l2_project(fem, exact_solution(ExactSphereSolution::parse("y1"), 0.0));
    const Vector one_step = (mass + stiffness).ldlt().solve(mass * c0);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> pencil(stiffness, mass);
    const Matrix& v = pencil.eigenvectors();
    const Vector decay = (-0.5 * pencil.eigenvalues().array()).exp();
    const Vector reference = v * decay.asDiagonal() * v.transpose() * mass * c0;
    const Vector diff = one_step - reference;
    EXPECT_NEAR(report.rows[0].err_l2, std::sqrt(diff.dot(mass * diff)), 1e-10);
    EXPECT_DOUBLE_EQ(report.rows[0].scale, 1.0);
}

TEST(FullyDiscrete, FirstOrderConstantStaysBounded)
{
    ExperimentSpec spec = rate_spec(ExperimentKind::FullyDiscrete, {2}, "mix");
    spec.norms = {ErrorNorm::L2};
    spec.steps = {8, 16, 32, 64};
    const RateReport report = run_fully_discrete(spec);
    ASSERT_EQ(report.tables.size(), 1u);
    for (const auto& values : report.tables[0].values) {
        EXPECT_LT(values[1], 10.0);
    }
    ASSERT_NE(report.slope(ErrorNorm::L2), nullptr);
    EXPECT_NEAR(report.slope(ErrorNorm::L2)->fit.slope, 1.0, 0.15);
}

TEST(TimeSmoothing, ErrorDoesNotGrowInTime)
{
    ExperimentSpec spec = rate_spec(ExperimentKind::Semidiscrete, {2}, "mix");
    const std::vector<double> times{0.05, 0.1, 0.2, 0.4};
    spec.t_query = 0.4;
    const RateReport report = run_time_smoothing(spec, times);
    ASSERT_EQ(report.rows.size(), times.size());
    std::vector<std::pair<double, double>> series;
    for (const auto& row : report.rows) {
        series.emplace_back(row.scale, row.err_l2);
    }
    EXPECT_LE(fit_rate(series).slope, 0.0);
    ASSERT_FALSE(report.tables.empty());
}

TEST(Oracle, DeterministicAndPassing)
{
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Oracle;
    spec.seed = 7;
    const OracleReport first = run_oracle_suite(spec);
    const OracleReport second = run_oracle_suite(spec);
    EXPECT_TRUE(first.all_passed());
    ASSERT_EQ(first.checks.size(), second.checks.size());
    for (std::size_t i = 0; i < first.checks.size(); ++i) {
        EXPECT_EQ(first.checks[i].name, second.checks[i].name);
        EXPECT_EQ(first.checks[i].measured, second.checks[i].measured) << first.checks[i].name;
    }
    EXPECT_EQ(acceptance_checks(first).size(), first.checks.size());
    EXPECT_TRUE(std::holds_alternative<OracleReport>(run_experiment(spec)));
}

TEST(DefectSup, GeneralWeightsReduceToNamedSweeps)
{
    const auto lambdas = defect_lambda_grid();
    const TimeGrid grid = defect_time_grid();
    EXPECT_NEAR(weighted_defect_sup(grid, lambdas, 0.0, 1.0), kInverseTimeDefectSup, 1e-12);
    EXPECT_NEAR(weighted_defect_sup(grid, lambdas, 0.5, 0.5), kHalfPowerDefectSup, 1e-12);
    EXPECT_THROW(weighted_defect_sup(grid, std::vector<double>{}, 0.0, 0.0), DomainError);
}

TEST(Threads, EnvironmentOverride)
{
    ::setenv("EVOLAB_THREADS", "3", 1);
    EXPECT_EQ(harness_threads(), 3u);
    ::setenv("EVOLAB_THREADS", "zero", 1);
    EXPECT_GE(harness_threads(), 1u);
    ::setenv("EVOLAB_THREADS", "0", 1);
    EXPECT_GE(harness_threads(), 1u);
    ::unsetenv("EVOLAB_THREADS");
    EXPECT_GE(harness_threads(), 1u);
}
