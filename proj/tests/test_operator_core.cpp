#include "evolab/errors.hpp"
#include "evolab/operator_core.hpp"
#include "evolab/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace evolab;

namespace {

// e^{-tA} by scaling and squaring of a Taylor polynomial; independent of the
// eigen-decomposition used by the library.
Matrix taylor_exponential(const Matrix& a, double t)
{
    const Matrix scaled_full = -t * a;
    const double norm = scaled_full.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm / std::pow(2.0, squarings) > 0.25) {
        ++squarings;
    }
    const Matrix scaled = scaled_full / std::pow(2.0, squarings);
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * scaled / k;
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) {
        sum = sum * sum;
    }
    return sum;
}

Vector sample_vector(Index n, double offset = 0.3)
{
    Vector x(n);
    for (Index i = 0; i < n; ++i) {
        x[i] = std::sin(1.7 * static_cast<double>(i) + offset) + 0.1;
    }
    return x;
}

}  // namespace

TEST(Sector, RejectsInvalidParameters)
{
    EXPECT_THROW(Sector(-1.0, 0.5, 1.0), DomainError);
    EXPECT_THROW(Sector(0.0, 0.0, 1.0), DomainError);
    EXPECT_THROW(Sector(0.0, std::numbers::pi / 2, 1.0), DomainError);
    EXPECT_THROW(Sector(0.0, 0.5, 0.9), DomainError);
}

TEST(Sector, ContainsExcludesOriginAndBoundary)
{
    const Sector sector(0.0, 0.5, 2.0);
    EXPECT_FALSE(sector.contains({0.0, 0.0}));
    EXPECT_TRUE(sector.contains({1.0, 0.0}));
    EXPECT_TRUE(sector.contains(std::polar(3.0, 0.49)));
    EXPECT_FALSE(sector.contains(std::polar(3.0, 0.51)));
    EXPECT_FALSE(sector.contains({-1.0, 0.0}));
}

TEST(SpectralOperator, SortsEigenvaluesWithBasis)
{
    Vector values(3);
    values << 3.0, 1.0, 2.0;
    const SpectralOperator op(values, Matrix::Identity(3, 3));
    EXPECT_DOUBLE_EQ(op.eigenvalues()[0], 1.0);
    EXPECT_DOUBLE_EQ(op.eigenvalues()[2], 3.0);
    EXPECT_DOUBLE_EQ(op.basis()(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(op.matrix()(0, 0), 3.0);
}

TEST(SpectralOperator, RejectsNonOrthogonalBasis)
{
    Matrix basis = Matrix::Identity(2, 2);
    basis(0, 1) = 1e-6;
    EXPECT_THROW(SpectralOperator(Vector::Ones(2), basis), DomainError);
    EXPECT_THROW(SpectralOperator(Vector::Ones(2), Matrix::Identity(3, 3)), DomainError);
}

TEST(SpectralOperator, FromSymmetricReproducesMatrix)
{
    Matrix a(3, 3);
    a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
    const auto op = SpectralOperator::from_symmetric(a);
    EXPECT_LT((op.matrix() - a).norm(), 1e-13);
    Matrix b = a;
    b(0, 1) = 2.0;
    EXPECT_THROW(SpectralOperator::from_symmetric(b), DomainError);
}

TEST(SpectralOperator, RandomSpdIsDeterministicAndInRange)
{
    const auto a = SpectralOperator::random_spd(8, 11);
    const auto b = SpectralOperator::random_spd(8, 11);
    EXPECT_EQ(a.eigenvalues(), b.eigenvalues());
    EXPECT_EQ(a.basis(), b.basis());
    EXPECT_GE(a.eigenvalues().minCoeff(), 1e-2);
    EXPECT_LE(a.eigenvalues().maxCoeff(), 1e2);
    EXPECT_LT((a.basis().transpose() * a.basis() - Matrix::Identity(8, 8)).norm(), 1e-13);
    const auto c = SpectralOperator::random_spd(8, 12);
    EXPECT_NE(a.eigenvalues(), c.eigenvalues());
}

TEST(Resolvent, MatchesDenseSolve)
{
    const auto op = SpectralOperator::random_spd(6, 3);
    const Vector x = sample_vector(6);
    for (double z : {-2.0, -0.001, 1000.0}) {
        const Matrix shifted = z * Matrix::Identity(6, 6) - op.matrix();
        const Vector expected = shifted.fullPivLu().solve(x);
        EXPECT_LT((resolvent_apply(op, z, x) - expected).norm(), 1e-10 * expected.norm()) << z;
    }
}

TEST(Resolvent, ComplexMatchesDenseSolve)
{
    const auto op = SpectralOperator::random_spd(5, 4);
    const ComplexVector x = sample_vector(5).cast<std::complex<double>>();
    const std::complex<double> z(0.5, 2.0);
    const Eigen::MatrixXcd shifted =
        z * Eigen::MatrixXcd::Identity(5, 5) - op.matrix().cast<std::complex<double>>();
    const ComplexVector expected = shifted.fullPivLu().solve(x);
    EXPECT_LT((resolvent_apply(op, z, x) - expected).norm(), 1e-12 * expected.norm());
}

TEST(Resolvent, ThrowsOnSpectrum)
{
    const auto op = SpectralOperator::diagonal(std::vector<double>{1.0, 2.0});
    EXPECT_THROW(resolvent_apply(op, 2.0, Vector::Ones(2)), SingularResolventError);
    EXPECT_THROW(resolvent_apply(op, 1.0 + 1e-14, Vector::Ones(2)), SingularResolventError);
    EXPECT_NO_THROW(resolvent_apply(op, 1.5, Vector::Ones(2)));
    EXPECT_THROW(resolvent_apply(op, 3.0, Vector::Ones(3)), DomainError);
}

TEST(Semigroup, MatchesTaylorExponential)
{
    const auto op = SpectralOperator::random_spd(6, 5, 0.1, 10.0);
    const Vector x = sample_vector(6);
    for (double t : {0.01, 0.5, 2.0}) {
        const Vector expected = taylor_exponential(op.matrix(), t) * x;
        EXPECT_LT((semigroup_apply(op, t, x) - expected).norm(), 1e-11 * x.norm()) << t;
    }
}

TEST(Semigroup, IdentityAtZeroAndRejectsNegativeTime)
{
    const auto op = SpectralOperator::random_spd(4, 6);
    const Vector x = sample_vector(4);
    EXPECT_EQ(semigroup_apply(op, 0.0, x), x);
    EXPECT_THROW(semigroup_apply(op, -1e-3, x), DomainError);
}

TEST(FractionalPower, SquareRootSquaresToOperator)
{
    const auto op = SpectralOperator::random_spd(6, 7);
    const Vector x = sample_vector(6);
    const Vector half = fractional_power_apply(op, 0.5, fractional_power_apply(op, 0.5, x));
    EXPECT_LT((half - op.matrix() * x).norm(), 1e-10 * (op.matrix() * x).norm());
}

TEST(FractionalPower, MinusOneIsInverseAndZeroIsIdentity)
{
    const auto op = SpectralOperator::random_spd(6, 8);
    const Vector x = sample_vector(6);
    const Vector expected = (op.matrix() + 2.0 * Matrix::Identity(6, 6)).ldlt().solve(x);
    EXPECT_LT((fractional_power_apply(op, -1.0, x, 2.0) - expected).norm(), 1e-12 * expected.norm());
    EXPECT_EQ(fractional_power_apply(op, 0.0, x), x);
    EXPECT_THROW(fractional_power_apply(op, 1.5, x), DomainError);
}

TEST(FractionalPower, NegativeExponentNeedsPositiveSpectrum)
{
    const auto op = SpectralOperator::diagonal(std::vector<double>{0.0, 1.0});
    EXPECT_THROW(fractional_power_apply(op, -0.5, Vector::Ones(2)), DomainError);
    const Vector y = fractional_power_apply(op, 0.5, Vector::Ones(2));
    EXPECT_DOUBLE_EQ(y[0], 0.0);
    EXPECT_DOUBLE_EQ(y[1], 1.0);
}

TEST(Balakrishnan, DiagonalClosedForm)
{
    const auto op = SpectralOperator::diagonal(std::vector<double>{1.0, 4.0});
    Vector x(2);
    x << 1.0, 1.0;
    const Vector y = fractional_power_integral(op, 0.5, x);
    EXPECT_NEAR(y[0], 1.0, 1e-9);
    EXPECT_NEAR(y[1], 2.0, 1e-9);
}

TEST(Balakrishnan, MatchesSpectralPowerOnRandomOperators)
{
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const auto op = SpectralOperator::random_spd(6, seed);
        const Vector x = sample_vector(6, 0.1 * static_cast<double>(seed));
        for (double alpha : {0.3, 0.5, 0.7}) {
            const Vector exact = fractional_power_apply(op, alpha, x);
            const Vector integral = fractional_power_integral(op, alpha, x);
            EXPECT_LT((integral - exact).norm(), 1e-6 * exact.norm()) << seed << ' ' << alpha;
        }
    }
}

TEST(Balakrishnan, ShiftedPowerAndErrors)
{
    const auto op = SpectralOperator::random_spd(4, 30);
    const Vector x = sample_vector(4);
    const Vector exact = fractional_power_apply(op, 0.4, x, 1.0);
    EXPECT_LT((fractional_power_integral(op, 0.4, x, 1.0) - exact).norm(), 1e-6 * exact.norm());
    EXPECT_THROW(fractional_power_integral(op, 1.0, x), DomainError);
    EXPECT_THROW(fractional_power_integral(op, 0.0, x), DomainError);
    BalakrishnanQuadrature starved;
    starved.max_refinements = 0;
    starved.initial_panels = 1;
    starved.points_per_panel = 2;
    EXPECT_THROW(fractional_power_integral(op, 0.5, x, 0.0, starved), AccuracyError);
}

TEST(FormSector, ClosedFormConstants)
{
    const FormSectorFamily family = sector_from_form(2.0, 1.0);
    EXPECT_DOUBLE_EQ(family.M_prime, 3.0);
    // pi/2 - asin(1/3)
    EXPECT_NEAR(family.delta_min, 1.2309594173407747, 1e-15);
    const double delta = 1.4;
    const double expected = 3.0 * std::cos(std::numbers::pi / 2 - delta) /
                            (1.0 - 3.0 * std::sin(std::numbers::pi / 2 - delta));
    EXPECT_DOUBLE_EQ(family.resolvent_constant(delta), expected);
    EXPECT_THROW(family.resolvent_constant(1.2), DomainError);
    EXPECT_THROW(sector_from_form(1.0, 2.0), DomainError);
}

TEST(Sectorial, SymmetricOperatorSatisfiesFormSector)
{
    const auto op = SpectralOperator::random_spd(8, 40);
    const FormSectorFamily family = sector_from_form(2.0, 1.0);
    const Sector sector = family.sector(1.4);
    const SectorialReport report = verify_sectorial(op, sector, 300);
    EXPECT_TRUE(report.passed());
    EXPECT_EQ(report.samples, 300);
    // On the negative axis |z| / dist(z, positive spectrum) <= 1.
    EXPECT_LE(report.worst_ratio_negative_axis, 1.0 + 1e-15);
    EXPECT_GT(report.worst_ratio, 1.0);
}

TEST(Sectorial, DetectsTooSmallConstant)
{
    const auto op = SpectralOperator::diagonal(std::vector<double>{1.0, 10.0});
    // On the ray at angle delta, |z| / dist -> 1 / sin(delta) near the spectrum.
    const Sector sector(0.0, 0.2, 1.0);
    const SectorialReport report = verify_sectorial(op, sector, 600);
    EXPECT_TRUE(report.spectrum_inside);
    EXPECT_FALSE(report.resolvent_bound_holds);
    // Sampled radii approach the supremum from below.
    EXPECT_LE(report.worst_ratio, 1.0 / std::sin(0.2 + 1e-6) + 1e-12);
    EXPECT_GT(report.worst_ratio, 0.99 / std::sin(0.2 + 1e-6));
    EXPECT_THROW(sectorial_sample_points(op, sector, 7), DomainError);
    EXPECT_EQ(sectorial_sample_points(op, sector, 31).size(), 31u);
}

TEST(LogGrid, EndpointsAndCount)
{
    const auto grid = log_grid(1e-3, 1e3, 512);
    EXPECT_EQ(grid.size(), 3073u);
    EXPECT_EQ(grid.front(), 1e-3);
    EXPECT_EQ(grid.back(), 1e3);
    EXPECT_NEAR(grid[1536], 1.0, 1e-15);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        ASSERT_GT(grid[i], grid[i - 1]);
    }
    EXPECT_THROW(log_grid(0.0, 1.0, 4), DomainError);
}

TEST(Smoothing, SupremumMatchesClosedForm)
{
    const auto op = SpectralOperator::diagonal(std::vector<double>{0.5, 1.0, 2.0});
    const auto times = log_grid(1e-3, 1e3, 64);
    // alpha^alpha e^{-alpha}: sqrt(1/2) e^{-1/2} and e^{-1}.
    EXPECT_NEAR(check_smoothing(op, 0.5, times), 0.42888194248035344, 1e-15);
    EXPECT_NEAR(check_smoothing(op, 1.0, times), 0.36787944117144233, 1e-15);
    EXPECT_THROW(check_smoothing(op, 1.5, times), DomainError);
}

TEST(Interpolation, RatiosBoundedAndSharpOnEigenvectors)
{
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
        const auto op = SpectralOperator::random_spd(8, seed);
        for (double phi : {-1.0, -0.5, 0.5, 1.0}) {
            for (double alpha : {0.25, 0.5, 0.75}) {
                EXPECT_LE(check_interpolation(op, phi, alpha, 10, seed), 1.0 + 1e-10);
            }
        }
    }
    // A single eigenvector attains equality in the Hoelder-type bound.
    const auto op = SpectralOperator::diagonal(std::vector<double>{3.0});
    EXPECT_NEAR(check_interpolation(op, 1.0, 0.5, 3, 1), 1.0, 1e-14);
}

TEST(DecayIdentity, BoundedBySupremumConstant)
{
    // sup_x (1 - e^{-x}) / sqrt(x), located by golden-section search.
    const auto g = [](double x) { return -std::expm1(-x) / std::sqrt(x); };
    double lo = 0.1;
    double hi = 5.0;
    for (int i = 0; i < 200; ++i) {
        const double a = hi - 0.6180339887498949 * (hi - lo);
        const double b = lo + 0.6180339887498949 * (hi - lo);
        if (g(a) < g(b)) {
            lo = a;
        } else {
            hi = b;
        }
    }
    const double constant = g(0.5 * (lo + hi));
    EXPECT_NEAR(constant, 0.638172686338951, 1e-12);

    const auto times = log_grid(1e-4, 1e4, 128);
    for (std::uint64_t seed = 60; seed < 65; ++seed) {
        const auto op = SpectralOperator::random_spd(6, seed);
        EXPECT_LE(check_decay_identity(op, 0.5, times), constant * (1.0 + 1e-12));
        EXPECT_LE(check_decay_identity(op, 1.0, times), 1.0);
    }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly)
{
    for (int n : {1, 2, 5, 8, 16}) {
        const GaussLegendreRule rule = gauss_legendre(n);
        ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                sum += rule.weights[static_cast<std::size_t>(i)] * std::pow(rule.nodes[static_cast<std::size_t>(i)], k);
            }
            const double exact = k % 2 == 0 ? 2.0 / (k + 1) : 0.0;
            EXPECT_NEAR(sum, exact, 1e-14) << n << ' ' << k;
        }
        for (std::size_t i = 1; i < rule.nodes.size(); ++i) {
            EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
        }
    }
    EXPECT_THROW(gauss_legendre(0), DomainError);
}
