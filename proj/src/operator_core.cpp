#include "evolab/operator_core.hpp"

#include "evolab/errors.hpp"
#include "evolab/quadrature.hpp"
#include "evolab/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace evolab {

namespace {

constexpr double kOrthogonalityTol = 1e-12;
constexpr double kSingularRelTol = 1e-12;

double singular_threshold(const SpectralOperator& op)
{
    return kSingularRelTol * std::max(1.0, op.spectral_radius());
}

// Shifted eigenvalue made safe for real powers; tiny negative round-off on a
// PSD spectrum is clamped to zero.
double shifted_eigenvalue(const SpectralOperator& op, double lambda, double shift, double alpha)
{
    double mu = lambda + shift;
    const double tiny = kSingularRelTol * std::max(1.0, op.spectral_radius());
    if (mu < 0.0 && mu > -tiny) {
        mu = 0.0;
    }
    if (alpha < 0.0 && mu <= 0.0) {
        throw DomainError("fractional power: nonpositive shifted eigenvalue " + std::to_string(mu) +
                          " with negative exponent");
    }
    if (alpha > 0.0 && mu < 0.0) {
        throw DomainError("fractional power: negative shifted eigenvalue " + std::to_string(mu));
    }
    return mu;
}

}  // namespace

Sector::Sector(double shift, double half_angle, double resolvent_constant)
    : lambda(shift), delta(half_angle), M(resolvent_constant)
{
    if (!(lambda >= 0.0)) {
        throw DomainError("Sector: lambda must be >= 0");
    }
    if (!(delta > 0.0 && delta < std::numbers::pi / 2)) {
        throw DomainError("Sector: delta must lie in (0, pi/2)");
    }
    if (!(M >= 1.0)) {
        throw DomainError("Sector: M must be >= 1");
    }
}

bool Sector::contains(std::complex<double> z) const
{
    if (z == std::complex<double>{}) {
        return false;
    }
    return std::abs(std::arg(z)) < delta;
}

SpectralOperator::SpectralOperator(Vector eigenvalues, Matrix basis)
{
    const Index n = eigenvalues.size();
    if (n < 1) {
        throw DomainError("SpectralOperator: dimension must be positive");
    }
    if (basis.rows() != n || basis.cols() != n) {
        throw DomainError("SpectralOperator: basis must be dim x dim");
    }
    const double defect = (basis.transpose() * basis - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(defect <= kOrthogonalityTol)) {
        throw DomainError("SpectralOperator: basis not orthogonal (defect " + std::to_string(defect) +
                          ")");
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return eigenvalues[a] < eigenvalues[b]; });
    eigenvalues_.resize(n);
    basis_.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        eigenvalues_[k] = eigenvalues[order[static_cast<std::size_t>(k)]];
        basis_.col(k) = basis.col(order[static_cast<std::size_t>(k)]);
    }
}

SpectralOperator SpectralOperator::diagonal(std::span<const double> eigenvalues)
{
    const auto n = static_cast<Index>(eigenvalues.size());
    Vector values(n);
    for (Index i = 0; i < n; ++i) {
        values[i] = eigenvalues[static_cast<std::size_t>(i)];
    }
    return SpectralOperator(std::move(values), Matrix::Identity(n, n));
}

SpectralOperator SpectralOperator::from_symmetric(const Matrix& matrix)
{
    if (matrix.rows() != matrix.cols()) {
        throw DomainError("from_symmetric: matrix must be square");
    }
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, matrix.cwiseAbs().maxCoeff())) {
        throw DomainError("from_symmetric: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix);
    if (solver.info() != Eigen::Success) {
        throw NumericError("from_symmetric: eigensolver failed", 0.0);
    }
    return SpectralOperator(solver.eigenvalues(), solver.eigenvectors());
}

SpectralOperator SpectralOperator::random_spd(Index dim, std::uint64_t seed, double lo, double hi)
{
    if (dim < 1) {
        throw DomainError("random_spd: dimension must be positive");
    }
    if (!(lo > 0.0 && hi >= lo)) {
        throw DomainError("random_spd: need 0 < lo <= hi");
    }
    Rng rng(seed);
    Matrix gaussian(dim, dim);
    for (Index j = 0; j < dim; ++j) {
        for (Index i = 0; i < dim; ++i) {
            gaussian(i, j) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Matrix> qr(gaussian);
    Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);

    Vector values(dim);
    const double log_lo = std::log(lo);
    const double log_hi = std::log(hi);
    for (Index i = 0; i < dim; ++i) {
        values[i] = std::exp(rng.uniform(log_lo, log_hi));
    }
    return SpectralOperator(std::move(values), std::move(q));
}

double SpectralOperator::spectral_radius() const
{
    return eigenvalues_.cwiseAbs().maxCoeff();
}

Matrix SpectralOperator::matrix() const
{
    return basis_ * eigenvalues_.asDiagonal() * basis_.transpose();
}

Vector SpectralOperator::apply(const Vector& x) const
{
    return apply_function([](double lambda) { return lambda; }, x);
}

void SpectralOperator::check_size(const Vector& x) const
{
    if (x.size() != dim()) {
        throw DomainError("vector of length " + std::to_string(x.size()) +
                          " used with operator of dimension " + std::to_string(dim()));
    }
}

Vector resolvent_apply(const SpectralOperator& op, double z, const Vector& x)
{
    op.check_size(x);
    const double threshold = singular_threshold(op);
    for (Index i = 0; i < op.dim(); ++i) {
        if (std::abs(z - op.eigenvalues()[i]) <= threshold) {
            throw SingularResolventError("resolvent: z = " + std::to_string(z) +
                                         " is on the spectrum");
        }
    }
    return op.apply_function([z](double lambda) { return 1.0 / (z - lambda); }, x);
}

ComplexVector resolvent_apply(const SpectralOperator& op, std::complex<double> z,
                              const ComplexVector& x)
{
    if (x.size() != op.dim()) {
        throw DomainError("resolvent: vector length does not match operator");
    }
    const double threshold = singular_threshold(op);
    ComplexVector coeffs = op.basis().transpose().cast<std::complex<double>>() * x;
    for (Index i = 0; i < op.dim(); ++i) {
        const std::complex<double> gap = z - op.eigenvalues()[i];
        if (std::abs(gap) <= threshold) {
            throw SingularResolventError("resolvent: z is on the spectrum");
        }
        coeffs[i] /= gap;
    }
    return op.basis().cast<std::complex<double>>() * coeffs;
}

Vector semigroup_apply(const SpectralOperator& op, double t, const Vector& x)
{
    if (!(t >= 0.0)) {
        throw DomainError("semigroup: t must be >= 0");
    }
    if (t == 0.0) {
        op.check_size(x);
        return x;
    }
    return op.apply_function([t](double lambda) { return std::exp(-t * lambda); }, x);
}

Vector fractional_power_apply(const SpectralOperator& op, double alpha, const Vector& x,
                              double shift)
{
    if (!(alpha >= -1.0 && alpha <= 1.0)) {
        throw DomainError("fractional power: alpha must lie in [-1, 1]");
    }
    op.check_size(x);
    if (alpha == 0.0) {
        return x;
    }
    Vector factors(op.dim());
    for (Index i = 0; i < op.dim(); ++i) {
        factors[i] = std::pow(shifted_eigenvalue(op, op.eigenvalues()[i], shift, alpha), alpha);
    }
    Vector coeffs = op.basis().transpose() * x;
    return op.basis() * factors.cwiseProduct(coeffs);
}

Vector fractional_power_integral(const SpectralOperator& op, double alpha, const Vector& x,
                                 double shift, const BalakrishnanQuadrature& quad)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("Balakrishnan integral: alpha must lie in (0, 1)");
    }
    if (!(quad.s_max > quad.s_min && quad.points_per_panel >= 1 && quad.initial_panels >= 1)) {
        throw DomainError("Balakrishnan integral: invalid quadrature settings");
    }
    op.check_size(x);
    for (Index i = 0; i < op.dim(); ++i) {
        if (!(op.eigenvalues()[i] + shift > 0.0)) {
            throw DomainError("Balakrishnan integral: shifted spectrum must be positive");
        }
    }

    // (shift + A) x, then t^{alpha-1} (t + shift + A)^{-1} (shift + A) x dt with t = e^s.
    const Vector shifted_x = op.apply(x) + shift * x;
    const auto integrand = [&](double s) -> Vector {
        const double t = std::exp(s);
        // (z - A)^{-1} at z = -(t + shift) is -(t + shift + A)^{-1}.
        return -std::exp(alpha * s) * resolvent_apply(op, -(t + shift), shifted_x);
    };

    const GaussLegendreRule rule = gauss_legendre(quad.points_per_panel);
    const auto composite = [&](int panels) -> Vector {
        Vector sum = Vector::Zero(op.dim());
        const double width = (quad.s_max - quad.s_min) / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = quad.s_min + (p + 0.5) * width;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                sum += (0.5 * width * rule.weights[q]) * integrand(mid + 0.5 * width * rule.nodes[q]);
            }
        }
        return sum;
    };

    // Leading-order tails: the integrand tends to e^{alpha s} x as s -> -inf and
    // to e^{(alpha-1) s} (shift + A) x as s -> +inf.
    const Vector tails = (std::exp(alpha * quad.s_min) / alpha) * x +
                         (std::exp((alpha - 1.0) * quad.s_max) / (1.0 - alpha)) * shifted_x;
    const double scale = std::sin(alpha * std::numbers::pi) / std::numbers::pi;

    int panels = quad.initial_panels;
    Vector previous = scale * (composite(panels) + tails);
    double change = 0.0;
    for (int refinement = 0; refinement < quad.max_refinements; ++refinement) {
        panels *= 2;
        Vector current = scale * (composite(panels) + tails);
        const double norm = current.norm();
        change = (current - previous).norm() / (norm > 0.0 ? norm : 1.0);
        if (change < quad.rel_tol) {
            return current;
        }
        previous = std::move(current);
    }
    throw AccuracyError("Balakrishnan integral: relative change " + std::to_string(change) +
                        " above tolerance after " + std::to_string(quad.max_refinements) +
                        " refinements");
}

std::vector<std::complex<double>> sectorial_sample_points(const SpectralOperator& op,
                                                          const Sector& sector, int samples)
{
    if (samples < 8) {
        throw DomainError("verify_sectorial: need at least 8 samples");
    }
    const double scale = std::max(1.0, (op.eigenvalues().array() + sector.lambda).abs().maxCoeff());
    const double angle = std::min(sector.delta + 1e-6, std::numbers::pi);
    const int per_ray = samples / 3;
    const int negative_axis = samples - 2 * per_ray;

    const auto radii = [&](int count) {
        std::vector<double> r(static_cast<std::size_t>(count));
        const double lo = std::log10(1e-3 * scale);
        const double hi = std::log10(1e3 * scale);
        for (int i = 0; i < count; ++i) {
            r[static_cast<std::size_t>(i)] =
                std::pow(10.0, count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        }
        return r;
    };

    std::vector<std::complex<double>> points;
    points.reserve(static_cast<std::size_t>(samples));
    for (double r : radii(per_ray)) {
        points.push_back(std::polar(r, angle));
    }
    for (double r : radii(per_ray)) {
        points.push_back(std::polar(r, -angle));
    }
    for (double r : radii(negative_axis)) {
        points.emplace_back(-r, 0.0);
    }
    return points;
}

SectorialReport verify_sectorial(const SpectralOperator& op, const Sector& sector, int samples)
{
    SectorialReport report;
    report.samples = samples;
    report.spectrum_inside = true;
    for (Index i = 0; i < op.dim(); ++i) {
        if (!sector.contains({op.eigenvalues()[i] + sector.lambda, 0.0})) {
            report.spectrum_inside = false;
        }
    }

    // A is symmetric, so ||(z - lambda - A)^{-1}||_2 = 1 / dist(z, spectrum + lambda).
    for (const auto& z : sectorial_sample_points(op, sector, samples)) {
        double distance = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < op.dim(); ++i) {
            distance = std::min(distance, std::abs(z - (op.eigenvalues()[i] + sector.lambda)));
        }
        const double ratio = distance > 0.0 ? std::abs(z) / distance
                                            : std::numeric_limits<double>::infinity();
        if (ratio > report.worst_ratio) {
            report.worst_ratio = ratio;
            report.worst_point = z;
        }
        if (z.imag() == 0.0) {
            report.worst_ratio_negative_axis = std::max(report.worst_ratio_negative_axis, ratio);
        }
    }
    report.resolvent_bound_holds = report.worst_ratio <= sector.M;
    return report;
}

double FormSectorFamily::resolvent_constant(double delta) const
{
    if (!(delta > delta_min && delta < std::numbers::pi / 2)) {
        throw DomainError("sector_from_form: delta must lie in (delta_min, pi/2)");
    }
    const double complement = std::numbers::pi / 2 - delta;
    const double denominator = 1.0 - M_prime * std::sin(complement);
    if (!(denominator > 0.0)) {
        throw DomainError("sector_from_form: nonpositive denominator at delta = " +
                          std::to_string(delta));
    }
    return M_prime * std::cos(complement) / denominator;
}

Sector FormSectorFamily::sector(double delta, double lambda) const
{
    return Sector(lambda, delta, resolvent_constant(delta));
}

FormSectorFamily sector_from_form(double continuity, double coercivity)
{
    if (!(coercivity > 0.0 && continuity >= coercivity)) {
        throw DomainError("sector_from_form: need continuity >= coercivity > 0");
    }
    FormSectorFamily family;
    family.M_prime = 1.0 + continuity / coercivity;
    family.delta_min = std::numbers::pi / 2 - std::asin(1.0 / family.M_prime);
    return family;
}

std::vector<double> log_grid(double lo, double hi, int per_decade)
{
    if (!(lo > 0.0 && hi > lo && per_decade >= 1)) {
        throw DomainError("log_grid: need 0 < lo < hi and per_decade >= 1");
    }
    const double log_lo = std::log10(lo);
    const double log_hi = std::log10(hi);
    const auto intervals =
        static_cast<int>(std::ceil((log_hi - log_lo) * per_decade - 1e-9));
    std::vector<double> grid(static_cast<std::size_t>(intervals) + 1);
    for (int i = 0; i <= intervals; ++i) {
        grid[static_cast<std::size_t>(i)] =
            std::pow(10.0, log_lo + (log_hi - log_lo) * i / intervals);
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

double check_smoothing(const SpectralOperator& op, double alpha, std::span<const double> times)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("check_smoothing: alpha must lie in [0, 1]");
    }
    double worst = 0.0;
    for (double t : times) {
        if (!(t > 0.0)) {
            throw DomainError("check_smoothing: times must be positive");
        }
        for (Index i = 0; i < op.dim(); ++i) {
            const double lambda = shifted_eigenvalue(op, op.eigenvalues()[i], 0.0, alpha);
            worst = std::max(worst, std::pow(t * lambda, alpha) * std::exp(-t * lambda));
        }
    }
    return worst;
}

double check_interpolation(const SpectralOperator& op, double phi, double alpha, int trials,
                           std::uint64_t seed, double shift)
{
    if (!(phi >= -1.0 && phi <= 1.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("check_interpolation: need phi in [-1, 1] and alpha in [0, 1]");
    }
    if (trials < 1) {
        throw DomainError("check_interpolation: need at least one trial");
    }
    Rng rng(seed);
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Vector x(op.dim());
        for (Index i = 0; i < x.size(); ++i) {
            x[i] = rng.normal();
        }
        const double numerator = fractional_power_apply(op, phi * alpha, x, shift).norm();
        const double denominator = std::pow(fractional_power_apply(op, phi, x, shift).norm(), alpha) *
                                   std::pow(x.norm(), 1.0 - alpha);
        worst = std::max(worst, numerator / denominator);
    }
    return worst;
}

double check_decay_identity(const SpectralOperator& op, double alpha,
                            std::span<const double> times, double shift)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("check_decay_identity: alpha must lie in [0, 1]");
    }
    Vector weights(op.dim());
    for (Index i = 0; i < op.dim(); ++i) {
        weights[i] = std::pow(shifted_eigenvalue(op, op.eigenvalues()[i], shift, -alpha), -alpha);
    }
    double worst = 0.0;
    for (double t : times) {
        if (!(t > 0.0)) {
            throw DomainError("check_decay_identity: times must be positive");
        }
        for (Index i = 0; i < op.dim(); ++i) {
            const double decay = -std::expm1(-t * op.eigenvalues()[i]);
            worst = std::max(worst, std::abs(decay) * weights[i] * std::pow(t, -alpha));
        }
    }
    return worst;
}

}  // namespace evolab
