#pragma once

// Finite-dimensional symmetric operators with exact spectral calculus. These are
// the ground-truth oracles for the semigroup, resolvent and fractional-power
// inequalities; everything is evaluated through the eigen-decomposition
// A = Q diag(lambda) Q^T.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace evolab {

using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Sectoriality data: spectrum of (lambda + A) inside |arg z| < delta, and
/// ||(z - lambda - A)^{-1}|| <= M / |z| outside that sector.
struct Sector {
    double lambda = 0.0;
    double delta = 0.0;
    double M = 1.0;

    Sector(double shift, double half_angle, double resolvent_constant);

    /// Membership in the open sector; z = 0 is never inside.
    bool contains(std::complex<double> z) const;
};

class SpectralOperator {
public:
    /// Takes ownership of an eigen-decomposition. Eigenvalues are sorted (columns
    /// follow); throws DomainError if the basis is not orthogonal within 1e-12.
    SpectralOperator(Vector eigenvalues, Matrix basis);

    static SpectralOperator diagonal(std::span<const double> eigenvalues);
    static SpectralOperator from_symmetric(const Matrix& matrix);

    /// Orthogonalized Gaussian basis with log-uniform eigenvalues in [lo, hi].
    static SpectralOperator random_spd(Index dim, std::uint64_t seed, double lo = 1e-2,
                                       double hi = 1e2);

    Index dim() const noexcept { return eigenvalues_.size(); }
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    const Matrix& basis() const noexcept { return basis_; }
    double spectral_radius() const;

    /// Dense matrix Q diag(lambda) Q^T.
    Matrix matrix() const;

    Vector apply(const Vector& x) const;

    /// Q diag(f(lambda_i)) Q^T x.
    template <typename F>
    Vector apply_function(F&& f, const Vector& x) const
    {
        check_size(x);
        Vector coeffs = basis_.transpose() * x;
        for (Index i = 0; i < coeffs.size(); ++i) {
            coeffs[i] *= f(eigenvalues_[i]);
        }
        return basis_ * coeffs;
    }

    /// Dense Q diag(f(lambda_i)) Q^T.
    template <typename F>
    Matrix function_matrix(F&& f) const
    {
        Vector diag(dim());
        for (Index i = 0; i < dim(); ++i) {
            diag[i] = f(eigenvalues_[i]);
        }
        return basis_ * diag.asDiagonal() * basis_.transpose();
    }

    void check_size(const Vector& x) const;

private:
    Vector eigenvalues_;
    Matrix basis_;
};

/// y = (z - A)^{-1} x. Throws SingularResolventError when z lies within
/// 1e-12 * max(1, spectral radius) of an eigenvalue.
Vector resolvent_apply(const SpectralOperator& op, double z, const Vector& x);
ComplexVector resolvent_apply(const SpectralOperator& op, std::complex<double> z,
                              const ComplexVector& x);

/// e^{-tA} x for t >= 0.
Vector semigroup_apply(const SpectralOperator& op, double t, const Vector& x);

/// (shift + A)^alpha x by spectral calculus, alpha in [-1, 1].
Vector fractional_power_apply(const SpectralOperator& op, double alpha, const Vector& x,
                              double shift = 0.0);

/// Composite Gauss-Legendre settings for the Balakrishnan integral after the
/// substitution t = e^s.
struct BalakrishnanQuadrature {
    double s_min = -40.0;
    double s_max = 40.0;
    int points_per_panel = 8;
    int initial_panels = 16;
    int max_refinements = 12;
    double rel_tol = 1e-8;
};

/// (shift + A)^alpha x for alpha in (0, 1) from
///   sin(alpha pi)/pi * int_0^inf t^{alpha-1} (t + shift + A)^{-1} (shift + A) x dt,
/// evaluated with resolvent solves only. Panels are doubled until the relative
/// change drops below rel_tol; the truncated tails are added in closed form.
Vector fractional_power_integral(const SpectralOperator& op, double alpha, const Vector& x,
                                 double shift = 0.0, const BalakrishnanQuadrature& quad = {});

struct SectorialReport {
    bool spectrum_inside = false;
    bool resolvent_bound_holds = false;
    double worst_ratio = 0.0;              ///< max |z| ||(z - lambda - A)^{-1}||
    std::complex<double> worst_point{};
    double worst_ratio_negative_axis = 0.0;
    int samples = 0;

    bool passed() const { return spectrum_inside && resolvent_bound_holds; }
};

/// Sample points used by verify_sectorial: log-spaced radii on the rays
/// arg z = +-delta' (delta' slightly above delta) and on the negative real axis.
std::vector<std::complex<double>> sectorial_sample_points(const SpectralOperator& op,
                                                          const Sector& sector, int samples);

SectorialReport verify_sectorial(const SpectralOperator& op, const Sector& sector, int samples);

/// Sector data for the operator of a coercive, continuous bilinear form.
struct FormSectorFamily {
    double M_prime = 0.0;
    double delta_min = 0.0;

    /// M = M' cos(pi/2 - delta) / (1 - M' sin(pi/2 - delta)); delta in (delta_min, pi/2).
    double resolvent_constant(double delta) const;
    Sector sector(double delta, double lambda = 0.0) const;
};

FormSectorFamily sector_from_form(double continuity, double coercivity);

/// per_decade log-spaced points covering [lo, hi], both endpoints included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

/// max over t of t^alpha ||A^alpha e^{-tA}||_2.
double check_smoothing(const SpectralOperator& op, double alpha, std::span<const double> times);

/// Worst ratio ||(s+A)^{phi alpha} x|| / (||(s+A)^phi x||^alpha ||x||^{1-alpha}) over
/// `trials` Gaussian vectors drawn from `seed`.
double check_interpolation(const SpectralOperator& op, double phi, double alpha, int trials,
                           std::uint64_t seed, double shift = 0.0);

/// max over t of t^{-alpha} ||(I - e^{-tA}) (shift + A)^{-alpha}||_2.
double check_decay_identity(const SpectralOperator& op, double alpha,
                            std::span<const double> times, double shift = 0.0);

}  // namespace evolab
