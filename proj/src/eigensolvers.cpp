#include "evolab/errors.hpp"
#include "evolab/random.hpp"
#include "evolab/sfem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evolab {

namespace {

GeneralizedEigenpairs dense_eigenpairs(const FemSystem& fem, Index count)
{
    const Matrix stiffness = Matrix(fem.stiffness());
    const Matrix mass = Matrix(fem.mass());
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(stiffness, mass,
                                                            Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw NumericError("generalized_eigenpairs: dense solve failed", 0.0);
    }
    GeneralizedEigenpairs eig;
    eig.values = solver.eigenvalues().head(count);
    eig.vectors = solver.eigenvectors().leftCols(count);
    eig.complete = count == fem.dofs();
    return eig;
}

// Block inverse iteration with (K + M)^{-1} M and Rayleigh-Ritz on each sweep.
GeneralizedEigenpairs subspace_eigenpairs(const FemSystem& fem, Index count,
                                          const EigenOptions& options)
{
    const Index n = fem.dofs();
    const Index block = std::min(n, std::max<Index>(2 * count, count + 8));
    const SparseMatrix shifted = fem.stiffness() + fem.mass();
    SparseSolverConfig config;
    config.method = SolverMethod::Direct;
    const SpdSolver solver(shifted, config);

    Rng rng(20240601);
    Matrix basis(n, block);
    for (Index j = 0; j < block; ++j) {
        for (Index i = 0; i < n; ++i) {
            basis(i, j) = rng.normal();
        }
    }

    Vector previous = Vector::Constant(count, std::numeric_limits<double>::infinity());
    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        Matrix image(n, block);
        const Matrix mass_basis = fem.mass() * basis;
        for (Index j = 0; j < block; ++j) {
            image.col(j) = solver.solve(mass_basis.col(j));
        }
        const Matrix reduced_k = image.transpose() * (fem.stiffness() * image);
        const Matrix reduced_m = image.transpose() * (fem.mass() * image);
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ritz(
            0.5 * (reduced_k + reduced_k.transpose()), 0.5 * (reduced_m + reduced_m.transpose()));
        if (ritz.info() != Eigen::Success) {
            throw NumericError("generalized_eigenpairs: Rayleigh-Ritz failed", 0.0);
        }
        basis = image * ritz.eigenvectors();
        const Vector current = ritz.eigenvalues().head(count);
        const double change =
            ((current - previous).array().abs() / (1.0 + current.array().abs())).maxCoeff();
        previous = current;
        if (change < options.tolerance) {
            GeneralizedEigenpairs eig;
            eig.values = current;
            eig.vectors = basis.leftCols(count);
            eig.complete = count == n;
            return eig;
        }
    }
    throw NumericError("generalized_eigenpairs: subspace iteration did not converge", 0.0);
}

}  // namespace

GeneralizedEigenpairs generalized_eigenpairs(const FemSystem& fem, Index count,
                                             const EigenOptions& options)
{
    if (count < 1 || count > fem.dofs()) {
        throw DomainError("generalized_eigenpairs: count must lie in [1, dofs]");
    }
    if (fem.dofs() <= options.dense_limit) {
        return dense_eigenpairs(fem, count);
    }
    if (count == fem.dofs()) {
        throw CapacityError("generalized_eigenpairs: full spectrum requested above the dense limit");
    }
    return subspace_eigenpairs(fem, count, options);
}

double largest_generalized_eigenvalue(const FemSystem& fem, int lanczos_steps)
{
    const Index n = fem.dofs();
    const Index steps = std::min<Index>(n, std::max(lanczos_steps, 2));
    SparseSolverConfig config;
    config.method = SolverMethod::Direct;
    const SpdSolver mass_solver(fem.mass(), config);

    // Lanczos for M^{-1} K, which is self-adjoint in the M-inner product.
    Matrix q(n, steps);
    Vector alpha = Vector::Zero(steps);
    Vector beta = Vector::Zero(steps);
    Rng rng(7);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = rng.normal();
    }
    v /= fem.mass_norm(v);

    Index used = steps;
    for (Index j = 0; j < steps; ++j) {
        q.col(j) = v;
        Vector w = mass_solver.solve(fem.stiffness() * v);
        alpha[j] = w.dot(fem.mass() * v);
        // Full reorthogonalization in the M-inner product, applied twice.
        for (int pass = 0; pass < 2; ++pass) {
            const Vector projections = q.leftCols(j + 1).transpose() * (fem.mass() * w);
            w -= q.leftCols(j + 1) * projections;
        }
        const double norm = fem.mass_norm(w);
        if (j + 1 == steps || norm < 1e-12 * std::max(1.0, std::abs(alpha[j]))) {
            used = j + 1;
            break;
        }
        beta[j] = norm;
        v = w / norm;
    }

    Matrix tridiagonal = Matrix::Zero(used, used);
    for (Index j = 0; j < used; ++j) {
        tridiagonal(j, j) = alpha[j];
        if (j + 1 < used) {
            tridiagonal(j, j + 1) = beta[j];
            tridiagonal(j + 1, j) = beta[j];
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> ritz(tridiagonal, Eigen::EigenvaluesOnly);
    return ritz.eigenvalues().maxCoeff();
}

}  // namespace evolab
