#pragma once

// Piecewise linear surface finite elements on an icosphere. The discrete
// operator L_{0,h} is the pencil (K0, M); all elliptic solves use the shifted
// form a_h(u, v) = (grad u, grad v) + (u, v), i.e. the matrix M + K0.

#include "evolab/operator_core.hpp"
#include "evolab/surface_mesh.hpp"
#include "evolab/time_stepper.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <ostream>
#include <string>

namespace evolab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Coefficient vector of a P1 function; one entry per mesh vertex.
using GridFunction = Vector;

/// A function on the sphere: values at points of the unit sphere and, when
/// known, its tangential surface gradient there.
struct SurfaceFunction {
    std::function<double(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> surface_gradient;
};

enum class SolverMethod {
    Automatic,  ///< direct below `direct_below` dofs, conjugate gradient above
    ConjugateGradient,
    Direct,
};

struct SparseSolverConfig {
    SolverMethod method = SolverMethod::Automatic;
    double rel_tol = 1e-10;
    int max_iter = 0;  ///< 0 means 10 * dof
    Index direct_below = 500;

    void validate() const;
};

/// Symmetric positive definite sparse solve: Jacobi-preconditioned conjugate
/// gradient or sparse LDL^T. Each solve checks its relative residual and
/// throws NumericError when it exceeds the tolerance.
class SpdSolver {
public:
    SpdSolver(const SparseMatrix& matrix, const SparseSolverConfig& config = {});
    ~SpdSolver();
    SpdSolver(SpdSolver&&) noexcept;
    SpdSolver& operator=(SpdSolver&&) noexcept;

    Vector solve(const Vector& rhs) const;
    bool uses_direct() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class FemSystem {
public:
    FemSystem(std::shared_ptr<const TriangulatedSurface> mesh, SparseMatrix mass,
              SparseMatrix stiffness);

    const TriangulatedSurface& mesh() const noexcept { return *mesh_; }
    const SparseMatrix& mass() const noexcept { return mass_; }
    const SparseMatrix& stiffness() const noexcept { return stiffness_; }
    Index dofs() const noexcept { return mass_.rows(); }
    const MeshMetrics& metrics() const noexcept { return metrics_; }
    double h() const noexcept { return metrics_.h; }

    /// Vertex values of f (vertices already lie on the sphere).
    GridFunction interpolate(const SurfaceFunction& f) const;

    /// c^T M c and c^T (M + K0) c.
    double mass_norm(const GridFunction& c) const;
    double energy_norm(const GridFunction& c) const;

    void check_size(const GridFunction& c) const;

private:
    std::shared_ptr<const TriangulatedSurface> mesh_;
    SparseMatrix mass_;
    SparseMatrix stiffness_;
    MeshMetrics metrics_;
};

/// Exact P1 element integrals on the flat triangles: mass area (1 + delta_ij) / 12,
/// stiffness from the constant tangential gradients.
FemSystem assemble(TriangulatedSurface mesh);

/// b_i = int_{Gamma_h} (f o p) phi_i with the degree-4 rule; no delta_h weight.
Vector load_vector(const FemSystem& fem, const SurfaceFunction& f);

/// L2 projection P_h f: solves M c = b.
GridFunction l2_project(const FemSystem& fem, const SurfaceFunction& f,
                        const SparseSolverConfig& config = {});

/// (M + K0) c = b, the discrete version of (1 - Laplace-Beltrami) u = f.
GridFunction elliptic_solve(const FemSystem& fem, const SurfaceFunction& f,
                            const SparseSolverConfig& config = {});

/// One backward Euler step: (M + dt K0) c_next = M c.
GridFunction parabolic_step(const FemSystem& fem, double dt, const GridFunction& c,
                            const SparseSolverConfig& config = {});

/// (I + dt L_{0,h})^{-1} realized as (M + dt K0)^{-1} M.
class FemSolveOracle final : public LinearSolveOracle {
public:
    explicit FemSolveOracle(const FemSystem& fem, SparseSolverConfig config = {})
        : fem_(fem), config_(config)
    {
    }

    Index dim() const override { return fem_.dofs(); }
    std::unique_ptr<const StepOperator> prepare(double dt) const override;

private:
    const FemSystem& fem_;
    SparseSolverConfig config_;
};

/// Eigenpairs of K0 v = mu M v, ascending, with M-orthonormal vectors.
struct GeneralizedEigenpairs {
    Vector values;
    Matrix vectors;         ///< dofs x count
    bool complete = false;  ///< all dofs modes present
};

struct EigenOptions {
    Index dense_limit = 3000;  ///< dense solve up to this many dofs
    double tolerance = 1e-10;  ///< subspace iteration, relative eigenvalue change
    int max_iterations = 500;
};

/// Lowest `count` generalized eigenpairs: dense for small systems, block inverse
/// iteration with Rayleigh-Ritz otherwise.
GeneralizedEigenpairs generalized_eigenpairs(const FemSystem& fem, Index count,
                                             const EigenOptions& options = {});

/// Largest generalized eigenvalue by Lanczos in the M-inner product.
double largest_generalized_eigenvalue(const FemSystem& fem, int lanczos_steps = 200);

/// (sum_k (shift + mu_k)^{2 alpha} (v_k^T M c)^2)^{1/2}. Throws AccuracyError if a
/// truncated basis misses more than 1e-8 of the M-norm of c.
double discrete_fractional_norm(const FemSystem& fem, const GeneralizedEigenpairs& eig,
                                double alpha, const GridFunction& c, double shift = 1.0);

/// (int_{Gamma_h} (u_h - u o p)^2 delta_h)^{1/2}; weighted = false drops delta_h.
double lifted_error_l2(const FemSystem& fem, const GridFunction& c, const SurfaceFunction& u,
                       bool weighted = true);

/// (int_{Gamma_h} |grad_h (u_h - u o p)|^2 + (u_h - u o p)^2)^{1/2}; needs the
/// surface gradient of u.
double lifted_error_energy(const FemSystem& fem, const GridFunction& c, const SurfaceFunction& u);

/// h^2 (1 + mu_max). Uses the pencil's top eigenvalue from `eig` when complete,
/// otherwise Lanczos.
double inverse_estimate_constant(const FemSystem& fem, const GeneralizedEigenpairs& eig);

/// "i j value" lines (1-based, lower triangle) after the header
/// "%%MatrixMarket-like coordinate real symmetric".
void write_matrix(const SparseMatrix& matrix, std::ostream& out);

/// CSV with header "vertex_index,value".
void write_grid_function(const GridFunction& c, std::ostream& out);

}  // namespace evolab
