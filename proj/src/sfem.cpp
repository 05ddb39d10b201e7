#include "evolab/sfem.hpp"

#include "evolab/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

namespace evolab {

void SparseSolverConfig::validate() const
{
    if (!(rel_tol > 0.0 && rel_tol <= 1e-6)) {
        throw DomainError("SparseSolverConfig: rel_tol must lie in (0, 1e-6]");
    }
    if (max_iter < 0) {
        throw DomainError("SparseSolverConfig: max_iter must be >= 0");
    }
}

struct SpdSolver::Impl {
    using Cg = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                        Eigen::DiagonalPreconditioner<double>>;
    using Direct = Eigen::SimplicialLDLT<SparseMatrix>;

    SparseMatrix matrix;
    double rel_tol = 1e-10;
    std::variant<std::unique_ptr<Cg>, std::unique_ptr<Direct>> solver;
};

SpdSolver::SpdSolver(const SparseMatrix& matrix, const SparseSolverConfig& config)
    : impl_(std::make_unique<Impl>())
{
    config.validate();
    if (matrix.rows() != matrix.cols()) {
        throw DomainError("SpdSolver: matrix must be square");
    }
    impl_->matrix = matrix;
    impl_->rel_tol = config.rel_tol;
    const bool direct = config.method == SolverMethod::Direct ||
                        (config.method == SolverMethod::Automatic && matrix.rows() < config.direct_below);
    if (direct) {
        auto ldlt = std::make_unique<Impl::Direct>(impl_->matrix);
        if (ldlt->info() != Eigen::Success) {
            throw NumericError("SpdSolver: factorization failed", 0.0);
        }
        impl_->solver = std::move(ldlt);
    } else {
        auto cg = std::make_unique<Impl::Cg>();
        cg->setTolerance(config.rel_tol);
        cg->setMaxIterations(config.max_iter > 0 ? config.max_iter
                                                 : static_cast<int>(10 * matrix.rows()));
        cg->compute(impl_->matrix);
        impl_->solver = std::move(cg);
    }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

bool SpdSolver::uses_direct() const noexcept
{
    return std::holds_alternative<std::unique_ptr<Impl::Direct>>(impl_->solver);
}

Vector SpdSolver::solve(const Vector& rhs) const
{
    if (rhs.size() != impl_->matrix.rows()) {
        throw DomainError("SpdSolver: right-hand side has the wrong length");
    }
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        return Vector::Zero(rhs.size());
    }
    Vector x = std::visit([&](const auto& solver) -> Vector { return solver->solve(rhs); },
                          impl_->solver);
    const double residual = (rhs - impl_->matrix * x).norm() / rhs_norm;
    // CG stops on its recursive residual; allow a little drift in the true one.
    if (!(residual <= 10.0 * impl_->rel_tol)) {
        throw NumericError("SpdSolver: solve did not converge", residual);
    }
    return x;
}

FemSystem::FemSystem(std::shared_ptr<const TriangulatedSurface> mesh, SparseMatrix mass,
                     SparseMatrix stiffness)
    : mesh_(std::move(mesh)), mass_(std::move(mass)), stiffness_(std::move(stiffness)),
      metrics_(mesh_metrics(*mesh_))
{
}

GridFunction FemSystem::interpolate(const SurfaceFunction& f) const
{
    GridFunction c(dofs());
    for (Index i = 0; i < dofs(); ++i) {
        c[i] = f.value(project_to_sphere(mesh_->vertices[static_cast<std::size_t>(i)]));
    }
    return c;
}

double FemSystem::mass_norm(const GridFunction& c) const
{
    check_size(c);
    return std::sqrt(std::max(0.0, c.dot(mass_ * c)));
}

double FemSystem::energy_norm(const GridFunction& c) const
{
    check_size(c);
    return std::sqrt(std::max(0.0, c.dot(mass_ * c) + c.dot(stiffness_ * c)));
}

void FemSystem::check_size(const GridFunction& c) const
{
    if (c.size() != dofs()) {
        throw DomainError("grid function of length " + std::to_string(c.size()) +
                          " used with a system of " + std::to_string(dofs()) + " dofs");
    }
}

namespace {

// Gradients of the three barycentric functions on a flat triangle.
std::array<Vec3, 3> barycentric_gradients(const TriangleCorners& tri, const Vec3& normal,
                                          double area)
{
    std::array<Vec3, 3> grads;
    for (std::size_t i = 0; i < 3; ++i) {
        const Vec3 opposite = tri[(i + 2) % 3] - tri[(i + 1) % 3];
        grads[i] = normal.cross(opposite) / (2.0 * area);
    }
    return grads;
}

}  // namespace

FemSystem assemble(TriangulatedSurface mesh)
{
    const auto n = static_cast<Index>(mesh.vertex_count());
    std::vector<Eigen::Triplet<double>> mass_entries;
    std::vector<Eigen::Triplet<double>> stiffness_entries;
    mass_entries.reserve(9 * mesh.triangle_count());
    stiffness_entries.reserve(9 * mesh.triangle_count());

    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        const double area = triangle_area(tri);
        if (!(area >= 1e-16)) {
            throw AssemblyError("assemble: degenerate triangle", t);
        }
        std::array<Vec3, 3> edges;
        for (std::size_t i = 0; i < 3; ++i) {
            edges[i] = tri[(i + 2) % 3] - tri[(i + 1) % 3];
        }
        const auto& ids = mesh.triangles[t];
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                const double m = area * (i == j ? 2.0 : 1.0) / 12.0;
                const double k = edges[i].dot(edges[j]) / (4.0 * area);
                mass_entries.emplace_back(ids[i], ids[j], m);
                stiffness_entries.emplace_back(ids[i], ids[j], k);
            }
        }
    }

    SparseMatrix mass(n, n);
    SparseMatrix stiffness(n, n);
    mass.setFromTriplets(mass_entries.begin(), mass_entries.end());
    stiffness.setFromTriplets(stiffness_entries.begin(), stiffness_entries.end());
    mass.makeCompressed();
    stiffness.makeCompressed();
    return FemSystem(std::make_shared<const TriangulatedSurface>(std::move(mesh)), std::move(mass),
                     std::move(stiffness));
}

Vector load_vector(const FemSystem& fem, const SurfaceFunction& f)
{
    const QuadratureRule rule = reference_quadrature(4);
    const auto& mesh = fem.mesh();
    Vector b = Vector::Zero(fem.dofs());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        const double area = triangle_area(tri);
        const auto& ids = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bary = rule.points[q];
            const double value = f.value(project_to_sphere(barycentric_point(tri, bary)));
            for (std::size_t i = 0; i < 3; ++i) {
                b[ids[i]] += area * rule.weights[q] * value * bary[i];
            }
        }
    }
    return b;
}

GridFunction l2_project(const FemSystem& fem, const SurfaceFunction& f,
                        const SparseSolverConfig& config)
{
    return SpdSolver(fem.mass(), config).solve(load_vector(fem, f));
}

GridFunction elliptic_solve(const FemSystem& fem, const SurfaceFunction& f,
                            const SparseSolverConfig& config)
{
    const SparseMatrix system = fem.mass() + fem.stiffness();
    return SpdSolver(system, config).solve(load_vector(fem, f));
}

GridFunction parabolic_step(const FemSystem& fem, double dt, const GridFunction& c,
                            const SparseSolverConfig& config)
{
    if (!(dt > 0.0)) {
        throw DomainError("parabolic_step: dt must be positive");
    }
    fem.check_size(c);
    const SparseMatrix system = fem.mass() + dt * fem.stiffness();
    return SpdSolver(system, config).solve(fem.mass() * c);
}

namespace {

class FemStep final : public StepOperator {
public:
    FemStep(const FemSystem& fem, double dt, const SparseSolverConfig& config)
        : fem_(fem), solver_(SparseMatrix(fem.mass() + dt * fem.stiffness()), config)
    {
    }

    Vector apply(const Vector& x) const override
    {
        fem_.check_size(x);
        return solver_.solve(fem_.mass() * x);
    }

private:
    const FemSystem& fem_;
    SpdSolver solver_;
};

}  // namespace

std::unique_ptr<const StepOperator> FemSolveOracle::prepare(double dt) const
{
    if (!(dt > 0.0)) {
        throw DomainError("backward Euler: dt must be positive");
    }
    return std::make_unique<FemStep>(fem_, dt, config_);
}

double discrete_fractional_norm(const FemSystem& fem, const GeneralizedEigenpairs& eig,
                                double alpha, const GridFunction& c, double shift)
{
    fem.check_size(c);
    if (!(alpha >= -1.0 && alpha <= 1.0)) {
        throw DomainError("discrete_fractional_norm: alpha must lie in [-1, 1]");
    }
    if (eig.vectors.rows() != fem.dofs() || eig.vectors.cols() != eig.values.size()) {
        throw DomainError("discrete_fractional_norm: eigenpairs do not match the system");
    }
    const Vector coefficients = eig.vectors.transpose() * (fem.mass() * c);
    const double total = c.dot(fem.mass() * c);
    const double captured = coefficients.squaredNorm();
    if (total > 0.0 && (total - captured) > 1e-8 * total) {
        throw AccuracyError("discrete_fractional_norm: eigenbasis misses " +
                            std::to_string((total - captured) / total) + " of the mass");
    }
    double sum = 0.0;
    for (Index k = 0; k < coefficients.size(); ++k) {
        const double mu = shift + std::max(0.0, eig.values[k]);
        if (alpha < 0.0 && !(mu > 0.0)) {
            throw DomainError("discrete_fractional_norm: nonpositive shifted eigenvalue");
        }
        sum += std::pow(mu, 2.0 * alpha) * coefficients[k] * coefficients[k];
    }
    return std::sqrt(sum);
}

double lifted_error_l2(const FemSystem& fem, const GridFunction& c, const SurfaceFunction& u,
                       bool weighted)
{
    fem.check_size(c);
    const QuadratureRule rule = reference_quadrature(4);
    const auto& mesh = fem.mesh();
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        const double area = triangle_area(tri);
        const auto& ids = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bary = rule.points[q];
            const Vec3 x = barycentric_point(tri, bary);
            const double uh = bary[0] * c[ids[0]] + bary[1] * c[ids[1]] + bary[2] * c[ids[2]];
            const double diff = uh - u.value(project_to_sphere(x));
            const double weight = weighted ? area_quotient(tri, x) : 1.0;
            sum += area * rule.weights[q] * diff * diff * weight;
        }
    }
    return std::sqrt(sum);
}

double lifted_error_energy(const FemSystem& fem, const GridFunction& c, const SurfaceFunction& u)
{
    fem.check_size(c);
    if (!u.surface_gradient) {
        throw DomainError("lifted_error_energy: exact surface gradient required");
    }
    const QuadratureRule rule = reference_quadrature(4);
    const auto& mesh = fem.mesh();
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        const double area = triangle_area(tri);
        const Vec3 normal = triangle_normal(tri);
        const auto grads = barycentric_gradients(tri, normal, area);
        const auto& ids = mesh.triangles[t];
        const Vec3 grad_h = c[ids[0]] * grads[0] + c[ids[1]] * grads[1] + c[ids[2]] * grads[2];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bary = rule.points[q];
            const Vec3 x = barycentric_point(tri, bary);
            const Vec3 y = project_to_sphere(x);
            // grad_h (u o p) = P_h Dp^T grad_Gamma u(p(x)), with Dp = (I - y y^T) / |x|.
            const Vec3 surface = u.surface_gradient(y);
            const Vec3 tangential = surface - y * y.dot(surface);
            Vec3 pulled = tangential / x.norm();
            pulled -= normal * normal.dot(pulled);
            const double uh = bary[0] * c[ids[0]] + bary[1] * c[ids[1]] + bary[2] * c[ids[2]];
            const double diff = uh - u.value(y);
            sum += area * rule.weights[q] * ((grad_h - pulled).squaredNorm() + diff * diff);
        }
    }
    return std::sqrt(sum);
}

double inverse_estimate_constant(const FemSystem& fem, const GeneralizedEigenpairs& eig)
{
    const double mu_max = eig.complete ? eig.values.maxCoeff() : largest_generalized_eigenvalue(fem);
    return fem.h() * fem.h() * (1.0 + mu_max);
}

void write_matrix(const SparseMatrix& matrix, std::ostream& out)
{
    out << "%%MatrixMarket-like coordinate real symmetric\n";
    char buffer[96];
    for (Index col = 0; col < matrix.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
            if (it.row() >= it.col()) {
                std::snprintf(buffer, sizeof buffer, "%ld %ld %.17g\n", static_cast<long>(it.row() + 1),
                              static_cast<long>(it.col() + 1), it.value());
                out << buffer;
            }
        }
    }
}

void write_grid_function(const GridFunction& c, std::ostream& out)
{
    out << "vertex_index,value\n";
    char buffer[64];
    for (Index i = 0; i < c.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%ld,%.17g\n", static_cast<long>(i), c[i]);
        out << buffer;
    }
}

}  // namespace evolab
