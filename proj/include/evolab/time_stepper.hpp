#pragma once

// Backward Euler, r(z) = (1 + z)^{-1}, on a uniform time grid, and the scalar
// defect F_n(s) = (1 + s)^{-n} - e^{-ns} whose suprema over the spectrum bound
// the fully discrete error for symmetric operators.

#include "evolab/operator_core.hpp"

#include <memory>
#include <span>

namespace evolab {

/// Uniform grid t_n = n T / N on [0, T].
class TimeGrid {
public:
    TimeGrid(double terminal_time, int steps);

    double T() const noexcept { return terminal_; }
    int N() const noexcept { return steps_; }
    double dt() const noexcept { return terminal_ / steps_; }

    /// t_n computed as n T / N, so time(N) == T exactly.
    double time(int n) const noexcept { return terminal_ * n / steps_; }

    /// Number of backward Euler factors S_{h,dt}(t) applies: 0 at t = 0 and
    /// n + 1 for t in (t_n, t_{n+1}].
    int factors_at(double t) const;

private:
    double terminal_;
    int steps_;
};

/// One prepared application of (I + dt A_h)^{-1}.
class StepOperator {
public:
    virtual ~StepOperator() = default;
    virtual Vector apply(const Vector& x) const = 0;
};

/// Anything that can solve with I + dt A_h. Implementations must be safe for
/// concurrent const use.
class LinearSolveOracle {
public:
    virtual ~LinearSolveOracle() = default;
    virtual Index dim() const = 0;
    virtual std::unique_ptr<const StepOperator> prepare(double dt) const = 0;
};

/// Exact solves through the eigen-decomposition of a SpectralOperator.
class SpectralSolveOracle final : public LinearSolveOracle {
public:
    explicit SpectralSolveOracle(SpectralOperator op) : op_(std::move(op)) {}

    Index dim() const override { return op_.dim(); }
    std::unique_ptr<const StepOperator> prepare(double dt) const override;

    const SpectralOperator& op() const noexcept { return op_; }

private:
    SpectralOperator op_;
};

/// y = (I + dt A_h)^{-1} x.
Vector backward_euler_step(const LinearSolveOracle& solver, double dt, const Vector& x);

/// S_{h,dt}(t) x: x at t = 0, r(dt A_h)^{n+1} x for t in (t_n, t_{n+1}].
Vector evolve_fully_discrete(const LinearSolveOracle& solver, const TimeGrid& grid,
                             const Vector& x, double t);

/// F_n(s) = (1 + s)^{-n} - e^{-n s}.
double defect_symbol(int n, double s);

/// Right-hand weights of the four fully discrete inequalities.
enum class DefectWeight {
    Unit,         ///< sup |F_n|
    Shifted,      ///< sup |F_n| / (dt lambda)
    InverseTime,  ///< sup |F_n| t_n / dt
    HalfPower,    ///< sup |F_n| sqrt(lambda t_n)
};

/// Supremum of the weighted defect over lambda in `lambdas` at step n.
double defect_sup_scalar(int n, double dt, DefectWeight weight, std::span<const double> lambdas);

struct DefectSweep {
    double sup = 0.0;
    int argmax_n = 0;
    double argmax_lambda = 0.0;
};

/// Supremum of the weighted defect over n = 1..N of the grid and all lambdas.
DefectSweep defect_sweep(const TimeGrid& grid, DefectWeight weight,
                         std::span<const double> lambdas);

}  // namespace evolab
