#include "evolab/time_stepper.hpp"

#include "evolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evolab {

TimeGrid::TimeGrid(double terminal_time, int steps) : terminal_(terminal_time), steps_(steps)
{
    if (!(terminal_ > 0.0)) {
        throw DomainError("TimeGrid: terminal time must be positive");
    }
    if (steps_ < 1) {
        throw DomainError("TimeGrid: step count must be >= 1");
    }
}

int TimeGrid::factors_at(double t) const
{
    if (!(t >= 0.0 && t <= terminal_)) {
        throw DomainError("TimeGrid: query time " + std::to_string(t) + " outside [0, T]");
    }
    if (t == 0.0) {
        return 0;
    }
    // Smallest k with t <= t_k, guarded against rounding in t N / T.
    int k = static_cast<int>(std::ceil(t * steps_ / terminal_));
    k = std::clamp(k, 1, steps_);
    while (k > 1 && time(k - 1) >= t) {
        --k;
    }
    while (k < steps_ && time(k) < t) {
        ++k;
    }
    return k;
}

namespace {

class SpectralStep final : public StepOperator {
public:
    SpectralStep(const SpectralOperator& op, double dt) : op_(op), dt_(dt) {}

    Vector apply(const Vector& x) const override
    {
        return op_.apply_function([dt = dt_](double lambda) { return 1.0 / (1.0 + dt * lambda); },
                                  x);
    }

private:
    const SpectralOperator& op_;
    double dt_;
};

}  // namespace

std::unique_ptr<const StepOperator> SpectralSolveOracle::prepare(double dt) const
{
    if (!(dt > 0.0)) {
        throw DomainError("backward Euler: dt must be positive");
    }
    for (Index i = 0; i < op_.dim(); ++i) {
        if (!(1.0 + dt * op_.eigenvalues()[i] > 0.0)) {
            throw DomainError("backward Euler: I + dt A is not invertible");
        }
    }
    return std::make_unique<SpectralStep>(op_, dt);
}

Vector backward_euler_step(const LinearSolveOracle& solver, double dt, const Vector& x)
{
    if (!(dt > 0.0)) {
        throw DomainError("backward Euler: dt must be positive");
    }
    return solver.prepare(dt)->apply(x);
}

Vector evolve_fully_discrete(const LinearSolveOracle& solver, const TimeGrid& grid,
                             const Vector& x, double t)
{
    if (x.size() != solver.dim()) {
        throw DomainError("evolve: vector length does not match the solver");
    }
    const int factors = grid.factors_at(t);
    if (factors == 0) {
        return x;
    }
    const auto step = solver.prepare(grid.dt());
    Vector y = x;
    for (int n = 0; n < factors; ++n) {
        y = step->apply(y);
    }
    return y;
}

double defect_symbol(int n, double s)
{
    return std::exp(-n * std::log1p(s)) - std::exp(-n * s);
}

namespace {

double weighted_defect(int n, double dt, DefectWeight weight, double lambda)
{
    const double s = lambda * dt;
    const double defect = std::abs(defect_symbol(n, s));
    switch (weight) {
    case DefectWeight::Unit:
        return defect;
    case DefectWeight::Shifted:
        return s > 0.0 ? defect / s : 0.0;
    case DefectWeight::InverseTime:
        return defect * n;
    case DefectWeight::HalfPower:
        return defect * std::sqrt(lambda * n * dt);
    }
    return defect;
}

void check_grid(std::span<const double> lambdas)
{
    if (lambdas.empty()) {
        throw DomainError("defect supremum: empty lambda grid");
    }
    for (double lambda : lambdas) {
        if (!(lambda >= 0.0)) {
            throw DomainError("defect supremum: lambda grid must be nonnegative");
        }
    }
}

}  // namespace

double defect_sup_scalar(int n, double dt, DefectWeight weight, std::span<const double> lambdas)
{
    if (n < 1) {
        throw DomainError("defect supremum: step index must be >= 1");
    }
    if (!(dt > 0.0)) {
        throw DomainError("defect supremum: dt must be positive");
    }
    check_grid(lambdas);
    double sup = 0.0;
    for (double lambda : lambdas) {
        sup = std::max(sup, weighted_defect(n, dt, weight, lambda));
    }
    return sup;
}

DefectSweep defect_sweep(const TimeGrid& grid, DefectWeight weight, std::span<const double> lambdas)
{
    check_grid(lambdas);
    DefectSweep sweep;
    for (int n = 1; n <= grid.N(); ++n) {
        for (double lambda : lambdas) {
            const double value = weighted_defect(n, grid.dt(), weight, lambda);
            if (value > sweep.sup) {
                sweep.sup = value;
                sweep.argmax_n = n;
                sweep.argmax_lambda = lambda;
            }
        }
    }
    return sweep;
}

}  // namespace evolab
