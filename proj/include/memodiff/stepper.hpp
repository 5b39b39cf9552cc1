#pragma once

#include "memodiff/convolution.hpp"
#include "memodiff/kernel.hpp"
#include "memodiff/mesh_fem.hpp"
#include "memodiff/trajectory.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace memodiff {

/// t ↦ interior nodal vector.
using NodalFn = std::function<Vec(double)>;

/// Everything needed to march the memory equation on (−τ_max, T].
struct ProblemSpec {
    Mesh1D mesh;
    FemMatrices fem;
    MeasureKernel kernel;
    NodalFn forcing;   // nodal values of f(t, ·); empty means f = 0
    Vec u0;
    NodalFn history;   // ψ(t) for t ≤ 0; empty means ψ ≡ u0
    double T = 1.0;
    double dt = 1e-2;
};

/// Lifts a space-time function to nodal values on the mesh interior.
NodalFn nodal_function(const Mesh1D& mesh, std::function<double(double, double)> f);

/// Checks the preconditions: dimensions, τ_max ≤ T, ψ(0) = u0.
void validate(const ProblemSpec& p);

/// Load vector M·f(tₙ) (zero when no forcing is set).
Vec forcing_load(const ProblemSpec& p, double t);

struct SolveReport {
    double q = 0.0;      // Λ1·μ((0,δ])/α0 on the Picard path
    double delta = 0.0;  // subinterval width on the Picard path
    std::vector<int> picard_iterations;
    std::vector<std::vector<double>> picard_corrections; // per subinterval, L²(Iₙ;V) update sizes
    double max_linear_residual = 0.0;
    double wall_seconds = 0.0;
};

struct Solution {
    Trajectory trajectory;
    SolveReport report;
};

/// Implicit Euler with the current-cell memory weight in the system matrix:
/// (M + ΔtK0 + Δt·w₀·K1)uⁿ = M uⁿ⁻¹ + ΔtFⁿ − Δt·K1·(lagged memory).
Solution solve(const ProblemSpec& p);

struct PicardOptions {
    double safety = 0.5;
    double tol = 1e-12;
    int max_iterations = 500;
};

/// Subinterval fixed-point construction: partition (0,T] into blocks of width
/// δ with Λ1·μ((0,δ])/α0 ≤ safety and iterate the frozen-memory parabolic map
/// on each block until the L²(Iₙ;V) update falls below tol (relative).
Solution solve_picard(const ProblemSpec& p, const PicardOptions& opt = {});

/// Largest grid-multiple δ with Λ1·μ((0,δ])/α0 ≤ safety; throws NoAdmissibleDelta.
double admissible_delta(const MeasureKernel& k, const FormConstants& fc, double dt, int max_steps, double safety);

struct RestrictionReport {
    std::vector<double> horizons;
    double max_abs_difference = 0.0;
    bool bitwise_equal = false;
};

/// Solves on each horizon with the kernel restricted to it and compares every
/// pair on their shared indices.
RestrictionReport restriction_consistency(const ProblemSpec& p, const std::vector<double>& horizons);

struct TimeDerivativeSeries {
    std::vector<double> values; // ‖∂ₜu(tₙ)‖_{V*}, n = 1 … N
    double l2_dt = 0.0;
    double l2_forcing = 0.0;
    double lambda0_l2_u = 0.0;
    double l2_memory = 0.0;
    double bound_ratio = 0.0; // l2_dt / (l2_forcing + lambda0_l2_u + l2_memory)
};

TimeDerivativeSeries dt_dual_norm_series(const Trajectory& u, const ProblemSpec& p);

/// CSV with header `t,x_1,...,x_{n-1}`, one row per time node including history.
void write_trajectory_csv(std::ostream& os, const Trajectory& u);

/// Discrete L²(0,T;V) distance over indices 1 … N.
double l2V_distance(const Trajectory& a, const Trajectory& b, const FemMatrices& fem);
/// max over n ∈ [0, N] of ‖aₙ − bₙ‖_H
double linfH_distance(const Trajectory& a, const Trajectory& b, const FemMatrices& fem);

} // namespace memodiff
