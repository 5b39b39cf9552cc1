#pragma once

#include "memodiff/kernel.hpp"
#include "memodiff/mesh_fem.hpp"
#include "memodiff/trajectory.hpp"

#include <cstdint>
#include <vector>

namespace memodiff {

struct AtomPlacement {
    int lag = 0; // round(τ/Δt)
    double mass = 0.0;
};

/// Product-integration weights: ac[j] = ∫ over (jΔt, (j+1)Δt] of k, for the
/// cells covering (0, T], plus grid-aligned atoms.
struct QuadratureWeights {
    double dt = 0.0;
    std::vector<double> ac;
    std::vector<AtomPlacement> atoms;

    double mass() const;
    /// Weight multiplying the current value g_n.
    double current() const noexcept { return ac.empty() ? 0.0 : ac.front(); }
};

/// Throws MisalignedAtom when |τ/Δt − round(τ/Δt)| > alignment_tol.
QuadratureWeights build_weights(const MeasureKernel& k, const TimeGrid& grid,
                                double alignment_tol = 1e-9);

/// (μ*g)ₙ = Σ_{j=0}^{n−1} w_j g_{n−j} + Σ_{ℓ ≤ n} m g_{n−ℓ}. Only (0, tₙ] is
/// integrated, so values before t = 0 never enter.
Vec convolve_at(const QuadratureWeights& w, const Trajectory& g, int n);
/// Same as convolve_at without the j = 0 (current value) term.
Vec convolve_lagged(const QuadratureWeights& w, const Trajectory& g, int n);
/// (μ*g)ₙ for n = 1 … n_steps; entry n−1 holds index n.
std::vector<Vec> convolve_direct(const QuadratureWeights& w, const Trajectory& g);

/// K1·(μ*u)ₙ: the Riesz load vector of the memory operator at step n.
Vec apply_memory(const QuadratureWeights& w, const FemMatrices& fem, const Trajectory& u, int n);

struct YoungReport {
    double lhs_H = 0.0;
    double rhs_H = 0.0;
    double lhs_V = 0.0;
    double rhs_V = 0.0;
    bool pass = false;
};

/// Discrete ‖μ*g‖_{L²(0,T;X)} ≤ μ((0,T])·‖g‖_{L²(−τmax,T;X)} for X = H and X = V.
YoungReport young_check(const QuadratureWeights& w, const Trajectory& g, const FemMatrices& fem);

struct OperatorNormReport {
    double worst_ratio = 0.0;
    int trials = 0;
    bool pass = false;
};

/// Discrete ‖𝒦_μ u‖_{L²(V*)} / (Λ1·μ((0,T])·‖u‖_{L²(−τmax,T;V)}) over random u.
OperatorNormReport operator_norm_check(const MeasureKernel& k, const FemMatrices& fem,
                                       const TimeGrid& grid, int trials, std::uint64_t seed = 1);

/// Gaussian nodal series on every grid index (history included).
Trajectory random_trajectory(const TimeGrid& grid, std::size_t dim, std::uint64_t seed);

/// Discrete L² norms over indices [first, last]: √(Σ Δt ‖gₙ‖²).
double l2_time_H(const Trajectory& g, const FemMatrices& fem, int first, int last);
double l2_time_V(const Trajectory& g, const FemMatrices& fem, int first, int last);

} // namespace memodiff
