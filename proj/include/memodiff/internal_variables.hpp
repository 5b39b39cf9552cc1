#pragma once

#include "memodiff/kernel.hpp"
#include "memodiff/stepper.hpp"

#include <span>
#include <vector>

namespace memodiff {

/// Internal variables zᵢ(t) = ∫₀ᵗ e^(−λᵢ(t−s)) u(s) ds, one nodal field per
/// Bernstein node.
struct DiffusiveState {
    BernsteinQuadrature quadrature;
    std::vector<Vec> z;
    int step = 0;
};

/// Memory energy ½Σωᵢ zᵢᵀK1zᵢ and dissipation Σωᵢλᵢ zᵢᵀK1zᵢ at n = 0 … N.
struct EnergySplit {
    std::vector<double> E_mem;
    std::vector<double> D_mem;
};

/// Implicit Euler step of ∂ₜz + λz = u: (z + Δt·u_new)/(1 + λΔt).
Vec advance_internal(std::span<const double> z, std::span<const double> u_new, double lambda, double dt);

struct DiffusiveSolution {
    Trajectory trajectory;
    DiffusiveState state;
    EnergySplit energy;
};

/// Memory evaluated through internal variables, lagged one step so the system
/// matrix is M + ΔtK0. Throws UnsupportedKernel when the kernel has atoms.
DiffusiveSolution solve_diffusive(const ProblemSpec& p, const BernsteinQuadrature& q);

/// rₙ = ⟨K1Σωᵢzᵢⁿ, uⁿ⟩ − (E_mem(tₙ) − E_mem(tₙ₋₁))/Δt − D_mem(tₙ), n = 1 … N.
/// The internal variables are replayed from the trajectory.
std::vector<double> structural_identity_residual(const Trajectory& u, const DiffusiveState& d,
                                                 const EnergySplit& e, const FemMatrices& fem);

struct RefinedEnergyReport {
    std::vector<double> lhs; // ½‖uⁿ‖²_H + ΣΔt·a₀ + E_mem + ΣΔt·D_mem
    std::vector<double> rhs; // ½‖u₀‖²_H + ΣΔt·⟨Fⁿ,uⁿ⟩
    double worst_slack = 0.0; // max(lhs − rhs)
};

RefinedEnergyReport refined_energy_report(const Trajectory& u, const DiffusiveState& d,
                                          const EnergySplit& e, const ProblemSpec& p);

} // namespace memodiff
