#pragma once

#include "memodiff/internal_variables.hpp"
#include "memodiff/stepper.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace memodiff {

/// True for kernels the energy inequality is proved for: no atoms and a
/// completely monotone density (or none).
bool is_completely_monotone(const MeasureKernel& k);

/// D_μ[u](tₙ) = Σ_{m ≤ n} Δt·(K1(μ*u)ᵐ)ᵀuᵐ for n = 0 … N (entry 0 is 0).
std::vector<double> cumulative_dissipation(const Trajectory& u, const MeasureKernel& k, const FemMatrices& fem);

enum class EnergyMode { Strict, Audit };

struct EnergyReport {
    std::vector<double> t;
    std::vector<double> half_uH2;
    std::vector<double> cum_a0;
    std::vector<double> D_mu;
    std::vector<double> cum_fu;
    std::vector<double> E_mem;     // zero unless an EnergySplit was supplied
    std::vector<double> D_mem_cum; // zero unless an EnergySplit was supplied
    std::vector<double> slack;     // ½‖uⁿ‖² + ΣΔt·a₀ + D_μ − ½‖u₀‖² − ΣΔt⟨F,u⟩
    double worst_slack = 0.0;
    double final_slack = 0.0;
    double min_D_mu = 0.0;
    int negative_dissipation_steps = 0; // audit bookkeeping
    FormConstants constants;
    double mass = 0.0;
    bool pass = true;
};

/// Strict mode throws UnsupportedKernel for non-CM kernels and fails when the
/// slack is positive beyond roundoff or D_μ dips below −1e−10·scale. Audit mode
/// records the same quantities and always passes.
EnergyReport energy_inequality_report(const Trajectory& u, const ProblemSpec& p, EnergyMode mode,
                                      const EnergySplit* split = nullptr);

/// CSV columns t,half_uH2,cum_a0,D_mu,cum_fu,E_mem,D_mem_cum,slack.
void write_energy_csv(std::ostream& os, const EnergyReport& r);

struct PositiveTypeReport {
    double min_value = 0.0;    // smallest quadratic form over the random ensemble
    double min_relative = 0.0; // same, divided by the signal energy ΣΔt·wᵀK1w
    std::string argmin;
    bool has_witness = false;
    double witness_value = 0.0;
    double witness_relative = 0.0;
    bool expect_nonnegative = true;
    bool pass = false;
};

/// Discrete form Σₙ Δt·(K1(μ*w)ⁿ)ᵀwⁿ over Gaussian signals with zero history,
/// plus the alternating-sign witness for the heaviest atom. CM kernels pass when
/// min_relative ≥ −1e−10; atomic kernels pass when the witness is ≤ −1e−3.
PositiveTypeReport positive_type_test(const MeasureKernel& k, const FemMatrices& fem, const TimeGrid& grid,
                                      int ensemble_size, std::uint64_t seed = 1, int threads = 1);

/// Σₙ Δt·(K1(μ*w)ⁿ)ᵀwⁿ for one signal.
double memory_quadratic_form(const QuadratureWeights& w, const FemMatrices& fem, const Trajectory& signal);

struct AprioriConstants {
    double alpha0 = 0.0;
    double Lambda0 = 0.0;
    double Lambda1 = 0.0;
    double mass = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double C3 = 0.0;
    double C4 = 0.0;
    double C = 0.0;
    double c = 0.0;
};

AprioriConstants apriori_constants(const FormConstants& fc, double mass, double T);

struct AprioriReport {
    AprioriConstants constants;
    double u0_H2 = 0.0;
    double f_L2Vstar2 = 0.0;
    double psi_L2V2 = 0.0;
    double lhs = 0.0; // max‖uⁿ‖²_H + ΣΔt|uⁿ|²_V
    double rhs = 0.0; // C·e^(cT)(‖u₀‖² + ‖f‖² + T‖ψ‖²)
    double ratio = 0.0;
    bool pass = false;
    std::vector<double> E;     // Eₙ = ‖uⁿ‖² + (α0/2)ΣΔt|u|²_V
    std::vector<double> B;     // recursion bound for Eₙ (informational)
    bool recursion_holds = false;
    double parabolic_ratio = 0.0;         // pointwise parabolic estimate (μ = 0 only)
    double parabolic_literal_ratio = 0.0; // sup and integral taken separately (reported)
};

AprioriReport apriori_bound_check(const Trajectory& u, const ProblemSpec& p);

/// Λ1·μ((0,δ])/α0
double contraction_factor(const MeasureKernel& k, const FormConstants& fc, double delta);
double contraction_factor(const MeasureKernel& k, const FemMatrices& fem, double delta);

} // namespace memodiff
