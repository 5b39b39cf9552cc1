#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace memodiff {

// Absolutely continuous parts of a memory measure.

struct NoDensity {
    bool operator==(const NoDensity&) const = default;
};

/// weight · s^(−α) / Γ(1−α)
struct Fractional {
    double alpha = 0.5;
    double weight = 1.0;
    bool operator==(const Fractional&) const = default;
};

/// mass · β · e^(−βs)
struct Exponential {
    double beta = 1.0;
    double mass = 1.0;
    bool operator==(const Exponential&) const = default;
};

/// (mass/ε) · η((s−τ)/ε) with the unit hat η(r) = max(0, 1−|r|).
struct Mollified {
    double mass = 1.0;
    double tau = 1.0;
    double eps = 0.1;
    bool operator==(const Mollified&) const = default;
};

/// Piecewise-linear density through (grid[i], values[i]); zero outside the grid.
struct Tabulated {
    std::vector<double> grid;
    std::vector<double> values;
    bool operator==(const Tabulated&) const = default;
};

using AcDensity = std::variant<NoDensity, Fractional, Exponential, Mollified, Tabulated>;

struct Atom {
    double tau = 0.0;
    double mass = 0.0;
    bool operator==(const Atom&) const = default;
};

/// μ = k(s)ds + Σ mⱼ δ_τⱼ, supported in (0, tau_max]. The density is treated
/// as zero beyond tau_max.
struct MeasureKernel {
    AcDensity ac = NoDensity{};
    std::vector<Atom> atoms;
    double tau_max = 1.0;

    bool operator==(const MeasureKernel&) const = default;
    bool has_atoms() const noexcept { return !atoms.empty(); }
    bool has_density() const noexcept { return !std::holds_alternative<NoDensity>(ac); }
    bool is_zero() const noexcept { return !has_atoms() && !has_density(); }
};

/// Checks parameter ranges and the support condition; throws InvalidArgument.
void validate(const MeasureKernel& k);

MeasureKernel no_memory(double tau_max = 1.0);
MeasureKernel fractional_kernel(double alpha, double tau_max, double weight = 1.0);
MeasureKernel exponential_kernel(double beta, double mass, double tau_max);
MeasureKernel atom_kernel(double tau, double mass);
/// Mixed measure: density plus atoms. tau_max defaults to max atom delay when 0.
MeasureKernel mixed_kernel(AcDensity ac, std::vector<Atom> atoms, double tau_max);
MeasureKernel mollify_delay(double mass, double tau, double eps);

/// Pointwise density value at s > 0; atoms excluded.
double eval_density(const MeasureKernel& k, double s);
/// ∫₀^s k(r) dr (density only)
double density_cdf(const MeasureKernel& k, double s);
/// μ((0, T])
double total_mass(const MeasureKernel& k, double T);
/// μ restricted to (0, T].
MeasureKernel restrict(const MeasureKernel& k, double T);
/// factor · μ
MeasureKernel scaled(const MeasureKernel& k, double factor);
/// Total variation of μ₁ − μ₂ on (0, T]; atoms are matched by exact location.
double tv_distance(const MeasureKernel& k1, const MeasureKernel& k2, double T);

/// Sum-of-exponentials k̂(t) = Σ ωᵢ e^(−λᵢ t) for completely monotone densities.
struct BernsteinQuadrature {
    std::vector<double> nodes;   // λᵢ ≥ 0, 1/time
    std::vector<double> weights; // ωᵢ > 0
    double t_lo = 0.0;
    double t_hi = 0.0;
    double error_bound = 0.0; // max relative reconstruction error on [t_lo, t_hi]

    std::size_t size() const noexcept { return nodes.size(); }
    double reconstruct(double t) const;
};

/// Exponential kernels map to a single exact node. Fractional kernels use the
/// substitution λ = eᵘ and composite Gauss–Legendre on
/// [log(1/(10·tau_max)), log(10/t_lo)] with n_nodes points, plus one extra node
/// carrying the mass of ν below the lower cutoff. Other variants throw
/// UnsupportedVariant.
BernsteinQuadrature bernstein_quadrature(const MeasureKernel& k, int n_nodes, double t_lo);

} // namespace memodiff
