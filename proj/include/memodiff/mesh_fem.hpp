#pragma once

#include "memodiff/tridiag.hpp"

#include <functional>
#include <span>
#include <vector>

namespace memodiff {

/// Uniform partition of (0, L) with homogeneous Dirichlet ends.
class Mesh1D {
public:
    Mesh1D(double length, int n_elements);

    double length() const noexcept { return length_; }
    int n_elements() const noexcept { return n_elements_; }
    double h() const noexcept { return length_ / n_elements_; }
    /// Interior degrees of freedom (nodes 1 … n_elements-1).
    std::size_t n_dofs() const noexcept { return static_cast<std::size_t>(n_elements_ - 1); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    std::vector<double> interior_nodes() const;

private:
    double length_;
    int n_elements_;
    std::vector<double> nodes_;
};

Mesh1D build_mesh(double length, int n_elements);

/// Scalar coefficient a(x) with declared bounds a_min ≤ a(x) ≤ a_max.
struct CoefficientField {
    std::function<double(double)> eval;
    double a_min = 0.0;
    double a_max = 0.0;

    static CoefficientField constant(double value);
    /// a(x) = c0 + c1·x on [0, L]
    static CoefficientField linear(double c0, double c1, double length);
};

/// P1 matrices on interior nodes: mass M, stiffness for a₀ and a₁, and the
/// unit-coefficient stiffness S that defines |v|_V.
struct FemMatrices {
    double h = 0.0;
    SymTridiag mass;
    SymTridiag stiff0;
    SymTridiag stiff1;
    SymTridiag laplace;
    TridiagFactor laplace_factor;

    std::size_t n_dofs() const noexcept { return mass.size(); }
};

/// Midpoint-rule assembly. Throws CoercivityViolation when a0.a_min ≤ 0 or a
/// sampled coefficient leaves its declared bounds.
FemMatrices assemble(const Mesh1D& mesh, const CoefficientField& a0, const CoefficientField& a1);

double norm_H(std::span<const double> v, const FemMatrices& m);
double seminorm_V(std::span<const double> v, const FemMatrices& m);
/// √(gᵀ S⁻¹ g): the discrete V* norm of a load vector.
double dual_norm(std::span<const double> g, const FemMatrices& m);

struct FormConstants {
    double alpha0 = 0.0;  // min eigenvalue of (K0, S)
    double Lambda0 = 0.0; // max eigenvalue of (K0, S)
    double alpha1 = 0.0;  // min eigenvalue of (K1, S)
    double Lambda1 = 0.0; // max eigenvalue of (K1, S)
};

FormConstants form_constants(const FemMatrices& m);

/// Nodal interpolant on the interior nodes.
std::vector<double> interpolate(const Mesh1D& mesh, const std::function<double(double)>& fn);

/// P1 load vector of a nodal function: M·f.
std::vector<double> load_vector(const FemMatrices& m, std::span<const double> nodal);

} // namespace memodiff
