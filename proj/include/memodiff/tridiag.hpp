#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace memodiff {

using Vec = std::vector<double>;

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
struct SymTridiag {
    Vec diag;
    Vec off; // off[i] couples rows i and i+1

    SymTridiag() = default;
    explicit SymTridiag(std::size_t n) : diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0) {}

    std::size_t size() const noexcept { return diag.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const;
    Vec operator*(std::span<const double> x) const;
    /// xᵀ A y
    double bilinear(std::span<const double> x, std::span<const double> y) const;
    double quadratic(std::span<const double> x) const { return bilinear(x, x); }
    bool is_zero() const;
};

/// Linear combination a·A + b·B of two equally sized matrices.
SymTridiag combine(double a, const SymTridiag& A, double b, const SymTridiag& B);

/// LDLᵀ factorization of an SPD symmetric tridiagonal matrix; solve() is the
/// Thomas algorithm specialised to the symmetric case.
class TridiagFactor {
public:
    TridiagFactor() = default;
    /// Throws CoercivityViolation if a non-positive pivot appears.
    explicit TridiagFactor(const SymTridiag& a);

    std::size_t size() const noexcept { return d_.size(); }
    void solve_in_place(std::span<double> rhs) const;
    Vec solve(std::span<const double> rhs) const;

private:
    Vec d_;  // pivots
    Vec l_;  // unit lower bidiagonal multipliers
};

/// Number of generalized eigenvalues of the pencil (A, B) strictly below
/// `shift`, by Sylvester inertia of A - shift·B. B must be SPD.
std::size_t pencil_count_below(const SymTridiag& a, const SymTridiag& b, double shift);

/// k-th smallest (0-based) generalized eigenvalue of the pencil (A, B) with
/// A symmetric positive semidefinite and B SPD, by Sturm bisection.
double pencil_eigenvalue(const SymTridiag& a, const SymTridiag& b, std::size_t k,
                         double rel_tol = 1e-15);

double dot(std::span<const double> x, std::span<const double> y);
/// y += a·x
void axpy(double a, std::span<const double> x, std::span<double> y);

} // namespace memodiff
