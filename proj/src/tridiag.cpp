#include "memodiff/tridiag.hpp"

#include "memodiff/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace memodiff {

void SymTridiag::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    if (x.size() != n || y.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "tridiagonal multiply");
    }
    if (n == 0) return;
    for (std::size_t i = 0; i < n; ++i) {
        double v = diag[i] * x[i];
        if (i > 0) v += off[i - 1] * x[i - 1];
        if (i + 1 < n) v += off[i] * x[i + 1];
        y[i] = v;
    }
}

Vec SymTridiag::operator*(std::span<const double> x) const {
    Vec y(size());
    multiply(x, y);
    return y;
}

double SymTridiag::bilinear(std::span<const double> x, std::span<const double> y) const {
    const std::size_t n = size();
    if (x.size() != n || y.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "tridiagonal bilinear form");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += diag[i] * x[i] * y[i];
        if (i + 1 < n) s += off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
    }
    return s;
}

bool SymTridiag::is_zero() const {
    for (double v : diag)
        if (v != 0.0) return false;
    for (double v : off)
        if (v != 0.0) return false;
    return true;
}

SymTridiag combine(double a, const SymTridiag& A, double b, const SymTridiag& B) {
    if (A.size() != B.size()) throw Error(ErrorCode::DimensionMismatch, "combine");
    SymTridiag C(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) C.diag[i] = a * A.diag[i] + b * B.diag[i];
    for (std::size_t i = 0; i < A.off.size(); ++i) C.off[i] = a * A.off[i] + b * B.off[i];
    return C;
}

TridiagFactor::TridiagFactor(const SymTridiag& a) : d_(a.size()), l_(a.off.size()) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        double piv = a.diag[i];
        if (i > 0) piv -= l_[i - 1] * l_[i - 1] * d_[i - 1];
        if (!(piv > 0.0) || !std::isfinite(piv)) {
            throw Error(ErrorCode::CoercivityViolation,
                        "system matrix is not positive definite (pivot " + std::to_string(i) + ")");
        }
        d_[i] = piv;
        if (i + 1 < n) l_[i] = a.off[i] / piv;
    }
}

void TridiagFactor::solve_in_place(std::span<double> rhs) const {
    const std::size_t n = d_.size();
    if (rhs.size() != n) throw Error(ErrorCode::DimensionMismatch, "tridiagonal solve");
    for (std::size_t i = 1; i < n; ++i) rhs[i] -= l_[i - 1] * rhs[i - 1];
    for (std::size_t i = 0; i < n; ++i) rhs[i] /= d_[i];
    for (std::size_t i = n; i-- > 1;) rhs[i - 1] -= l_[i - 1] * rhs[i];
}

Vec TridiagFactor::solve(std::span<const double> rhs) const {
    Vec x(rhs.begin(), rhs.end());
    solve_in_place(x);
    return x;
}

std::size_t pencil_count_below(const SymTridiag& a, const SymTridiag& b, double shift) {
    const std::size_t n = a.size();
    std::size_t count = 0;
    double prev = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double piv = a.diag[i] - shift * b.diag[i];
        if (i > 0) {
            const double c = a.off[i - 1] - shift * b.off[i - 1];
            piv -= c * c / prev;
        }
        if (piv == 0.0) piv = -std::numeric_limits<double>::epsilon() * (std::abs(a.diag[i]) + 1.0);
        if (piv < 0.0) ++count;
        prev = piv;
    }
    return count;
}

double pencil_eigenvalue(const SymTridiag& a, const SymTridiag& b, std::size_t k, double rel_tol) {
    const std::size_t n = a.size();
    if (b.size() != n) throw Error(ErrorCode::DimensionMismatch, "pencil sizes differ");
    if (k >= n) throw Error(ErrorCode::InvalidArgument, "eigenvalue index out of range");
    double lo = 0.0;
    double hi = 1.0;
    while (pencil_count_below(a, b, hi) <= k) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw Error(ErrorCode::NonFinite, "pencil eigenvalue bracket");
    }
    if (pencil_count_below(a, b, lo) > k) {
        // A indefinite; widen downward.
        lo = -1.0;
        while (pencil_count_below(a, b, lo) > k) lo *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= rel_tol * std::max(std::abs(lo), std::abs(hi))) break;
        if (mid <= lo || mid >= hi) break;
        if (pencil_count_below(a, b, mid) > k) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "dot");
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

} // namespace memodiff
