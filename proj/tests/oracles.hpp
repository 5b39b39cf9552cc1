#pragma once
// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

/// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

/// ∫₀ˣ f for f ~ s^(−α) near 0, via s = r^p with p = 1/(1−α). The
/// transformed integrand is bounded; its value at r = 0 is taken as the limit.
inline double singular_integral(const std::function<double(double)>& f, double x, double alpha, int n = 4000) {
    if (x <= 0.0) return 0.0;
    const double p = 1.0 / (1.0 - alpha);
    const double R = std::pow(x, 1.0 / p);
    auto g = [&](double r) {
        const double rr = std::max(r, 1e-9 * R);
        return f(std::pow(rr, p)) * p * std::pow(rr, p - 1.0);
    };
    return simpson(g, 0.0, R, n);
}

/// Fractional density s^(−α)/Γ(1−α).
inline double fractional_density(double s, double alpha, double weight = 1.0) {
    return weight * std::pow(s, -alpha) / std::tgamma(1.0 - alpha);
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(Dense a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
        x[k] = s / a[k][k];
    }
    return x;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(Dense a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Generalized eigenvalues of (A, B), B SPD, via Cholesky B = LLᵀ and L⁻¹AL⁻ᵀ.
inline std::vector<double> generalized_eigenvalues(const Dense& A, const Dense& B) {
    const std::size_t n = A.size();
    Dense L(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = B[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
            L[i][j] = i == j ? std::sqrt(s) : s / L[j][j];
        }
    }
    // X = L⁻¹A, then C = X L⁻ᵀ = L⁻¹(L⁻¹A)ᵀ
    auto forward = [&](const Dense& M) {
        Dense X(n, std::vector<double>(n, 0.0));
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = M[i][c];
                for (std::size_t k = 0; k < i; ++k) s -= L[i][k] * X[k][c];
                X[i][c] = s / L[i][i];
            }
        }
        return X;
    };
    Dense X = forward(A);
    Dense Xt(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Xt[i][j] = X[j][i];
    return jacobi_eigenvalues(forward(Xt));
}

/// P1 matrices on (0, L) assembled from element integrals with a 3-point
/// Gauss rule evaluated independently of the library (exact for the constant
/// and linear coefficients used in the tests).
struct DenseFem {
    Dense mass, stiff;
};

inline DenseFem dense_fem(double length, int n_el, const std::function<double(double)>& a) {
    const int n = n_el - 1;
    const double h = length / n_el;
    DenseFem f{Dense(n, std::vector<double>(n, 0.0)), Dense(n, std::vector<double>(n, 0.0))};
    for (int e = 0; e < n_el; ++e) {
        const double x0 = e * h;
        // element integral of a(x) over [x0, x0+h] by Simpson (exact for linear a)
        const double abar = (a(x0) + 4.0 * a(x0 + 0.5 * h) + a(x0 + h)) / 6.0;
        const int ids[2] = {e - 1, e}; // interior indices of the element's nodes
        const double K[2][2] = {{abar / h, -abar / h}, {-abar / h, abar / h}};
        const double M[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                if (ids[i] < 0 || ids[i] >= n || ids[j] < 0 || ids[j] >= n) continue;
                f.stiff[ids[i]][ids[j]] += K[i][j];
                f.mass[ids[i]][ids[j]] += M[i][j];
            }
        }
    }
    return f;
}

/// Discrete decay factor of the lowest sine mode under implicit Euler with P1 FEM:
/// uⁿ = ρⁿ u⁰ with ρ = 1/(1 + Δt·λ_h), λ_h = (6/h²)(1−cos θ)/(2+cos θ), θ = kπh/L.
inline double discrete_heat_factor(double a, double length, int n_el, int mode, double dt) {
    const double h = length / n_el;
    const double theta = mode * std::numbers::pi * h / length;
    const double lambda = a * 6.0 / (h * h) * (1.0 - std::cos(theta)) / (2.0 + std::cos(theta));
    return 1.0 / (1.0 + dt * lambda);
}

/// Real root of λ + α = m·e^(−λτ) (m > 0) by Newton from λ = m − α.
inline double characteristic_root_newton(double alpha, double m, double tau) {
    double l = std::max(0.0, m - alpha);
    for (int i = 0; i < 100; ++i) {
        const double f = l + alpha - m * std::exp(-l * tau);
        const double df = 1.0 + m * tau * std::exp(-l * tau);
        const double step = f / df;
        l -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return l;
}

/// Smallest eigenvalue of the symmetric part of the lower-triangular Toeplitz
/// matrix with first column w: the scalar discrete positivity certificate.
inline double toeplitz_symmetric_min_eigenvalue(const std::vector<double>& w, std::size_t n) {
    Dense a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = (i - j) < w.size() ? w[i - j] : 0.0;
            a[i][j] += 0.5 * v;
            a[j][i] += 0.5 * v;
        }
    }
    return jacobi_eigenvalues(a).front();
}

/// Least-squares slope and R² of log y against log x over the last `last` points.
struct Fit {
    double slope = 0.0;
    double r2 = 0.0;
};

inline Fit loglog_fit(const std::vector<double>& x, const std::vector<double>& y, std::size_t last = 4) {
    const std::size_t n = std::min(last, x.size());
    const std::size_t off = x.size() - n;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = off; i < x.size(); ++i) {
        const double a = std::log(x[i]);
        const double b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
        syy += b * b;
    }
    const double cxx = sxx - sx * sx / n;
    const double cxy = sxy - sx * sy / n;
    const double cyy = syy - sy * sy / n;
    return {cxy / cxx, cyy > 0 ? cxy * cxy / (cxx * cyy) : 1.0};
}

} // namespace oracle
