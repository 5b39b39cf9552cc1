#pragma once

#include <functional>
#include <span>
#include <vector>

namespace memodiff::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss–Legendre rule of the given order on [-1, 1] (Newton on P_n).
Rule gauss_legendre(int order);

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, int max_depth = 40);

/// Adaptive Simpson over [a, b] split at the given interior breakpoints.
/// The first panel [a, first breakpoint] may be integrated through the
/// substitution s = a + (c-a)·r^p to tame an integrable endpoint singularity
/// at `a` (p = 1 disables it).
double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, double tol = 1e-13,
                           double singular_power = 1.0);

} // namespace memodiff::quad
