#include "memodiff/quadrature.hpp"

#include "memodiff/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace memodiff::quad {

Rule gauss_legendre(int order) {
    if (order < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 1");
    Rule r;
    r.nodes.resize(static_cast<std::size_t>(order));
    r.weights.resize(static_cast<std::size_t>(order));
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at converged node
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[static_cast<std::size_t>(i)] = -x;
        r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(i)] = w;
        r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n == 1) {
        r.nodes[0] = 0.0;
        r.weights[0] = 2.0;
    }
    return r;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (b <= a) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, double tol,
                           double singular_power) {
    if (b <= a) return 0.0;
    std::vector<double> cuts{a};
    for (double c : breakpoints)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0;
    const double panel_tol = tol / static_cast<double>(cuts.size());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (i == 0 && singular_power > 1.0) {
            const double p = singular_power;
            const double len = hi - lo;
            auto g = [&](double r) {
                if (r <= 0.0) return 0.0;
                return f(lo + len * std::pow(r, p)) * len * p * std::pow(r, p - 1.0);
            };
            total += adaptive_simpson(g, 0.0, 1.0, panel_tol);
        } else {
            total += adaptive_simpson(f, lo, hi, panel_tol);
        }
    }
    return total;
}

} // namespace memodiff::quad
