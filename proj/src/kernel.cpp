#include "memodiff/kernel.hpp"

#include "memodiff/error.hpp"
#include "memodiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace memodiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double hat(double r) { return std::max(0.0, 1.0 - std::abs(r)); }

double hat_cdf(double r) {
    if (r <= -1.0) return 0.0;
    if (r <= 0.0) return 0.5 * (1.0 + r) * (1.0 + r);
    if (r < 1.0) return 1.0 - 0.5 * (1.0 - r) * (1.0 - r);
    return 1.0;
}

double tabulated_eval(const Tabulated& t, double s) {
    const auto& g = t.grid;
    if (g.empty() || s < g.front() || s > g.back()) return 0.0;
    auto it = std::upper_bound(g.begin(), g.end(), s);
    if (it == g.end()) return t.values.back();
    const std::size_t i = static_cast<std::size_t>(it - g.begin());
    if (i == 0) return t.values.front();
    const double x0 = g[i - 1];
    const double x1 = g[i];
    const double th = (s - x0) / (x1 - x0);
    return (1.0 - th) * t.values[i - 1] + th * t.values[i];
}

double tabulated_cdf(const Tabulated& t, double s) {
    const auto& g = t.grid;
    if (g.empty() || s <= g.front()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (s >= g[i]) {
            acc += 0.5 * (g[i] - g[i - 1]) * (t.values[i] + t.values[i - 1]);
        } else {
            const double v = tabulated_eval(t, s);
            acc += 0.5 * (s - g[i - 1]) * (v + t.values[i - 1]);
            break;
        }
    }
    return acc;
}

double raw_density(const AcDensity& ac, double s) {
    return std::visit(overloaded{
                          [](const NoDensity&) { return 0.0; },
                          [s](const Fractional& f) {
                              return f.weight * std::pow(s, -f.alpha) / std::tgamma(1.0 - f.alpha);
                          },
                          [s](const Exponential& e) { return e.mass * e.beta * std::exp(-e.beta * s); },
                          [s](const Mollified& m) { return m.mass / m.eps * hat((s - m.tau) / m.eps); },
                          [s](const Tabulated& t) { return tabulated_eval(t, s); },
                      },
                      ac);
}

double raw_cdf(const AcDensity& ac, double s) {
    if (s <= 0.0) return 0.0;
    return std::visit(overloaded{
                          [](const NoDensity&) { return 0.0; },
                          [s](const Fractional& f) {
                              return f.weight * std::pow(s, 1.0 - f.alpha) / std::tgamma(2.0 - f.alpha);
                          },
                          [s](const Exponential& e) { return e.mass * -std::expm1(-e.beta * s); },
                          [s](const Mollified& m) { return m.mass * hat_cdf((s - m.tau) / m.eps); },
                          [s](const Tabulated& t) { return tabulated_cdf(t, s); },
                      },
                      ac);
}

void density_breakpoints(const MeasureKernel& k, std::vector<double>& out) {
    out.push_back(k.tau_max);
    std::visit(overloaded{
                   [](const auto&) {},
                   [&out](const Mollified& m) {
                       out.push_back(m.tau - m.eps);
                       out.push_back(m.tau);
                       out.push_back(m.tau + m.eps);
                   },
                   [&out](const Tabulated& t) { out.insert(out.end(), t.grid.begin(), t.grid.end()); },
               },
               k.ac);
}

double singular_exponent(const MeasureKernel& k) {
    if (const auto* f = std::get_if<Fractional>(&k.ac)) return f->alpha;
    return 0.0;
}

} // namespace

void validate(const MeasureKernel& k) {
    if (!(k.tau_max > 0.0) || !std::isfinite(k.tau_max)) {
        throw Error(ErrorCode::InvalidArgument, "tau_max must be positive");
    }
    std::visit(overloaded{
                   [](const NoDensity&) {},
                   [](const Fractional& f) {
                       if (!(f.alpha > 0.0 && f.alpha < 1.0))
                           throw Error(ErrorCode::InvalidArgument, "fractional alpha must lie in (0,1)");
                       if (!(f.weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fractional weight must be >= 0");
                   },
                   [](const Exponential& e) {
                       if (!(e.beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "exponential beta must be positive");
                       if (!(e.mass >= 0.0)) throw Error(ErrorCode::InvalidArgument, "exponential mass must be >= 0");
                   },
                   [&k](const Mollified& m) {
                       if (!(m.eps > 0.0) || !(m.tau > 0.0) || !(m.mass >= 0.0))
                           throw Error(ErrorCode::InvalidArgument, "mollified delay needs mass >= 0, tau > 0, eps > 0");
                       if (m.eps >= m.tau)
                           throw Error(ErrorCode::InvalidArgument, "mollifier width must satisfy eps < tau");
                       if (m.tau + m.eps > k.tau_max * (1.0 + 1e-12))
                           throw Error(ErrorCode::InvalidArgument, "mollified support exceeds tau_max");
                   },
                   [](const Tabulated& t) {
                       if (t.grid.size() != t.values.size() || t.grid.size() < 2)
                           throw Error(ErrorCode::InvalidArgument, "tabulated density needs >= 2 matching samples");
                       if (t.grid.front() < 0.0)
                           throw Error(ErrorCode::InvalidArgument, "tabulated grid must start at s >= 0");
                       for (std::size_t i = 1; i < t.grid.size(); ++i)
                           if (!(t.grid[i] > t.grid[i - 1]))
                               throw Error(ErrorCode::InvalidArgument, "tabulated grid must be strictly increasing");
                       for (double v : t.values)
                           if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tabulated density must be >= 0");
                   },
               },
               k.ac);
    for (const Atom& a : k.atoms) {
        if (!(a.tau > 0.0) || !(a.mass > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "atoms need tau > 0 and mass > 0");
        }
        if (a.tau > k.tau_max * (1.0 + 1e-12)) {
            throw Error(ErrorCode::InvalidArgument,
                        "atom at tau=" + std::to_string(a.tau) + " lies beyond tau_max=" + std::to_string(k.tau_max));
        }
    }
}

MeasureKernel no_memory(double tau_max) {
    MeasureKernel k{NoDensity{}, {}, tau_max};
    validate(k);
    return k;
}

MeasureKernel fractional_kernel(double alpha, double tau_max, double weight) {
    MeasureKernel k{Fractional{alpha, weight}, {}, tau_max};
    validate(k);
    return k;
}

MeasureKernel exponential_kernel(double beta, double mass, double tau_max) {
    MeasureKernel k{Exponential{beta, mass}, {}, tau_max};
    validate(k);
    return k;
}

MeasureKernel atom_kernel(double tau, double mass) {
    MeasureKernel k{NoDensity{}, {Atom{tau, mass}}, tau};
    validate(k);
    return k;
}

MeasureKernel mixed_kernel(AcDensity ac, std::vector<Atom> atoms, double tau_max) {
    if (tau_max <= 0.0) {
        for (const Atom& a : atoms) tau_max = std::max(tau_max, a.tau);
    }
    MeasureKernel k{std::move(ac), std::move(atoms), tau_max};
    validate(k);
    return k;
}

MeasureKernel mollify_delay(double mass, double tau, double eps) {
    if (!(eps > 0.0) || !(tau > 0.0) || !(mass > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "mollify_delay needs positive mass, tau and eps");
    }
    if (eps >= tau) {
        throw Error(ErrorCode::InvalidArgument, "mollify_delay requires eps < tau");
    }
    MeasureKernel k{Mollified{mass, tau, eps}, {}, tau + eps};
    validate(k);
    return k;
}

double eval_density(const MeasureKernel& k, double s) {
    if (!(s > 0.0) || s > k.tau_max) return 0.0;
    return raw_density(k.ac, s);
}

double density_cdf(const MeasureKernel& k, double s) {
    return raw_cdf(k.ac, std::min(s, k.tau_max));
}

double total_mass(const MeasureKernel& k, double T) {
    double m = density_cdf(k, T);
    for (const Atom& a : k.atoms)
        if (a.tau <= T) m += a.mass;
    return m;
}

MeasureKernel restrict(const MeasureKernel& k, double T) {
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "restriction horizon must be positive");
    MeasureKernel r = k;
    r.tau_max = std::min(k.tau_max, T);
    std::erase_if(r.atoms, [T](const Atom& a) { return a.tau > T; });
    return r;
}

MeasureKernel scaled(const MeasureKernel& k, double factor) {
    if (!(factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "scale factor must be >= 0");
    MeasureKernel r = k;
    std::visit(overloaded{
                   [](NoDensity&) {},
                   [factor](Fractional& f) { f.weight *= factor; },
                   [factor](Exponential& e) { e.mass *= factor; },
                   [factor](Mollified& m) { m.mass *= factor; },
                   [factor](Tabulated& t) {
                       for (double& v : t.values) v *= factor;
                   },
               },
               r.ac);
    for (Atom& a : r.atoms) a.mass *= factor;
    if (factor == 0.0) r.atoms.clear();
    return r;
}

double tv_distance(const MeasureKernel& k1, const MeasureKernel& k2, double T) {
    double ac = 0.0;
    const bool same_density = k1.ac == k2.ac && std::min(k1.tau_max, T) == std::min(k2.tau_max, T);
    if (!same_density) {
        std::vector<double> cuts;
        density_breakpoints(k1, cuts);
        density_breakpoints(k2, cuts);
        const double alpha = std::max(singular_exponent(k1), singular_exponent(k2));
        const double p = alpha > 0.0 ? std::max(2.0, 2.0 / (1.0 - alpha)) : 1.0;
        auto diff = [&](double s) { return std::abs(eval_density(k1, s) - eval_density(k2, s)); };
        ac = quad::integrate_piecewise(diff, 0.0, T, cuts, 1e-13, p);
    }
    std::map<double, double> net;
    for (const Atom& a : k1.atoms)
        if (a.tau <= T) net[a.tau] += a.mass;
    for (const Atom& a : k2.atoms)
        if (a.tau <= T) net[a.tau] -= a.mass;
    double at = 0.0;
    for (const auto& [tau, m] : net) at += std::abs(m);
    return ac + at;
}

double BernsteinQuadrature::reconstruct(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * std::exp(-nodes[i] * t);
    return s;
}

BernsteinQuadrature bernstein_quadrature(const MeasureKernel& k, int n_nodes, double t_lo) {
    if (n_nodes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one Bernstein node");
    BernsteinQuadrature q;
    q.t_hi = k.tau_max;
    if (const auto* e = std::get_if<Exponential>(&k.ac)) {
        q.nodes = {e->beta};
        q.weights = {e->mass * e->beta};
        q.t_lo = t_lo;
        q.error_bound = 0.0;
        return q;
    }
    const auto* f = std::get_if<Fractional>(&k.ac);
    if (f == nullptr) {
        throw Error(ErrorCode::UnsupportedVariant, "Bernstein quadrature needs an exponential or fractional density");
    }
    if (!(t_lo > 0.0) || !(t_lo < k.tau_max)) {
        throw Error(ErrorCode::InvalidArgument, "t_lo must lie in (0, tau_max)");
    }
    q.t_lo = t_lo;
    const double alpha = f->alpha;
    // ν(λ) = w·sin(πα)/π·λ^(α−1); with λ = eᵘ the integrand is c·e^(αu)·e^(−eᵘt).
    const double c = f->weight * std::sin(std::numbers::pi * alpha) / std::numbers::pi;
    const double u_lo = std::log(1.0 / (10.0 * k.tau_max));
    const double u_hi = std::log(10.0 / t_lo);

    constexpr int panel_order = 8;
    const int n_panels = std::max(1, n_nodes / panel_order);
    const double width = (u_hi - u_lo) / n_panels;
    q.nodes.reserve(static_cast<std::size_t>(n_nodes));
    q.weights.reserve(static_cast<std::size_t>(n_nodes));
    for (int p = 0; p < n_panels; ++p) {
        const int order = n_nodes / n_panels + (p < n_nodes % n_panels ? 1 : 0);
        const auto rule = quad::gauss_legendre(order);
        const double a = u_lo + p * width;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double u = a + 0.5 * width * (rule.nodes[i] + 1.0);
            q.nodes.push_back(std::exp(u));
            q.weights.push_back(c * std::exp(alpha * u) * 0.5 * width * rule.weights[i]);
        }
    }

    // Mass of ν below λ_min, lumped at its mean so the slow tail is not lost.
    const double lambda_min = std::exp(u_lo);
    q.nodes.push_back(lambda_min * alpha / (1.0 + alpha));
    q.weights.push_back(c * std::pow(lambda_min, alpha) / alpha);

    constexpr int n_probe = 200;
    const double lt0 = std::log(t_lo);
    const double lt1 = std::log(k.tau_max);
    double worst = 0.0;
    for (int i = 0; i < n_probe; ++i) {
        const double t = std::exp(lt0 + (lt1 - lt0) * i / (n_probe - 1));
        const double exact = raw_density(k.ac, t);
        worst = std::max(worst, std::abs(exact - q.reconstruct(t)) / exact);
    }
    q.error_bound = worst;
    return q;
}

} // namespace memodiff
