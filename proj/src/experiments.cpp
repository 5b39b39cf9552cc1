#include "memodiff/experiments.hpp"

#include "memodiff/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

namespace memodiff {

namespace {

constexpr double kPi = std::numbers::pi;

/// Runs f(i) for i in [0, n) on up to `threads` workers; results are written by index.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

CoefficientField coefficient(const CoefficientSpec& c, double length) {
    return c.c1 == 0.0 ? CoefficientField::constant(c.c0) : CoefficientField::linear(c.c0, c.c1, length);
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double r = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + r * (ys[i] - ys[i - 1]);
}

Assertion check_le(std::string name, double value, double bound) {
    return {std::move(name), value, bound, value <= bound};
}

Assertion check_ge(std::string name, double value, double bound) {
    return {std::move(name), value, bound, value >= bound};
}

double max_nodal_error(const Trajectory& u, const Mesh1D& mesh, const std::function<double(double, double)>& exact) {
    const auto xs = mesh.interior_nodes();
    double worst = 0.0;
    for (int n = 0; n <= u.last_index(); ++n) {
        const auto un = u.at(n);
        const double t = u.grid().time(n);
        for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(un[i] - exact(t, xs[i])));
    }
    return worst;
}

/// Largest ratio v[i]/v[i-1]; < 1 means strictly decreasing.
double worst_successive_ratio(const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] / v[i - 1]);
    return worst;
}

double linf_H(const Trajectory& a, const Trajectory& b, const FemMatrices& fem) { return linfH_distance(a, b, fem); }

bool heat_oracle_applies(const Scenario& s) {
    return s.kernel.is_zero() && s.forcing.type == "zero" && s.initial.type == "eigenmode" && s.a0.c1 == 0.0;
}

} // namespace

ProblemSpec build_problem(const Scenario& s) { return build_problem(s, s.kernel); }

ProblemSpec build_problem(const Scenario& s, const MeasureKernel& k) {
    const Mesh1D mesh = build_mesh(s.length, s.n_elements);
    const FemMatrices fem = assemble(mesh, coefficient(s.a0, s.length), coefficient(s.a1, s.length));
    const double L = s.length;

    Vec u0;
    const FieldSpec& ini = s.initial;
    if (ini.type == "zero") {
        u0.assign(mesh.n_dofs(), 0.0);
    } else if (ini.type == "constant") {
        u0.assign(mesh.n_dofs(), ini.amplitude);
    } else {
        const double kx = ini.mode * kPi / L;
        u0 = interpolate(mesh, [&](double x) { return ini.amplitude * std::sin(kx * x); });
    }

    NodalFn forcing;
    const FieldSpec& f = s.forcing;
    const double kx = f.mode * kPi / L;
    if (f.type == "eigenmode") {
        forcing = nodal_function(mesh, [a = f.amplitude, r = f.rate, kx](double t, double x) {
            return a * std::exp(-r * t) * std::sin(kx * x);
        });
    } else if (f.type == "tabulated") {
        forcing = nodal_function(mesh, [f, kx](double t, double x) { return interp(f.times, f.values, t) * std::sin(kx * x); });
    } else if (f.type == "manufactured") {
        // u*(t,x) = A·e^(−t)·sin(kx) with constant a0, a1 and an exponential (or no) kernel
        if (s.a0.c1 != 0.0 || s.a1.c1 != 0.0) {
            throw Error(ErrorCode::ConfigInvalid, "forcing.manufactured: needs constant coefficients");
        }
        double beta = 1.0;
        double mass = 0.0;
        if (const auto* e = std::get_if<Exponential>(&k.ac); e != nullptr && !k.has_atoms()) {
            beta = e->beta;
            mass = e->mass;
        } else if (!k.is_zero()) {
            throw Error(ErrorCode::ConfigInvalid, "forcing.manufactured: needs an exponential kernel or none");
        }
        const double A0 = s.a0.c0;
        const double A1 = s.a1.c0;
        const double amp = f.amplitude;
        forcing = nodal_function(mesh, [=](double t, double x) {
            // (μ*e^{-·})(t) = mβe^{-t}∫₀ᵗ e^{-(β-1)s} ds
            const double g = std::abs(beta - 1.0) < 1e-14 ? t : (1.0 - std::exp(-(beta - 1.0) * t)) / (beta - 1.0);
            const double k2 = kx * kx;
            return amp * std::exp(-t) * std::sin(kx * x) * (-1.0 + A0 * k2 + A1 * k2 * mass * beta * g);
        });
    }

    NodalFn history;
    const FieldSpec& h = s.history;
    if (h.type == "zero") {
        history = [u0](double t) { return t < 0.0 ? Vec(u0.size(), 0.0) : u0; };
    } else if (h.type == "tabulated") {
        history = [u0, h](double t) {
            Vec v = u0;
            const double a = interp(h.times, h.values, t);
            for (double& x : v) x *= a;
            return v;
        };
    }

    return ProblemSpec{mesh, fem, k, forcing, u0, history, s.T, s.dt};
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, std::size_t last) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "fit_loglog sizes differ");
    const std::size_t n = std::min(last, x.size());
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "fit needs at least two points");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = x.size() - n; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-log fit needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

std::vector<double> SweepResult::column(std::size_t i) const {
    std::vector<double> c;
    for (const auto& r : rows) c.push_back(r.at(i));
    return c;
}

bool ExperimentResult::all_pass() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

ExperimentResult run_solve(const Scenario& s, const RunOptions&) {
    ExperimentResult r;
    r.name = "solve";
    const ProblemSpec p = build_problem(s);
    Solution sol = solve(p);
    const Trajectory& u = sol.trajectory;

    if (heat_oracle_applies(s)) {
        const double kx = s.initial.mode * kPi / s.length;
        const double rate = s.a0.c0 * kx * kx;
        const double amp = s.initial.amplitude;
        const double err = max_nodal_error(u, p.mesh, [&](double t, double x) {
            return amp * std::exp(-rate * t) * std::sin(kx * x);
        });
        r.assertions.push_back(check_le("heat_oracle_max_nodal_error", err, s.oracle_tol));
    }
    if (s.forcing.type == "manufactured") {
        const double kx = s.forcing.mode * kPi / s.length;
        const double amp = s.forcing.amplitude;
        const double err = max_nodal_error(u, p.mesh, [&](double t, double x) {
            return amp * std::exp(-t) * std::sin(kx * x);
        });
        r.assertions.push_back(check_le("manufactured_max_nodal_error", err, s.oracle_tol));
    }

    const AprioriReport ap = apriori_bound_check(u, p);
    r.assertions.push_back(check_le("apriori_bound_ratio", ap.ratio, 1.0));

    const bool cm = is_completely_monotone(p.kernel);
    EnergyReport en = energy_inequality_report(u, p, cm ? EnergyMode::Strict : EnergyMode::Audit);
    if (cm) {
        r.assertions.push_back(check_le("energy_inequality_worst_slack", en.worst_slack, 0.0));
        r.assertions.push_back(check_ge("cumulative_dissipation_min", en.min_D_mu, -1e-10 * std::max(1.0, en.half_uH2.front())));
    } else {
        r.notes.push_back(fmt::format("energy audit: {} steps with negative cumulative dissipation, min D_mu={:.6g}",
                                      en.negative_dissipation_steps, en.min_D_mu));
    }
    const TimeDerivativeSeries ts = dt_dual_norm_series(u, p);
    r.assertions.push_back(check_le("time_derivative_bound_ratio", ts.bound_ratio, 1.0 + 1e-12));
    r.notes.push_back(fmt::format("max linear residual {:.3g}, wall {:.3g}s", sol.report.max_linear_residual,
                                  sol.report.wall_seconds));
    r.trajectory = std::move(sol.trajectory);
    r.energy = std::move(en);
    return r;
}

ExperimentResult run_vanishing_memory(const Scenario& s, const RunOptions& opt) {
    if (!is_completely_monotone(s.kernel)) {
        throw Error(ErrorCode::ConfigInvalid, "vanishing_memory: kernel must be fractional or exponential");
    }
    ExperimentResult r;
    r.name = "vanishing_memory";
    const ProblemSpec base = build_problem(s, no_memory(s.kernel.tau_max));
    const Trajectory ref = solve(base).trajectory;

    const auto levels = static_cast<std::size_t>(s.levels);
    std::vector<double> mass(levels);
    std::vector<double> eH(levels);
    std::vector<double> eV(levels);
    parallel_for(levels, opt.threads, [&](std::size_t n) {
        ProblemSpec p = base;
        p.kernel = scaled(s.kernel, std::ldexp(1.0, -static_cast<int>(n)));
        const Trajectory u = solve(p).trajectory;
        mass[n] = total_mass(p.kernel, s.T);
        eH[n] = linf_H(u, ref, p.fem);
        eV[n] = l2V_distance(u, ref, p.fem);
    });

    SweepResult sw;
    sw.columns = {"level", "mass", "error_LinfH", "error_L2V"};
    for (std::size_t n = 0; n < levels; ++n) sw.rows.push_back({static_cast<double>(n), mass[n], eH[n], eV[n]});
    if (mass.front() == 0.0 || eV.front() == 0.0) {
        r.notes.push_back("zero kernel mass: all errors vanish");
        r.assertions.push_back(check_le("vanishing_memory_max_error", *std::max_element(eV.begin(), eV.end()), 0.0));
        r.sweep = std::move(sw);
        return r;
    }
    const LogLogFit fitV = fit_loglog(mass, eV, 4);
    const LogLogFit fitH = fit_loglog(mass, eH, 4);
    sw.fit = fitV;
    r.assertions.push_back(check_ge("vanishing_memory_slope_L2V_min", fitV.slope, 0.9));
    r.assertions.push_back(check_le("vanishing_memory_slope_L2V_max", fitV.slope, 1.1));
    r.assertions.push_back(check_ge("vanishing_memory_r2_L2V", fitV.r2, 0.98));
    r.assertions.push_back(check_le("vanishing_memory_error_ratio", worst_successive_ratio(eV), 1.0 - 1e-12));
    r.notes.push_back(fmt::format("L-infinity(H) slope {:.4f} (R2 {:.5f})", fitH.slope, fitH.r2));
    r.sweep = std::move(sw);
    return r;
}

ExperimentResult run_memory_to_delay(const Scenario& s, const RunOptions& opt) {
    const MeasureKernel& k = s.kernel;
    if (k.has_density() || k.atoms.size() != 1) {
        throw Error(ErrorCode::ConfigInvalid, "memory_to_delay: kernel must be a single atom");
    }
    const double tau = k.atoms.front().tau;
    const double m = k.atoms.front().mass;
    ExperimentResult r;
    r.name = "memory_to_delay";
    r.notes.push_back("consistency check: smooth eigenmode data, convergence only is asserted");
    for (double frac : s.eps_fractions) {
        const double eps = frac * tau;
        if (2.0 * eps / s.dt < 8.0 - 1e-9) {
            throw Error(ErrorCode::Resolution,
                        fmt::format("eps={} spans {:.3g} cells across 2*eps; at least 8 are required", eps, 2.0 * eps / s.dt));
        }
        if (tau + eps > s.T * (1.0 + 1e-12)) {
            throw Error(ErrorCode::ConfigInvalid, fmt::format("memory_to_delay: tau+eps={} exceeds T", tau + eps));
        }
    }
    const ProblemSpec base = build_problem(s, k);
    const Trajectory exact = solve(base).trajectory;

    const std::size_t n = s.eps_fractions.size();
    std::vector<double> eps(n);
    std::vector<double> eC(n);
    std::vector<double> eV(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
        eps[i] = s.eps_fractions[i] * tau;
        ProblemSpec p = base;
        p.kernel = mollify_delay(m, tau, eps[i]);
        const Trajectory u = solve(p).trajectory;
        eC[i] = linf_H(u, exact, p.fem);
        eV[i] = l2V_distance(u, exact, p.fem);
    });
    SweepResult sw;
    sw.columns = {"eps", "error_CH", "error_L2V"};
    for (std::size_t i = 0; i < n; ++i) sw.rows.push_back({eps[i], eC[i], eV[i]});
    if (n >= 3) {
        sw.fit = fit_loglog(eps, eC, 4);
        r.notes.push_back(fmt::format("observed order in eps: {:.3f} (C(H)), {:.3f} (L2(V))", sw.fit->slope,
                                      fit_loglog(eps, eV, 4).slope));
    }
    r.assertions.push_back(check_le("memory_to_delay_CH_ratio", worst_successive_ratio(eC), 1.0 - 1e-12));
    r.assertions.push_back(check_le("memory_to_delay_L2V_ratio", worst_successive_ratio(eV), 1.0 - 1e-12));
    r.sweep = std::move(sw);
    return r;
}

namespace {

std::vector<KernelPair> default_pairs() {
    return {
        {exponential_kernel(1.0, 0.1, 1.0), exponential_kernel(1.0, 0.12, 1.0)},
        {exponential_kernel(1.0, 0.2, 1.0), exponential_kernel(2.0, 0.2, 1.0)},
        {exponential_kernel(0.5, 0.05, 1.0), exponential_kernel(0.5, 0.3, 1.0)},
        {fractional_kernel(0.5, 1.0, 0.1), fractional_kernel(0.5, 1.0, 0.15)},
        {fractional_kernel(0.3, 1.0, 0.2), fractional_kernel(0.6, 1.0, 0.2)},
        {atom_kernel(0.25, 0.2), atom_kernel(0.25, 0.3)},
        {atom_kernel(0.25, 0.2), mollify_delay(0.2, 0.25, 0.05)},
        {mixed_kernel(Exponential{1.0, 0.1}, {{0.5, 0.1}}, 1.0), mixed_kernel(Exponential{1.0, 0.1}, {{0.5, 0.2}}, 1.0)},
        {exponential_kernel(1.0, 0.2, 1.0), fractional_kernel(0.5, 1.0, 0.2)},
        {no_memory(1.0), exponential_kernel(1.0, 0.25, 1.0)},
        {exponential_kernel(1.0, 3.0, 1.0), exponential_kernel(1.0, 2.5, 1.0)}, // violates smallness
    };
}

} // namespace

ExperimentResult run_kernel_stability(const Scenario& s, const RunOptions& opt) {
    ExperimentResult r;
    r.name = "kernel_stability";
    const std::vector<KernelPair> pairs = s.pairs.empty() ? default_pairs() : s.pairs;
    const ProblemSpec base = build_problem(s, no_memory(s.T));
    const FormConstants fc = form_constants(base.fem);

    struct Row {
        double mass1 = 0.0, mass2 = 0.0, tv = 0.0, lhs = 0.0, rhs = 0.0;
        bool skipped = false;
    };
    std::vector<Row> rows(pairs.size());
    parallel_for(pairs.size(), opt.threads, [&](std::size_t i) {
        const auto& [k1, k2] = pairs[i];
        Row& row = rows[i];
        row.mass1 = total_mass(k1, s.T);
        row.mass2 = total_mass(k2, s.T);
        row.tv = tv_distance(k1, k2, s.T);
        if (fc.Lambda1 * row.mass1 > 0.5 * fc.alpha0) {
            row.skipped = true;
            return;
        }
        ProblemSpec p1 = base;
        p1.kernel = k1;
        ProblemSpec p2 = base;
        p2.kernel = k2;
        const Trajectory u1 = solve(p1).trajectory;
        const Trajectory u2 = solve(p2).trajectory;
        const TimeGrid& g = u2.grid();
        const QuadratureWeights w1 = build_weights(k1, g);
        const QuadratureWeights w2 = build_weights(k2, g);
        double rhs = 0.0;
        for (int n = 1; n <= g.n_steps; ++n) {
            Vec d = apply_memory(w1, base.fem, u2, n);
            axpy(-1.0, apply_memory(w2, base.fem, u2, n), d);
            const double dn = dual_norm(d, base.fem);
            rhs += g.dt * dn * dn;
        }
        row.rhs = 2.0 / fc.alpha0 * rhs;
        const double eH = linf_H(u1, u2, base.fem);
        const double eV = l2V_distance(u1, u2, base.fem);
        row.lhs = eH * eH + 0.5 * fc.alpha0 * eV * eV;
    });

    SweepResult sw;
    sw.columns = {"pair", "mass1", "mass2", "tv_distance", "lhs", "rhs", "ratio", "skipped"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        const double ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
        sw.rows.push_back({static_cast<double>(i), row.mass1, row.mass2, row.tv, row.lhs, row.rhs, ratio,
                           row.skipped ? 1.0 : 0.0});
        if (row.skipped) {
            r.notes.push_back(fmt::format("pair {} skipped: Lambda1*mass1={:.4g} exceeds alpha0/2={:.4g}", i,
                                          fc.Lambda1 * row.mass1, 0.5 * fc.alpha0));
            continue;
        }
        Assertion a{fmt::format("kernel_stability_pair_{}", i), row.lhs, row.rhs, row.lhs <= row.rhs * (1.0 + 1e-10)};
        r.assertions.push_back(a);
    }
    r.sweep = std::move(sw);
    return r;
}

ExperimentResult run_longtime(const Scenario& s, const RunOptions&) {
    if (!is_completely_monotone(s.kernel)) {
        throw Error(ErrorCode::ConfigInvalid, "longtime: kernel must be completely monotone");
    }
    if (s.forcing.type != "zero") throw Error(ErrorCode::ConfigInvalid, "longtime: forcing must be zero");
    ExperimentResult r;
    r.name = "longtime";
    const ProblemSpec p = build_problem(s);
    const auto start = std::chrono::steady_clock::now();
    Solution sol = solve(p);
    const Trajectory& u = sol.trajectory;
    EnergyReport en = energy_inequality_report(u, p, EnergyMode::Strict);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const int N = u.grid().n_steps;
    std::vector<int> checkpoints;
    for (int k = 0;; ++k) {
        const int nk = static_cast<int>(std::lround(N / std::ldexp(1.0, k)));
        if (nk < s.min_checkpoint_steps) break;
        checkpoints.push_back(nk);
    }
    std::reverse(checkpoints.begin(), checkpoints.end());

    const double half_u0 = en.half_uH2.front();
    std::vector<double> cumV(static_cast<std::size_t>(N) + 1, 0.0);
    for (int n = 1; n <= N; ++n) {
        cumV[static_cast<std::size_t>(n)] = cumV[static_cast<std::size_t>(n) - 1] + u.grid().dt * p.fem.laplace.quadratic(u.at(n));
    }
    SweepResult sw;
    sw.columns = {"t", "cum_a0", "half_u0_H2", "time_avg_V2", "D_mu"};
    std::vector<double> avg;
    double worst_dissipation = 0.0;
    for (int nk : checkpoints) {
        const auto k = static_cast<std::size_t>(nk);
        const double t = u.grid().time(nk);
        avg.push_back(cumV[k] / t);
        worst_dissipation = std::max(worst_dissipation, half_u0 > 0.0 ? en.cum_a0[k] / half_u0 : en.cum_a0[k]);
        sw.rows.push_back({t, en.cum_a0[k], half_u0, avg.back(), en.D_mu[k]});
    }
    r.assertions.push_back(check_le("longtime_dissipation_over_half_u0", worst_dissipation, 1.0));
    if (half_u0 > 0.0) {
        r.assertions.push_back(check_le("longtime_time_average_ratio", worst_successive_ratio(avg), 1.0 - 1e-12));
    }
    r.assertions.push_back(check_le("longtime_energy_worst_slack", en.worst_slack, 0.0));
    r.notes.push_back(fmt::format("solve + energy report wall time {:.3g}s over {} steps", wall, N));
    r.sweep = std::move(sw);
    r.trajectory = std::move(sol.trajectory);
    r.energy = std::move(en);
    return r;
}

double delay_characteristic_root(double alpha, double m, double tau) {
    if (m < 0.0) throw Error(ErrorCode::InvalidArgument, "real characteristic root is only guaranteed for m >= 0");
    if (m == 0.0) return -alpha;
    auto f = [&](double l) { return l + alpha - m * std::exp(-l * tau); };
    double lo = -alpha;
    double hi = std::max(0.0, m - alpha) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

DelayOdeTrace integrate_delay_ode(double alpha, double m, double tau, double T, double dt) {
    if (!(alpha > 0.0) || !(tau > 0.0) || !(T > 0.0) || !(dt > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "delay ODE needs alpha, tau, T, dt > 0");
    }
    const double ratio = tau / dt;
    const double lag_d = std::round(ratio);
    if (std::abs(ratio - lag_d) > 1e-9 || lag_d < 1.0) {
        throw Error(ErrorCode::MisalignedAtom, fmt::format("tau={} is not a multiple of dt={}", tau, dt));
    }
    const TimeGrid g = make_time_grid(T, dt, tau);
    const int lag = static_cast<int>(lag_d);
    const int N = g.n_steps;
    std::vector<double> x(static_cast<std::size_t>(N + lag) + 1, 1.0); // x[i] ↔ index i − lag
    auto at = [&](int n) -> double& { return x[static_cast<std::size_t>(n + lag)]; };
    DelayOdeTrace tr;
    for (int n = 1; n <= N; ++n) at(n) = (at(n - 1) + dt * m * at(n - lag)) / (1.0 + alpha * dt);
    bool pos = false;
    bool neg = false;
    for (int n = 0; n <= N; ++n) {
        tr.t.push_back(g.time(n));
        tr.x.push_back(at(n));
        const double sv = m * at(n) * at(n - lag);
        tr.s.push_back(sv);
        if (n > 0) {
            pos = pos || sv > 0.0;
            neg = neg || sv < 0.0;
        }
    }
    tr.sign_change = pos && neg;
    // slope of log|x| over the second half of the horizon
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int cnt = 0;
    for (int n = N / 2; n <= N; ++n) {
        const double ax = std::abs(at(n));
        if (ax == 0.0) continue;
        const double t = g.time(n);
        const double y = std::log(ax);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++cnt;
    }
    if (cnt >= 2) tr.growth_rate = (cnt * sty - st * sy) / (cnt * stt - st * st);
    return tr;
}

ExperimentResult run_prototype_delay_ode(const Scenario& s, const RunOptions&) {
    ExperimentResult r;
    r.name = "prototype_ode";
    const DelayOdeTrace tr = integrate_delay_ode(s.ode_alpha, s.ode_m, s.ode_tau, s.ode_T, s.ode_dt);
    SweepResult sw;
    sw.columns = {"t", "x", "s"};
    for (std::size_t i = 0; i < tr.t.size(); ++i) sw.rows.push_back({tr.t[i], tr.x[i], tr.s[i]});
    r.notes.push_back(fmt::format("sign change of m*x(t)*x(t-tau): {}", tr.sign_change ? "yes" : "no"));
    if (s.ode_m < 0.0) {
        r.assertions.push_back({"prototype_ode_sign_change", tr.sign_change ? 1.0 : 0.0, 1.0, tr.sign_change});
    } else if (s.ode_m == 0.0) {
        const double worst = *std::max_element(tr.s.begin(), tr.s.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        r.assertions.push_back(check_le("prototype_ode_zero_feedback", std::abs(worst), 0.0));
    }
    if (s.ode_m > s.ode_alpha) {
        const double root = delay_characteristic_root(s.ode_alpha, s.ode_m, s.ode_tau);
        const double rel = std::abs(tr.growth_rate - root) / std::abs(root);
        r.assertions.push_back(check_ge("prototype_ode_final_amplitude", std::abs(tr.x.back()), 1.0));
        r.assertions.push_back(check_le("prototype_ode_growth_rate_rel_error", rel, 0.05));
        r.notes.push_back(fmt::format("growth rate {:.6f}, characteristic root {:.6f}", tr.growth_rate, root));
    }
    r.sweep = std::move(sw);
    return r;
}

ExperimentResult run_two_path_crosscheck(const Scenario& s, const RunOptions&) {
    ExperimentResult r;
    r.name = "two_path_crosscheck";
    const ProblemSpec p = build_problem(s);
    Solution direct = solve(p);
    const Solution picard = solve_picard(p, {s.safety, s.picard_tol, 500});
    const double gap = l2V_distance(direct.trajectory, picard.trajectory, p.fem);
    r.assertions.push_back(check_le("two_path_L2V_gap", gap, s.crosscheck_tol));
    r.assertions.push_back(check_le("picard_contraction_factor", picard.report.q, s.safety));
    int max_it = 0;
    for (int it : picard.report.picard_iterations) max_it = std::max(max_it, it);
    r.notes.push_back(fmt::format("picard: delta={:.6g}, q={:.6g}, {} blocks, max {} sweeps", picard.report.delta,
                                  picard.report.q, picard.report.picard_iterations.size(), max_it));
    const bool diffusive = !p.kernel.has_atoms() && (std::holds_alternative<Exponential>(p.kernel.ac) ||
                                                     std::holds_alternative<Fractional>(p.kernel.ac));
    if (diffusive) {
        const BernsteinQuadrature q = bernstein_quadrature(p.kernel, s.bernstein_nodes,
                                                           std::min(s.bernstein_t_lo, 0.5 * p.kernel.tau_max));
        const DiffusiveSolution d = solve_diffusive(p, q);
        r.notes.push_back(fmt::format("diffusive path: {} nodes, L2(V) gap to direct path {:.6g}", q.size(),
                                      l2V_distance(direct.trajectory, d.trajectory, p.fem)));
    }
    r.trajectory = std::move(direct.trajectory);
    return r;
}

ExperimentResult run_positive_type(const Scenario& s, const RunOptions& opt) {
    ExperimentResult r;
    r.name = "positive_type";
    const ProblemSpec p = build_problem(s);
    const TimeGrid g = make_time_grid(s.T, s.dt, s.kernel.tau_max);
    const PositiveTypeReport pt = positive_type_test(s.kernel, p.fem, g, s.ensemble, opt.seed, opt.threads);
    if (pt.expect_nonnegative) {
        r.assertions.push_back(check_ge("positive_type_min_relative", pt.min_relative, -1e-10));
    } else if (pt.has_witness) {
        r.assertions.push_back(check_le("positive_type_negative_witness", pt.witness_relative, -1e-3));
        r.notes.push_back(fmt::format("expected-negative mode: witness value {:.6g} ({})", pt.witness_value, pt.argmin));
    } else {
        r.notes.push_back(fmt::format("kernel outside the proved class; audit minimum {:.6g}", pt.min_relative));
    }
    r.notes.push_back(fmt::format("minimum form {:.6g} (relative {:.6g}) at {}", pt.min_value, pt.min_relative, pt.argmin));
    return r;
}

ExperimentResult run_experiment(const Scenario& s, const RunOptions& opt) {
    const std::string& e = s.experiment;
    if (e == "solve") return run_solve(s, opt);
    if (e == "vanishing_memory") return run_vanishing_memory(s, opt);
    if (e == "memory_to_delay") return run_memory_to_delay(s, opt);
    if (e == "kernel_stability") return run_kernel_stability(s, opt);
    if (e == "longtime") return run_longtime(s, opt);
    if (e == "prototype_ode") return run_prototype_delay_ode(s, opt);
    if (e == "two_path_crosscheck") return run_two_path_crosscheck(s, opt);
    if (e == "positive_type") return run_positive_type(s, opt);
    throw Error(ErrorCode::ConfigInvalid, "experiment.name: unknown experiment '" + e + "'");
}

namespace {

std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    return os;
}

void write_summary(std::ostream& os, const ExperimentResult& r) {
    for (const auto& a : r.assertions) {
        fmt::print(os, "{} {} value={:.10g} bound={:.10g}\n", a.pass ? "PASS" : "FAIL", a.name, a.value, a.bound);
    }
    for (const auto& n : r.notes) fmt::print(os, "# {}\n", n);
}

void write_gnuplot(std::ostream& os, const ExperimentResult& r) {
    os << "set datafile separator ','\nset key autotitle columnhead\n";
    if (r.sweep && r.sweep->columns.size() >= 2) {
        const auto& c = r.sweep->columns;
        const bool loglog = r.sweep->fit.has_value();
        if (loglog) os << "set logscale xy\n";
        fmt::print(os, "set xlabel '{}'\nset output '{}_sweep.png'\nset terminal pngcairo\nplot ", c[0], r.name);
        for (std::size_t i = 1; i < c.size(); ++i) {
            fmt::print(os, "{}'sweep.csv' using 1:{} with linespoints", i > 1 ? ", " : "", i + 1);
        }
        os << '\n';
    }
    if (r.energy) {
        os << "unset logscale\nset output '" << r.name << "_energy.png'\nset xlabel 't'\n"
           << "plot 'energy.csv' using 1:2 with lines, '' using 1:4 with lines, '' using 1:8 with lines\n";
    }
}

} // namespace

void write_outputs(const ExperimentResult& r, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    if (r.trajectory) {
        auto os = open_output(out / "trajectory.csv");
        write_trajectory_csv(os, *r.trajectory);
    }
    if (r.energy) {
        auto os = open_output(out / "energy.csv");
        write_energy_csv(os, *r.energy);
    }
    if (r.sweep) {
        auto os = open_output(out / "sweep.csv");
        for (std::size_t i = 0; i < r.sweep->columns.size(); ++i) os << (i ? "," : "") << r.sweep->columns[i];
        os << '\n';
        for (const auto& row : r.sweep->rows) {
            for (std::size_t i = 0; i < row.size(); ++i) fmt::print(os, "{}{:.17g}", i ? "," : "", row[i]);
            os << '\n';
        }
        if (r.sweep->fit) {
            fmt::print(os, "# fit slope={:.17g} intercept={:.17g} r2={:.17g}\n", r.sweep->fit->slope,
                       r.sweep->fit->intercept, r.sweep->fit->r2);
        }
    }
    {
        auto os = open_output(out / "summary.txt");
        write_summary(os, r);
    }
    {
        auto os = open_output(out / "plot.gp");
        write_gnuplot(os, r);
    }
}

namespace {

bool is_config_error(ErrorCode c) {
    switch (c) {
    case ErrorCode::NonFinite:
    case ErrorCode::IterationDivergence:
        return false;
    default:
        return true;
    }
}

} // namespace

int run_scenario(const Scenario& s, const std::filesystem::path& out, const RunOptions& opt) {
    ExperimentResult r;
    try {
        r = run_experiment(s, opt);
    } catch (const Error& e) {
        std::cerr << "memodiff: " << e.what() << '\n';
        ExperimentResult failed;
        failed.name = s.experiment;
        failed.assertions.push_back({std::string("error_") + to_string(e.code()), 1.0, 0.0, false});
        failed.notes.push_back(e.what());
        try {
            write_outputs(failed, out);
        } catch (const Error&) {
        }
        return is_config_error(e.code()) ? 2 : 1;
    }
    write_outputs(r, out);
    return r.all_pass() ? 0 : 1;
}

} // namespace memodiff
