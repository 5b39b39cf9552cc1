// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Every tolerance used below is pinned in this file.

#include "oracles.hpp"

#include "memodiff/convolution.hpp"
#include "memodiff/diagnostics.hpp"
#include "memodiff/error.hpp"
#include "memodiff/experiments.hpp"
#include "memodiff/internal_variables.hpp"
#include "memodiff/stepper.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

using namespace memodiff;

namespace {

constexpr double kPi = std::numbers::pi;

// Implicit Euler is first order; its observed order approaches 1 from below
// (the next term of n·log(1+λΔt) has the opposite sign), so "order ≥ 1" is
// checked with this slack.
constexpr double kOrderSlack = 0.05;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    fmt::print("{} {} ({:.2f}s): {}\n", o.pass ? "PASS" : "FAIL", name, wall, o.detail);
    std::fflush(stdout);
}

int hw_threads() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

ProblemSpec eigenmode_problem(const MeasureKernel& k, int n_el, double dt, double T, double a1 = 1.0) {
    const Mesh1D mesh = build_mesh(1.0, n_el);
    return ProblemSpec{mesh, assemble(mesh, CoefficientField::constant(1.0), CoefficientField::constant(a1)), k, {},
                       interpolate(mesh, [](double x) { return std::sin(kPi * x); }), {}, T, dt};
}

void add_forcing(ProblemSpec& p) {
    p.forcing = nodal_function(p.mesh, [](double t, double x) { return 3.0 * std::exp(-0.5 * t) * std::sin(kPi * x); });
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

// ‖uⁿ − uⁿ⁻¹‖²_M from the P1 stencil h/6·[1, 4, 1], summed over steps.
double increment_energy(const Trajectory& u, double h) {
    double s = 0.0;
    for (int n = 1; n <= u.grid().n_steps; ++n) {
        const auto a = u.at(n);
        const auto b = u.at(n - 1);
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
        for (std::size_t i = 0; i < d.size(); ++i) {
            double md = 4.0 * d[i];
            if (i > 0) md += d[i - 1];
            if (i + 1 < d.size()) md += d[i + 1];
            s += d[i] * md * h / 6.0;
        }
    }
    return s;
}

Outcome heat_oracle() {
    auto run = [](int n_el, double dt, double& seconds) {
        ProblemSpec p = eigenmode_problem(no_memory(1.0), n_el, dt, 1.0, 0.0);
        const auto start = std::chrono::steady_clock::now();
        const Trajectory u = solve(p).trajectory;
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto x = p.mesh.interior_nodes();
        double err = 0.0;
        for (int n = 0; n <= u.grid().n_steps; ++n) {
            const double decay = std::exp(-kPi * kPi * u.grid().time(n));
            const auto un = u.at(n);
            for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(un[i] - decay * std::sin(kPi * x[i])));
        }
        return err;
    };
    double t1 = 0.0, t2 = 0.0;
    const double e1 = run(128, 1e-3, t1);
    const double e2 = run(256, 5e-4, t2);
    const double q = order(e1, e2);
    const bool ok = e1 <= 2e-2 && q >= 1.0 - kOrderSlack && t1 < 5.0;
    return {ok, fmt::format("error {:.4e} (h=1/128, dt=1e-3) -> {:.4e}, observed order {:.4f}, runtime {:.3f}s", e1, e2, q, t1)};
}

Outcome two_path() {
    const std::vector<std::pair<std::string, MeasureKernel>> kernels{
        {"fractional", fractional_kernel(0.5, 1.0)},
        {"exponential", exponential_kernel(1.0, 1.0, 1.0)},
        {"atom", atom_kernel(0.25, 1.0)},
        {"mixed", mixed_kernel(Exponential{1.0, 0.5}, {{0.25, 0.5}}, 1.0)},
    };
    bool ok = true;
    std::string d;
    for (const auto& [name, k] : kernels) {
        const ProblemSpec p = eigenmode_problem(k, 32, 1e-2, 1.0);
        const Solution direct = solve(p);
        const Solution picard = solve_picard(p);
        const double gap = l2V_distance(direct.trajectory, picard.trajectory, p.fem);
        ok = ok && gap <= 1e-10 && picard.report.q < 0.5;
        d += fmt::format("{} gap={:.2e} q={:.3f}; ", name, gap, picard.report.q);
    }
    return {ok, d};
}

Outcome diffusive_path() {
    const MeasureKernel ek = exponential_kernel(1.0, 1.0, 1.0);
    std::vector<double> gaps;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        const ProblemSpec p = eigenmode_problem(ek, 32, dt, 1.0);
        const DiffusiveSolution d = solve_diffusive(p, bernstein_quadrature(ek, 1, 1e-6));
        gaps.push_back(l2V_distance(d.trajectory, solve(p).trajectory, p.fem));
    }
    const double q1 = order(gaps[0], gaps[1]);
    const double q2 = order(gaps[1], gaps[2]);
    const bool exp_ok = q1 >= 1.0 - kOrderSlack && q2 >= 1.0 - kOrderSlack;

    const MeasureKernel fk = fractional_kernel(0.5, 1.0);
    const ProblemSpec p = eigenmode_problem(fk, 32, 1e-3, 1.0);
    const BernsteinQuadrature bq = bernstein_quadrature(fk, 64, 1e-6);
    const DiffusiveSolution d = solve_diffusive(p, bq);
    const double fgap = l2V_distance(d.trajectory, solve(p).trajectory, p.fem);
    const bool frac_ok = fgap <= 1e-4;
    return {exp_ok && frac_ok,
            fmt::format("exponential gaps {:.3e} {:.3e} {:.3e} (orders {:.3f}, {:.3f}; need >= {:.2f}); "
                        "fractional 64 nodes (+ tail node) gap {:.3e} at dt=1e-3 (need <= 1e-4), quadrature error bound {:.2e}",
                        gaps[0], gaps[1], gaps[2], q1, q2, 1.0 - kOrderSlack, fgap, bq.error_bound)};
}

Outcome young() {
    const FemMatrices fem = eigenmode_problem(no_memory(), 32, 1e-2, 1.0).fem;
    const std::vector<MeasureKernel> kernels{fractional_kernel(0.5, 0.5), exponential_kernel(2.0, 1.0, 0.5),
                                             atom_kernel(0.2, 1.0),
                                             mixed_kernel(Fractional{0.3, 0.5}, {{0.1, 0.5}}, 0.5)};
    const TimeGrid g = make_time_grid(1.0, 1e-2, 0.5);
    int violations = 0;
    int signals = 0;
    double worst = 0.0;
    for (std::size_t c = 0; c < kernels.size(); ++c) {
        const QuadratureWeights w = build_weights(kernels[c], g);
        for (int s = 0; s < 100; ++s) {
            const YoungReport y = young_check(w, random_trajectory(g, fem.n_dofs(), 1000 * c + s + 1), fem);
            ++signals;
            worst = std::max({worst, y.lhs_H / y.rhs_H, y.lhs_V / y.rhs_V});
            if (y.lhs_H > y.rhs_H * (1.0 + 1e-10) || y.lhs_V > y.rhs_V * (1.0 + 1e-10)) ++violations;
        }
        const OperatorNormReport op = operator_norm_check(kernels[c], fem, g, 100, 77 + c);
        worst = std::max(worst, op.worst_ratio);
        if (op.worst_ratio > 1.0 + 1e-10) ++violations;
        signals += op.trials;
    }
    return {violations == 0, fmt::format("{} signal checks, {} violations, worst ratio {:.4f}", signals, violations, worst)};
}

Outcome positive_type() {
    const FemMatrices fem = eigenmode_problem(no_memory(), 32, 1e-2, 1.0).fem;
    const TimeGrid g = make_time_grid(1.0, 1e-2, 1.0);
    const PositiveTypeReport fr = positive_type_test(fractional_kernel(0.5, 1.0), fem, g, 500, 1, hw_threads());
    const PositiveTypeReport ex = positive_type_test(exponential_kernel(1.0, 1.0, 1.0), fem, g, 500, 2, hw_threads());
    const PositiveTypeReport at = positive_type_test(atom_kernel(0.25, 1.0), fem, g, 500, 3, hw_threads());
    // scalar certificate independent of the sampled signals
    const auto n = static_cast<std::size_t>(g.n_steps);
    const double tf = oracle::toeplitz_symmetric_min_eigenvalue(build_weights(fractional_kernel(0.5, 1.0), g).ac, n);
    const double te = oracle::toeplitz_symmetric_min_eigenvalue(build_weights(exponential_kernel(1.0, 1.0, 1.0), g).ac, n);
    const bool ok = fr.min_relative >= -1e-10 && ex.min_relative >= -1e-10 && at.has_witness &&
                    at.witness_relative <= -1e-3 && tf >= 0.0 && te >= 0.0;
    return {ok, fmt::format("fractional min relative {:.4e}, exponential {:.4e}; Toeplitz min eigenvalues {:.3e}, {:.3e}; "
                            "atom witness relative {:.4f}",
                            fr.min_relative, ex.min_relative, tf, te, at.witness_relative)};
}

Outcome energy() {
    bool ok = true;
    std::string d;
    for (const auto& [name, k] : {std::pair{"fractional", fractional_kernel(0.5, 1.0)},
                                  std::pair{"exponential", exponential_kernel(1.0, 1.0, 1.0)}}) {
        for (bool forced : {false, true}) {
            std::vector<double> finals;
            double worst = -1.0;
            double identity_gap = 0.0;
            for (double dt : {1e-2, 5e-3, 2.5e-3}) {
                ProblemSpec p = eigenmode_problem(k, 32, dt, 1.0);
                if (forced) add_forcing(p);
                const Trajectory u = solve(p).trajectory;
                const EnergyReport r = energy_inequality_report(u, p, EnergyMode::Strict);
                worst = std::max(worst, r.worst_slack);
                finals.push_back(r.final_slack);
                // discrete identity: slack equals −½Σ‖uⁿ−uⁿ⁻¹‖²_M
                const double expected = -0.5 * increment_energy(u, p.mesh.h());
                identity_gap = std::max(identity_gap, std::abs(r.final_slack - expected) / std::max(1.0, r.half_uH2.front()));
            }
            const double q1 = order(finals[0], finals[1]);
            const double q2 = order(finals[1], finals[2]);
            const bool case_ok = worst <= 0.0 && q1 >= 1.0 - kOrderSlack && q2 >= 1.0 - kOrderSlack && identity_gap <= 1e-10;
            ok = ok && case_ok;
            d += fmt::format("{}{}: worst slack {:.2e}, orders {:.3f} {:.3f}, identity gap {:.1e}; ", name,
                             forced ? "+f" : "", worst, q1, q2, identity_gap);
        }
    }
    return {ok, d};
}

Outcome apriori() {
    int points = 0;
    int failed = 0;
    double worst = 0.0;
    double const_gap = 0.0;
    for (int cls = 0; cls < 3; ++cls) {
        for (double m : {0.5, 2.0, 5.0}) {
            for (double T : {0.5, 1.0, 2.0}) {
                const MeasureKernel k = cls == 0 ? fractional_kernel(0.5, T, m)
                                      : cls == 1 ? exponential_kernel(1.0, m, T)
                                                 : atom_kernel(0.1, m);
                ProblemSpec p = eigenmode_problem(k, 32, 1e-2, T);
                add_forcing(p);
                const AprioriReport r = apriori_bound_check(solve(p).trajectory, p);
                // constants rebuilt from their closed forms
                const FormConstants fc = form_constants(p.fem);
                const double mu = total_mass(k, T);
                const double C1 = 3.0 / fc.alpha0;
                const double C2 = fc.Lambda1 * fc.Lambda1 * mu * mu;
                const double C4 = C1 * std::max(1.0, C2);
                const double C = (1.0 + 2.0 / fc.alpha0 + 2.0 * C1 * C2 * T / fc.alpha0) * std::max(1.0, C4) + C4;
                const_gap = std::max(const_gap, std::abs(r.constants.C - C) / C);
                ++points;
                worst = std::max(worst, r.ratio);
                if (!(r.ratio <= 1.0)) ++failed;
            }
        }
    }
    return {failed == 0 && const_gap <= 1e-12,
            fmt::format("{} sweep points, {} exceed the bound, worst LHS/RHS {:.4f}, constant mismatch {:.1e}", points,
                        failed, worst, const_gap)};
}

Outcome vanishing_memory() {
    bool ok = true;
    std::string d;
    for (const auto& [name, k] : {std::pair{"fractional", fractional_kernel(0.5, 1.0)},
                                  std::pair{"exponential", exponential_kernel(1.0, 1.0, 1.0)}}) {
        Scenario s;
        s.n_elements = 32;
        s.dt = 1e-2;
        s.kernel = k;
        s.levels = 6;
        const ExperimentResult r = run_vanishing_memory(s, {hw_threads(), 1});
        const auto mass = r.sweep->column(1);
        const auto err = r.sweep->column(3);
        const oracle::Fit f = oracle::loglog_fit(mass, err);
        ok = ok && f.slope >= 0.9 && f.slope <= 1.1 && f.r2 >= 0.98;
        d += fmt::format("{} slope {:.4f} R2 {:.6f}; ", name, f.slope, f.r2);
    }
    return {ok, d};
}

Outcome memory_to_delay() {
    Scenario s;
    s.n_elements = 32;
    s.T = 1.0;
    s.dt = 1.0 / 4096.0;
    s.kernel = atom_kernel(0.5, 1.0);
    s.eps_fractions = {0.2, 0.1, 0.05, 0.025};
    const ExperimentResult r = run_memory_to_delay(s, {hw_threads(), 1});
    const auto eC = r.sweep->column(1);
    const auto eV = r.sweep->column(2);
    bool ok = true;
    for (std::size_t i = 1; i < eC.size(); ++i) ok = ok && eC[i] < eC[i - 1] && eV[i] < eV[i - 1];
    const oracle::Fit f = oracle::loglog_fit(r.sweep->column(0), eC);
    return {ok, fmt::format("C(H) errors {:.3e} {:.3e} {:.3e} {:.3e}, L2(V) {:.3e} -> {:.3e}, observed order in eps {:.3f} (reported)",
                            eC[0], eC[1], eC[2], eC[3], eV.front(), eV.back(), f.slope)};
}

Outcome kernel_stability() {
    Scenario s;
    s.n_elements = 32;
    s.dt = 1e-2;
    s.T = 1.0;
    const ExperimentResult r = run_kernel_stability(s, {hw_threads(), 1});
    int asserted = 0;
    int held = 0;
    double worst = 0.0;
    for (const Assertion& a : r.assertions) {
        ++asserted;
        if (a.value <= a.bound * (1.0 + 1e-10)) ++held;
        worst = std::max(worst, a.value / a.bound);
    }
    const auto skipped = static_cast<int>(r.sweep->rows.size()) - asserted;
    return {asserted >= 10 && held == asserted,
            fmt::format("{} pairs asserted, {} hold, worst LHS/RHS {:.4f}, {} skipped for violating smallness", asserted, held,
                        worst, skipped)};
}

Outcome finite_dissipation() {
    Scenario s;
    s.n_elements = 64;
    s.dt = 1e-2;
    s.T = 50.0;
    s.kernel = fractional_kernel(0.5, 50.0);
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult r = run_longtime(s);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto cum = r.sweep->column(1);
    const auto half = r.sweep->column(2);
    const auto avg = r.sweep->column(3);
    bool ok = wall < 60.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < cum.size(); ++i) {
        worst = std::max(worst, cum[i] / half[i]);
        ok = ok && cum[i] <= half[i];
        if (i > 0) ok = ok && avg[i] < avg[i - 1];
    }
    return {ok, fmt::format("{} dyadic checkpoints, max dissipation/(half initial energy) {:.4f}, time averages {:.3e} -> {:.3e}, "
                            "runtime {:.2f}s",
                            cum.size(), worst, avg.front(), avg.back(), wall)};
}

Outcome restriction() {
    const std::vector<std::pair<std::string, MeasureKernel>> kernels{
        {"fractional", fractional_kernel(0.5, 0.5)},
        {"exponential", exponential_kernel(2.0, 1.0, 0.5)},
        {"atom", atom_kernel(0.25, 1.0)},
        {"mollified", mollify_delay(1.0, 0.25, 0.05)},
        {"mixed", mixed_kernel(Fractional{0.3, 0.5}, {{0.1, 0.5}, {0.4, 0.25}}, 0.5)},
    };
    bool ok = true;
    std::string d;
    for (const auto& [name, k] : kernels) {
        ProblemSpec p = eigenmode_problem(k, 32, 1e-2, 2.0);
        add_forcing(p);
        const RestrictionReport r = restriction_consistency(p, {0.5, 1.0, 1.5, 2.0});
        ok = ok && r.bitwise_equal;
        d += fmt::format("{} {}; ", name, r.bitwise_equal ? "identical" : fmt::format("differs by {:.2e}", r.max_abs_difference));
    }
    return {ok, d};
}

Outcome prototype_ode() {
    const DelayOdeTrace flipped = integrate_delay_ode(1.0, -1.0, 1.0, 10.0, 1e-3);
    const DelayOdeTrace growing = integrate_delay_ode(1.0, 2.0, 1.0, 10.0, 1e-3);
    const double root = oracle::characteristic_root_newton(1.0, 2.0, 1.0);
    const double bisect = delay_characteristic_root(1.0, 2.0, 1.0);
    const double rel = std::abs(growing.growth_rate - root) / root;
    const bool ok = flipped.sign_change && !growing.sign_change && std::abs(growing.x.back()) > 1.0 &&
                    std::abs(bisect - root) <= 1e-10 * root && rel <= 0.05;
    return {ok, fmt::format("sign change for m=-1: {}; m=2 growth rate {:.6f} vs root {:.6f} (Newton) / {:.6f} (bisection), "
                            "relative error {:.2e}",
                            flipped.sign_change ? "yes" : "no", growing.growth_rate, root, bisect, rel)};
}

} // namespace

int main() {
    report("heat_equation_oracle", heat_oracle);
    report("two_path_equivalence", two_path);
    report("diffusive_path_equivalence", diffusive_path);
    report("young_and_boundedness_inequalities", young);
    report("positive_type", positive_type);
    report("energy_inequality", energy);
    report("apriori_bound", apriori);
    report("vanishing_memory", vanishing_memory);
    report("memory_to_delay", memory_to_delay);
    report("kernel_stability", kernel_stability);
    report("finite_dissipation", finite_dissipation);
    report("restriction_consistency", restriction);
    report("prototype_delay_ode", prototype_ode);
    fmt::print("{} of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
