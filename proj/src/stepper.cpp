#include "memodiff/stepper.hpp"

#include "memodiff/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ostream>

namespace memodiff {

NodalFn nodal_function(const Mesh1D& mesh, std::function<double(double, double)> f) {
    return [xs = mesh.interior_nodes(), f = std::move(f)](double t) {
        Vec v(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) v[i] = f(t, xs[i]);
        return v;
    };
}

void validate(const ProblemSpec& p) {
    validate(p.kernel);
    const std::size_t n = p.fem.n_dofs();
    if (p.mesh.n_dofs() != n) throw Error(ErrorCode::DimensionMismatch, "mesh and FEM matrices disagree");
    if (p.u0.size() != n) throw Error(ErrorCode::DimensionMismatch, "u0 has wrong dimension");
    if (!(p.T > 0.0) || !(p.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "T and dt must be positive");
    if (p.kernel.tau_max > p.T * (1.0 + 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "kernel tau_max exceeds the horizon T");
    }
    if (p.history) {
        const Vec psi0 = p.history(0.0);
        if (psi0.size() != n) throw Error(ErrorCode::DimensionMismatch, "history has wrong dimension");
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(psi0[i] - p.u0[i]) > 1e-12) {
                throw Error(ErrorCode::HistoryMismatch, "history at t=0 differs from u0 at dof " + std::to_string(i));
            }
        }
    }
    for (double v : p.u0)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "u0 has non-finite entries");
}

Vec forcing_load(const ProblemSpec& p, double t) {
    if (!p.forcing) return Vec(p.fem.n_dofs(), 0.0);
    const Vec f = p.forcing(t);
    return load_vector(p.fem, f);
}

namespace {

Trajectory initial_trajectory(const ProblemSpec& p, const TimeGrid& grid) {
    Trajectory u(grid, p.fem.n_dofs());
    for (int n = u.first_index(); n < 0; ++n) {
        const Vec psi = p.history ? p.history(grid.time(n)) : p.u0;
        if (psi.size() != u.dim()) throw Error(ErrorCode::DimensionMismatch, "history has wrong dimension");
        std::copy(psi.begin(), psi.end(), u.at(n).begin());
    }
    std::copy(p.u0.begin(), p.u0.end(), u.at(0).begin());
    return u;
}

void check_finite(std::span<const double> v, int n) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite state at step " + std::to_string(n));
    }
}

double residual_norm(const SymTridiag& a, std::span<const double> x, std::span<const double> rhs) {
    const Vec ax = a * x;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        num = std::max(num, std::abs(ax[i] - rhs[i]));
        den = std::max(den, std::abs(rhs[i]));
    }
    return den > 0.0 ? num / den : num;
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

Solution solve(const ProblemSpec& p) {
    const auto start = std::chrono::steady_clock::now();
    validate(p);
    const TimeGrid grid = make_time_grid(p.T, p.dt, p.kernel.tau_max);
    const QuadratureWeights w = build_weights(p.kernel, grid);
    const FemMatrices& fem = p.fem;
    const double dt = grid.dt;

    Solution sol{initial_trajectory(p, grid), {}};
    Trajectory& u = sol.trajectory;

    const SymTridiag system = combine(1.0, combine(1.0, fem.mass, dt, fem.stiff0), dt * w.current(), fem.stiff1);
    const TridiagFactor factor(system);

    Vec rhs(u.dim());
    for (int n = 1; n <= grid.n_steps; ++n) {
        fem.mass.multiply(u.at(n - 1), rhs);
        const Vec load = forcing_load(p, grid.time(n));
        axpy(dt, load, rhs);
        if (!w.ac.empty() || !w.atoms.empty()) {
            const Vec lagged = convolve_lagged(w, u, n);
            const Vec mem = fem.stiff1 * lagged;
            axpy(-dt, mem, rhs);
        }
        auto un = u.at(n);
        std::copy(rhs.begin(), rhs.end(), un.begin());
        factor.solve_in_place(un);
        check_finite(un, n);
        sol.report.max_linear_residual = std::max(sol.report.max_linear_residual, residual_norm(system, un, rhs));
    }
    sol.report.wall_seconds = elapsed(start);
    return sol;
}

double admissible_delta(const MeasureKernel& k, const FormConstants& fc, double dt, int max_steps, double safety) {
    auto q_of = [&](int steps) { return fc.Lambda1 * total_mass(k, steps * dt) / fc.alpha0; };
    if (q_of(1) > safety) {
        throw Error(ErrorCode::NoAdmissibleDelta,
                    fmt::format("even delta=dt gives q={:.6g} > {:.3g}", q_of(1), safety));
    }
    int steps = 1;
    while (steps < max_steps && q_of(steps + 1) <= safety) ++steps;
    return steps * dt;
}

Solution solve_picard(const ProblemSpec& p, const PicardOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    validate(p);
    if (!(opt.safety > 0.0 && opt.safety < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "Picard safety factor must lie in (0,1)");
    }
    const TimeGrid grid = make_time_grid(p.T, p.dt, p.kernel.tau_max);
    const QuadratureWeights w = build_weights(p.kernel, grid);
    const FemMatrices& fem = p.fem;
    const FormConstants fc = form_constants(fem);
    const double dt = grid.dt;
    const int N = grid.n_steps;

    const double delta = admissible_delta(p.kernel, fc, dt, N, opt.safety);
    const int block = static_cast<int>(std::lround(delta / dt));

    Solution sol{initial_trajectory(p, grid), {}};
    sol.report.delta = delta;
    sol.report.q = fc.Lambda1 * total_mass(p.kernel, delta) / fc.alpha0;
    Trajectory& u = sol.trajectory;
    const std::size_t d = u.dim();

    const SymTridiag parabolic = combine(1.0, fem.mass, dt, fem.stiff0);
    const TridiagFactor factor(parabolic);

    for (int a = 0; a < N; a += block) {
        const int b = std::min(N, a + block);
        const int len = b - a;

        // Known forcing G: memory contributions from indices ≤ a.
        std::vector<Vec> known(static_cast<std::size_t>(len), Vec(d, 0.0));
        std::vector<Vec> loads(static_cast<std::size_t>(len));
        for (int i = a + 1; i <= b; ++i) {
            Vec& g = known[static_cast<std::size_t>(i - a - 1)];
            for (int j = i - a; j < std::min<int>(i, static_cast<int>(w.ac.size())); ++j) {
                axpy(w.ac[static_cast<std::size_t>(j)], u.at(i - j), g);
            }
            for (const auto& at : w.atoms) {
                if (at.lag <= i && i - at.lag <= a) axpy(at.mass, u.at(i - at.lag), g);
            }
            loads[static_cast<std::size_t>(i - a - 1)] = forcing_load(p, grid.time(i));
        }

        // Initial iterate: freeze the block at u(t_a).
        std::vector<Vec> iterate(static_cast<std::size_t>(len), Vec(u.at(a).begin(), u.at(a).end()));
        std::vector<Vec> next(static_cast<std::size_t>(len), Vec(d, 0.0));
        std::vector<double> corrections;
        bool converged = false;
        int growth = 0;
        for (int it = 0; it < opt.max_iterations; ++it) {
            Vec prev(u.at(a).begin(), u.at(a).end());
            double diff2 = 0.0;
            double norm2 = 0.0;
            for (int i = a + 1; i <= b; ++i) {
                const std::size_t k = static_cast<std::size_t>(i - a - 1);
                Vec mem = known[k];
                // unknown window: indices a+1 … i taken from the current iterate
                for (int j = 0; j < std::min<int>(i - a, static_cast<int>(w.ac.size())); ++j) {
                    axpy(w.ac[static_cast<std::size_t>(j)], iterate[static_cast<std::size_t>(i - j - a - 1)], mem);
                }
                for (const auto& at : w.atoms) {
                    if (at.lag <= i && i - at.lag > a) {
                        axpy(at.mass, iterate[static_cast<std::size_t>(i - at.lag - a - 1)], mem);
                    }
                }
                Vec rhs = fem.mass * prev;
                axpy(dt, loads[k], rhs);
                axpy(-dt, fem.stiff1 * mem, rhs);
                factor.solve_in_place(rhs);
                check_finite(rhs, i);
                Vec delta_v = rhs;
                axpy(-1.0, iterate[k], delta_v);
                diff2 += fem.laplace.quadratic(delta_v);
                norm2 += fem.laplace.quadratic(rhs);
                next[k] = rhs;
                prev = std::move(rhs);
            }
            const double diff = std::sqrt(dt * diff2);
            const double norm = std::sqrt(dt * norm2);
            if (!corrections.empty() && diff > corrections.back()) ++growth;
            else growth = 0;
            corrections.push_back(diff);
            std::swap(iterate, next);
            if (diff <= opt.tol * std::max(norm, 1e-300) || diff == 0.0) {
                converged = true;
                break;
            }
            if (growth >= 3) {
                throw Error(ErrorCode::IterationDivergence,
                            fmt::format("Picard updates grew on block ({}, {}]", grid.time(a), grid.time(b)));
            }
        }
        if (!converged) {
            throw Error(ErrorCode::IterationDivergence,
                        fmt::format("Picard iteration did not converge on block ({}, {}]", grid.time(a), grid.time(b)));
        }
        for (int i = a + 1; i <= b; ++i) {
            const Vec& v = iterate[static_cast<std::size_t>(i - a - 1)];
            std::copy(v.begin(), v.end(), u.at(i).begin());
        }
        sol.report.picard_iterations.push_back(static_cast<int>(corrections.size()));
        sol.report.picard_corrections.push_back(std::move(corrections));
    }
    sol.report.wall_seconds = elapsed(start);
    return sol;
}

RestrictionReport restriction_consistency(const ProblemSpec& p, const std::vector<double>& horizons) {
    RestrictionReport r;
    r.horizons = horizons;
    r.bitwise_equal = true;
    std::vector<Trajectory> runs;
    for (double T : horizons) {
        ProblemSpec q = p;
        q.T = T;
        q.kernel = restrict(p.kernel, T);
        runs.push_back(solve(q).trajectory);
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            const int lo = std::max(runs[i].first_index(), runs[j].first_index());
            const int hi = std::min(runs[i].last_index(), runs[j].last_index());
            for (int n = lo; n <= hi; ++n) {
                const auto a = runs[i].at(n);
                const auto b = runs[j].at(n);
                if (std::memcmp(a.data(), b.data(), a.size_bytes()) != 0) r.bitwise_equal = false;
                for (std::size_t k = 0; k < a.size(); ++k) {
                    r.max_abs_difference = std::max(r.max_abs_difference, std::abs(a[k] - b[k]));
                }
            }
        }
    }
    return r;
}

TimeDerivativeSeries dt_dual_norm_series(const Trajectory& u, const ProblemSpec& p) {
    const TimeGrid& grid = u.grid();
    const QuadratureWeights w = build_weights(p.kernel, grid);
    const FormConstants fc = form_constants(p.fem);
    TimeDerivativeSeries s;
    double dt2 = 0.0;
    double f2 = 0.0;
    double u2 = 0.0;
    double m2 = 0.0;
    for (int n = 1; n <= grid.n_steps; ++n) {
        const Vec load = forcing_load(p, grid.time(n));
        const Vec mem = apply_memory(w, p.fem, u, n);
        Vec r = load;
        axpy(-1.0, p.fem.stiff0 * u.at(n), r);
        axpy(-1.0, mem, r);
        const double rn = dual_norm(r, p.fem);
        s.values.push_back(rn);
        dt2 += rn * rn;
        const double fn = dual_norm(load, p.fem);
        f2 += fn * fn;
        u2 += p.fem.laplace.quadratic(u.at(n));
        const double mn = dual_norm(mem, p.fem);
        m2 += mn * mn;
    }
    const double dt = grid.dt;
    s.l2_dt = std::sqrt(dt * dt2);
    s.l2_forcing = std::sqrt(dt * f2);
    s.lambda0_l2_u = fc.Lambda0 * std::sqrt(dt * u2);
    s.l2_memory = std::sqrt(dt * m2);
    const double bound = s.l2_forcing + s.lambda0_l2_u + s.l2_memory;
    s.bound_ratio = bound > 0.0 ? s.l2_dt / bound : 0.0;
    return s;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& u) {
    os << 't';
    for (std::size_t i = 1; i <= u.dim(); ++i) os << ",x_" << i;
    os << '\n';
    for (int n = u.first_index(); n <= u.last_index(); ++n) {
        fmt::print(os, "{:.17g}", u.grid().time(n));
        for (double v : u.at(n)) fmt::print(os, ",{:.17g}", v);
        os << '\n';
    }
}

double l2V_distance(const Trajectory& a, const Trajectory& b, const FemMatrices& fem) {
    const int N = std::min(a.last_index(), b.last_index());
    double s = 0.0;
    Vec diff(a.dim());
    for (int n = 1; n <= N; ++n) {
        const auto x = a.at(n);
        const auto y = b.at(n);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x[i] - y[i];
        s += fem.laplace.quadratic(diff);
    }
    return std::sqrt(a.grid().dt * s);
}

double linfH_distance(const Trajectory& a, const Trajectory& b, const FemMatrices& fem) {
    const int N = std::min(a.last_index(), b.last_index());
    double worst = 0.0;
    Vec diff(a.dim());
    for (int n = 0; n <= N; ++n) {
        const auto x = a.at(n);
        const auto y = b.at(n);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x[i] - y[i];
        worst = std::max(worst, norm_H(diff, fem));
    }
    return worst;
}

} // namespace memodiff
