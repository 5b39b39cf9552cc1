#include "memodiff/convolution.hpp"

#include "memodiff/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace memodiff {

TimeGrid make_time_grid(double T, double dt, double tau_max) {
    if (!(dt > 0.0) || !(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "T and dt must be positive");
    const double ratio = T / dt;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, steps)) {
        throw Error(ErrorCode::InvalidArgument,
                    "dt=" + std::to_string(dt) + " does not divide T=" + std::to_string(T));
    }
    TimeGrid g;
    g.dt = dt;
    g.n_steps = static_cast<int>(steps);
    g.n_history = tau_max > 0.0 ? static_cast<int>(std::ceil(tau_max / dt - 1e-9)) : 0;
    return g;
}

Trajectory::Trajectory(TimeGrid grid, std::size_t dim)
    : grid_(grid), dim_(dim),
      data_(static_cast<std::size_t>(grid.n_history + grid.n_steps + 1) * dim, 0.0) {}

std::span<double> Trajectory::at(int n) {
    if (!contains(n)) throw Error(ErrorCode::InsufficientHistory, "index " + std::to_string(n) + " outside trajectory");
    return {data_.data() + static_cast<std::size_t>(n - first_index()) * dim_, dim_};
}

std::span<const double> Trajectory::at(int n) const {
    if (!contains(n)) throw Error(ErrorCode::InsufficientHistory, "index " + std::to_string(n) + " outside trajectory");
    return {data_.data() + static_cast<std::size_t>(n - first_index()) * dim_, dim_};
}

double QuadratureWeights::mass() const {
    double m = 0.0;
    for (double v : ac) m += v;
    for (const auto& a : atoms) m += a.mass;
    return m;
}

QuadratureWeights build_weights(const MeasureKernel& k, const TimeGrid& grid, double alignment_tol) {
    validate(k);
    QuadratureWeights w;
    w.dt = grid.dt;
    const double T = grid.horizon();
    if (k.has_density()) {
        w.ac.resize(static_cast<std::size_t>(grid.n_steps));
        double prev = 0.0;
        for (int j = 0; j < grid.n_steps; ++j) {
            const double next = density_cdf(k, grid.time(j + 1));
            w.ac[static_cast<std::size_t>(j)] = std::max(0.0, next - prev);
            prev = next;
        }
    }
    for (const Atom& a : k.atoms) {
        const double ratio = a.tau / grid.dt;
        const double lag = std::round(ratio);
        if (std::abs(ratio - lag) > alignment_tol || lag < 1.0) {
            throw Error(ErrorCode::MisalignedAtom,
                        "atom at tau=" + std::to_string(a.tau) + " is off the grid; nearest grid time " +
                            std::to_string(std::max(1.0, lag) * grid.dt));
        }
        if (a.tau > T * (1.0 + 1e-12)) continue; // never active on (0, T]
        w.atoms.push_back({static_cast<int>(lag), a.mass});
    }
    return w;
}

namespace {

void accumulate(const QuadratureWeights& w, const Trajectory& g, int n, int first_cell, std::span<double> out) {
    if (n < 1 || n > g.last_index()) {
        throw Error(ErrorCode::InsufficientHistory, "convolution index " + std::to_string(n) + " not covered");
    }
    if (!g.contains(0)) throw Error(ErrorCode::InsufficientHistory, "series must include t = 0");
    const int cells = std::min<int>(n, static_cast<int>(w.ac.size()));
    for (int j = first_cell; j < cells; ++j) {
        const double wj = w.ac[static_cast<std::size_t>(j)];
        if (wj == 0.0) continue;
        const auto gj = g.at(n - j);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += wj * gj[i];
    }
    for (const auto& a : w.atoms) {
        if (a.lag > n) continue;
        const auto ga = g.at(n - a.lag);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += a.mass * ga[i];
    }
}

} // namespace

Vec convolve_at(const QuadratureWeights& w, const Trajectory& g, int n) {
    Vec out(g.dim(), 0.0);
    accumulate(w, g, n, 0, out);
    return out;
}

Vec convolve_lagged(const QuadratureWeights& w, const Trajectory& g, int n) {
    Vec out(g.dim(), 0.0);
    accumulate(w, g, n, 1, out);
    return out;
}

std::vector<Vec> convolve_direct(const QuadratureWeights& w, const Trajectory& g) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(g.last_index()));
    for (int n = 1; n <= g.last_index(); ++n) out.push_back(convolve_at(w, g, n));
    return out;
}

Vec apply_memory(const QuadratureWeights& w, const FemMatrices& fem, const Trajectory& u, int n) {
    if (u.dim() != fem.n_dofs()) throw Error(ErrorCode::DimensionMismatch, "trajectory vs FEM dimension");
    const Vec conv = convolve_at(w, u, n);
    return fem.stiff1 * conv;
}

double l2_time_H(const Trajectory& g, const FemMatrices& fem, int first, int last) {
    double s = 0.0;
    for (int n = first; n <= last; ++n) s += fem.mass.quadratic(g.at(n));
    return std::sqrt(g.grid().dt * s);
}

double l2_time_V(const Trajectory& g, const FemMatrices& fem, int first, int last) {
    double s = 0.0;
    for (int n = first; n <= last; ++n) s += fem.laplace.quadratic(g.at(n));
    return std::sqrt(g.grid().dt * s);
}

YoungReport young_check(const QuadratureWeights& w, const Trajectory& g, const FemMatrices& fem) {
    const int N = g.last_index();
    const int first = std::min(0, g.first_index() + 1);
    const double mass = w.mass();
    double lhs_H = 0.0;
    double lhs_V = 0.0;
    for (int n = 1; n <= N; ++n) {
        const Vec c = convolve_at(w, g, n);
        lhs_H += fem.mass.quadratic(c);
        lhs_V += fem.laplace.quadratic(c);
    }
    YoungReport r;
    r.lhs_H = std::sqrt(g.grid().dt * lhs_H);
    r.lhs_V = std::sqrt(g.grid().dt * lhs_V);
    r.rhs_H = mass * l2_time_H(g, fem, first, N);
    r.rhs_V = mass * l2_time_V(g, fem, first, N);
    constexpr double rel = 1e-10;
    r.pass = r.lhs_H <= r.rhs_H * (1.0 + rel) && r.lhs_V <= r.rhs_V * (1.0 + rel);
    return r;
}

Trajectory random_trajectory(const TimeGrid& grid, std::size_t dim, std::uint64_t seed) {
    Trajectory t(grid, dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int n = t.first_index(); n <= t.last_index(); ++n)
        for (double& v : t.at(n)) v = normal(rng);
    return t;
}

OperatorNormReport operator_norm_check(const MeasureKernel& k, const FemMatrices& fem, const TimeGrid& grid,
                                       int trials, std::uint64_t seed) {
    const QuadratureWeights w = build_weights(k, grid);
    const FormConstants fc = form_constants(fem);
    const double mass = total_mass(k, grid.horizon());
    OperatorNormReport r;
    r.trials = trials;
    const int N = grid.n_steps;
    for (int trial = 0; trial < trials; ++trial) {
        const Trajectory u = random_trajectory(grid, fem.n_dofs(), seed + static_cast<std::uint64_t>(trial));
        double lhs = 0.0;
        for (int n = 1; n <= N; ++n) {
            const double d = dual_norm(apply_memory(w, fem, u, n), fem);
            lhs += d * d;
        }
        lhs = std::sqrt(grid.dt * lhs);
        const double rhs = fc.Lambda1 * mass * l2_time_V(u, fem, std::min(0, u.first_index() + 1), N);
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
        r.worst_ratio = std::max(r.worst_ratio, ratio);
    }
    r.pass = r.worst_ratio <= 1.0 + 1e-10;
    return r;
}

} // namespace memodiff
