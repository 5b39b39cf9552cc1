#include "memodiff/internal_variables.hpp"

#include "memodiff/error.hpp"

#include <algorithm>
#include <cmath>

namespace memodiff {

Vec advance_internal(std::span<const double> z, std::span<const double> u_new, double lambda, double dt) {
    if (z.size() != u_new.size()) throw Error(ErrorCode::DimensionMismatch, "internal variable size");
    const double scale = 1.0 / (1.0 + lambda * dt);
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] + dt * u_new[i]) * scale;
    return out;
}

namespace {

void record_energy(const std::vector<Vec>& z, const BernsteinQuadrature& q, const SymTridiag& k1, EnergySplit& e) {
    double E = 0.0;
    double D = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double zz = k1.quadratic(z[i]);
        E += 0.5 * q.weights[i] * zz;
        D += q.weights[i] * q.nodes[i] * zz;
    }
    e.E_mem.push_back(E);
    e.D_mem.push_back(D);
}

} // namespace

DiffusiveSolution solve_diffusive(const ProblemSpec& p, const BernsteinQuadrature& q) {
    if (p.kernel.has_atoms()) {
        throw Error(ErrorCode::UnsupportedKernel, "atoms have no internal-variable representation");
    }
    if (!std::holds_alternative<Exponential>(p.kernel.ac) && !std::holds_alternative<Fractional>(p.kernel.ac)) {
        throw Error(ErrorCode::UnsupportedKernel, "diffusive path needs an exponential or fractional density");
    }
    validate(p);
    const TimeGrid grid = make_time_grid(p.T, p.dt, p.kernel.tau_max);
    const FemMatrices& fem = p.fem;
    const double dt = grid.dt;
    const std::size_t d = fem.n_dofs();

    DiffusiveSolution sol;
    sol.trajectory = Trajectory(grid, d);
    Trajectory& u = sol.trajectory;
    for (int n = u.first_index(); n < 0; ++n) {
        const Vec psi = p.history ? p.history(grid.time(n)) : p.u0;
        std::copy(psi.begin(), psi.end(), u.at(n).begin());
    }
    std::copy(p.u0.begin(), p.u0.end(), u.at(0).begin());

    DiffusiveState& st = sol.state;
    st.quadrature = q;
    st.z.assign(q.size(), Vec(d, 0.0));
    record_energy(st.z, q, fem.stiff1, sol.energy);

    const TridiagFactor factor(combine(1.0, fem.mass, dt, fem.stiff0));
    Vec zsum(d);
    for (int n = 1; n <= grid.n_steps; ++n) {
        // lagged memory: every zᵢ advanced with uⁿ⁻¹ in place of the unknown uⁿ
        std::fill(zsum.begin(), zsum.end(), 0.0);
        const auto prev = u.at(n - 1);
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double scale = q.weights[i] / (1.0 + q.nodes[i] * dt);
            for (std::size_t k = 0; k < d; ++k) zsum[k] += scale * (st.z[i][k] + dt * prev[k]);
        }
        Vec rhs = fem.mass * prev;
        axpy(dt, forcing_load(p, grid.time(n)), rhs);
        axpy(-dt, fem.stiff1 * zsum, rhs);
        factor.solve_in_place(rhs);
        for (double v : rhs) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite state at step " + std::to_string(n));
        }
        std::copy(rhs.begin(), rhs.end(), u.at(n).begin());
        for (std::size_t i = 0; i < q.size(); ++i) st.z[i] = advance_internal(st.z[i], rhs, q.nodes[i], dt);
        st.step = n;
        record_energy(st.z, q, fem.stiff1, sol.energy);
    }
    return sol;
}

std::vector<double> structural_identity_residual(const Trajectory& u, const DiffusiveState& d,
                                                 const EnergySplit& e, const FemMatrices& fem) {
    const BernsteinQuadrature& q = d.quadrature;
    const double dt = u.grid().dt;
    std::vector<Vec> z(q.size(), Vec(u.dim(), 0.0));
    std::vector<double> r;
    const int N = std::min(u.last_index(), static_cast<int>(e.E_mem.size()) - 1);
    Vec zsum(u.dim());
    for (int n = 1; n <= N; ++n) {
        std::fill(zsum.begin(), zsum.end(), 0.0);
        for (std::size_t i = 0; i < q.size(); ++i) {
            z[i] = advance_internal(z[i], u.at(n), q.nodes[i], dt);
            axpy(q.weights[i], z[i], zsum);
        }
        const double power = fem.stiff1.bilinear(zsum, u.at(n));
        const auto k = static_cast<std::size_t>(n);
        r.push_back(power - (e.E_mem[k] - e.E_mem[k - 1]) / dt - e.D_mem[k]);
    }
    return r;
}

RefinedEnergyReport refined_energy_report(const Trajectory& u, const DiffusiveState&,
                                          const EnergySplit& e, const ProblemSpec& p) {
    const FemMatrices& fem = p.fem;
    const TimeGrid& grid = u.grid();
    const double dt = grid.dt;
    RefinedEnergyReport rep;
    const double initial = 0.5 * fem.mass.quadratic(u.at(0));
    double cum_a0 = 0.0;
    double cum_dmem = 0.0;
    double cum_fu = 0.0;
    rep.lhs.push_back(initial + e.E_mem.front());
    rep.rhs.push_back(initial);
    rep.worst_slack = rep.lhs.back() - rep.rhs.back();
    for (int n = 1; n <= grid.n_steps; ++n) {
        const auto un = u.at(n);
        const auto k = static_cast<std::size_t>(n);
        cum_a0 += dt * fem.stiff0.quadratic(un);
        cum_dmem += dt * e.D_mem[k];
        cum_fu += dt * dot(forcing_load(p, grid.time(n)), un);
        rep.lhs.push_back(0.5 * fem.mass.quadratic(un) + cum_a0 + e.E_mem[k] + cum_dmem);
        rep.rhs.push_back(initial + cum_fu);
        rep.worst_slack = std::max(rep.worst_slack, rep.lhs.back() - rep.rhs.back());
    }
    return rep;
}

} // namespace memodiff
