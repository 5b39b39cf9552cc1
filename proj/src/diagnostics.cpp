#include "memodiff/diagnostics.hpp"

#include "memodiff/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace memodiff {

bool is_completely_monotone(const MeasureKernel& k) {
    if (k.has_atoms()) return false;
    return std::holds_alternative<NoDensity>(k.ac) || std::holds_alternative<Fractional>(k.ac) ||
           std::holds_alternative<Exponential>(k.ac);
}

std::vector<double> cumulative_dissipation(const Trajectory& u, const MeasureKernel& k, const FemMatrices& fem) {
    const QuadratureWeights w = build_weights(k, u.grid());
    std::vector<double> d{0.0};
    double acc = 0.0;
    for (int n = 1; n <= u.last_index(); ++n) {
        if (!k.is_zero()) acc += u.grid().dt * dot(apply_memory(w, fem, u, n), u.at(n));
        d.push_back(acc);
    }
    return d;
}

EnergyReport energy_inequality_report(const Trajectory& u, const ProblemSpec& p, EnergyMode mode,
                                      const EnergySplit* split) {
    if (mode == EnergyMode::Strict && !is_completely_monotone(p.kernel)) {
        throw Error(ErrorCode::UnsupportedKernel, "strict energy inequality needs a completely monotone kernel");
    }
    const FemMatrices& fem = p.fem;
    const TimeGrid& grid = u.grid();
    const double dt = grid.dt;
    EnergyReport r;
    r.constants = form_constants(fem);
    r.mass = total_mass(p.kernel, grid.horizon());
    r.D_mu = cumulative_dissipation(u, p.kernel, fem);

    const double initial = 0.5 * fem.mass.quadratic(u.at(0));
    double cum_a0 = 0.0;
    double cum_fu = 0.0;
    double cum_dmem = 0.0;
    double scale = initial;
    r.worst_slack = -std::numeric_limits<double>::infinity();
    for (int n = 0; n <= grid.n_steps; ++n) {
        const auto un = u.at(n);
        const auto k = static_cast<std::size_t>(n);
        if (n > 0) {
            cum_a0 += dt * fem.stiff0.quadratic(un);
            cum_fu += dt * dot(forcing_load(p, grid.time(n)), un);
        }
        const double half = 0.5 * fem.mass.quadratic(un);
        r.t.push_back(grid.time(n));
        r.half_uH2.push_back(half);
        r.cum_a0.push_back(cum_a0);
        r.cum_fu.push_back(cum_fu);
        if (split != nullptr && k < split->E_mem.size()) {
            if (n > 0) cum_dmem += dt * split->D_mem[k];
            r.E_mem.push_back(split->E_mem[k]);
        } else {
            r.E_mem.push_back(0.0);
        }
        r.D_mem_cum.push_back(cum_dmem);
        const double s = half + cum_a0 + r.D_mu[k] - initial - cum_fu;
        r.slack.push_back(s);
        r.worst_slack = std::max(r.worst_slack, s);
        scale = std::max({scale, half + cum_a0, std::abs(cum_fu)});
    }
    r.final_slack = r.slack.back();
    r.min_D_mu = *std::min_element(r.D_mu.begin(), r.D_mu.end());
    const double dmu_tol = 1e-10 * std::max(scale, 1e-300);
    r.negative_dissipation_steps =
        static_cast<int>(std::count_if(r.D_mu.begin(), r.D_mu.end(), [&](double v) { return v < -dmu_tol; }));
    if (mode == EnergyMode::Strict) {
        r.pass = r.worst_slack <= 1e-12 * std::max(scale, 1e-300) && r.negative_dissipation_steps == 0;
    }
    return r;
}

void write_energy_csv(std::ostream& os, const EnergyReport& r) {
    os << "t,half_uH2,cum_a0,D_mu,cum_fu,E_mem,D_mem_cum,slack\n";
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t[i], r.half_uH2[i],
                   r.cum_a0[i], r.D_mu[i], r.cum_fu[i], r.E_mem[i], r.D_mem_cum[i], r.slack[i]);
    }
}

double memory_quadratic_form(const QuadratureWeights& w, const FemMatrices& fem, const Trajectory& signal) {
    double q = 0.0;
    for (int n = 1; n <= signal.last_index(); ++n) q += dot(apply_memory(w, fem, signal, n), signal.at(n));
    return signal.grid().dt * q;
}

namespace {

double signal_energy(const FemMatrices& fem, const Trajectory& s) {
    double e = 0.0;
    for (int n = 1; n <= s.last_index(); ++n) e += fem.stiff1.quadratic(s.at(n));
    return s.grid().dt * e;
}

Trajectory zero_history_signal(const TimeGrid& grid, std::size_t dim, std::uint64_t seed) {
    Trajectory s = random_trajectory(grid, dim, seed);
    for (int n = s.first_index(); n <= 0; ++n) std::fill(s.at(n).begin(), s.at(n).end(), 0.0);
    return s;
}

} // namespace

PositiveTypeReport positive_type_test(const MeasureKernel& k, const FemMatrices& fem, const TimeGrid& grid,
                                      int ensemble_size, std::uint64_t seed, int threads) {
    const QuadratureWeights w = build_weights(k, grid);
    const std::size_t dim = fem.n_dofs();
    PositiveTypeReport r;
    r.expect_nonnegative = is_completely_monotone(k);

    struct Sample {
        double value = 0.0;
        double relative = 0.0;
    };
    std::vector<Sample> samples(static_cast<std::size_t>(std::max(0, ensemble_size)));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Trajectory s = zero_history_signal(grid, dim, seed + i);
            const double q = memory_quadratic_form(w, fem, s);
            const double e = signal_energy(fem, s);
            samples[i] = {q, e > 0.0 ? q / e : 0.0};
        }
    };
    const std::size_t n_threads = static_cast<std::size_t>(std::clamp(threads, 1, 64));
    if (n_threads == 1 || samples.size() < 2) {
        work(0, samples.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (samples.size() + n_threads - 1) / n_threads;
        for (std::size_t b = 0; b < samples.size(); b += chunk) {
            pool.emplace_back(work, b, std::min(samples.size(), b + chunk));
        }
        for (auto& t : pool) t.join();
    }

    r.min_relative = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].relative < r.min_relative) {
            r.min_relative = samples[i].relative;
            r.min_value = samples[i].value;
            r.argmin = fmt::format("gaussian seed={}", seed + i);
        }
    }
    if (samples.empty()) r.min_relative = 0.0;

    if (!w.atoms.empty()) {
        const auto heaviest = std::max_element(w.atoms.begin(), w.atoms.end(),
                                               [](const auto& a, const auto& b) { return a.mass < b.mass; });
        const int lag = heaviest->lag;
        Trajectory s(grid, dim);
        for (int n = 1; n <= s.last_index(); ++n) {
            const double sign = ((n - 1) / lag) % 2 == 0 ? 1.0 : -1.0;
            std::fill(s.at(n).begin(), s.at(n).end(), sign);
        }
        r.has_witness = true;
        r.witness_value = memory_quadratic_form(w, fem, s);
        const double e = signal_energy(fem, s);
        r.witness_relative = e > 0.0 ? r.witness_value / e : 0.0;
        if (r.witness_relative < r.min_relative) {
            r.min_relative = r.witness_relative;
            r.min_value = r.witness_value;
            r.argmin = fmt::format("alternating sign, half-period {} steps", lag);
        }
    }
    r.pass = r.expect_nonnegative ? r.min_relative >= -1e-10 : (r.has_witness && r.witness_relative <= -1e-3);
    return r;
}

AprioriConstants apriori_constants(const FormConstants& fc, double mass, double T) {
    if (!(fc.alpha0 > 0.0)) throw Error(ErrorCode::CoercivityViolation, "alpha0 must be positive");
    AprioriConstants c;
    c.alpha0 = fc.alpha0;
    c.Lambda0 = fc.Lambda0;
    c.Lambda1 = fc.Lambda1;
    c.mass = mass;
    c.C2 = fc.Lambda1 * fc.Lambda1 * mass * mass;
    c.C3 = 2.0 * c.C2 / fc.alpha0;
    c.C1 = 3.0 / fc.alpha0;
    c.C4 = c.C1 * std::max(1.0, c.C2);
    c.c = c.C3;
    c.C = (1.0 + 2.0 / fc.alpha0 + 2.0 * c.C1 * c.C2 * T / fc.alpha0) * std::max(1.0, c.C4) + c.C4;
    return c;
}

AprioriReport apriori_bound_check(const Trajectory& u, const ProblemSpec& p) {
    const FemMatrices& fem = p.fem;
    const TimeGrid& grid = u.grid();
    const double dt = grid.dt;
    const double T = grid.horizon();
    const FormConstants fc = form_constants(fem);
    AprioriReport r;
    r.constants = apriori_constants(fc, total_mass(p.kernel, T), T);
    const AprioriConstants& c = r.constants;

    r.u0_H2 = fem.mass.quadratic(u.at(0));
    std::vector<double> f2(static_cast<std::size_t>(grid.n_steps) + 1, 0.0);
    for (int n = 1; n <= grid.n_steps; ++n) {
        const double fn = dual_norm(forcing_load(p, grid.time(n)), fem);
        f2[static_cast<std::size_t>(n)] = fn * fn;
        r.f_L2Vstar2 += dt * fn * fn;
    }
    for (int n = u.first_index() + 1; n <= 0; ++n) r.psi_L2V2 += dt * fem.laplace.quadratic(u.at(n));

    double max_H = r.u0_H2;
    double sum_V = 0.0;
    r.E.push_back(r.u0_H2);
    r.B.push_back(r.u0_H2);
    r.recursion_holds = true;
    double cum_f = 0.0;
    double parabolic = 0.0;
    for (int n = 1; n <= grid.n_steps; ++n) {
        const auto un = u.at(n);
        const double h2 = fem.mass.quadratic(un);
        const double v2 = fem.laplace.quadratic(un);
        max_H = std::max(max_H, h2);
        sum_V += dt * v2;
        const double fn2 = f2[static_cast<std::size_t>(n)];
        r.E.push_back(h2 + 0.5 * c.alpha0 * sum_V);
        r.B.push_back((1.0 + c.C3 * dt) * r.B.back() + c.C4 * dt * (fn2 + r.psi_L2V2));
        if (r.E.back() > r.B.back() * (1.0 + 1e-12)) r.recursion_holds = false;
        cum_f += dt * fn2;
        const double bound = r.u0_H2 + cum_f / c.alpha0;
        if (bound > 0.0) parabolic = std::max(parabolic, (h2 + c.alpha0 * sum_V) / bound);
    }
    r.lhs = max_H + sum_V;
    r.rhs = c.C * std::exp(c.c * T) * (r.u0_H2 + r.f_L2Vstar2 + T * r.psi_L2V2);
    r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : (r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-12);
    if (p.kernel.is_zero()) {
        r.parabolic_ratio = parabolic;
        const double bound = r.u0_H2 + r.f_L2Vstar2 / c.alpha0;
        r.parabolic_literal_ratio = bound > 0.0 ? (max_H + c.alpha0 * sum_V) / bound : 0.0;
    }
    return r;
}

double contraction_factor(const MeasureKernel& k, const FormConstants& fc, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    if (!(fc.alpha0 > 0.0)) throw Error(ErrorCode::CoercivityViolation, "alpha0 must be positive");
    return fc.Lambda1 * total_mass(k, delta) / fc.alpha0;
}

double contraction_factor(const MeasureKernel& k, const FemMatrices& fem, double delta) {
    return contraction_factor(k, form_constants(fem), delta);
}

} // namespace memodiff
