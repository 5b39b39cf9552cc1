#pragma once

#include "memodiff/diagnostics.hpp"
#include "memodiff/internal_variables.hpp"
#include "memodiff/stepper.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace memodiff {

struct CoefficientSpec {
    double c0 = 1.0; // a(x) = c0 + c1·x
    double c1 = 0.0;
};

struct FieldSpec {
    FieldSpec() = default;
    explicit FieldSpec(std::string t) : type(std::move(t)) {}

    std::string type = "zero";
    double amplitude = 1.0;
    int mode = 1;
    double rate = 0.0;           // eigenmode forcing: amplitude·e^(−rate·t)·sin(mode·πx/L)
    std::vector<double> times;   // tabulated profiles
    std::vector<double> values;
};

/// Kernel stability pair taken from the configuration.
struct KernelPair {
    MeasureKernel first;
    MeasureKernel second;
};

/// Parsed scenario file.
struct Scenario {
    std::string source;
    double length = 1.0;
    int n_elements = 32;
    CoefficientSpec a0;
    CoefficientSpec a1;
    double T = 1.0;
    double dt = 1e-2;
    MeasureKernel kernel;
    FieldSpec forcing;
    FieldSpec initial{"eigenmode"};
    FieldSpec history{"constant"};
    std::string experiment = "solve";

    // experiment parameters (defaults shown)
    int levels = 6;
    std::vector<double> eps_fractions{0.2, 0.1, 0.05, 0.025};
    std::vector<KernelPair> pairs;
    int ensemble = 100;
    double safety = 0.5;
    double picard_tol = 1e-12;
    double crosscheck_tol = 1e-10;
    double oracle_tol = 2e-2;
    int min_checkpoint_steps = 8;
    double ode_alpha = 1.0;
    double ode_m = 2.0;
    double ode_tau = 1.0;
    double ode_T = 10.0;
    double ode_dt = 1e-3;
    int bernstein_nodes = 64;
    double bernstein_t_lo = 1e-6;

    std::string output_directory;
};

/// Parses JSON text; errors carry ConfigInvalid with line or field context.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
/// Reads one kernel block: type ∈ none|fractional|exponential|atom|mollified|tabulated|mixed.
MeasureKernel parse_kernel_block(const std::string& json_text);

ProblemSpec build_problem(const Scenario& s);
/// Same scenario data with a different kernel.
ProblemSpec build_problem(const Scenario& s, const MeasureKernel& k);

struct Assertion {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares of log y against log x over the last `last` points.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, std::size_t last = 4);

struct SweepResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::optional<LogLogFit> fit;
    std::vector<double> column(std::size_t i) const;
};

struct ExperimentResult {
    std::string name;
    std::vector<Assertion> assertions;
    std::vector<std::string> notes;
    std::optional<SweepResult> sweep;
    std::optional<Trajectory> trajectory;
    std::optional<EnergyReport> energy;
    bool all_pass() const;
};

struct RunOptions {
    int threads = 1;
    std::uint64_t seed = 1;
};

ExperimentResult run_solve(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_vanishing_memory(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_memory_to_delay(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_kernel_stability(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_longtime(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_prototype_delay_ode(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_two_path_crosscheck(const Scenario& s, const RunOptions& opt = {});
ExperimentResult run_positive_type(const Scenario& s, const RunOptions& opt = {});

/// Real root of λ + α = m·e^(−λτ) by bisection (exists and is unique for m ≥ 0).
double delay_characteristic_root(double alpha, double m, double tau);

struct DelayOdeTrace {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> s; // m·x(t)·x(t−τ)
    bool sign_change = false;
    double growth_rate = 0.0; // fitted slope of log|x| on the second half
};

/// Implicit Euler for ẋ + αx = m·x(t−τ) with history x ≡ 1 on [−τ, 0].
DelayOdeTrace integrate_delay_ode(double alpha, double m, double tau, double T, double dt);

/// Dispatch on the experiment name, write outputs into `out`, return the exit
/// status: 0 when every assertion passes, 1 on assertion failure, 2 on a
/// configuration error.
int run_scenario(const Scenario& s, const std::filesystem::path& out, const RunOptions& opt = {});

ExperimentResult run_experiment(const Scenario& s, const RunOptions& opt = {});
void write_outputs(const ExperimentResult& r, const std::filesystem::path& out);

} // namespace memodiff
