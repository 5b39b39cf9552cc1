#include "doctest.h"
#include "oracles.hpp"

#include "memodiff/error.hpp"
#include "memodiff/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace memodiff;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("scenario defaults") {
    const Scenario s = parse_scenario("{}");
    CHECK(s.n_elements == 32);
    CHECK(s.kernel.is_zero());
    CHECK(s.experiment == "solve");
    CHECK(s.initial.type == "eigenmode");
    CHECK(s.history.type == "constant");
}

TEST_CASE("full scenario") {
    const Scenario s = parse_scenario(R"({
      "domain": {"L": 2.0, "n_elements": 40},
      "coefficients": {"a0": {"type": "linear", "c0": 1.0, "c1": 0.5}, "a1": 0.3},
      "time": {"T": 0.5, "dt": 0.005},
      "kernel": {"type": "mixed", "components": [
          {"type": "exponential", "beta": 2.0, "mass": 0.5, "tau_max": 0.5},
          {"type": "atom", "tau": 0.25, "mass": 0.2}]},
      "forcing": {"type": "eigenmode", "amplitude": 2.0, "rate": 1.0},
      "history": {"type": "zero"},
      "experiment": {"name": "kernel_stability", "pairs": [
          {"first": {"type": "atom", "tau": 0.1, "mass": 0.1},
           "second": {"type": "mollified", "tau": 0.1, "mass": 0.1, "eps": 0.02}}]},
      "output": {"directory": "out_here"}
    })");
    CHECK(s.length == 2.0);
    CHECK(s.a0.c1 == 0.5);
    CHECK(s.a1.c0 == 0.3);
    CHECK(s.kernel.atoms.size() == 1);
    CHECK(std::holds_alternative<Exponential>(s.kernel.ac));
    CHECK(s.forcing.rate == 1.0);
    CHECK(s.pairs.size() == 1);
    CHECK(s.output_directory == "out_here");
}

TEST_CASE("config errors") {
    CHECK(code_of("{") == ErrorCode::ConfigInvalid);
    CHECK(code_of(R"({"kernel": {"type": "fractional", "alpha": 0.5}})") == ErrorCode::ConfigInvalid);
    CHECK(code_of(R"({"kernel": {"type": "gamma"}})") == ErrorCode::ConfigInvalid);
    CHECK(code_of(R"({"time": {"dt": -1}})") == ErrorCode::ConfigInvalid);
    CHECK(code_of(R"({"experiment": {"name": "nope"}})") == ErrorCode::ConfigInvalid);
    CHECK(code_of(R"({"forcing": {"type": "tabulated", "times": [0], "values": [1]}})") == ErrorCode::ConfigInvalid);
    try {
        parse_scenario(R"({"kernel": {"type": "atom"}})");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("kernel.tau") != std::string::npos);
    }
}

TEST_CASE("kernel block round trip") {
    const MeasureKernel k = parse_kernel_block(R"({"type": "fractional", "alpha": 0.3, "weight": 2.0, "tau_max": 1.5})");
    CHECK(k == fractional_kernel(0.3, 1.5, 2.0));
}

TEST_CASE("log-log fit") {
    const std::vector<double> x{1, 2, 4, 8};
    const std::vector<double> y{3, 12, 48, 192};
    const LogLogFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("delay characteristic root agrees with Newton") {
    for (auto [a, m, tau] : {std::tuple{1.0, 2.0, 1.0}, std::tuple{0.5, 3.0, 0.2}, std::tuple{2.0, 1.0, 0.5}}) {
        CHECK(delay_characteristic_root(a, m, tau) == doctest::Approx(oracle::characteristic_root_newton(a, m, tau)).epsilon(1e-10));
    }
}

TEST_CASE("prototype delay ODE") {
    const DelayOdeTrace g = integrate_delay_ode(1.0, 2.0, 1.0, 10.0, 1e-3);
    CHECK(std::abs(g.growth_rate - 0.374823) / 0.374823 < 0.05);
    CHECK(integrate_delay_ode(1.0, -1.0, 1.0, 10.0, 1e-3).sign_change);
    CHECK_FALSE(integrate_delay_ode(1.0, 2.0, 1.0, 10.0, 1e-3).sign_change);
    CHECK_THROWS_AS(integrate_delay_ode(1.0, 2.0, 1.00005, 10.0, 1e-3), Error);
}

TEST_CASE("run_scenario writes the documented files") {
    const fs::path out = fs::temp_directory_path() / "memodiff_test_run";
    fs::remove_all(out);
    Scenario s = parse_scenario(R"({"domain": {"n_elements": 16}, "time": {"T": 0.2, "dt": 0.01},
                                   "kernel": {"type": "exponential", "beta": 1, "mass": 0.5, "tau_max": 0.2}})");
    CHECK(run_scenario(s, out) == 0);
    for (const char* f : {"trajectory.csv", "energy.csv", "summary.txt", "plot.gp"}) CHECK(fs::exists(out / f));
    const std::string summary = read_file(out / "summary.txt");
    CHECK(summary.find("PASS apriori_bound_ratio") != std::string::npos);
    CHECK(summary.find("FAIL") == std::string::npos);

    // identical inputs give identical bytes
    const std::string first = read_file(out / "trajectory.csv");
    CHECK(run_scenario(s, out) == 0);
    CHECK(read_file(out / "trajectory.csv") == first);

    s.kernel = atom_kernel(0.015, 1.0);
    s.kernel.tau_max = 0.2;
    CHECK(run_scenario(s, out) == 2);
    fs::remove_all(out);
}
