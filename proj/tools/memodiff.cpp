// Command-line front end: memodiff run <config> [--out DIR] [--threads N] [--seed S]

#include "memodiff/error.hpp"
#include "memodiff/experiments.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Diffusion with measure-valued memory and delay"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    int threads = 1;
    std::uint64_t seed = 1;
    CLI::App* run = app.add_subcommand("run", "Run the scenario described by a JSON config");
    run->add_option("config", config, "Scenario file")->required();
    run->add_option("--out", out, "Output directory (default: output.directory, then $MEMODIFF_OUT, then ./memodiff_out)");
    run->add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::Range(1, 256));
    run->add_option("--seed", seed, "Seed for random ensembles");

    CLI11_PARSE(app, argc, argv);

    memodiff::Scenario scenario;
    try {
        scenario = memodiff::load_scenario(config);
    } catch (const memodiff::Error& e) {
        std::cerr << "memodiff: " << e.what() << '\n';
        return 2;
    }
    if (out.empty()) {
        const char* env = std::getenv("MEMODIFF_OUT");
        if (!scenario.output_directory.empty()) out = scenario.output_directory;
        else if (env != nullptr && *env != '\0') out = env;
        else out = "memodiff_out";
    }
    const int status = memodiff::run_scenario(scenario, out, {threads, seed});
    std::cout << (status == 0 ? "all assertions passed" : status == 1 ? "assertion failure" : "configuration error")
              << "; outputs in " << out << '\n';
    return status;
}
