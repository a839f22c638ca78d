// straggler-lab <mode> --config <path> [--seed S] [--out DIR] [--jobs J] [--set key=value ...]

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "straggler/output.hpp"
#include "straggler/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Planner and simulator for straggler-tolerant distributed SGD"};
    app.set_version_flag("--version", std::string(straggler::kVersion));

    std::string mode;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed, out, jobs;

    app.add_option("mode", mode, "theory_sweep | simulate | order_stats")
        ->required()
        ->check(CLI::IsMember({"theory_sweep", "simulate", "order_stats"}));
    app.add_option("--config,-c", config_path, "INI scenario file")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (overrides the file)");
    app.add_option("--out", out, "output directory (overrides the file)");
    app.add_option("--jobs,-j", jobs, "worker threads (overrides the file)");
    app.add_option("--set", overrides, "override a setting, key=value (repeatable)");

    CLI11_PARSE(app, argc, argv);

    if (!seed.empty()) overrides.push_back("seed=" + seed);
    if (!out.empty()) overrides.push_back("out=" + out);
    if (!jobs.empty()) overrides.push_back("jobs=" + jobs);

    try {
        const auto config =
            straggler::load_scenario(straggler::parse_mode(mode), config_path, overrides);
        const auto files = straggler::run_scenario(config, std::cerr);
        for (const auto& f : files) std::cout << f.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "straggler-lab: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
