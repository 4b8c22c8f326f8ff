#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qcurv/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"qcurv: prescribed Q-curvature metrics on R^n, radial case"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    unsigned workers = 0;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed for the randomized suites");
    };
    CLI::App* solve = app.add_subcommand("solve", "solve for every alpha of the config");
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suites and write verify.json");
    CLI::App* sweep = app.add_subcommand("sweep", "solve an alpha list and write sweep.csv");
    for (auto* sub : {solve, verify, sweep}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qcurv::kExitConfigError;
    }

    qcurv::CommandOptions opts;
    auto* active = app.get_subcommands().front();
    if (active->count("--out")) opts.out = out;
    if (active->count("--workers")) opts.workers = workers;
    if (active->count("--seed")) opts.seed = seed;

    try {
        if (*solve) return qcurv::cmd_solve(config, opts);
        if (*sweep) return qcurv::cmd_sweep(config, opts);
        return qcurv::cmd_verify(config, opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return qcurv::kExitConfigError;
    }
}
