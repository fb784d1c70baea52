// SPDX-License-Identifier: Apache-2.0
#include "mustructure/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace mustructure;
    CLI::App cli{"Elliptic Neumann problems on glued segments and plates in R^3"};
    cli.require_subcommand(1, 1);

    app::Request req;
    unsigned seed = 0;
    const std::pair<const char*, const char*> commands[] = {
        {"validate", "Check the structure, coefficients and load expressions"},
        {"solve", "Solve once on the finest mesh and write solution.csv"},
        {"converge", "Solve on every mesh size and write observed orders to rates.csv"},
        {"verify", "Run regularity and property checks and write verify.csv"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = cli.add_subcommand(name, help);
        sub->add_option("--config", req.config_path, "JSON configuration file")->required();
        sub->add_option("--out", req.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Seed for randomized suites (overrides the configuration)");
        if (std::string(name) == "verify") {
            std::vector<std::string> choices = app::check_names();
            choices.push_back("all");
            sub->add_option("--check", req.check, "Check to run")->check(CLI::IsMember(choices))->capture_default_str();
        }
        sub->callback([&req, sub, &seed] {
            req.command = sub->get_name();
            if (sub->count("--seed") > 0) req.seed = seed;
        });
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : app::kExitInput;
    }
    return app::run(req, std::cerr);
}
