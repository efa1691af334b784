#include "scl/config.hpp"
#include "scl/parallel.hpp"

#include <cstdint>
#include <optional>
#include <string>

#include "CLI11.hpp"

int main(int argc, char** argv) {
    scl::par::apply_thread_cap();

    CLI::App app{"scl - singular-control experiment runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string config_path, out_dir, mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
    run->add_option("--config", config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("mode", mode, "simulate | optimize | verify | metric")->required();

    CLI11_PARSE(app, argc, argv);

    std::optional<std::uint64_t> seed_override;
    if (seed_set) seed_override = seed;
    return scl::cli::run(config_path, out_dir, mode, seed_override);
}
