#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uvm/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Robust option pricing under volatility uncertainty"};
    app.require_subcommand(1, 1);

    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;

    for (const char* name : {"price", "price-path-dep", "hedge", "spread", "parity", "simulate", "band-stats"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output directory")->required();
        sub->add_option("--seed", seed, "Overrides the seed in the config");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : uvm::kExitValidation;
    }

    const auto cmd = uvm::parse_command(app.get_subcommands().front()->get_name());
    return uvm::run(*cmd, config, out, seed, std::cerr);
}
