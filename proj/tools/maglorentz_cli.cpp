//---------------------------------------------------------------------------//
//! \file maglorentz_cli.cpp
//! Command-line front end: one subcommand per experiment kind.
//---------------------------------------------------------------------------//
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "maglorentz/config.hpp"
#include "maglorentz/experiments.hpp"

namespace
{
struct Invocation
{
    std::string config_path;
    std::string prefix;
    unsigned workers = 1;
};

int run(mlg::ExperimentKind kind, Invocation const& inv)
{
    std::ifstream in(inv.config_path, std::ios::binary);
    if (!in)
    {
        std::cerr << "error: cannot read " << inv.config_path << '\n';
        return 1;
    }
    std::stringstream text;
    text << in.rdbuf();

    mlg::ExperimentConfig config;
    try
    {
        config = mlg::parse_config(text.str());
    }
    catch (mlg::ConfigError const& e)
    {
        std::cerr << inv.config_path << ": " << e.what() << '\n';
        return 1;
    }
    if (config.kind != kind)
    {
        std::cerr << inv.config_path << ": section [" << mlg::to_string(config.kind)
                  << "] does not match subcommand '" << mlg::to_string(kind) << "'\n";
        return 1;
    }

    try
    {
        auto out = mlg::run_experiment(config, inv.workers);
        out.write(inv.prefix);
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << mlg::to_string(kind) << " failed: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{mlg::toolkit_version};
    app.set_version_flag("--version", std::string(mlg::toolkit_version));
    app.require_subcommand(1);

    Invocation inv;
    mlg::ExperimentKind chosen{};
    for (auto kind : {mlg::ExperimentKind::Msd, mlg::ExperimentKind::ScalingStudy,
                      mlg::ExperimentKind::GreenKuboMc, mlg::ExperimentKind::OperatorSweep,
                      mlg::ExperimentKind::KineticRun, mlg::ExperimentKind::HilbertStudy,
                      mlg::ExperimentKind::CirclingCheck})
    {
        auto* sub = app.add_subcommand(mlg::to_string(kind));
        sub->add_option("--config", inv.config_path, "configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", inv.prefix, "output path prefix")->required();
        sub->add_option("--workers", inv.workers, "worker threads")
            ->check(CLI::Range(1u, 1024u));
        sub->footer("Configuration keys:\n" + mlg::describe_schema(kind));
        sub->callback([&chosen, kind] { chosen = kind; });
    }

    CLI11_PARSE(app, argc, argv);
    return run(chosen, inv);
}
