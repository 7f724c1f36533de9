#include <CLI11.hpp>
#include <iostream>

#include "mwqed/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mwqed: matter-wave emitter arrays coupled to a 1D continuum"};
    app.set_version_flag("--version", mwqed::cli::code_version());
    app.require_subcommand(1, 1);

    mwqed::cli::RunOptions opt;
    bool no_figures = false;
    const std::pair<const char*, const char*> cmds[] = {
        {"rates", "golden-rule and collective rates, kinematics, Hubbard parameters"},
        {"evolve", "single-excitation dynamics of an M-site array"},
        {"sweep", "emission map over detuning and phase lag"},
        {"master", "Lindblad dynamics of a small hardcore-boson register"},
        {"spectrum", "pole table and spectral reconstruction"},
        {"fit", "fit a CSV trajectory (piecewise, beat, array size)"},
        {"render", "draw figures from an existing output directory"},
    };
    for (const auto& [name, help] : cmds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "JSON scenario config or manifest")->required();
        sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", opt.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_flag("--no-figures", no_figures, "skip PNG output");
        sub->callback([&opt, name = std::string(name)] { opt.subcommand = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : mwqed::cli::exit_config;
    }
    opt.figures = !no_figures;
    return mwqed::cli::run(opt);
}
