// Command line front end: sipllg <converge|dissipate|blowup|skyrmion> --config FILE [--out DIR] [--override k=v]...
#include "sipllg/sipllg.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;
    std::string resume;
};

void add_common(CLI::App* sub, Common& c, bool resumable)
{
    sub->add_option("--config", c.config, "configuration file (key = value lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory (overrides output.dir)");
    sub->add_option("--override", c.overrides, "extra key=value setting, applied after the file")->take_all();
    if (resumable) {
        sub->add_option("--resume", c.resume, "continue from a checkpoint snapshot")->check(CLI::ExistingFile);
    }
}

sipllg::ExperimentConfig load(const Common& c, sipllg::ExperimentKind kind)
{
    auto cfg = sipllg::parse_config(c.config, c.overrides, kind);
    if (!c.out.empty()) {
        cfg.out_dir = c.out;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Semi-implicit projection solver for the Landau-Lifshitz-Gilbert equation"};
    app.require_subcommand(1);

    Common converge, dissipate, blowup, skyrmion;
    auto* c_sub = app.add_subcommand("converge", "manufactured-solution convergence study");
    auto* d_sub = app.add_subcommand("dissipate", "energy decay for several damping parameters");
    auto* b_sub = app.add_subcommand("blowup", "finite-time singularity run with snapshots");
    auto* s_sub = app.add_subcommand("skyrmion", "relax a skyrmion texture to steady state");
    add_common(c_sub, converge, false);
    add_common(d_sub, dissipate, true);
    add_common(b_sub, blowup, true);
    add_common(s_sub, skyrmion, true);

    CLI11_PARSE(app, argc, argv);

    using sipllg::ExperimentKind;
    try {
        bool passed = false;
        std::string message;
        if (c_sub->parsed()) {
            const auto r = sipllg::cmd_converge(load(converge, ExperimentKind::Converge), std::cout);
            passed = r.passed;
            message = r.message;
        } else if (d_sub->parsed()) {
            const auto r = sipllg::cmd_dissipate(load(dissipate, ExperimentKind::Dissipate), std::cout, dissipate.resume);
            passed = r.passed;
            message = r.message;
        } else if (b_sub->parsed()) {
            const auto r = sipllg::cmd_blowup(load(blowup, ExperimentKind::Blowup), std::cout, blowup.resume);
            passed = r.passed;
            message = r.message;
        } else {
            const auto r = sipllg::cmd_skyrmion(load(skyrmion, ExperimentKind::Skyrmion), std::cout, skyrmion.resume);
            passed = r.passed;
            message = r.message;
        }
        if (!passed) {
            std::cerr << "check failed: " << message << '\n';
            return 1;
        }
        return 0;
    } catch (const sipllg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const sipllg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
