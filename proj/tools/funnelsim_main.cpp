// funnelsim command-line front end.
//
//   funnelsim simulate <config>   run scenarios, write trajectories + summary
//   funnelsim chi-scan <config>   run chi certificate jobs
//   funnelsim verify   <config>   both; exit 0 iff every run is contained and
//                                 every certificate margin is >= 0
//   funnelsim plot <traj.csv>     emit a gnuplot script for one trajectory
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "funnelsim/experiments.hpp"

namespace {

struct BatchFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<double> tol_rel;
    std::optional<double> tol_abs;
    std::optional<std::uint64_t> seed;
};

void add_batch_flags(CLI::App* cmd, BatchFlags& f) {
    cmd->add_option("config", f.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "Output directory (overrides output_dir)");
    cmd->add_option("--workers", f.workers, "Concurrent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--tol-rel", f.tol_rel, "Relative integration tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--tol-abs", f.tol_abs, "Absolute integration tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Seed for noise perturbations without their own seed");
}

int run(const BatchFlags& f, bool simulate, bool chi) {
    auto cfg = funnelsim::load_config(f.config);
    if (f.out) cfg.output_dir = *f.out;
    if (f.workers) cfg.workers = *f.workers;
    if (f.tol_rel) cfg.defaults.tolerances.rel = *f.tol_rel;
    if (f.tol_abs) cfg.defaults.tolerances.abs = *f.tol_abs;
    if (f.seed) cfg.seed = *f.seed;
    cfg.validate();

    funnelsim::BatchOptions opts;
    opts.simulate = simulate;
    opts.chi = chi;
    const auto report = funnelsim::run_batch(cfg, opts);
    funnelsim::write_text_summary(std::cout, cfg, report);
    return report.all_checks_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Funnel feedback simulation and chi certification"};
    app.require_subcommand(1);

    BatchFlags sim_flags, chi_flags, verify_flags;
    auto* simulate = app.add_subcommand("simulate", "Integrate every scenario in the config");
    add_batch_flags(simulate, sim_flags);
    auto* chi_scan = app.add_subcommand("chi-scan", "Build chi unboundedness certificates");
    add_batch_flags(chi_scan, chi_flags);
    auto* verify = app.add_subcommand("verify", "Simulate and certify; nonzero exit on any failed check");
    add_batch_flags(verify, verify_flags);

    std::string csv;
    std::string funnel = "identity";
    std::optional<double> t_fail;
    std::optional<std::string> script;
    auto* plot = app.add_subcommand("plot", "Write a gnuplot script for a trajectory CSV");
    plot->add_option("traj", csv, "Trajectory CSV (t,x,u,w,k)")->required();
    plot->add_option("--funnel", funnel, "identity or expm1:<rate>");
    plot->add_option("--t-fail", t_fail, "Mark an early stop at this time");
    plot->add_option("--out", script, "Script path (default: <traj>.gp)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return run(sim_flags, true, false);
        if (*chi_scan) return run(chi_flags, false, true);
        if (*verify) return run(verify_flags, true, true);
        if (*plot) {
            const std::filesystem::path in(csv);
            std::filesystem::path outp = script ? std::filesystem::path(*script) : in;
            if (!script) outp.replace_extension(".gp");
            funnelsim::emit_plot_script(in, funnelsim::funnel_from_string(funnel), outp, t_fail);
            std::cout << outp.string() << '\n';
            return 0;
        }
    } catch (const funnelsim::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
