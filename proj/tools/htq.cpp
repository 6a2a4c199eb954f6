#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "htq/config.hpp"
#include "htq/sweep.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    htq::CliOverrides overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_config = true) {
    auto* opt = cmd->add_option("--config", args.config_path, "experiment config (JSON, config_version 1)");
    if (need_config) opt->required();
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](std::uint64_t s) { args.overrides.seed = s; }, "master seed override");
    cmd->add_option_function<std::string>(
        "--out", [&args](const std::string& d) { args.overrides.out_dir = d; }, "output directory override");
    cmd->add_option("--workers", args.overrides.workers, "worker pool size (0 = hardware concurrency)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heavy-traffic queueing simulator and analysis toolkit"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, validate_args, oracle_args;
    std::string report_csv;

    auto* c_run = app.add_subcommand("run", "execute the configured (system, epsilon) points once");
    add_common(c_run, run_args);
    auto* c_sweep = app.add_subcommand("sweep", "epsilon sweep with convergence and SSC reports");
    add_common(c_sweep, sweep_args);
    auto* c_validate = app.add_subcommand("validate", "capacity region / CRP report for a switch config");
    add_common(c_validate, validate_args);
    auto* c_oracle = app.add_subcommand("oracle-compare", "paired simulator vs truncated-chain oracle run");
    add_common(c_oracle, oracle_args);
    auto* c_report = app.add_subcommand("report", "re-render the summary tables from a sweep CSV");
    c_report->add_option("--csv", report_csv, "sweep CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) return htq::cmd_run(htq::load_config(run_args.config_path), run_args.overrides);
        if (c_sweep->parsed()) return htq::cmd_sweep(htq::load_config(sweep_args.config_path), sweep_args.overrides);
        if (c_validate->parsed())
            return htq::cmd_validate(htq::load_config(validate_args.config_path), validate_args.overrides);
        if (c_oracle->parsed())
            return htq::cmd_oracle_compare(htq::load_config(oracle_args.config_path), oracle_args.overrides);
        if (c_report->parsed()) return htq::cmd_report(report_csv);
    } catch (const htq::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const htq::invariant_violation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
