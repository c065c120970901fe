// Command-line front end. Links the C API only; all validation beyond flag
// syntax lives in the library so other bindings behave identically.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mpm.h"

int main(int argc, char** argv) {
    CLI::App app{"transient analysis of Markov population models"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);

    CLI::App* solve =
        app.add_subcommand("solve", "solve a guarded-command model");
    solve->set_help_flag("--help", "print this help message and exit");
    std::string model_path;
    std::string out_dir;
    std::string mode;
    std::string method;
    std::string semantics;
    double time_horizon = 0.0;
    std::uint64_t steps = 0;
    double dump = 0.0;
    double delta = 1e-15;
    double epsilon = 1e-8;
    double lambda = 0.0;
    double h = 0.0;

    solve->add_option("model", model_path, "guarded-command model file")
        ->required();
    solve->add_option("--mode", mode, "analysis mode")
        ->required()
        ->check(CLI::IsMember({"stochastic", "deterministic"}));
    CLI::Option* method_opt = solve->add_option(
        "--method", method,
        "stochastic solver: fau, su, rk4 (ctmc) or propagate (dtmc)");
    method_opt->check(CLI::IsMember({"fau", "su", "rk4", "propagate"}));
    CLI::Option* time_opt = solve->add_option(
        "--time", time_horizon, "time horizon (ctmc semantics)");
    CLI::Option* steps_opt =
        solve->add_option("--steps", steps, "step horizon (dtmc semantics)");
    solve->add_option("--dump", dump,
                      "snapshot interval: time units (ctmc) or steps (dtmc)")
        ->required();
    CLI::Option* delta_opt = solve->add_option(
        "--delta", delta, "significance threshold (default 1e-15)");
    CLI::Option* epsilon_opt = solve->add_option(
        "--epsilon", epsilon, "jump-series truncation budget (default 1e-8)");
    CLI::Option* lambda_opt = solve->add_option(
        "--lambda", lambda, "uniformization rate (required with --method su)");
    CLI::Option* h_opt = solve->add_option(
        "--h", h, "integrator step (rk4 / deterministic ctmc; default T/10^4)");
    CLI::Option* semantics_opt =
        solve->add_option("--semantics", semantics,
                          "override the model file's semantics declaration")
            ->check(CLI::IsMember({"ctmc", "dtmc"}));
    solve->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints the message or help text
        return code == 0 ? 0 : MPM_ERR_INVALID_ARGUMENT;
    }

    mpm_run_options opt;
    mpm_run_options_init(&opt);
    opt.model_path = model_path.c_str();
    opt.out_dir = out_dir.c_str();
    opt.mode = mode == "deterministic" ? MPM_MODE_DETERMINISTIC
                                       : MPM_MODE_STOCHASTIC;
    opt.method = method_opt->count() > 0 ? method.c_str() : nullptr;
    opt.has_time = time_opt->count() > 0;
    opt.time_horizon = time_horizon;
    opt.has_steps = steps_opt->count() > 0;
    opt.steps = steps;
    opt.has_dump = 1;
    opt.dump_interval = dump;
    opt.has_delta = delta_opt->count() > 0;
    opt.delta = delta;
    opt.has_epsilon = epsilon_opt->count() > 0;
    opt.epsilon = epsilon;
    opt.has_lambda = lambda_opt->count() > 0;
    opt.lambda = lambda;
    opt.has_h = h_opt->count() > 0;
    opt.h = h;
    opt.has_semantics = semantics_opt->count() > 0;
    opt.semantics =
        semantics == "dtmc" ? MPM_SEMANTICS_DTMC : MPM_SEMANTICS_CTMC;

    int rc = mpm_run(&opt);
    if (rc != MPM_OK) {
        std::fprintf(stderr, "error: %s\n", mpm_last_error());
        return rc;
    }
    std::printf("results written to %s\n", out_dir.c_str());
    return 0;
}
