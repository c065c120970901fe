#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpm/discrete_engine.hpp"
#include "mpm/model.hpp"

namespace mpm {

enum class Mode { Stochastic, Deterministic };

// One solver invocation. has_* flags distinguish "not given" from a value,
// so validation can reject flags that do not belong to the chosen method.
struct RunSpec {
    std::string model_path;
    std::string out_dir;
    Mode mode = Mode::Stochastic;
    std::string method;  // "fau" | "su" | "rk4" | "propagate"; empty for
                         // deterministic runs (the semantics selects the
                         // integrator)
    bool has_time = false;
    double time = 0.0;  // horizon, continuous-time semantics
    bool has_steps = false;
    std::uint64_t steps = 0;  // horizon, discrete-time semantics
    bool has_dump = false;
    double dump = 0.0;  // snapshot interval: time units (ctmc) or steps (dtmc)
    bool has_delta = false;
    double delta = 1e-15;  // significance threshold
    bool has_epsilon = false;
    double epsilon = 1e-8;  // jump-series truncation budget
    bool has_lambda = false;
    double lambda = 0.0;  // uniformization rate (standard uniformization)
    bool has_h = false;
    double h = 0.0;  // integrator step size; default horizon/10^4
    bool has_semantics = false;
    Semantics semantics = Semantics::Ctmc;  // overrides the model file
};

struct RunOutcome {
    int exit_code = 0;    // Status enum value; 0 = success
    std::string message;  // error description when exit_code != 0
};

// Validates the spec, parses the model, executes the selected engine and
// writes the result files into spec.out_dir: per dump point a joint
// distribution (stochastic) or state vector (deterministic) plus one
// marginal file per variable, and a summary.json with the error ledger,
// state-count peaks and wall time. Never throws: failures come back as the
// matching nonzero exit code with a message naming the offending flag,
// state or line. Warnings (semantics override, negative-concentration
// clamping, hard guard flips) go to stderr and into the summary.
RunOutcome run(const RunSpec& spec);

// Joint-distribution CSV: a header naming the variables then "probability",
// then one record per state — populations, then the probability — sorted
// lexicographically by state so identical runs produce identical bytes.
// Reals are written in shortest round-trip form.
void write_distribution(const TransientResult& snapshot,
                        const std::vector<std::string>& variable_names,
                        const std::string& path);

// Marginal CSV for one variable: "value,probability" records ascending by
// value, aggregated from the joint distribution.
void write_marginal(const TransientResult& snapshot, std::size_t variable,
                    const std::string& variable_name, const std::string& path);

}  // namespace mpm
