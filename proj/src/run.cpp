#include "mpm/run.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <system_error>
#include <utility>

#include "json.hpp"
#include "mpm/ctmc_engine.hpp"
#include "mpm/errors.hpp"
#include "mpm/mean_field.hpp"
#include "mpm/parser.hpp"

namespace mpm {

namespace {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string pad_index(std::size_t i) {
    std::string digits = std::to_string(i);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return digits;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read model file '" + path + "'");
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failure on model file '" + path + "'");
    }
    return text;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
        throw IoError("write failure on '" + path + "'");
    }
}

const char* status_name(Status s) {
    switch (s) {
        case Status::Ok: return "ok";
        case Status::InvalidArgument: return "invalid-argument";
        case Status::ParseError: return "parse-error";
        case Status::RateExceeded: return "rate-exceeded";
        case Status::Capacity: return "capacity";
        case Status::Divergence: return "divergence";
        case Status::ModelEval: return "model-eval";
        case Status::Io: return "io";
    }
    return "unknown";
}

const char* semantics_name(Semantics s) {
    return s == Semantics::Ctmc ? "ctmc" : "dtmc";
}

// Cross-field validation; throws InvalidArgumentError naming the offending
// flag. Returns the effective integrator step for the methods that use one.
void validate_spec(const RunSpec& spec, Semantics sem) {
    const bool ctmc = (sem == Semantics::Ctmc);
    if (spec.out_dir.empty()) {
        throw InvalidArgumentError("--out is required");
    }
    if (spec.mode == Mode::Stochastic) {
        if (spec.method.empty()) {
            throw InvalidArgumentError("--mode stochastic requires --method");
        }
        if (spec.method != "fau" && spec.method != "su" && spec.method != "rk4" &&
            spec.method != "propagate") {
            throw InvalidArgumentError("unknown method '" + spec.method +
                                       "' (expected fau, su, rk4 or propagate)");
        }
        if (ctmc && spec.method == "propagate") {
            throw InvalidArgumentError(
                "--method propagate requires dtmc semantics (this run is ctmc)");
        }
        if (!ctmc && spec.method != "propagate") {
            throw InvalidArgumentError("--method " + spec.method +
                                       " requires ctmc semantics (this run is dtmc)");
        }
    } else {
        if (!spec.method.empty()) {
            throw InvalidArgumentError(
                "--method is not accepted in deterministic mode; the semantics "
                "selects the integrator");
        }
    }
    if (ctmc) {
        if (spec.has_steps) {
            throw InvalidArgumentError("ctmc analyses take --time, not --steps");
        }
        if (!spec.has_time) {
            throw InvalidArgumentError("ctmc analyses require --time");
        }
        if (!std::isfinite(spec.time) || spec.time < 0.0) {
            throw InvalidArgumentError("--time must be finite and non-negative");
        }
    } else {
        if (spec.has_time) {
            throw InvalidArgumentError("dtmc analyses take --steps, not --time");
        }
        if (!spec.has_steps) {
            throw InvalidArgumentError("dtmc analyses require --steps");
        }
    }
    if (!spec.has_dump) {
        throw InvalidArgumentError("--dump is required");
    }
    if (!std::isfinite(spec.dump) || spec.dump <= 0.0) {
        throw InvalidArgumentError("--dump must be finite and positive");
    }
    if (!ctmc && std::floor(spec.dump) != spec.dump) {
        throw InvalidArgumentError("--dump must be a whole number of steps for dtmc runs");
    }
    const bool uses_epsilon =
        spec.mode == Mode::Stochastic && (spec.method == "fau" || spec.method == "su");
    if (spec.has_epsilon && !uses_epsilon) {
        throw InvalidArgumentError("--epsilon is only accepted with --method fau or su");
    }
    if (spec.has_epsilon && !(spec.epsilon > 0.0 && spec.epsilon < 1.0)) {
        throw InvalidArgumentError("--epsilon must lie in (0, 1)");
    }
    if (spec.has_delta && spec.mode == Mode::Deterministic) {
        throw InvalidArgumentError("--delta is not accepted in deterministic mode");
    }
    if (spec.has_delta && (!std::isfinite(spec.delta) || spec.delta < 0.0)) {
        throw InvalidArgumentError("--delta must be finite and non-negative");
    }
    const bool uses_lambda = spec.mode == Mode::Stochastic && spec.method == "su";
    if (uses_lambda && !spec.has_lambda) {
        throw InvalidArgumentError("--method su requires --lambda");
    }
    if (spec.has_lambda && !uses_lambda) {
        throw InvalidArgumentError("--lambda is only accepted with --method su");
    }
    if (spec.has_lambda && (!std::isfinite(spec.lambda) || spec.lambda <= 0.0)) {
        throw InvalidArgumentError("--lambda must be finite and positive");
    }
    const bool uses_h = (spec.mode == Mode::Stochastic && spec.method == "rk4") ||
                        (spec.mode == Mode::Deterministic && ctmc);
    if (spec.has_h && !uses_h) {
        throw InvalidArgumentError(
            "--h is only accepted with --method rk4 or deterministic ctmc runs");
    }
    if (spec.has_h && (!std::isfinite(spec.h) || spec.h <= 0.0)) {
        throw InvalidArgumentError("--h must be finite and positive");
    }
}

double distribution_sum(const TransientResult& r) {
    double sum = 0.0;
    for (const auto& [s, p] : r.distribution) sum += p;
    return sum;
}

// Writes stochastic dump points as they arrive and keeps the metadata the
// summary needs. Snapshots are keyed by step count (dtmc) or time (ctmc) so
// the final result is not written twice when it coincides with the last
// dump.
struct SnapshotWriter {
    const std::string& dir;
    std::vector<std::string> names;
    bool discrete;
    std::size_t count = 0;
    bool have_last = false;
    double last_key = 0.0;
    double last_sum = 0.0;
    Json meta = Json::array();

    double key_of(const TransientResult& r) const {
        return discrete ? static_cast<double>(r.steps) : r.time;
    }

    void write(const TransientResult& r) {
        ++count;
        const std::string stamp = pad_index(count);
        write_distribution(r, names, dir + "/distribution_" + stamp + ".csv");
        for (std::size_t v = 0; v < names.size(); ++v) {
            write_marginal(r, v, names[v],
                           dir + "/marginal_" + names[v] + "_" + stamp + ".csv");
        }
        last_key = key_of(r);
        last_sum = distribution_sum(r);
        have_last = true;
        Json m;
        m["index"] = count;
        if (discrete) {
            m["step"] = r.steps;
        } else {
            m["time"] = r.time;
        }
        m["states"] = r.distribution.size();
        m["probability_sum"] = last_sum;
        meta.push_back(std::move(m));
    }

    void finish(const TransientResult& final_result) {
        if (!have_last || last_key != key_of(final_result)) {
            write(final_result);
        }
    }
};

struct DeterministicFiles {
    Json meta = Json::array();
    std::size_t count = 0;
};

// One state-vector file per sample plus combined and per-variable
// trajectories (the time column holds the step index for dtmc runs).
DeterministicFiles write_deterministic(const MeanFieldResult& mf,
                                       const std::vector<std::string>& names,
                                       const std::string& dir, bool discrete) {
    DeterministicFiles out;
    const char* axis = discrete ? "step" : "time";
    std::string header;
    for (std::size_t v = 0; v < names.size(); ++v) {
        if (v) header += ',';
        header += names[v];
    }
    header += '\n';
    std::string combined = std::string(axis) + "," + header;
    for (const MeanFieldSample& s : mf.samples) {
        ++out.count;
        const std::string stamp = pad_index(out.count);
        std::string body = header;
        for (std::size_t v = 0; v < s.x.size(); ++v) {
            if (v) body += ',';
            body += format_double(s.x[v]);
        }
        body += '\n';
        write_text_file(dir + "/state_" + stamp + ".csv", body);
        combined += format_double(s.time);
        for (double v : s.x) {
            combined += ',';
            combined += format_double(v);
        }
        combined += '\n';
        Json m;
        m["index"] = out.count;
        m[axis] = s.time;
        out.meta.push_back(std::move(m));
    }
    write_text_file(dir + "/trajectory.csv", combined);
    for (std::size_t v = 0; v < names.size(); ++v) {
        std::string body = std::string(axis) + "," + names[v] + "\n";
        for (const MeanFieldSample& s : mf.samples) {
            body += format_double(s.time);
            body += ',';
            body += format_double(s.x[v]);
            body += '\n';
        }
        write_text_file(dir + "/trajectory_" + names[v] + ".csv", body);
    }
    return out;
}

void emit_warning(std::vector<std::string>& warnings, const std::string& text) {
    warnings.push_back(text);
    std::fprintf(stderr, "warning: %s\n", text.c_str());
}

}  // namespace

void write_distribution(const TransientResult& snapshot,
                        const std::vector<std::string>& variable_names,
                        const std::string& path) {
    auto rows = snapshot.distribution;
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string out;
    out.reserve(rows.size() * 32 + 64);
    for (std::size_t v = 0; v < variable_names.size(); ++v) {
        if (v) out += ',';
        out += variable_names[v];
    }
    out += variable_names.empty() ? "probability\n" : ",probability\n";
    for (const auto& [state, p] : rows) {
        for (std::int64_t value : state) {
            out += format_int(value);
            out += ',';
        }
        out += format_double(p);
        out += '\n';
    }
    write_text_file(path, out);
}

void write_marginal(const TransientResult& snapshot, std::size_t variable,
                    const std::string& variable_name, const std::string& path) {
    std::map<std::int64_t, double> marginal;
    for (const auto& [state, p] : snapshot.distribution) {
        marginal[state.at(variable)] += p;
    }
    std::string out = variable_name + ",probability\n";
    for (const auto& [value, p] : marginal) {
        out += format_int(value);
        out += ',';
        out += format_double(p);
        out += '\n';
    }
    write_text_file(path, out);
}

RunOutcome run(const RunSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> warnings;
    Json summary;
    auto wall_ms = [&t0]() {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };
    auto finish_summary = [&](Status status, const std::string& message) {
        summary["status"] = status_name(status);
        if (!message.empty()) summary["message"] = message;
        summary["warnings"] = warnings;
        summary["wall_ms"] = wall_ms();
        // Best effort: a summary describing the failure is still useful, but
        // an unwritable output directory must not mask the original error.
        try {
            if (!spec.out_dir.empty() &&
                std::filesystem::is_directory(spec.out_dir)) {
                write_text_file(spec.out_dir + "/summary.json", summary.dump(2) + "\n");
            }
        } catch (...) {
        }
    };

    try {
        summary["model"] = spec.model_path;
        const std::string text = read_file(spec.model_path);
        Model model = parse_model(text);
        Semantics sem = model.semantics;
        if (spec.has_semantics && spec.semantics != model.semantics) {
            sem = spec.semantics;
            emit_warning(warnings,
                         std::string("--semantics ") + semantics_name(spec.semantics) +
                             " overrides the model's " +
                             semantics_name(model.semantics) + " declaration");
        }
        model.semantics = sem;
        validate_spec(spec, sem);
        {
            std::error_code ec;
            std::filesystem::create_directories(spec.out_dir, ec);
            if (ec || !std::filesystem::is_directory(spec.out_dir)) {
                throw IoError("cannot create output directory '" + spec.out_dir + "'");
            }
        }
        const bool ctmc = (sem == Semantics::Ctmc);
        summary["mode"] =
            spec.mode == Mode::Stochastic ? "stochastic" : "deterministic";
        if (!spec.method.empty()) summary["method"] = spec.method;
        summary["semantics"] = semantics_name(sem);
        if (ctmc) {
            summary["time"] = spec.time;
        } else {
            summary["steps"] = spec.steps;
        }
        summary["dump_interval"] = spec.dump;

        if (spec.mode == Mode::Stochastic) {
            summary["delta"] = spec.delta;
            SnapshotWriter writer{spec.out_dir, model.variables, !ctmc};
            DumpFn cb = [&writer](const TransientResult& r) { writer.write(r); };
            TransientResult final_result;
            if (spec.method == "propagate") {
                PropagationConfig cfg;
                cfg.delta = spec.delta;
                cfg.dump_interval = static_cast<std::uint64_t>(spec.dump);
                final_result = dtmc_transient(model, spec.steps, cfg, cb);
            } else if (spec.method == "rk4") {
                const double h = spec.has_h ? spec.h
                                 : spec.time > 0.0 ? spec.time / 1e4
                                                   : 1.0;
                summary["h"] = h;
                final_result =
                    rk4_cme(model, spec.time, h, spec.delta, cb, spec.dump);
            } else {
                UniformizationConfig cfg;
                cfg.epsilon = spec.epsilon;
                cfg.delta = spec.delta;
                cfg.t = spec.time;
                cfg.dump_interval = spec.dump;
                summary["epsilon"] = spec.epsilon;
                if (spec.method == "su") {
                    cfg.lambda_user = spec.lambda;
                    summary["lambda"] = spec.lambda;
                    final_result = standard_uniformization(model, cfg, cb);
                } else {
                    final_result = fast_adaptive_uniformization(model, cfg, cb);
                }
            }
            writer.finish(final_result);
            summary["error"] = 1.0 - writer.last_sum;
            summary["dropped_mass"] = final_result.dropped_mass;
            summary["truncation_error"] = final_result.truncation_error;
            summary["accumulated_error"] = final_result.accumulated_error;
            summary["active_states"] = final_result.num_active;
            summary["peak_active_states"] = final_result.peak_active;
            summary["total_nodes"] = final_result.num_nodes;
            summary["compressions"] = final_result.compressions;
            summary["jumps"] = final_result.steps;
            summary["dumps"] = writer.meta;
            finish_summary(Status::Ok, "");
            return RunOutcome{0, ""};
        }

        MeanFieldResult mf;
        if (ctmc) {
            const double h = spec.has_h ? spec.h
                             : spec.time > 0.0 ? spec.time / 1e4
                                               : 1.0;
            summary["h"] = h;
            mf = rre_mean_field(model, spec.time, h, spec.dump);
        } else {
            mf = dtmc_mean_field(model, spec.steps,
                                 static_cast<std::uint64_t>(spec.dump));
        }
        if (mf.clamp_count > 0) {
            emit_warning(warnings,
                         std::to_string(mf.clamp_count) +
                             " negative concentration excursions were clamped to 0");
        }
        if (mf.guard_flip_warning) {
            emit_warning(warnings,
                         "a guard flipped while its rate was not vanishing; "
                         "mean-field results are approximate near that surface");
        }
        DeterministicFiles files =
            write_deterministic(mf, model.variables, spec.out_dir, !ctmc);
        summary["samples"] = files.count;
        summary["diverged"] = mf.diverged;
        summary["clamp_count"] = mf.clamp_count;
        summary["guard_flip_warning"] = mf.guard_flip_warning;
        summary["dumps"] = files.meta;
        if (mf.diverged) {
            const std::string msg =
                "integration diverged; the trajectory up to the last finite "
                "point was written";
            finish_summary(Status::Divergence, msg);
            return RunOutcome{static_cast<int>(Status::Divergence), msg};
        }
        finish_summary(Status::Ok, "");
        return RunOutcome{0, ""};
    } catch (const Error& e) {
        finish_summary(e.status(), e.what());
        return RunOutcome{static_cast<int>(e.status()), e.what()};
    } catch (const std::exception& e) {
        const std::string msg = std::string("internal error: ") + e.what();
        finish_summary(Status::InvalidArgument, msg);
        return RunOutcome{static_cast<int>(Status::InvalidArgument), msg};
    }
}

}  // namespace mpm
