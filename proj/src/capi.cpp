#include "mpm.h"

#include <cstdio>
#include <cstring>
#include <new>
#include <string>
#include <utility>

#include "mpm/errors.hpp"
#include "mpm/model.hpp"
#include "mpm/parser.hpp"
#include "mpm/run.hpp"

struct mpm_model {
    mpm::Model model;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, std::string message) {
    g_last_error = std::move(message);
    return code;
}

int fail_null(const char* what) {
    return fail(MPM_ERR_INVALID_ARGUMENT, std::string(what) + " must not be null");
}

template <class F>
int guarded(F&& f) {
    try {
        int code = f();
        if (code == MPM_OK) g_last_error.clear();
        return code;
    } catch (const mpm::Error& e) {
        return fail(static_cast<int>(e.status()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MPM_ERR_CAPACITY, "out of memory");
    } catch (const std::exception& e) {
        return fail(MPM_ERR_INVALID_ARGUMENT,
                    std::string("internal error: ") + e.what());
    }
}

}  // namespace

extern "C" {

const char* mpm_last_error(void) { return g_last_error.c_str(); }

int mpm_model_parse(const char* text, mpm_model** out_model) {
    if (!text) return fail_null("text");
    if (!out_model) return fail_null("out_model");
    return guarded([&] {
        auto* handle = new mpm_model{mpm::parse_model(text)};
        *out_model = handle;
        return MPM_OK;
    });
}

int mpm_model_parse_file(const char* path, mpm_model** out_model) {
    if (!path) return fail_null("path");
    if (!out_model) return fail_null("out_model");
    return guarded([&] {
        FILE* f = std::fopen(path, "rb");
        if (!f) {
            throw mpm::IoError("cannot read model file '" + std::string(path) + "'");
        }
        std::string text;
        char buf[4096];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
            text.append(buf, n);
        }
        bool bad = std::ferror(f) != 0;
        std::fclose(f);
        if (bad) {
            throw mpm::IoError("read failure on model file '" + std::string(path) +
                               "'");
        }
        auto* handle = new mpm_model{mpm::parse_model(text)};
        *out_model = handle;
        return MPM_OK;
    });
}

void mpm_model_free(mpm_model* model) { delete model; }

int mpm_model_num_variables(const mpm_model* model, size_t* out_count) {
    if (!model) return fail_null("model");
    if (!out_count) return fail_null("out_count");
    *out_count = model->model.num_variables();
    return MPM_OK;
}

int mpm_model_variable_name(const mpm_model* model, size_t index,
                            const char** out_name) {
    if (!model) return fail_null("model");
    if (!out_name) return fail_null("out_name");
    if (index >= model->model.num_variables()) {
        return fail(MPM_ERR_INVALID_ARGUMENT, "variable index out of range");
    }
    *out_name = model->model.variables[index].c_str();
    return MPM_OK;
}

int mpm_model_initial_value(const mpm_model* model, size_t index,
                            int64_t* out_value) {
    if (!model) return fail_null("model");
    if (!out_value) return fail_null("out_value");
    if (index >= model->model.num_variables()) {
        return fail(MPM_ERR_INVALID_ARGUMENT, "variable index out of range");
    }
    *out_value = model->model.initial_state[index];
    return MPM_OK;
}

int mpm_model_semantics(const mpm_model* model, int* out_semantics) {
    if (!model) return fail_null("model");
    if (!out_semantics) return fail_null("out_semantics");
    *out_semantics = model->model.semantics == mpm::Semantics::Ctmc
                         ? MPM_SEMANTICS_CTMC
                         : MPM_SEMANTICS_DTMC;
    return MPM_OK;
}

int mpm_model_to_text(const mpm_model* model, char** out_text) {
    if (!model) return fail_null("model");
    if (!out_text) return fail_null("out_text");
    return guarded([&] {
        std::string text = mpm::to_text(model->model);
        char* owned = new char[text.size() + 1];
        std::memcpy(owned, text.c_str(), text.size() + 1);
        *out_text = owned;
        return MPM_OK;
    });
}

void mpm_string_free(char* text) { delete[] text; }

void mpm_run_options_init(mpm_run_options* options) {
    if (!options) return;
    *options = mpm_run_options{};
    options->mode = MPM_MODE_STOCHASTIC;
    options->delta = 1e-15;
    options->epsilon = 1e-8;
}

int mpm_run(const mpm_run_options* options) {
    if (!options) return fail_null("options");
    if (!options->model_path) return fail_null("model_path");
    if (!options->out_dir) return fail_null("out_dir");
    if (options->mode != MPM_MODE_STOCHASTIC &&
        options->mode != MPM_MODE_DETERMINISTIC) {
        return fail(MPM_ERR_INVALID_ARGUMENT,
                    "mode must be MPM_MODE_STOCHASTIC or MPM_MODE_DETERMINISTIC");
    }
    if (options->has_semantics && options->semantics != MPM_SEMANTICS_CTMC &&
        options->semantics != MPM_SEMANTICS_DTMC) {
        return fail(MPM_ERR_INVALID_ARGUMENT,
                    "semantics must be MPM_SEMANTICS_CTMC or MPM_SEMANTICS_DTMC");
    }
    return guarded([&] {
        mpm::RunSpec spec;
        spec.model_path = options->model_path;
        spec.out_dir = options->out_dir;
        spec.mode = options->mode == MPM_MODE_DETERMINISTIC
                        ? mpm::Mode::Deterministic
                        : mpm::Mode::Stochastic;
        spec.method = options->method ? options->method : "";
        spec.has_time = options->has_time != 0;
        spec.time = options->time_horizon;
        spec.has_steps = options->has_steps != 0;
        spec.steps = options->steps;
        spec.has_dump = options->has_dump != 0;
        spec.dump = options->dump_interval;
        spec.has_delta = options->has_delta != 0;
        if (options->has_delta) spec.delta = options->delta;
        spec.has_epsilon = options->has_epsilon != 0;
        if (options->has_epsilon) spec.epsilon = options->epsilon;
        spec.has_lambda = options->has_lambda != 0;
        spec.lambda = options->lambda;
        spec.has_h = options->has_h != 0;
        spec.h = options->h;
        spec.has_semantics = options->has_semantics != 0;
        spec.semantics = options->semantics == MPM_SEMANTICS_DTMC
                             ? mpm::Semantics::Dtmc
                             : mpm::Semantics::Ctmc;
        mpm::RunOutcome outcome = mpm::run(spec);
        if (outcome.exit_code != 0) {
            return fail(outcome.exit_code, outcome.message);
        }
        return MPM_OK;
    });
}

}  // extern "C"
