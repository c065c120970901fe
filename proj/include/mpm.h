/* C interface of the Markov population model solver.
 *
 * Every fallible function returns a status code (MPM_OK on success); on
 * failure mpm_last_error() holds a description for the calling thread.
 * Models are opaque handles owned by the caller via mpm_model_free.
 */
#ifndef MPM_H
#define MPM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes (also the CLI exit codes). */
#define MPM_OK 0
#define MPM_ERR_INVALID_ARGUMENT 1
#define MPM_ERR_PARSE 2
#define MPM_ERR_RATE_EXCEEDED 3
#define MPM_ERR_CAPACITY 4
#define MPM_ERR_DIVERGENCE 5
#define MPM_ERR_MODEL_EVAL 6
#define MPM_ERR_IO 7

#define MPM_SEMANTICS_CTMC 0
#define MPM_SEMANTICS_DTMC 1

#define MPM_MODE_STOCHASTIC 0
#define MPM_MODE_DETERMINISTIC 1

typedef struct mpm_model mpm_model;

/* Message of the calling thread's most recent failure ("" if none); the
 * pointer stays valid until the next mpm_* call on the same thread. */
const char* mpm_last_error(void);

/* Parses guarded-command source text into a model handle. */
int mpm_model_parse(const char* text, mpm_model** out_model);

/* Reads and parses a model file. */
int mpm_model_parse_file(const char* path, mpm_model** out_model);

void mpm_model_free(mpm_model* model);

int mpm_model_num_variables(const mpm_model* model, size_t* out_count);

/* Name of variable `index`; the pointer is owned by the model. */
int mpm_model_variable_name(const mpm_model* model, size_t index,
                            const char** out_name);

int mpm_model_initial_value(const mpm_model* model, size_t index,
                            int64_t* out_value);

/* MPM_SEMANTICS_CTMC or MPM_SEMANTICS_DTMC. */
int mpm_model_semantics(const mpm_model* model, int* out_semantics);

/* Canonical textual form (parses back to an equivalent model); release the
 * string with mpm_string_free. */
int mpm_model_to_text(const mpm_model* model, char** out_text);

void mpm_string_free(char* text);

/* One solver invocation, mirroring the CLI flags; has_* fields distinguish
 * "flag absent" from a value so validation can reject misplaced flags. */
typedef struct mpm_run_options {
    const char* model_path; /* required */
    const char* out_dir;    /* required */
    int mode;               /* MPM_MODE_* */
    const char* method;     /* "fau", "su", "rk4", "propagate"; NULL or ""
                             * for deterministic runs */
    int has_time;
    double time_horizon; /* continuous-time horizon */
    int has_steps;
    uint64_t steps; /* discrete-time horizon */
    int has_dump;
    double dump_interval; /* time units (ctmc) or steps (dtmc) */
    int has_delta;
    double delta; /* significance threshold, default 1e-15 */
    int has_epsilon;
    double epsilon; /* jump-series truncation budget, default 1e-8 */
    int has_lambda;
    double lambda; /* uniformization rate (method "su" only) */
    int has_h;
    double h; /* integrator step size (rk4 / deterministic ctmc) */
    int has_semantics;
    int semantics; /* MPM_SEMANTICS_* override of the model file */
} mpm_run_options;

/* Fills defaults: everything absent, stochastic mode, empty paths. */
void mpm_run_options_init(mpm_run_options* options);

/* Runs the selected engine and writes result files (distributions or state
 * vectors, marginals, summary.json) into out_dir. Returns a status code;
 * warnings are printed to stderr and recorded in the summary. */
int mpm_run(const mpm_run_options* options);

#ifdef __cplusplus
}
#endif

#endif /* MPM_H */
