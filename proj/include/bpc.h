/*
 * bpc - Bayesian paired-comparison models (Bradley-Terry / Davidson)
 *
 * C interface to the shared library.  All functions return a bpc_status;
 * non-zero means failure and bpc_last_error() carries a one-line message.
 * Objects come back through opaque handles that must be released with the
 * matching *_free function.  Returned strings are heap-allocated and released
 * with bpc_string_free().
 */
#ifndef BPC_H
#define BPC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bpc_status {
  BPC_OK = 0,
  /* usage / configuration */
  BPC_ERR_INVALID_ARGUMENT,
  BPC_ERR_UNKNOWN_MODEL,
  /* data */
  BPC_ERR_MISSING_COLUMN,
  BPC_ERR_BAD_RESULT_VALUE,
  BPC_ERR_PARSE,
  BPC_ERR_EMPTY_AFTER_TIE_REMOVAL,
  BPC_ERR_TIE_WITHOUT_DAVIDSON,
  BPC_ERR_CONSTANT_COVARIATE,
  BPC_ERR_SINGLE_PLAYER,
  BPC_ERR_UNKNOWN_SUBJECT,
  BPC_ERR_UNKNOWN_PLAYER,
  BPC_ERR_MISSING_COVARIATE,
  /* numerics */
  BPC_ERR_NON_FINITE_DENSITY,
  BPC_ERR_NON_FINITE_GRADIENT,
  BPC_ERR_ZERO_VARIANCE,
  BPC_ERR_DEGENERATE_DRAWS,
  BPC_ERR_TOO_FEW_TAIL_SAMPLES,
  /* sampler */
  BPC_ERR_ALL_DIVERGENT,
  BPC_ERR_NON_FINITE_INIT,
  /* archive */
  BPC_ERR_VERSION_MISMATCH,
  BPC_ERR_CORRUPT_ARCHIVE,
  BPC_ERR_FINGERPRINT_MISMATCH,
  BPC_ERR_IO,
  BPC_ERR_INTERNAL
} bpc_status;

/* Exit class used by command-line tools: 0 ok, 1 usage, 2 data, 3 sampler, 4 archive. */
int bpc_status_exit_class(bpc_status status);
const char* bpc_status_name(bpc_status status);

/* Thread-local message describing the most recent failure in this thread. */
const char* bpc_last_error(void);

void bpc_string_free(char* s);

typedef struct bpc_dataset bpc_dataset;
typedef struct bpc_model bpc_model;
typedef struct bpc_fit bpc_fit;

void bpc_dataset_free(bpc_dataset* ds);
void bpc_model_free(bpc_model* model);
void bpc_fit_free(bpc_fit* fit);

/* ---- ingestion ---- */

enum { BPC_TIES_NONE = 0, BPC_TIES_RANDOM = 1, BPC_TIES_REMOVE = 2 };

typedef struct bpc_ingest_options {
  const char* player0_col;      /* required */
  const char* player1_col;      /* required */
  const char* result_col;       /* result in {0,1,2}; exclusive with scores */
  const char* score0_col;       /* optional score pair; higher score wins */
  const char* score1_col;
  const char* subject_col;      /* optional */
  const char* order_col;        /* optional 0/1 order-effect indicator */
  const char* covariate_cols;   /* optional, comma separated */
  const char* player_cov_path;  /* optional per-player covariate table */
  const char* player_cov_cols;  /* optional subset, comma separated */
  int solve_ties;               /* BPC_TIES_* */
  uint64_t tie_seed;
  char delimiter;               /* 0 means ',' */
} bpc_ingest_options;

bpc_status bpc_dataset_load(const char* path, const bpc_ingest_options* options,
                            bpc_dataset** out);

size_t bpc_dataset_num_contests(const bpc_dataset* ds);
size_t bpc_dataset_num_players(const bpc_dataset* ds);

/* ---- model building ---- */

typedef struct bpc_prior_options {
  /* standard deviations of the mean-zero normal priors; <= 0 keeps defaults
   * (lambda/nu/beta/subject/U sd = sqrt(3), gamma sd = 1) */
  double lambda_sd, nu_sd, gamma_sd, beta_sd, subject_sd, u_sd;
} bpc_prior_options;

/* model_string: 'bt' or 'davidson' plus dash-joined extensions
 * 'ordereffect', 'generalized', 'U', 'S' (e.g. "davidson-generalized-U"). */
bpc_status bpc_model_build(const bpc_dataset* ds, const char* model_string,
                           const bpc_prior_options* priors, bpc_model** out);

/* ---- sampling ---- */

typedef struct bpc_sampler_options {
  int chains;           /* <= 0 keeps the default 4 */
  int warmup;           /* < 0 keeps 1000; 0 disables adaptation */
  int draws;            /* <= 0 keeps 2000 */
  double target_accept; /* <= 0 keeps 0.8 */
  int max_treedepth;    /* <= 0 keeps 10 */
  uint64_t seed;
  double init_radius;   /* < 0 keeps 2.0 */
  int threads;          /* <= 0: BPC_THREADS env var, else hardware count */
} bpc_sampler_options;

bpc_status bpc_sample(const bpc_model* model, const bpc_sampler_options* options, bpc_fit** out);

/* ---- persistence ---- */

bpc_status bpc_fit_save(const bpc_fit* fit, const char* path);
bpc_status bpc_fit_load(const char* path, bpc_fit** out);

/* Reload the training data with the archived ingest settings and verify the
 * stored content fingerprint. */
bpc_status bpc_fit_load_dataset(const bpc_fit* fit, const char* data_path, bpc_dataset** out);

size_t bpc_fit_num_chains(const bpc_fit* fit);
size_t bpc_fit_draws_per_chain(const bpc_fit* fit);
size_t bpc_fit_dimension(const bpc_fit* fit);

/* ---- reports ---- */

enum { BPC_FORMAT_TEXT = 0, BPC_FORMAT_CSV = 1, BPC_FORMAT_JSON = 2 };
enum { BPC_INTERVAL_HPD = 0, BPC_INTERVAL_EQUAL_TAILED = 1 };

typedef struct bpc_table_options {
  int format;        /* BPC_FORMAT_* */
  int interval_kind; /* BPC_INTERVAL_* */
  double mass;       /* <= 0 keeps 0.95 */
  int digits;        /* <= 0 keeps 2 */
} bpc_table_options;

bpc_status bpc_render_summary(const bpc_fit* fit, const bpc_table_options* options, char** out);
bpc_status bpc_render_parameters(const bpc_fit* fit, const bpc_table_options* options, char** out);
bpc_status bpc_render_ranks(const bpc_fit* fit, const bpc_table_options* options, char** out);
bpc_status bpc_render_probabilities(const bpc_fit* fit, const bpc_table_options* options,
                                    char** out);

/* Convergence report; *pass (optional) receives 1 when every check is green. */
bpc_status bpc_render_diagnostics(const bpc_fit* fit, int format, char** out, int* pass);

bpc_status bpc_render_waic(const bpc_fit* fit, const bpc_dataset* ds, int format, char** out);
bpc_status bpc_render_loo(const bpc_fit* fit, const bpc_dataset* ds, int format, char** out);

/* Information-criterion comparison of several fits over their datasets.
 * use_loo selects PSIS-LOO instead of WAIC. */
bpc_status bpc_render_compare(const bpc_fit* const* fits, const bpc_dataset* const* datasets,
                              const char* const* names, size_t count, int use_loo, int format,
                              char** out);

/* Posterior predictions for new contests given as a CSV with player0,player1
 * and optional order / covariate columns (names follow the fit's ingest
 * spec).  standardized != 0 means covariates are already on the standardized
 * scale. */
bpc_status bpc_render_predict(const bpc_fit* fit, const char* newdata_path, size_t draws_per_row,
                              uint64_t seed, int standardized, int format, char** out);

/* Long-format draws (parameter,chain,draw,value) as CSV; params may be a
 * comma-separated subset or NULL for all. */
bpc_status bpc_render_plotdata(const bpc_fit* fit, const char* params, char** out);

#ifdef __cplusplus
}
#endif

#endif /* BPC_H */
