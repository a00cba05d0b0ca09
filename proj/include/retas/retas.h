#ifndef RETAS_RETAS_H
#define RETAS_RETAS_H

#include <stddef.h>
#include <stdint.h>

#if defined(RETAS_BUILDING_LIBRARY)
#define RETAS_API __attribute__((visibility("default")))
#else
#define RETAS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum {
    RETAS_OK = 0,
    RETAS_ERR_INPUT = 1,
    RETAS_ERR_MODEL = 2
} retas_status;

typedef struct retas_catalog retas_catalog;
typedef struct retas_background retas_background;
typedef struct retas_fit retas_fit;
typedef struct retas_sim_config retas_sim_config;
typedef struct retas_study retas_study;

RETAS_API const char* retas_version(void);

/* Message of the last failed call on this thread ("" if none). */
RETAS_API const char* retas_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
RETAS_API void retas_string_free(char* s);

/* ---- catalogs ---------------------------------------------------------- */

typedef struct {
    const char* region;      /* "plane", "lon_min,lon_max,lat_min,lat_max" or NULL (config/plane) */
    const char* config_path; /* key = value catalog config, or NULL */
    int has_m0;
    double m0;
    int has_horizon;
    double horizon;
    const char* origin;      /* ISO-8601 time zero, or NULL */
    int drop_outside;
} retas_catalog_options;

RETAS_API retas_catalog_options retas_catalog_options_default(void);

RETAS_API retas_status retas_catalog_load(const char* csv_path, const retas_catalog_options* options,
                                          retas_catalog** out);
RETAS_API retas_status retas_catalog_save(const retas_catalog* catalog, const char* csv_path);
/* key = value config (region, m0, horizon) for reloading the CSV exactly. */
RETAS_API retas_status retas_catalog_save_config(const retas_catalog* catalog, const char* config_path);
RETAS_API size_t retas_catalog_size(const retas_catalog* catalog);
RETAS_API double retas_catalog_horizon(const retas_catalog* catalog);
RETAS_API double retas_catalog_m0(const retas_catalog* catalog);
RETAS_API retas_status retas_catalog_event(const retas_catalog* catalog, size_t i, double* time, double* lon,
                                           double* lat, double* magnitude);
RETAS_API void retas_catalog_free(retas_catalog* catalog);

/* ---- background density ----------------------------------------------- */

/* KDE of `training` epicenters on the region of `target`. Bandwidths <= 0
 * select Silverman's rule. */
RETAS_API retas_status retas_background_kde(const retas_catalog* training, const retas_catalog* target,
                                            double bandwidth_x, double bandwidth_y, retas_background** out);
RETAS_API retas_status retas_background_uniform(const retas_catalog* target, retas_background** out);
RETAS_API retas_status retas_background_load(const char* json_path, retas_background** out);
RETAS_API retas_status retas_background_save(const retas_background* background, const char* json_path,
                                             const char* provenance_json);
RETAS_API void retas_background_free(retas_background* background);

/* ---- estimation -------------------------------------------------------- */

typedef struct {
    int max_simplex_iterations;
    int max_polish_iterations;
    double rel_tol;
    int compute_standard_errors;
} retas_fit_options;

RETAS_API retas_fit_options retas_fit_options_default(void);

/* family: "exponential" (alias "etas"), "weibull" or "gamma".
 * init_json: theta object or fit result JSON; NULL runs the warm-start ladder.
 * Non-convergence still returns RETAS_OK; see retas_fit_converged. */
RETAS_API retas_status retas_fit_catalog(const retas_catalog* catalog, const retas_background* background,
                                         const char* family, const char* init_json,
                                         const retas_fit_options* options, retas_fit** out);
RETAS_API int retas_fit_converged(const retas_fit* fit);
RETAS_API int retas_fit_hessian_invertible(const retas_fit* fit);
RETAS_API double retas_fit_loglik(const retas_fit* fit);
RETAS_API double retas_fit_aic(const retas_fit* fit);
RETAS_API int retas_fit_n_params(const retas_fit* fit);
RETAS_API retas_status retas_fit_json(const retas_fit* fit, const char* provenance_json, char** out);
/* Fitted theta as a bare JSON object (usable as init_json). */
RETAS_API retas_status retas_fit_theta_json(const retas_fit* fit, char** out);
/* One table row: family, estimates (SE), loglik, AIC. */
RETAS_API retas_status retas_fit_table_row(const retas_fit* fit, char** out);
RETAS_API void retas_fit_free(retas_fit* fit);

/* ---- likelihood diagnostics -------------------------------------------- */

RETAS_API retas_status retas_loglik(const retas_catalog* catalog, const retas_background* background,
                                    const char* theta_json, double* out);
/* CSV i,j,p of the forward-recursion main-shock probabilities. */
RETAS_API retas_status retas_dump_p(const retas_catalog* catalog, const retas_background* background,
                                    const char* theta_json, const char* csv_path);
/* CSV t,intensity of the spatially integrated ground intensity on a grid. */
RETAS_API retas_status retas_intensity_samples(const retas_catalog* catalog, const retas_background* background,
                                               const char* theta_json, int points, const char* csv_path);

/* ---- goodness of fit --------------------------------------------------- */

/* Writes residuals.csv, tests.json, qq.csv and acf.csv into out_dir. The
 * tests JSON is also returned through tests_json when non-NULL. */
RETAS_API retas_status retas_gof(const retas_catalog* catalog, const retas_background* background,
                                 const char* theta_json, int lags, const char* out_dir,
                                 const char* provenance_json, char** tests_json);

/* ---- simulation -------------------------------------------------------- */

/* Study preset settings, model 1 or 2. */
RETAS_API retas_status retas_sim_config_preset(int model, retas_sim_config** out);
/* {"theta": {...}, "horizon", "region", "background": {...} | omitted,
 *  "seed", "replicates"} or {"preset": "table1-model1", ...overrides}. */
RETAS_API retas_status retas_sim_config_from_json(const char* json, retas_sim_config** out);
RETAS_API retas_status retas_sim_config_to_json(const retas_sim_config* config, const char* provenance_json,
                                                char** out);
RETAS_API void retas_sim_config_set_seed(retas_sim_config* config, uint64_t seed);
RETAS_API void retas_sim_config_set_replicates(retas_sim_config* config, int replicates);
RETAS_API void retas_sim_config_free(retas_sim_config* config);

RETAS_API retas_status retas_simulate(const retas_sim_config* config, retas_catalog** out);

/* fit = 0 skips estimation (true-parameter residuals only). */
RETAS_API retas_status retas_study_run(const retas_sim_config* config, int fit, int lags, int workers,
                                       retas_study** out);
RETAS_API retas_status retas_study_json(const retas_study* study, const char* provenance_json, char** out);
RETAS_API retas_status retas_study_table1_csv(const retas_study* study, char** out);
RETAS_API retas_status retas_study_table2_csv(const retas_study* study, char** out);
RETAS_API void retas_study_free(retas_study* study);

/* ---- provenance -------------------------------------------------------- */

/* {"config_hash": FNV-1a of config_text, "seed", "version"}. */
RETAS_API retas_status retas_provenance_json(const char* config_text, uint64_t seed, char** out);

#ifdef __cplusplus
}
#endif

#endif
