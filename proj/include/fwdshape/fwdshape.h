/* C interface to the forward-curve shaping library.
 *
 * Every function returns a fwdshape_status. On failure the message is kept
 * per thread and read with fwdshape_last_error(). Strings handed out through
 * char** parameters are owned by the caller and released with
 * fwdshape_string_free(). Handles are released with their *_free function;
 * passing NULL to any *_free is a no-op. */
#ifndef FWDSHAPE_H
#define FWDSHAPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FWDSHAPE_BUILDING)
#define FWDSHAPE_API __declspec(dllexport)
#else
#define FWDSHAPE_API __declspec(dllimport)
#endif
#else
#define FWDSHAPE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fwdshape_status {
  FWDSHAPE_OK = 0,
  FWDSHAPE_INVALID_ARGUMENT = 1,
  FWDSHAPE_DATA_ERROR = 2,
  FWDSHAPE_IO_ERROR = 3,
  FWDSHAPE_NUMERICAL_ERROR = 4,
  FWDSHAPE_INTERNAL_ERROR = 5
} fwdshape_status;

FWDSHAPE_API const char* fwdshape_version(void);
FWDSHAPE_API const char* fwdshape_last_error(void);
FWDSHAPE_API const char* fwdshape_status_name(fwdshape_status status);
FWDSHAPE_API void fwdshape_string_free(char* s);

/* ---- quote tables ---- */

typedef struct fwdshape_quotes fwdshape_quotes;

FWDSHAPE_API fwdshape_status fwdshape_quotes_load(const char* path, fwdshape_quotes** out);
FWDSHAPE_API fwdshape_status fwdshape_quotes_parse(const char* csv, fwdshape_quotes** out);
FWDSHAPE_API fwdshape_status fwdshape_quotes_save(const fwdshape_quotes* quotes, const char* path);
FWDSHAPE_API fwdshape_status fwdshape_quotes_csv(const fwdshape_quotes* quotes, char** out);
FWDSHAPE_API size_t fwdshape_quotes_size(const fwdshape_quotes* quotes);
FWDSHAPE_API void fwdshape_quotes_free(fwdshape_quotes* quotes);

/* ---- fitting ---- */

typedef struct fwdshape_fit_options {
  const char* method;          /* mcrm, classical, ratio-average, ratio-average-rescaled; NULL = mcrm */
  const char* fit_config_path; /* JSON fit config, NULL = defaults (then the split's "fit" member) */
  const char* alpha;           /* "auto", "auto:C", "per-case:C" or a number; NULL = keep */
  const char* weight_function; /* "hampel" or "bisquare"; NULL = keep */
  const char* scale;           /* "mad" or "qn"; NULL = keep */
  const char* range;           /* "FROM:TO" quote-date filter; NULL = all */
  double tolerance;            /* <= 0 keeps the configured value */
  int max_iterations;          /* <= 0 keeps */
  int feasibility_refits;      /* < 0 keeps */
  double gap_tolerance;        /* <= 0 keeps */
} fwdshape_fit_options;

FWDSHAPE_API void fwdshape_fit_options_init(fwdshape_fit_options* options);

typedef struct fwdshape_fit fwdshape_fit;

/* Assembles the regression dataset of `split_path` from the quotes and fits it. */
FWDSHAPE_API fwdshape_status fwdshape_fit_quotes(const fwdshape_quotes* quotes, const char* split_path,
                                                 const fwdshape_fit_options* options, fwdshape_fit** out);
/* Loads a fit report written by fwdshape_fit_save (no case data attached). */
FWDSHAPE_API fwdshape_status fwdshape_fit_load(const char* path, fwdshape_fit** out);
FWDSHAPE_API fwdshape_status fwdshape_fit_save(const fwdshape_fit* fit, const char* path);
FWDSHAPE_API fwdshape_status fwdshape_fit_report_json(const fwdshape_fit* fit, char** out);
FWDSHAPE_API fwdshape_status fwdshape_fit_completeness_json(const fwdshape_fit* fit, char** out);
FWDSHAPE_API fwdshape_status fwdshape_fit_children(const fwdshape_fit* fit, size_t* out);
/* gamma has 2 * children entries: slope_1, intercept_1, ... */
FWDSHAPE_API fwdshape_status fwdshape_fit_gamma(const fwdshape_fit* fit, double* gamma, size_t length);
FWDSHAPE_API fwdshape_status fwdshape_fit_gap(const fwdshape_fit* fit, double* max_abs_gap);
/* Flagged cases (weight below threshold) as CSV `case_id,weight`, ascending by
 * weight; the plot CSV has `case_id,weight,x,<child labels>,flagged` for every
 * case. Needs a fit made from quotes. */
FWDSHAPE_API fwdshape_status fwdshape_fit_outliers(const fwdshape_fit* fit, double threshold, char** flagged_csv,
                                                   char** plot_csv);
FWDSHAPE_API void fwdshape_fit_free(fwdshape_fit* fit);

/* Slope and intercept gaps of a fit report's coefficients. `weights` overrides
 * the report's child weights when non-NULL; `equal_weights` != 0 uses 1/K. */
FWDSHAPE_API fwdshape_status fwdshape_check_arbitrage(const fwdshape_fit* fit, const double* weights, size_t length,
                                                      int equal_weights, double* slope_gap, double* intercept_gap);

/* ---- shaping ---- */

/* Shapes `parent_price` from `root` (NULL: the cascade's root, else the first
 * report's parent). `cascade_path` may be NULL when one report is given; levels
 * without inline coefficients take the reports in order. `target` is either a
 * granularity (quarter, month, day, hour) for a full curve or a period code
 * for a single price. Output: CSV `period_start,period_end,price`. */
FWDSHAPE_API fwdshape_status fwdshape_predict(const char* cascade_path, const char* const* report_paths,
                                              size_t report_count, double parent_price, const char* root,
                                              const char* target, char** curve_csv);

/* ---- backtesting ---- */

FWDSHAPE_API fwdshape_status fwdshape_backtest(const fwdshape_quotes* quotes, const char* split_path,
                                               const char* train_range, const char* test_range,
                                               const char* methods, const fwdshape_fit_options* options,
                                               int walk_forward, char** comparison_csv);

/* ---- synthetic markets ---- */

typedef struct fwdshape_sim_options {
  uint64_t seed;
  size_t dates;
  const char* start_date;     /* NULL = 2012-01-02 */
  double x_low, x_high;
  double noise;               /* multiplier on unit column noise */
  int consistent_noise;       /* nonzero: noise keeps rows arbitrage-consistent */
  double fraction;            /* contamination fraction in [0, 0.5) */
  double magnitude;
  const char* contamination;  /* "vertical" or "leverage"; NULL = vertical */
  size_t contaminate_leading; /* 0 = any date */
  int contaminated_child;     /* vertical outliers hit this child (0..3); -1 = random per case */
  const char* weights;        /* "equal" or "hours"; NULL = equal */
  const double* gamma;        /* NULL = built-in coefficients; else 8 values */
} fwdshape_sim_options;

FWDSHAPE_API void fwdshape_sim_options_init(fwdshape_sim_options* options);
/* labels_csv: `quote_date,contaminated`; split_json: a split config for the market. */
FWDSHAPE_API fwdshape_status fwdshape_simulate(const fwdshape_sim_options* options, fwdshape_quotes** quotes,
                                               char** labels_csv, char** split_json);

#ifdef __cplusplus
}
#endif

#endif
