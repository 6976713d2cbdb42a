#ifndef EQCORR_H
#define EQCORR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum EqcStatus {
  EQC_STATUS_OK = 0,
  EQC_STATUS_NULL_POINTER = 1,
  EQC_STATUS_INVALID_UTF8 = 2,
  EQC_STATUS_BUFFER_SIZE = 3,
  EQC_STATUS_PARSE = 10,
  EQC_STATUS_EMPTY_UNIVERSE = 11,
  EQC_STATUS_INSUFFICIENT_DATA = 12,
  EQC_STATUS_WINDOW = 13,
  EQC_STATUS_DEGENERATE_UNIVERSE = 14,
  EQC_STATUS_ESTIMATION = 15,
  EQC_STATUS_DEGENERATE_PORTFOLIO = 16,
  EQC_STATUS_SINGULAR = 17,
  EQC_STATUS_ARGUMENT = 18,
  EQC_STATUS_SPEC = 19,
  EQC_STATUS_INFEASIBLE = 20,
  EQC_STATUS_NUMERIC = 21,
  EQC_STATUS_TUNING = 22,
  EQC_STATUS_CONFIG = 23,
  EQC_STATUS_IO = 24,
  EQC_STATUS_CSV = 25,
  EQC_STATUS_PANIC = 99,
} EqcStatus;

// Result of a backtest run.
typedef struct EqcLedger EqcLedger;

// Daily gross % returns loaded from a price CSV.
typedef struct EqcReturns EqcReturns;

// Covariance-derived risk measures for one universe.
typedef struct EqcRiskModel EqcRiskModel;

// Backtest settings. Obtain defaults from [`eqc_backtest_options_default`].
typedef struct EqcBacktestOptions {
  uint32_t train_months;
  uint32_t test_months;
  size_t k;
  double grid_step;
  uint32_t filter_window;
  uint64_t seed;
  // Inclusive year range; both 0 selects every year with enough history.
  int32_t first_year;
  int32_t last_year;
  // Minimum mean daily net % return for Type-1 models.
  double r_min;
} EqcBacktestOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *eqc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *eqc_version(void);

// Build a risk model from a row-major `d x d` covariance matrix.
//
// # Safety
// `cov` must point to `d * d` doubles and `out` to writable storage.
enum EqcStatus eqc_risk_model_new(const double *cov, size_t d, struct EqcRiskModel **out);

// # Safety
// `model` must come from [`eqc_risk_model_new`] and not be used afterwards.
void eqc_risk_model_free(struct EqcRiskModel *model);

// # Safety
// `model` must be a live handle or null.
size_t eqc_risk_model_dim(const struct EqcRiskModel *model);

// Equal-correlation weights into `out[len]`.
//
// # Safety
// `model` must be a live handle and `out` must hold `len` doubles.
enum EqcStatus eqc_w_eq(const struct EqcRiskModel *model, double *out, size_t len);

// Minimum-variance weights into `out[len]`.
//
// # Safety
// As for [`eqc_w_eq`].
enum EqcStatus eqc_min_variance(const struct EqcRiskModel *model, double *out, size_t len);

// Each asset's correlation with portfolio `w`, into `out`.
//
// # Safety
// `w` and `out` must each hold `len` doubles.
enum EqcStatus eqc_corr_vec(const struct EqcRiskModel *model,
                            const double *w,
                            size_t len,
                            double *out);

// Variance of the correlation vector of `w`.
//
// # Safety
// `w` must hold `len` doubles; `out` must be writable.
enum EqcStatus eqc_sigma_rho_sq(const struct EqcRiskModel *model,
                                const double *w,
                                size_t len,
                                double *out);

// Squared distance from `w` to the equal-correlation weights.
//
// # Safety
// As for [`eqc_sigma_rho_sq`].
enum EqcStatus eqc_d_eq_sq(const struct EqcRiskModel *model,
                           const double *w,
                           size_t len,
                           double *out);

// Solve one model (e.g. `"B2-SC"`) for mean vector `mu[d]` and row-major
// covariance `cov[d*d]`, used as given. Pass NaN for unused
// hyperparameters.
//
// # Safety
// Pointers must reference arrays of the stated sizes; `w_out` holds `d`
// doubles and `value_out` may be null.
enum EqcStatus eqc_solve_model(const char *model,
                               const double *mu,
                               const double *cov,
                               size_t d,
                               double lambda1,
                               double lambda2,
                               double r_min,
                               double *w_out,
                               double *value_out);

// Load a price CSV and convert it to daily gross returns.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum EqcStatus eqc_returns_load_csv(const char *path, struct EqcReturns **out);

// # Safety
// `returns` must come from [`eqc_returns_load_csv`] or be null.
void eqc_returns_free(struct EqcReturns *returns);

// # Safety
// `returns` must be a live handle; the out pointers must be writable.
enum EqcStatus eqc_returns_shape(const struct EqcReturns *returns, size_t *n_obs, size_t *n_assets);

struct EqcBacktestOptions eqc_backtest_options_default(void);

// Run the walk-forward backtest of `model` over `returns`. `options` may
// be null for defaults.
//
// # Safety
// Handles must be live, `model` NUL-terminated, `out` writable.
enum EqcStatus eqc_backtest_run(const struct EqcReturns *returns,
                                const char *model,
                                const struct EqcBacktestOptions *options,
                                struct EqcLedger **out);

// # Safety
// `ledger` must come from [`eqc_backtest_run`] or be null.
void eqc_ledger_free(struct EqcLedger *ledger);

// Number of monthly records (0 for a null handle).
//
// # Safety
// `ledger` must be a live handle or null.
size_t eqc_ledger_month_count(const struct EqcLedger *ledger);

// Number of daily portfolio returns (0 for a null handle).
//
// # Safety
// `ledger` must be a live handle or null.
size_t eqc_ledger_daily_len(const struct EqcLedger *ledger);

// Daily portfolio gross % returns into `out[len]`.
//
// # Safety
// `out` must hold `len` doubles.
enum EqcStatus eqc_ledger_daily_returns(const struct EqcLedger *ledger, double *out, size_t len);

// Year, month, universe size and leverage of record `index`. Any out
// pointer may be null.
//
// # Safety
// `ledger` must be a live handle.
enum EqcStatus eqc_ledger_month_info(const struct EqcLedger *ledger,
                                     size_t index,
                                     int32_t *year,
                                     uint32_t *month,
                                     size_t *n_assets,
                                     double *leverage);

// Weights of record `index` into `out[len]`, in ticker order.
//
// # Safety
// `out` must hold `len` doubles.
enum EqcStatus eqc_ledger_month_weights(const struct EqcLedger *ledger,
                                        size_t index,
                                        double *out,
                                        size_t len);

// Write `weights.csv`, `returns.csv` and `months.csv` into directory `dir`.
//
// # Safety
// `ledger` must be live and `dir` NUL-terminated.
enum EqcStatus eqc_ledger_write_csv(const struct EqcLedger *ledger, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQCORR_H */
