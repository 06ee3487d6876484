#ifndef HHG_H
#define HHG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Engine selectors accepted by [`hhg_spectrum_compute`].
 */
typedef enum {
  HHG_ENGINE_EXACT = 0,
  HHG_ENGINE_ADIA_INTRA = 1,
  HHG_ENGINE_ADIA_INTER = 2,
} HhgEngine;

/**
 * Result codes.
 */
typedef enum {
  HHG_STATUS_OK = 0,
  HHG_STATUS_NULL_POINTER = 1,
  HHG_STATUS_INVALID_INPUT = 2,
  HHG_STATUS_CONFIG = 3,
  HHG_STATUS_NORM_DRIFT = 4,
  HHG_STATUS_NUMERICAL = 5,
  HHG_STATUS_IO = 6,
  HHG_STATUS_BUFFER_TOO_SMALL = 7,
  HHG_STATUS_PANIC = 8,
} HhgStatus;

/**
 * Opaque model handle.
 */
typedef struct HhgModel HhgModel;

/**
 * Opaque spectrum handle.
 */
typedef struct HhgSpectrum HhgSpectrum;

/**
 * Tight-binding parameters. Angles in degrees.
 */
typedef struct {
  double t0;
  double t1;
  double d;
  double l;
  double alpha_mol;
  double alpha_inter;
} HhgModelParams;

/**
 * Pulse parameters. `omega0 <= 0` derives the carrier from the gap as
 * `gap / photon_fraction`.
 */
typedef struct {
  double e0;
  double omega0;
  double photon_fraction;
  uint32_t n_cyc;
  double phi;
  double dt;
} HhgPulseParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

HhgModelParams hhg_model_params_default(void);

HhgPulseParams hhg_pulse_params_default(void);

/**
 * Builds a model. On success `*out` owns a handle for [`hhg_model_free`].
 *
 * # Safety
 * `params` and `out` must be valid pointers or null.
 */
HhgStatus hhg_model_new(const HhgModelParams *params, HhgModel **out);

/**
 * # Safety
 * `model` must come from [`hhg_model_new`] and not be freed twice.
 */
void hhg_model_free(HhgModel *model);

/**
 * Writes the four static eigenvalues, ascending.
 *
 * # Safety
 * `out` must point to space for four doubles.
 */
HhgStatus hhg_model_energies(const HhgModel *model, double *out);

/**
 * HOMO-LUMO gap.
 *
 * # Safety
 * Pointers must be valid or null.
 */
HhgStatus hhg_model_gap(const HhgModel *model, double *out);

/**
 * Propagates one pulse and computes the spectrum with harmonic band
 * intensities for orders `1..=max_order`.
 *
 * # Safety
 * Pointers must be valid or null.
 */
HhgStatus hhg_spectrum_compute(const HhgModel *model,
                               const HhgPulseParams *pulse,
                               uint32_t engine,
                               uint32_t max_order,
                               HhgSpectrum **out);

/**
 * # Safety
 * `spectrum` must come from [`hhg_spectrum_compute`] and not be freed twice.
 */
void hhg_spectrum_free(HhgSpectrum *spectrum);

/**
 * Number of frequency bins (0 for a null handle).
 *
 * # Safety
 * `spectrum` must be valid or null.
 */
size_t hhg_spectrum_len(const HhgSpectrum *spectrum);

/**
 * Copies the harmonic-order axis and intensities into caller buffers of
 * `capacity` doubles each. Either buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must hold `capacity` doubles.
 */
HhgStatus hhg_spectrum_copy(const HhgSpectrum *spectrum,
                            double *order,
                            double *intensity,
                            size_t capacity);

/**
 * Band-integrated intensity of harmonic `n`.
 *
 * # Safety
 * Pointers must be valid or null.
 */
HhgStatus hhg_spectrum_harmonic(const HhgSpectrum *spectrum, uint32_t n, double *out);

/**
 * Carrier frequency the spectrum was computed with.
 *
 * # Safety
 * `spectrum` must be valid or null; null gives NaN.
 */
double hhg_spectrum_omega0(const HhgSpectrum *spectrum);

/**
 * Runs a JSON configuration (or an earlier manifest) and writes its output
 * files into `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings or null.
 */
HhgStatus hhg_run_config_json(const char *json, const char *out_dir);

/**
 * Message of the last failed call on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *hhg_last_error_message(void);

/**
 * Library version, NUL-terminated and static.
 */
const char *hhg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HHG_H */
