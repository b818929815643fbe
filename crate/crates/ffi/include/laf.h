#ifndef LAF_H
#define LAF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Locator direction; see the core crate's `LocateMode`.
 */
typedef enum LafLocateMode {
  LAF_LOCATE_MODE_IMAGE_RESIDUAL = 0,
  LAF_LOCATE_MODE_PAPER_LITERAL = 1,
} LafLocateMode;

/*
 Result code of every fallible call.
 */
typedef enum LafStatus {
  LAF_STATUS_OK = 0,
  /*
   I/O failure or invalid argument value.
   */
  LAF_STATUS_INVALID = 1,
  /*
   Text could not be parsed or located.
   */
  LAF_STATUS_PARSE = 2,
  /*
   A concept phrase does not match any model component.
   */
  LAF_STATUS_CONCEPT = 3,
  LAF_STATUS_NULL_POINTER = 4,
  LAF_STATUS_INVALID_UTF8 = 5,
  /*
   A Rust panic was caught at the boundary.
   */
  LAF_STATUS_PANIC = 6,
} LafStatus;

typedef struct LafEditPlan LafEditPlan;

typedef struct LafLexicon LafLexicon;

typedef struct LafModel LafModel;

typedef struct LafTrajectory LafTrajectory;

/*
 Settings for [`laf_sample`].
 */
typedef struct LafSampleParams {
  double w;
  double eta;
  size_t steps;
  double strength;
  uint64_t seed;
  uint64_t chain;
} LafSampleParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *laf_last_error_message(void);

/*
 Release a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed already.
 */
void laf_string_free(char *s);

/*
 Library version as a static string.
 */
const char *laf_version(void);

/*
 Shipped lexicon, optionally extended by a TSV file (`path` may be NULL).

 # Safety
 `path` is NULL or a valid C string; `out` is a valid pointer.
 */
enum LafStatus laf_lexicon_load(const char *path, struct LafLexicon **out);

/*
 # Safety
 `lex` is NULL or a handle from [`laf_lexicon_load`] not yet freed.
 */
void laf_lexicon_free(struct LafLexicon *lex);

/*
 Parse caption and prompt and locate what to forget. `lexicon` may be NULL
 for the shipped lexicon.

 # Safety
 String arguments are valid C strings, `lexicon` is NULL or a live handle,
 `out` is a valid pointer.
 */
enum LafStatus laf_locate(const char *caption,
                          const char *prompt,
                          enum LafLocateMode mode,
                          const struct LafLexicon *lexicon,
                          struct LafEditPlan **out);

/*
 # Safety
 `plan` is NULL or a live handle.
 */
void laf_edit_plan_free(struct LafEditPlan *plan);

/*
 # Safety
 `plan` is a live handle.
 */
size_t laf_edit_plan_forgetting_count(const struct LafEditPlan *plan);

/*
 # Safety
 `plan` is a live handle.
 */
size_t laf_edit_plan_positive_count(const struct LafEditPlan *plan);

/*
 Copy of forgetting element `index`; free with [`laf_string_free`].

 # Safety
 `plan` is a live handle and `out` a valid pointer.
 */
enum LafStatus laf_edit_plan_forgetting_element(const struct LafEditPlan *plan,
                                                size_t index,
                                                char **out);

/*
 Copy of positive concept `index`; free with [`laf_string_free`].

 # Safety
 `plan` is a live handle and `out` a valid pointer.
 */
enum LafStatus laf_edit_plan_positive_concept(const struct LafEditPlan *plan,
                                              size_t index,
                                              char **out);

/*
 The plan as JSON; free with [`laf_string_free`].

 # Safety
 `plan` is a live handle and `out` a valid pointer.
 */
enum LafStatus laf_edit_plan_to_json(const struct LafEditPlan *plan, char **out);

/*
 Load a Gaussian-mixture model spec from a JSON file.

 # Safety
 `path` is a valid C string and `out` a valid pointer.
 */
enum LafStatus laf_model_load(const char *path, struct LafModel **out);

/*
 Parse a model spec from a JSON string.

 # Safety
 `json` is a valid C string and `out` a valid pointer.
 */
enum LafStatus laf_model_from_json(const char *json, struct LafModel **out);

/*
 # Safety
 `model` is NULL or a live handle.
 */
void laf_model_free(struct LafModel *model);

/*
 # Safety
 `model` is a live handle.
 */
size_t laf_model_dimension(const struct LafModel *model);

/*
 Defaults: w = 10, eta = 2.5, 50 steps, strength 0.8, seed 0, chain 0.
 */
struct LafSampleParams laf_sample_params_default(void);

/*
 Noise `input` (length = model dimension) to the start timestep and run the
 guided sampler to t = 0.

 # Safety
 Handles are live, `input` points to `input_len` doubles, `out` is valid.
 */
enum LafStatus laf_sample(const struct LafModel *model,
                          const struct LafEditPlan *plan,
                          struct LafSampleParams params,
                          const double *input,
                          size_t input_len,
                          struct LafTrajectory **out);

/*
 # Safety
 `traj` is NULL or a live handle.
 */
void laf_trajectory_free(struct LafTrajectory *traj);

/*
 Number of recorded states, start and end included.

 # Safety
 `traj` is a live handle.
 */
size_t laf_trajectory_len(const struct LafTrajectory *traj);

/*
 Copy the final latent into `out` (capacity `out_len`, at least the model
 dimension).

 # Safety
 `traj` is a live handle and `out` points to `out_len` writable doubles.
 */
enum LafStatus laf_trajectory_final(const struct LafTrajectory *traj, double *out, size_t out_len);

/*
 The trajectory as CSV (`t,z0,...`); free with [`laf_string_free`].

 # Safety
 `traj` is a live handle and `out` a valid pointer.
 */
enum LafStatus laf_trajectory_to_csv(const struct LafTrajectory *traj, char **out);

/*
 Composed guidance for `dim`-dimensional predictions:
 `u + w (p - u) - eta * sum_k (n_k - u)`. `negatives` holds `n_negatives`
 rows of `dim` values back to back; it may be NULL when `n_negatives` is 0.

 # Safety
 Every pointer addresses the stated number of doubles.
 */
enum LafStatus laf_compose_laf(const double *eps_uncond,
                               const double *eps_pos,
                               const double *negatives,
                               size_t n_negatives,
                               size_t dim,
                               double w,
                               double eta,
                               double *out);

/*
 Cosine similarity of two `dim`-vectors.

 # Safety
 Both pointers address `dim` doubles; `out` is valid.
 */
enum LafStatus laf_clip_t(const double *text, const double *image, size_t dim, double *out);

/*
 Inception Score of `n` rows of `k` class probabilities.

 # Safety
 `probs` addresses `n * k` doubles; `out` is valid.
 */
enum LafStatus laf_inception_score(const double *probs, size_t n, size_t k, double *out);

/*
 Mean absolute difference of two `len`-vectors.

 # Safety
 Both pointers address `len` doubles; `out` is valid.
 */
enum LafStatus laf_l1(const double *x_in, const double *x_out, size_t len, double *out);

/*
 Directional change toward the reference relative to the input.

 # Safety
 All three pointers address `dim` doubles; `out` is valid.
 */
enum LafStatus laf_clip_d(const double *emb_out,
                          const double *emb_in,
                          const double *emb_ref,
                          size_t dim,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAF_H */
