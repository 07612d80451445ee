#ifndef MOTIONCLIP_H
#define MOTIONCLIP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum McStatus {
  MC_STATUS_OK = 0,
  MC_STATUS_NULL_POINTER = 1,
  MC_STATUS_INVALID_ARGUMENT = 2,
  MC_STATUS_PARSE_ERROR = 3,
  MC_STATUS_COMPUTE_ERROR = 4,
  MC_STATUS_BUFFER_TOO_SMALL = 5,
  MC_STATUS_PANIC = 6,
} McStatus;

// Filtered energy plus the frame timing needed for window selection.
typedef struct McEnergy McEnergy;

typedef struct McKeypoints McKeypoints;

typedef struct McCleaningSummary {
  size_t interpolated_count;
  size_t outlier_count;
} McCleaningSummary;

typedef struct McCwtConfig {
  uint32_t scale_min;
  uint32_t scale_max;
  uint32_t scale_step;
  double morlet_omega0;
} McCwtConfig;

typedef struct McWindowSelection {
  size_t start_frame;
  // Exclusive.
  size_t end_frame;
  double start_seconds;
  double duration_seconds;
  double window_energy;
  bool boundary_adjusted;
  bool whole_video;
} McWindowSelection;

// Rotary layout. Pair counts of all zero select the default split.
typedef struct McRopeParams {
  size_t head_dim;
  size_t pairs_t;
  size_t pairs_h;
  size_t pairs_w;
  double base;
  double alpha;
  double motion_scale;
  double space_scale_factor;
} McRopeParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or an empty string.
// The pointer stays valid until the next call on this thread.
const char *mc_last_error(void);

enum McStatus mc_keypoints_parse(const uint8_t *data, size_t len, struct McKeypoints **out_handle);

void mc_keypoints_free(struct McKeypoints *handle);

enum McStatus mc_keypoints_frame_count(const struct McKeypoints *handle, size_t *out_count);

enum McStatus mc_keypoints_joint_count(const struct McKeypoints *handle, size_t *out_count);

enum McStatus mc_keypoints_fps(const struct McKeypoints *handle, double *out_fps);

// Writes a cleaned copy to `out_handle`. `summary` may be null.
enum McStatus mc_keypoints_clean(const struct McKeypoints *handle,
                                 double conf_min,
                                 double outlier_factor,
                                 struct McKeypoints **out_handle,
                                 struct McCleaningSummary *summary);

struct McCwtConfig mc_cwt_config_default(void);

// Velocity of `joint_index`, wavelet energy and peak filtering, on an
// already cleaned sequence.
enum McStatus mc_energy_compute(const struct McKeypoints *handle,
                                size_t joint_index,
                                const struct McCwtConfig *config,
                                size_t peak_threshold_frames,
                                struct McEnergy **out_handle);

void mc_energy_free(struct McEnergy *handle);

enum McStatus mc_energy_len(const struct McEnergy *handle, size_t *out_len);

// Copies raw and filtered energy into caller buffers of `len` values each.
// Either buffer may be null.
enum McStatus mc_energy_copy(const struct McEnergy *handle,
                             double *raw,
                             double *filtered,
                             size_t len);

enum McStatus mc_window_select(const struct McEnergy *handle,
                               double window_seconds,
                               size_t boundary_margin_frames,
                               struct McWindowSelection *out_selection);

// Default layout for `head_dim`. Odd or zero dimensions yield zero pair
// counts, which later calls reject.
struct McRopeParams mc_rope_params_default(size_t head_dim);

// Concatenated t, h, w frequencies (`head_dim / 2` values).
enum McStatus mc_rope_frequencies(const struct McRopeParams *params,
                                  bool use_slf,
                                  double *out_freqs,
                                  size_t len);

// Rotates a `head_dim` vector for grid position (t, h, w).
enum McStatus mc_rope_apply(const struct McRopeParams *params,
                            bool use_slf,
                            const double *vector,
                            uint32_t t,
                            uint32_t h,
                            uint32_t w,
                            double *out_vector);

// Composes unbatched `[C][T][H][W]` latents: `noisy` and `pose` hold
// 16 x frames x height x width values, `reference` 16 x 1 x height x width.
// `out_latent` receives 52 x frames x height x width values.
enum McStatus mc_compose_latents(const double *noisy,
                                 const double *pose,
                                 const double *reference_frame,
                                 size_t frames,
                                 size_t height,
                                 size_t width,
                                 double *out_latent,
                                 size_t out_len);

// PSNR in dB over interleaved `[0, 1]` pixels; infinity for identical images.
enum McStatus mc_psnr(const double *a,
                      const double *b,
                      size_t width,
                      size_t height,
                      size_t channels,
                      double *out_value);

// Mean SSIM with an 11x11 Gaussian window; both sides need at least 11 pixels.
enum McStatus mc_ssim(const double *a,
                      const double *b,
                      size_t width,
                      size_t height,
                      size_t channels,
                      double *out_value);

// Mean absolute pixel difference.
enum McStatus mc_l1(const double *a,
                    const double *b,
                    size_t width,
                    size_t height,
                    size_t channels,
                    double *out_value);

enum McStatus mc_pck(const struct McKeypoints *pred,
                     const struct McKeypoints *gt,
                     double alpha,
                     double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOTIONCLIP_H */
