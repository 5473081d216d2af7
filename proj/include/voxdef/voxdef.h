/* voxdef C API: volumetric deformation features for MRI segmentation
 * pipelines. Opaque handles, status codes, thread-local error messages.
 * Every *_free accepts NULL. Out-parameters are written only on VD_OK. */

#ifndef VOXDEF_H
#define VOXDEF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VOXDEF_API __declspec(dllexport)
#else
#define VOXDEF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vd_status {
    VD_OK = 0,
    VD_ERROR_IO = 1,
    VD_ERROR_FORMAT = 2,           /* not a recognizable volume file */
    VD_ERROR_UNSUPPORTED = 3,      /* outside the supported NIfTI subset */
    VD_ERROR_GEOMETRY = 4,         /* lattice shape/mismatch problems */
    VD_ERROR_PARAM = 5,            /* configuration value out of range */
    VD_ERROR_DEGENERATE = 6,       /* statistically unusable input */
    VD_ERROR_CONVERGENCE = 7,      /* iterative solver hit its cap */
    VD_ERROR_FOLDING = 8,          /* map stopped being a diffeomorphism */
    VD_ERROR_STALL = 9,            /* optimizer found no descent step */
    VD_ERROR_NUMERIC = 10,         /* NaN/Inf encountered */
    VD_ERROR_UNDEFINED_METRIC = 11,/* metric undefined for this input */
    VD_ERROR_INTERNAL = 12
} vd_status;

typedef struct vd_field vd_field;       /* scalar volume (node lattice) */
typedef struct vd_labels vd_labels;     /* integer label volume */
typedef struct vd_map vd_map;           /* node-sampled transformation */
typedef struct vd_stack vd_stack;       /* ordered channel stack */
typedef struct vd_recovery vd_recovery; /* result of a recovery run */

VOXDEF_API const char* vd_version(void);

/* Message for the most recent failure on this thread. */
VOXDEF_API const char* vd_last_error(void);

/* ---- scalar volumes ---- */
VOXDEF_API vd_status vd_field_read(const char* path, vd_field** out);
VOXDEF_API vd_status vd_field_write(const vd_field* f, const char* path);
VOXDEF_API vd_status vd_field_create(int ndim, const size_t* dims,
                                     const double* spacing_mm, const double* origin_mm,
                                     const double* values, vd_field** out);
VOXDEF_API void vd_field_free(vd_field* f);
VOXDEF_API int vd_field_ndim(const vd_field* f);
VOXDEF_API void vd_field_dims(const vd_field* f, size_t dims[3]);
VOXDEF_API void vd_field_spacing(const vd_field* f, double spacing_mm[3]);
VOXDEF_API size_t vd_field_value_count(const vd_field* f);
VOXDEF_API const double* vd_field_values(const vd_field* f);
VOXDEF_API void vd_field_stats(const vd_field* f, double* min, double* max, double* mean);

/* ---- label volumes ---- */
VOXDEF_API vd_status vd_labels_read(const char* path, vd_labels** out);
VOXDEF_API vd_status vd_labels_write(const vd_labels* l, const char* path);
VOXDEF_API vd_status vd_labels_create(int ndim, const size_t* dims,
                                      const double* spacing_mm, const uint8_t* labels,
                                      vd_labels** out);
VOXDEF_API void vd_labels_free(vd_labels* l);
VOXDEF_API size_t vd_labels_value_count(const vd_labels* l);
VOXDEF_API const uint8_t* vd_labels_values(const vd_labels* l);

/* ---- preprocessing ---- */
VOXDEF_API vd_status vd_gaussian_subtract(const vd_field* in, double sigma_mm,
                                          vd_field** out);
VOXDEF_API vd_status vd_mask_from_nonzero(const vd_field* in, vd_labels** out);
/* mask may be NULL: the nonzero voxels of `in` are used. */
VOXDEF_API vd_status vd_zscore(const vd_field* in, const vd_labels* mask, vd_field** out);
VOXDEF_API vd_status vd_clahe(const vd_field* in, int tiles, double clip, vd_field** out);
/* gaussian_subtract -> zscore (nonzero mask of the input) -> clahe */
VOXDEF_API vd_status vd_preprocess_chain(const vd_field* in, double sigma_mm, int tiles,
                                         double clip, vd_field** out);

/* ---- deformation features ---- */
typedef struct vd_extract_params {
    double alpha;      /* weight of normalized brightness */
    double beta;       /* weight of normalized gradient magnitude */
    double floor_;     /* monitor lower clamp in (0,1] */
    int time_steps;    /* flow integration steps, >= 1 */
    int use_rk4;       /* 0 = forward Euler */
    int cv_components; /* 3-D only: emit CVx/CVy/CVz instead of |curl| */
} vd_extract_params;

VOXDEF_API void vd_extract_params_init(vd_extract_params* p); /* defaults */

VOXDEF_API vd_status vd_generate_grid(const vd_field* image, const vd_extract_params* p,
                                      vd_map** out);
VOXDEF_API void vd_map_free(vd_map* m);
VOXDEF_API vd_status vd_map_write_grid_text(const vd_map* m, const char* path);
VOXDEF_API vd_status vd_map_jacobian(const vd_map* m, vd_field** out);
/* Scalar displacement curl (2-D) or its 3 components (3-D), as a stack. */
VOXDEF_API vd_status vd_map_displacement_curl(const vd_map* m, vd_stack** out);
/* Node-error statistics between two maps, in grid-cell units. */
VOXDEF_API vd_status vd_map_compare(const vd_map* a, const vd_map* b, double* mean_cells,
                                    double* max_cells);

/* JD plus CV channel(s) on the voxel lattice of `t1`. */
VOXDEF_API vd_status vd_extract_features(const vd_field* t1, const vd_extract_params* p,
                                         vd_stack** out);

/* Same, but also hands back the generated grid from the single run.
 * Either out-pointer may be NULL to skip that result. */
VOXDEF_API vd_status vd_extract_features_grid(const vd_field* t1,
                                              const vd_extract_params* p,
                                              vd_stack** features, vd_map** grid);

/* ---- channel stacks ---- */
VOXDEF_API vd_status vd_stack_new(vd_stack** out);
VOXDEF_API vd_status vd_stack_add(vd_stack* s, const char* name, const vd_field* f);
VOXDEF_API void vd_stack_free(vd_stack* s);
VOXDEF_API size_t vd_stack_channel_count(const vd_stack* s);
VOXDEF_API const char* vd_stack_channel_name(const vd_stack* s, size_t i);
/* Borrowed reference, valid while the stack lives. */
VOXDEF_API const vd_field* vd_stack_channel(const vd_stack* s, size_t i);
/* One NIfTI per channel plus manifest.json. */
VOXDEF_API vd_status vd_stack_write(const vd_stack* s, const char* dir, const char* arm);
VOXDEF_API vd_status vd_stack_tile_count(const vd_stack* s, const size_t size[3],
                                         const size_t stride[3], size_t* count);
VOXDEF_API vd_status vd_stack_write_tiles(const vd_stack* s, const char* dir,
                                          const char* arm, const size_t size[3],
                                          const size_t stride[3]);

/* ---- segmentation metrics ---- */
typedef struct vd_class_metrics {
    int label;
    char name[16];
    double dsc;
    double hd_mm; /* valid only when hd_defined */
    int hd_defined;
    double avd; /* valid only when avd_defined */
    int avd_defined;
} vd_class_metrics;

typedef struct vd_metrics_report {
    vd_class_metrics classes[3]; /* CSF, GM, WM */
    double mean_dsc;
    double mean_hd_mm;
    int mean_hd_defined;
    double mean_avd;
    int mean_avd_defined;
} vd_metrics_report;

VOXDEF_API vd_status vd_evaluate(const vd_labels* pred, const vd_labels* truth,
                                 vd_metrics_report* out);
VOXDEF_API vd_status vd_report_write_csv(const vd_metrics_report* r, const char* path);
VOXDEF_API vd_status vd_report_write_json(const vd_metrics_report* r, const char* path);

/* ---- recovery ---- */
typedef struct vd_recover_params {
    double smooth_weight;
    int max_iters;
    double step_size;
    double tol;
} vd_recover_params;

VOXDEF_API void vd_recover_params_init(vd_recover_params* p); /* defaults */

VOXDEF_API vd_status vd_synthesize_t0(int ndim, const size_t* dims, double amplitude,
                                      uint32_t seed, vd_map** out);
/* target_curl: 1 channel (2-D scalar curl) or 3 channels (3-D components). */
VOXDEF_API vd_status vd_recover(const vd_field* target_jd, const vd_stack* target_curl,
                                const vd_recover_params* p, vd_recovery** out);
VOXDEF_API void vd_recovery_free(vd_recovery* r);
VOXDEF_API const vd_map* vd_recovery_map(const vd_recovery* r);
VOXDEF_API int vd_recovery_converged(const vd_recovery* r);
VOXDEF_API size_t vd_recovery_iteration_count(const vd_recovery* r);
VOXDEF_API void vd_recovery_history(const vd_recovery* r, const double** loss,
                                    const double** grad_norm);
VOXDEF_API size_t vd_recovery_warning_count(const vd_recovery* r);
VOXDEF_API const char* vd_recovery_warning(const vd_recovery* r, size_t i);

/* ---- built-in synthetic data ---- */
VOXDEF_API vd_status vd_phantom(int ndim, const size_t* dims, vd_field** out);
VOXDEF_API vd_status vd_phantom_labels(const size_t dims[3], vd_labels** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VOXDEF_H */
