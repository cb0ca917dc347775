#ifndef BILLSPEC_H
#define BILLSPEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BS_API __declspec(dllexport)
#else
#define BS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bs_status {
  BS_OK = 0,
  BS_INVALID_ARGUMENT = 1,
  BS_INVALID_SPEC,
  BS_IO_ERROR,
  BS_NONCONVEX,
  BS_CONVEXITY_LOST,
  BS_DEGENERATE_CONSTRAINT,
  BS_RANK_MISMATCH,
  BS_GLANCING_RAY,
  BS_ROOT_FIND_FAILURE,
  BS_NOT_PERIODIC,
  BS_COINCIDENT_POINTS,
  BS_UNSUPPORTED_PERIOD,
  BS_MAX_ITERATIONS,
  BS_WRONG_WINDING,
  BS_NO_BRANCH,
  BS_DEGENERATE_FIT,
  BS_DEGENERATE_ORBIT,
  BS_SINGULAR_HESSIAN,
  BS_DIAGONAL_SINGULARITY,
  BS_RESOLUTION_TOO_LOW,
  BS_RESOURCE_LIMIT,
  BS_VALIDATION_FAILED = 98,
  BS_INTERNAL = 99
} bs_status;

typedef struct bs_domain bs_domain;
typedef struct bs_family bs_family;

BS_API const char* bs_status_name(bs_status status);
/* Message of the last failed call on this thread. */
BS_API const char* bs_last_error(void);
/* Error JSON {"error", "message"} for the last failed call on this thread. */
BS_API char* bs_last_error_json(void);
/* Frees strings returned through char** outputs. */
BS_API void bs_string_free(char* s);

/* {"support_cos": [...], "support_sin": [...], "resolution": n} */
BS_API bs_status bs_domain_from_json(const char* json, bs_domain** out);
BS_API bs_status bs_domain_circle(double radius, bs_domain** out);
BS_API void bs_domain_free(bs_domain* domain);
BS_API bs_status bs_domain_length(const bs_domain* domain, double* out);
/* Length, area, curvature range, resolution. */
BS_API bs_status bs_domain_check(const bs_domain* domain, char** json);

/* Fills n + 1 entries of each array, starting point first. winding[i] counts
   completed turns of the lift after i bounces. */
BS_API bs_status bs_orbit_trace(const bs_domain* domain, double s, double theta, int n, double* s_out,
                                double* theta_out, double* x_out, double* y_out, int* winding_out);
/* Periodic orbit report; seed_json {"p", "s"} may be NULL for multi-start. */
BS_API bs_status bs_orbit_find(const bs_domain* domain, int p, int q, const char* seed_json, uint64_t seed,
                               int maximize, char** json);
/* Report for a given configuration {"p", "s"} without searching. */
BS_API bs_status bs_orbit_analyze(const bs_domain* domain, const char* orbit_json, char** json);

/* A list of bumps over `base`, or an object with "bumps", "preload",
   "harmonic", "epsilon_max" and optionally an embedded "domain". */
BS_API bs_status bs_family_from_json(const char* json, const bs_domain* base, bs_family** out);
BS_API void bs_family_free(bs_family* family);
BS_API bs_status bs_family_to_json(const bs_family* family, char** json);
BS_API bs_status bs_family_deform(const bs_family* family, double eps, bs_domain** out);
/* The reference domain at eps = 0. */
BS_API bs_status bs_family_reference(const bs_family* family, bs_domain** out);

/* Family making the degenerate orbit acquire det H ~ target_c eps. With
   `preload` a nondegenerate orbit is first made degenerate by a fixed
   curvature shift. `overtones` (may be NULL) weights the harmonic orders
   q, 2q, ...; width_fraction <= 0 keeps the default. Output {"family",
   "orbit", "mu1", "predicted_c"}, the orbit living on the reference domain. */
BS_API bs_status bs_perturb_design(const bs_domain* domain, const char* orbit_json, double target_c, int harmonic,
                                   const double* overtones, int n_overtones, int preload, double width_fraction,
                                   char** json);
BS_API bs_status bs_perturb_fit_c(const bs_family* family, const char* orbit_json, const double* eps, int n,
                                  char** json);

/* w(j) and the class table of cubic diagrams. */
BS_API bs_status bs_feynman_w(int j, char** json);
/* sum (2j)! 6^{2j} / |Aut| = (6j - 1)!!, and for j <= 2 the exhaustive
   half-edge pairings. BS_VALIDATION_FAILED when an identity fails. */
BS_API bs_status bs_feynman_check(int j, char** json);

/* Leading Balian-Bloch coefficients B_0..B_j for an orbit on the reference
   domain. c_gamma NaN selects the Jacobi prediction. */
BS_API bs_status bs_invariants_compute(const bs_family* family, const char* orbit_json, double eps, int j,
                                       double c_gamma, char** json);

/* Windowed q-torus trace with window centre `center` and width `delta`;
   center NaN uses the length of the longest (1, q) orbit and
   points_per_oscillation <= 0 the default 16. */
BS_API bs_status bs_oracle_trace(const bs_domain* domain, int q, double k, double center, double delta,
                                 double points_per_oscillation, int threads, char** json);
/* Trace vs leading term over ks; CSV header k,abs_trace,abs_leading,error. */
BS_API bs_status bs_report_sweep(const bs_family* family, const char* orbit_json, double eps, const double* ks,
                                 int n, double window, double offset, int threads, char** csv);

/* options {"scale": "quick"|"default", "seed", "threads", "criteria": [...],
   "tolerance_factor", "timings"}; json gets the report, text the summary
   table (either may be NULL). Returns BS_VALIDATION_FAILED when a criterion
   fails. */
BS_API bs_status bs_validate(const char* options_json, char** json, char** text);

#ifdef __cplusplus
}
#endif

#endif
