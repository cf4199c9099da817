#ifndef IBCDMP_IBCDMP_H
#define IBCDMP_IBCDMP_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#  ifdef IBCDMP_BUILDING
#    define IBCDMP_API __declspec(dllexport)
#  else
#    define IBCDMP_API __declspec(dllimport)
#  endif
#else
#  define IBCDMP_API __attribute__((visibility("default")))
#endif

typedef enum ibcdmp_status {
    IBCDMP_OK = 0,
    IBCDMP_ERR_INVALID_ARGUMENT = 1,
    IBCDMP_ERR_UNKNOWN_KEY = 2,
    IBCDMP_ERR_PARSE = 3,
    IBCDMP_ERR_IO = 4,
    IBCDMP_ERR_CONFIG = 5,
    IBCDMP_ERR_NUMERIC = 6,
    IBCDMP_ERR_INSUFFICIENT_DATA = 7,
    IBCDMP_ERR_FORMAT = 8,
    IBCDMP_ERR_INTERNAL = 9
} ibcdmp_status;

typedef struct ibcdmp_config ibcdmp_config;
typedef struct ibcdmp_policy ibcdmp_policy;

typedef struct ibcdmp_record {
    double arpe;
    double larpe;
    int collided;
    double final_error;
    int steps;
} ibcdmp_record;

typedef void (*ibcdmp_episode_fn)(void* user, int episode, double arpe, double larpe, int steps, int collisions,
                                  double final_err);

IBCDMP_API const char* ibcdmp_version(void);
/* Message of the last failed call on this thread; "" after a success. */
IBCDMP_API const char* ibcdmp_last_error(void);
IBCDMP_API const char* ibcdmp_status_name(ibcdmp_status status);
IBCDMP_API void ibcdmp_string_free(char* text);

/* Configuration. "defaults" as a path yields the built-in values. */
IBCDMP_API ibcdmp_status ibcdmp_config_new(ibcdmp_config** out);
IBCDMP_API ibcdmp_status ibcdmp_config_load(const char* path, ibcdmp_config** out);
IBCDMP_API void ibcdmp_config_free(ibcdmp_config* cfg);
IBCDMP_API ibcdmp_status ibcdmp_config_set(ibcdmp_config* cfg, const char* key, const char* value);
IBCDMP_API ibcdmp_status ibcdmp_config_get(const ibcdmp_config* cfg, const char* key, char** out_value);
IBCDMP_API ibcdmp_status ibcdmp_config_validate(const ibcdmp_config* cfg);
IBCDMP_API ibcdmp_status ibcdmp_config_format(const ibcdmp_config* cfg, char** out_text);

/* Pipeline stages. Output files get a "<path>.config" sidecar with the resolved configuration.
   Text outputs are allocated by the library and released with ibcdmp_string_free. */

/* Labels every trajectory in in_dir (may be NULL) plus `synthetic` generated ones. */
IBCDMP_API ibcdmp_status ibcdmp_demo_prep(const ibcdmp_config* cfg, const char* in_dir, int synthetic,
                                          const char* out_buffer, char** out_summary);
/* log_path may be NULL. */
IBCDMP_API ibcdmp_status ibcdmp_train(const ibcdmp_config* cfg, const char* demos, const char* out_ckpt,
                                      const char* log_path, ibcdmp_episode_fn on_episode, void* user);
/* Every *.ckpt under ckpt_dir, recursively; policies are named by relative path without extension. */
IBCDMP_API ibcdmp_status ibcdmp_test(const ibcdmp_config* cfg, const char* ckpt_dir, int runs,
                                     const char* out_scores);
/* format: "md" or "csv". */
IBCDMP_API ibcdmp_status ibcdmp_report(const char* scores, const char* format, double standard, char** out_text);
IBCDMP_API ibcdmp_status ibcdmp_stats(const ibcdmp_config* cfg, const char* demo_dir, char** out_text);

IBCDMP_API ibcdmp_status ibcdmp_policy_load(const char* ckpt, ibcdmp_policy** out);
IBCDMP_API void ibcdmp_policy_free(ibcdmp_policy* policy);
IBCDMP_API ibcdmp_status ibcdmp_policy_act(const ibcdmp_policy* policy, const double obs[10], double action[3]);

/* policy may be NULL for the unforced primitive. out_csv receives the trajectory table. */
IBCDMP_API ibcdmp_status ibcdmp_rollout(const ibcdmp_config* cfg, const ibcdmp_policy* policy,
                                        const double x_init[3], const double x_goal[3], const double obst_top[3],
                                        double obst_radius, int verbose_cost, char** out_csv,
                                        ibcdmp_record* out_record);
/* via_file: one "x,y,z" per line. out_summary: one line per segment. */
IBCDMP_API ibcdmp_status ibcdmp_sequence(const ibcdmp_config* cfg, const ibcdmp_policy* policy,
                                         const double home[3], const char* via_file, const double obst_top[3],
                                         double obst_radius, int verbose_cost, char** out_csv, char** out_summary);

#ifdef __cplusplus
}
#endif

#endif
