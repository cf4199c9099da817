/* Exercises the public C interface from a plain C translation unit. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "ibcdmp/ibcdmp.h"

static int failures = 0;
static int checks = 0;

#define EXPECT(cond)                                                             \
    do {                                                                         \
        ++checks;                                                                \
        if (!(cond)) {                                                           \
            ++failures;                                                          \
            fprintf(stderr, "%s:%d: check failed: %s (last error: %s)\n", __FILE__, \
                    __LINE__, #cond, ibcdmp_last_error());                       \
        }                                                                        \
    } while (0)

static char work[1024];

static const char* path_in(const char* name) {
    static char buf[4][1200];
    static int slot = 0;
    slot = (slot + 1) % 4;
    snprintf(buf[slot], sizeof buf[slot], "%s/%s", work, name);
    return buf[slot];
}

static int file_exists(const char* p) {
    struct stat st;
    return stat(p, &st) == 0;
}

static int episodes_seen = 0;

static void on_episode(void* user, int episode, double arpe, double larpe, int steps, int collisions,
                       double final_err) {
    (void)user;
    (void)collisions;
    (void)final_err;
    ++episodes_seen;
    EXPECT(episode == episodes_seen);
    EXPECT(arpe <= 0.0);
    EXPECT(fabs(larpe + log(1.0 - arpe)) < 1e-9);
    EXPECT(steps > 0);
}

static void test_config(void) {
    ibcdmp_config* cfg = NULL;
    char* value = NULL;
    char* text = NULL;
    EXPECT(ibcdmp_config_new(&cfg) == IBCDMP_OK);
    EXPECT(ibcdmp_config_get(cfg, "tau", &value) == IBCDMP_OK);
    EXPECT(value && strcmp(value, "0.25") == 0);
    ibcdmp_string_free(value);

    EXPECT(ibcdmp_config_set(cfg, "episodes", "12") == IBCDMP_OK);
    EXPECT(ibcdmp_config_get(cfg, "episodes", &value) == IBCDMP_OK);
    EXPECT(value && strcmp(value, "12") == 0);
    ibcdmp_string_free(value);
    EXPECT(strcmp(ibcdmp_last_error(), "") == 0);

    EXPECT(ibcdmp_config_set(cfg, "no_such_key", "1") == IBCDMP_ERR_UNKNOWN_KEY);
    EXPECT(strstr(ibcdmp_last_error(), "no_such_key") != NULL);
    EXPECT(ibcdmp_config_set(cfg, "tau", "abc") == IBCDMP_ERR_PARSE);
    EXPECT(ibcdmp_config_set(NULL, "tau", "1") == IBCDMP_ERR_INVALID_ARGUMENT);

    EXPECT(ibcdmp_config_validate(cfg) == IBCDMP_OK);
    EXPECT(ibcdmp_config_set(cfg, "eps0_b", "0.06") == IBCDMP_OK);
    EXPECT(ibcdmp_config_validate(cfg) == IBCDMP_ERR_CONFIG);

    EXPECT(ibcdmp_config_format(cfg, &text) == IBCDMP_OK);
    EXPECT(text && strstr(text, "episodes = 12") != NULL);
    ibcdmp_string_free(text);
    ibcdmp_config_free(cfg);

    EXPECT(ibcdmp_config_load("/nonexistent/run.cfg", &cfg) == IBCDMP_ERR_IO);
    EXPECT(ibcdmp_config_load("defaults", &cfg) == IBCDMP_OK);
    ibcdmp_config_free(cfg);

    EXPECT(strcmp(ibcdmp_status_name(IBCDMP_ERR_NUMERIC), "numeric") == 0);
    EXPECT(strlen(ibcdmp_version()) > 0);
}

static void test_rollout_unforced(void) {
    ibcdmp_config* cfg = NULL;
    ibcdmp_record rec;
    char* csv = NULL;
    const double start[3] = {0.0, 0.0, 0.05};
    const double goal[3] = {0.3, 0.35, 0.08};
    const double far_obst[3] = {0.6, -0.5, 0.05};
    EXPECT(ibcdmp_config_new(&cfg) == IBCDMP_OK);
    EXPECT(ibcdmp_rollout(cfg, NULL, start, goal, far_obst, 0.035, 1, &csv, &rec) == IBCDMP_OK);
    EXPECT(rec.steps > 0 && rec.steps <= 250);
    EXPECT(rec.arpe <= 0.0);
    EXPECT(rec.collided == 0);
    EXPECT(csv && strncmp(csv, "t,", 2) == 0);
    ibcdmp_string_free(csv);
    EXPECT(ibcdmp_rollout(cfg, NULL, start, goal, far_obst, -1.0, 0, NULL, &rec) == IBCDMP_ERR_INVALID_ARGUMENT);
    ibcdmp_config_free(cfg);
}

static void write_raw_demo(const char* path) {
    FILE* f = fopen(path, "w");
    int k;
    if (!f) return;
    fprintf(f, "# goal=0.3,0.35,0.08\n# obstacle=0.5,-0.4,0.06\nt,x,y,z\n");
    for (k = 0; k <= 100; ++k) {
        const double u = k / 100.0;
        const double s = u * u * u * (10 - 15 * u + 6 * u * u);
        fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", k * 0.01, 0.3 * s, 0.35 * s, 0.05 + 0.03 * s);
    }
    fclose(f);
}

static void test_pipeline(void) {
    ibcdmp_config* cfg = NULL;
    ibcdmp_policy* pol = NULL;
    char* text = NULL;
    double obs[10] = {0.0, 0.0, 0.05, 0, 0, 0, -0.15, -0.17, -0.015, 1.0};
    double act[3];
    int i;

    EXPECT(ibcdmp_config_new(&cfg) == IBCDMP_OK);
    ibcdmp_config_set(cfg, "episodes", "2");
    ibcdmp_config_set(cfg, "n_demo_critic", "36");
    ibcdmp_config_set(cfg, "n_inter_critic", "4");
    ibcdmp_config_set(cfg, "n_demo_actor", "8");
    ibcdmp_config_set(cfg, "n_inter_actor", "8");
    ibcdmp_config_set(cfg, "warmup_steps", "50");

    mkdir(path_in("raw"), 0755);
    write_raw_demo(path_in("raw/a.csv"));
    write_raw_demo(path_in("raw/b.csv"));

    EXPECT(ibcdmp_demo_prep(cfg, path_in("raw"), 3, path_in("demos.jsonl"), &text) == IBCDMP_OK);
    EXPECT(text != NULL);
    ibcdmp_string_free(text);
    EXPECT(file_exists(path_in("demos.jsonl")));
    EXPECT(file_exists(path_in("demos.jsonl.config")));
    EXPECT(ibcdmp_demo_prep(cfg, path_in("missing"), 0, path_in("x.jsonl"), NULL) == IBCDMP_ERR_IO);

    EXPECT(ibcdmp_stats(cfg, path_in("raw"), &text) == IBCDMP_OK);
    EXPECT(text && strstr(text, "avg_speed") != NULL);
    ibcdmp_string_free(text);

    mkdir(path_in("ckpts"), 0755);
    episodes_seen = 0;
    EXPECT(ibcdmp_train(cfg, path_in("demos.jsonl"), path_in("ckpts/p1.ckpt"), path_in("p1.log.csv"), on_episode,
                        NULL) == IBCDMP_OK);
    EXPECT(episodes_seen == 2);
    EXPECT(file_exists(path_in("ckpts/p1.ckpt")));
    EXPECT(file_exists(path_in("ckpts/p1.ckpt.config")));
    EXPECT(file_exists(path_in("p1.log.csv")));

    EXPECT(ibcdmp_policy_load(path_in("ckpts/p1.ckpt"), &pol) == IBCDMP_OK);
    EXPECT(ibcdmp_policy_act(pol, obs, act) == IBCDMP_OK);
    for (i = 0; i < 3; ++i) EXPECT(act[i] >= -5.0 && act[i] <= 5.0);
    {
        ibcdmp_record rec;
        const double start[3] = {0.0, 0.0, 0.05};
        const double goal[3] = {0.3, 0.35, 0.08};
        const double obst[3] = {0.15, 0.17, 0.065};
        EXPECT(ibcdmp_rollout(cfg, pol, start, goal, obst, 0.035, 0, NULL, &rec) == IBCDMP_OK);
        EXPECT(rec.steps > 0);
    }
    ibcdmp_policy_free(pol);
    EXPECT(ibcdmp_policy_load(path_in("demos.jsonl"), &pol) == IBCDMP_ERR_FORMAT);

    EXPECT(ibcdmp_test(cfg, path_in("ckpts"), 4, path_in("scores.csv")) == IBCDMP_OK);
    EXPECT(ibcdmp_report(path_in("scores.csv"), "md", -6.0, &text) == IBCDMP_OK);
    EXPECT(text && strstr(text, "p1") != NULL);
    ibcdmp_string_free(text);
    EXPECT(ibcdmp_report(path_in("scores.csv"), "html", -6.0, &text) == IBCDMP_ERR_INVALID_ARGUMENT);

    ibcdmp_config_set(cfg, "n_demo_critic", "100000");
    EXPECT(ibcdmp_train(cfg, path_in("demos.jsonl"), path_in("ckpts/p2.ckpt"), NULL, NULL, NULL) ==
           IBCDMP_ERR_INSUFFICIENT_DATA);
    ibcdmp_config_free(cfg);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        fprintf(stderr, "usage: capi_tests <work-dir>\n");
        return 2;
    }
    snprintf(work, sizeof work, "%s", argv[1]);
    mkdir(work, 0755);

    test_config();
    test_rollout_unforced();
    test_pipeline();

    printf("%d checks, %d failures\n", checks, failures);
    return failures == 0 ? 0 : 1;
}
