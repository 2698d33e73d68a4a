/* Copyright 2026 The pipeplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the pipeplan library.
 *
 * All objects are opaque handles created by the library and released with
 * the matching *_free function. Functions return PP_OK on success and one of
 * the pp_status codes otherwise; the message of the most recent failure on the
 * calling thread is available from pp_last_error(). Strings returned through
 * `char **` out-parameters are owned by the caller and released with
 * pp_string_free(). Documents are JSON text in the formats described in
 * README.md. */

#ifndef PIPEPLAN_PIPEPLAN_H_
#define PIPEPLAN_PIPEPLAN_H_

#include <stddef.h>

#if defined(PIPEPLAN_BUILDING_LIBRARY)
#define PP_API __attribute__((visibility("default")))
#else
#define PP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pp_status {
  PP_OK = 0,
  PP_ERR_GENERIC = 1,       /* invalid argument or internal error */
  PP_ERR_PARSE = 2,         /* malformed document */
  PP_ERR_NOT_SP = 3,        /* graph is not series-parallel */
  PP_ERR_INFEASIBLE = 4,    /* no strategy satisfies the constraints */
  PP_ERR_DEADLOCK = 5,      /* simulation cannot make progress */
  PP_ERR_BUDGET = 6,        /* exhaustive search outside its budget */
  PP_ERR_IO = 7             /* file could not be read or written */
} pp_status;

typedef enum pp_mode { PP_MODE_GPP = 0, PP_MODE_SPP = 1 } pp_mode;

typedef struct pp_graph pp_graph;
typedef struct pp_cluster pp_cluster;
typedef struct pp_strategy pp_strategy;
typedef struct pp_report pp_report;

typedef struct pp_optimize_options {
  int mini_batch;
  pp_mode mode;
  int per_stage_schedules; /* boolean */
  double epsilon;          /* relative to the maximum TPS; <= 0 means 1e-3 */
  int threads;
} pp_optimize_options;

/* Fills `options` with defaults (mini-batch 1, GPP, uniform schedules). */
PP_API void pp_optimize_options_init(pp_optimize_options *options);

PP_API const char *pp_version(void);
PP_API const char *pp_last_error(void);
PP_API void pp_string_free(char *s);

/* Graphs. */
PP_API pp_status pp_graph_from_json(const char *json, pp_graph **out);
PP_API pp_status pp_graph_to_json(const pp_graph *g, char **out);
PP_API pp_status pp_graph_num_ops(const pp_graph *g, int *out);
PP_API void pp_graph_free(pp_graph *g);
/* `branches` <= 0 selects the preset's default. */
PP_API pp_status pp_generate_workload(const char *preset, int branches,
                                      pp_graph **out);

/* Clusters. */
PP_API pp_status pp_cluster_from_json(const char *json, pp_cluster **out);
PP_API pp_status pp_cluster_to_json(const pp_cluster *c, char **out);
PP_API void pp_cluster_free(pp_cluster *c);
PP_API pp_status pp_preset_cluster(const char *preset, int branches,
                                   pp_cluster **out);
PP_API pp_status pp_preset_mini_batch(const char *preset, int *out);

/* Strategies: a scheduled stage graph bundled with its graph and cluster. */
PP_API pp_status pp_optimize(const pp_graph *g, const pp_cluster *c,
                             const pp_optimize_options *options,
                             pp_strategy **out);
/* Brute-force optimum over all convex partitions (small inputs only). */
PP_API pp_status pp_exhaustive_optimize(const pp_graph *g,
                                        const pp_cluster *c, int mini_batch,
                                        int threads, pp_strategy **out);
PP_API pp_status pp_strategy_from_json(const char *json, pp_strategy **out);
PP_API pp_status pp_strategy_to_json(const pp_strategy *s, char **out);
/* Summary: bottleneck TPS, depth, peak memory and search statistics. */
PP_API pp_status pp_strategy_summary_json(const pp_strategy *s, char **out);
PP_API pp_status pp_strategy_bottleneck_tps(const pp_strategy *s,
                                            double *out);
PP_API pp_status pp_strategy_depth(const pp_strategy *s, int *out);
/* Replaces the cluster the strategy is evaluated against. */
PP_API pp_status pp_strategy_set_cluster(pp_strategy *s, const pp_cluster *c);
PP_API void pp_strategy_free(pp_strategy *s);

/* Validation: `*ok` is 1 when no condition is violated; `report_json`
 * (optional) receives the violation list. */
PP_API pp_status pp_validate(const pp_strategy *s, int *ok,
                             char **report_json);

/* Simulation. */
PP_API pp_status pp_simulate(const pp_strategy *s, pp_report **out);
PP_API pp_status pp_report_to_json(const pp_report *r, char **out);
PP_API pp_status pp_report_trace(const pp_report *r, char **out);
PP_API pp_status pp_report_gantt_svg(const pp_report *r, char **out);
PP_API pp_status pp_report_iteration_ms(const pp_report *r, double *out);
PP_API void pp_report_free(pp_report *r);

/* Runs both GPP and SPP and simulates them side by side. */
PP_API pp_status pp_compare(const pp_graph *g, const pp_cluster *c,
                            const pp_optimize_options *options, char **out);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* PIPEPLAN_PIPEPLAN_H_ */
