/* aiegrid -- compiler and bit-exact simulator for quantized feed-forward
 * networks on a modeled 2D AI-Engine-style tile array.
 *
 * C API: opaque handles plus status codes. Every function returning
 * aiegrid_status sets a thread-local message retrievable through
 * aiegrid_last_error() on failure. Strings returned through char** are owned
 * by the caller and released with aiegrid_string_free().
 */
#ifndef AIEGRID_H
#define AIEGRID_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aiegrid_status {
    AIEGRID_OK = 0,
    AIEGRID_ERR_VALIDATION = 2, /* malformed or invalid input */
    AIEGRID_ERR_INFEASIBLE = 3, /* valid input, no legal compilation */
    AIEGRID_ERR_INTERNAL = 4,   /* invariant violation: a bug, not user error */
    AIEGRID_ERR_IO = 5          /* file system failure */
} aiegrid_status;

typedef struct aiegrid_device aiegrid_device;
typedef struct aiegrid_model aiegrid_model;
typedef struct aiegrid_plan aiegrid_plan;

const char* aiegrid_version(void);
const char* aiegrid_last_error(void);
void aiegrid_string_free(char* s);

/* ---- device ---- */
aiegrid_status aiegrid_device_default(aiegrid_device** out);
aiegrid_status aiegrid_device_from_file(const char* path, aiegrid_device** out);
void aiegrid_device_free(aiegrid_device* d);
int aiegrid_device_cols(const aiegrid_device* d);
int aiegrid_device_rows(const aiegrid_device* d);

/* ---- model ---- */
aiegrid_status aiegrid_model_from_file(const char* path, aiegrid_model** out);
void aiegrid_model_free(aiegrid_model* m);
int aiegrid_model_layer_count(const aiegrid_model* m);

/* ---- compile / plan ---- */

/* config_json may be NULL or a configuration document (overrides, lambda/mu,
 * tile budget). */
aiegrid_status aiegrid_compile(const aiegrid_model* model, const aiegrid_device* device,
                               const char* config_json, aiegrid_plan** out);
/* Writes plan.json, weights.bin, reports, renderings and templates. */
aiegrid_status aiegrid_plan_emit(const aiegrid_plan* plan, const char* out_dir);
aiegrid_status aiegrid_plan_load(const char* plan_path, aiegrid_plan** out);
void aiegrid_plan_free(aiegrid_plan* p);

int aiegrid_plan_layer_count(const aiegrid_plan* p);
int aiegrid_plan_tiles_used(const aiegrid_plan* p);
/* Input extents the plan expects. */
void aiegrid_plan_input_dims(const aiegrid_plan* p, int64_t* batch, int64_t* features);
void aiegrid_plan_output_dims(const aiegrid_plan* p, int64_t* batch, int64_t* features);

/* ---- simulation ---- */

/* data: batch*features int64 values, row-major, within the first layer's
 * activation range. checked != 0 runs the full memory-tile simulation with
 * online invariant checks; both modes are bit-exact. out must hold
 * out_batch*out_features values (query with aiegrid_plan_output_dims). */
aiegrid_status aiegrid_simulate_i64(const aiegrid_plan* plan, const int64_t* data,
                                    int64_t batch, int64_t features, int checked,
                                    int64_t* out);
/* Float boundary: quantizes by the model's input shift (round half to even),
 * simulates, dequantizes by the output shift. Requires both shifts in the
 * model file. */
aiegrid_status aiegrid_simulate_f64(const aiegrid_plan* plan, const double* data,
                                    int64_t batch, int64_t features, int checked, double* out);

/* ---- reports and renderings ---- */
aiegrid_status aiegrid_plan_report(const aiegrid_plan* plan, int as_json, char** out_text);
aiegrid_status aiegrid_plan_render(const aiegrid_plan* plan, int svg, char** out_text);

/* IR dump after a named pass: lower, quantize, resolve, pack, graphplan,
 * place. */
aiegrid_status aiegrid_dump_ir(const aiegrid_model* model, const aiegrid_device* device,
                               const char* config_json, const char* stage, char** out_text);

/* ---- standalone placement ---- */

/* instance_json follows the aiegrid-place format (grid, blocks, pins,
 * lambda/mu, start). Any output pointer may be NULL. node_limit > 0 caps the
 * search and returns the best incumbent. */
aiegrid_status aiegrid_place(const char* instance_json, int64_t node_limit, int greedy_mode,
                             char** solution_json, char** ascii, char** svg);
#define AIEGRID_PLACE_BNB 0
#define AIEGRID_PLACE_GREEDY_RIGHT 1
#define AIEGRID_PLACE_GREEDY_UP 2

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AIEGRID_H */
