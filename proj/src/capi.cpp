// extern "C" surface over the C++ core: opaque handles, status codes, a
// thread-local error message.
#include "aiegrid.h"

#include <cstring>
#include <string>

#include "device.hpp"
#include "errors.hpp"
#include "ir.hpp"
#include "model.hpp"
#include "placement.hpp"
#include "plan.hpp"

using namespace aiegrid;

struct aiegrid_device {
    DeviceDesc desc;
};
struct aiegrid_model {
    QuantModel model;
};
struct aiegrid_plan {
    CompiledPlan plan;
};

namespace {

thread_local std::string g_last_error;

aiegrid_status fail(Status s, const std::string& msg) {
    g_last_error = msg;
    return static_cast<aiegrid_status>(static_cast<int>(s));
}

template <typename Fn>
aiegrid_status guarded(Fn&& fn) {
    try {
        fn();
        return AIEGRID_OK;
    } catch (const Error& e) {
        return fail(e.status(), e.what());
    } catch (const std::exception& e) {
        return fail(Status::internal, std::string("internal error: ") + e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char* aiegrid_version(void) { return "0.1.0"; }

const char* aiegrid_last_error(void) { return g_last_error.c_str(); }

void aiegrid_string_free(char* s) { delete[] s; }

aiegrid_status aiegrid_device_default(aiegrid_device** out) {
    return guarded([&] { *out = new aiegrid_device{default_aieml_device()}; });
}

aiegrid_status aiegrid_device_from_file(const char* path, aiegrid_device** out) {
    return guarded([&] { *out = new aiegrid_device{load_device_file(path)}; });
}

void aiegrid_device_free(aiegrid_device* d) { delete d; }

int aiegrid_device_cols(const aiegrid_device* d) { return d->desc.cols; }
int aiegrid_device_rows(const aiegrid_device* d) { return d->desc.rows; }

aiegrid_status aiegrid_model_from_file(const char* path, aiegrid_model** out) {
    return guarded([&] { *out = new aiegrid_model{load_model_file(path)}; });
}

void aiegrid_model_free(aiegrid_model* m) { delete m; }

int aiegrid_model_layer_count(const aiegrid_model* m) { return int(m->model.layers.size()); }

aiegrid_status aiegrid_compile(const aiegrid_model* model, const aiegrid_device* device,
                               const char* config_json, aiegrid_plan** out) {
    return guarded([&] {
        const UserConfig cfg = UserConfig::from_json_text(config_json ? config_json : "");
        *out = new aiegrid_plan{compile(model->model, device->desc, cfg)};
    });
}

aiegrid_status aiegrid_plan_emit(const aiegrid_plan* plan, const char* out_dir) {
    return guarded([&] { emit(plan->plan, out_dir); });
}

aiegrid_status aiegrid_plan_load(const char* plan_path, aiegrid_plan** out) {
    return guarded([&] { *out = new aiegrid_plan{load_plan(plan_path)}; });
}

void aiegrid_plan_free(aiegrid_plan* p) { delete p; }

int aiegrid_plan_layer_count(const aiegrid_plan* p) { return int(p->plan.layers.size()); }

int aiegrid_plan_tiles_used(const aiegrid_plan* p) { return p->plan.tiles_used(); }

void aiegrid_plan_input_dims(const aiegrid_plan* p, int64_t* batch, int64_t* features) {
    if (p->plan.layers.empty()) {
        if (batch) *batch = 0;
        if (features) *features = 0;
        return;
    }
    if (batch) *batch = p->plan.layers.front().batch;
    if (features) *features = p->plan.layers.front().f_in;
}

void aiegrid_plan_output_dims(const aiegrid_plan* p, int64_t* batch, int64_t* features) {
    if (p->plan.layers.empty()) {
        if (batch) *batch = 0;
        if (features) *features = 0;
        return;
    }
    if (batch) *batch = p->plan.layers.back().batch;
    if (features) *features = p->plan.layers.back().f_out;
}

aiegrid_status aiegrid_simulate_i64(const aiegrid_plan* plan, const int64_t* data,
                                    int64_t batch, int64_t features, int checked,
                                    int64_t* out) {
    return guarded([&] {
        const int b = static_cast<int>(batch);
        const int f = static_cast<int>(features);
        Matrix in(b, f);
        std::copy(data, data + batch * features, in.data().begin());
        const InferenceResult res =
            simulate(plan->plan, in, checked ? SimMode::checked : SimMode::fast);
        std::copy(res.outputs.data().begin(), res.outputs.data().end(), out);
    });
}

aiegrid_status aiegrid_simulate_f64(const aiegrid_plan* plan, const double* data,
                                    int64_t batch, int64_t features, int checked, double* out) {
    return guarded([&] {
        std::vector<std::vector<double>> rows(static_cast<size_t>(batch));
        for (int64_t r = 0; r < batch; ++r)
            rows[size_t(r)].assign(data + r * features, data + (r + 1) * features);
        const Matrix q = quantize_io(plan->plan, rows);
        const InferenceResult res =
            simulate(plan->plan, q, checked ? SimMode::checked : SimMode::fast);
        const auto deq = dequantize_io(plan->plan, res.outputs);
        size_t at = 0;
        for (const auto& row : deq)
            for (double v : row) out[at++] = v;
    });
}

aiegrid_status aiegrid_plan_report(const aiegrid_plan* plan, int as_json, char** out_text) {
    return guarded([&] {
        const PlanReport r = analyze_plan(plan->plan);
        *out_text = dup_string(as_json ? render_report_json(plan->plan, r)
                                       : render_report_text(plan->plan, r));
    });
}

aiegrid_status aiegrid_plan_render(const aiegrid_plan* plan, int svg, char** out_text) {
    return guarded([&] {
        const PlacementInstance inst = plan_placement_instance(plan->plan);
        const PlacementSolution sol = plan_placement_solution(plan->plan);
        *out_text = dup_string(svg ? render_svg(inst, sol) : render_ascii(inst, sol));
    });
}

aiegrid_status aiegrid_dump_ir(const aiegrid_model* model, const aiegrid_device* device,
                               const char* config_json, const char* stage, char** out_text) {
    return guarded([&] {
        const UserConfig cfg = UserConfig::from_json_text(config_json ? config_json : "");
        const AieIrGraph g =
            compile_to_stage(model->model, device->desc, cfg, stage ? stage : "lower");
        *out_text = dup_string(dump_ir(g));
    });
}

aiegrid_status aiegrid_place(const char* instance_json, int64_t node_limit, int greedy_mode,
                             char** solution_json, char** ascii, char** svg) {
    return guarded([&] {
        const PlacementInstance inst = placement_instance_from_json(instance_json);
        PlacementSolution sol;
        switch (greedy_mode) {
            case AIEGRID_PLACE_GREEDY_RIGHT: sol = place_greedy(inst, GreedyMode::right); break;
            case AIEGRID_PLACE_GREEDY_UP: sol = place_greedy(inst, GreedyMode::up); break;
            default: sol = place_bnb(inst, node_limit); break;
        }
        if (solution_json) *solution_json = dup_string(placement_solution_to_json(inst, sol));
        if (ascii) *ascii = dup_string(render_ascii(inst, sol));
        if (svg) *svg = dup_string(render_svg(inst, sol));
    });
}

} // extern "C"
