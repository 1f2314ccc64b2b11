// The fully resolved device program: compile pipeline, plan serialization,
// bit-exact simulation (fast and checked modes), reports, and emission.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "device.hpp"
#include "ir.hpp"
#include "matrix.hpp"
#include "memtile.hpp"
#include "model.hpp"
#include "perf.hpp"
#include "placement.hpp"
#include "scaling.hpp"

namespace aiegrid {

struct PlanLayer {
    std::string name;
    int64_t batch = 0;
    int64_t f_in = 0;
    int64_t f_out = 0;
    IntDType act = kI8, wgt = kI8, acc = kI32, out = kI8;
    bool use_bias = false;
    bool use_relu = false;
    int shift = 0;
    Tiling tiling;
    CascadeConfig cascade;
    GridPos anchor;
    PackedWeights packed;

    int64_t batch_padded() const { return (batch + tiling.m - 1) / tiling.m * tiling.m; }
    int physical_width() const { return cascade.k_folds > 1 ? 1 : cascade.cas_len; }
};

// Activation buffer between two stages. Boundary b feeds layer b; the last
// boundary collects the network output.
struct PlanBoundary {
    std::vector<int64_t> buffer_dims; // [rows, cols], producer-shaped
    IntDType store_dtype = kI8;
    int64_t live_bytes = 0;           // both ping-pong banks
    // Templates; per-row / per-column instances shift `base` by one slice.
    std::optional<DmaTiler> writer;   // producer rows (absent: host writes)
    int writer_count = 0;
    int64_t writer_base_step = 0;     // column offset per producer row
    std::optional<DmaTiler> reader;   // consumer stages (absent: host reads)
    int reader_count = 0;             // cas_len * k_folds virtual stages
    int64_t reader_base_step = 0;     // column offset per virtual stage
    int reader_fanout = 1;            // consumer cas_num (broadcast up)
};

struct CompiledPlan {
    int version = 1;
    std::string model_name;
    DeviceDesc device;
    double lambda = 1.0;
    double mu = 0.05;
    GridPos start{0, 0};
    std::optional<int> input_shift;
    std::optional<int> output_shift;
    std::vector<PlanLayer> layers;
    std::vector<PlanBoundary> boundaries; // layers.size() + 1
    std::vector<std::string> pass_log;    // pass names, pipeline order
    std::vector<std::string> pass_detail; // inferred attributes, honored overrides
    std::string config_hash;

    int64_t batch() const { return layers.empty() ? 0 : layers.front().batch; }
    int tiles_used() const;
};

// Runs the full pass pipeline: lower, quantize, resolve, pack, graphplan,
// place, emit. The first failing pass aborts with its diagnostic.
CompiledPlan compile(const QuantModel& model, const DeviceDesc& device,
                     const UserConfig& config);

// The IR after running the pipeline up to and including `stage`.
AieIrGraph compile_to_stage(const QuantModel& model, const DeviceDesc& device,
                            const UserConfig& config, const std::string& stage);

enum class SimMode { fast, checked };

struct InferenceResult {
    Matrix outputs; // batch x f_out of the final layer, out dtype domain
};

// Bit-exact inference. Fast mode computes each layer directly from the
// unpacked plan weights; checked mode runs the full tiler/cascade/ping-pong
// machinery and verifies occupancy, phase safety, and capacity online. Both
// modes produce identical bytes.
InferenceResult simulate(const CompiledPlan& plan, const Matrix& inputs, SimMode mode);

// Pipelined execution of several inferences through the layer chain with
// alternating memory-tile banks; used to exercise ping-pong behavior.
std::vector<InferenceResult> simulate_sequence(const CompiledPlan& plan,
                                               const std::vector<Matrix>& inputs, SimMode mode);

// Optional float boundary: round-half-even quantization of inputs by the
// model's input shift, and power-of-two dequantization of outputs.
Matrix quantize_io(const CompiledPlan& plan, const std::vector<std::vector<double>>& inputs);
std::vector<std::vector<double>> dequantize_io(const CompiledPlan& plan, const Matrix& outputs);

// Canonical plan serialization: byte-for-byte deterministic for identical
// compile inputs. The weight blob holds packed weights and bias vectors,
// little-endian in tile order.
std::string plan_to_json(const CompiledPlan& plan);
std::vector<uint8_t> plan_weight_blob(const CompiledPlan& plan);
CompiledPlan plan_from_json(const std::string& text, const std::vector<uint8_t>& blob);
CompiledPlan load_plan(const std::string& plan_path);

// Placement view of a compiled plan.
PlacementInstance plan_placement_instance(const CompiledPlan& plan);
PlacementSolution plan_placement_solution(const CompiledPlan& plan);

// Per-layer and whole-model performance estimates.
struct PlanReport {
    std::vector<ScalingEstimate> layers;
    PipelineEstimate pipeline;
    double total_gops = 0;        // modeled steady-state throughput
    double interval_us_per_sample = 0;
    double latency_us = 0;
};
PlanReport analyze_plan(const CompiledPlan& plan);
std::string render_report_text(const CompiledPlan& plan, const PlanReport& report);
std::string render_report_json(const CompiledPlan& plan, const PlanReport& report);

// Writes plan.json, weights.bin, report.txt/.json, placement.txt/.svg and
// the rendered source templates under out_dir.
void emit(const CompiledPlan& plan, const std::string& out_dir);

std::string render_layer_template(const CompiledPlan& plan, size_t layer_index);
std::string render_graph_template(const CompiledPlan& plan);

} // namespace aiegrid
