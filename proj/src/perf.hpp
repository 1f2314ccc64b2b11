// Analytical performance model: per-tile ceilings, bandwidth bounds, cycle
// estimates from schedule traces, multi-tile scaling, and pipeline intervals.
// All estimates are model outputs, not hardware measurements.
#pragma once

#include <string>
#include <vector>

#include "device.hpp"
#include "ir.hpp"
#include "kernel.hpp"

namespace aiegrid {

enum class BoundKind { compute, memory };

struct PeakRates {
    int macs_per_cycle = 0;
    double gmacs = 0.0; // W * f
    double gops = 0.0;  // 2 * W * f
};

// Architectural ceiling for a dtype pair at the device clock.
PeakRates peak_compute(const DTypePair& pair, const DeviceDesc& device);

// Bandwidth ceiling in MAC/cycle. batch_rows = 1 means no reuse: every MAC
// loads one fresh element of each operand. With two or more batch-row tiles
// the 2x2 blocked schedule reuses each loaded A tile across two output tiles
// and each W tile across two batch tiles, halving the per-MAC traffic:
//   bytes/MAC = bytes_a / min(2, batch_rows) + bytes_b / min(2, batch_rows)
// The result composes with the compute ceiling via min() downstream.
double memory_bound(const DTypePair& pair, int batch_rows, const DeviceDesc& device);

struct PerfEstimate {
    int macs_per_cycle_bound = 0;        // compute ceiling W
    double mem_bound_macs_per_cycle = 0; // bandwidth ceiling
    double est_cycles = 0;               // steady state + prologue/epilogue
    double gops = 0;                     // 2 * useful MACs / modeled time
    double efficiency = 0;               // fraction of the compute ceiling, (0, 1]
    BoundKind bound_kind = BoundKind::compute;
};

struct KernelWorkload {
    Tiling tiling;
    ProblemDims dims;     // padded dims the trace covers
    int64_t useful_macs = 0; // unpadded work
    int batch_rows = 1;   // logical batch rows before padding
    DTypePair dtypes{kI8, kI8};
    IntDType out_dtype = kI8;
};

// Cycle estimate from a schedule trace: per iteration group the slowest of
// the VMAC pipe, the two load ports, and the store port sets the pace.
// Non-native tilings pay an emulation factor on every VMAC.
PerfEstimate estimate_kernel(const std::vector<TraceEvent>& trace, const KernelWorkload& w,
                             const DeviceDesc& device);

// VMAC emulation factor: intrinsic calls needed per tile of this shape.
int emulation_factor(const Tiling& t, const DTypePair& pair);

struct ScalingEstimate {
    int tiles = 0;
    PerfEstimate per_tile;
    double ideal_gops = 0;      // tiles x single-tile estimate
    double modeled_gops = 0;    // with cascade fill and stream ceilings
    double modeled_efficiency = 0; // modeled / ideal
    int stage_depth = 0;        // (cas_len - 1) + (cas_num - 1)
    double cycles_per_batch = 0;
};

// Array-level estimate of one resolved layer.
ScalingEstimate estimate_scaling(const CascadeConfig& cfg, const Tiling& tiling,
                                 int64_t batch_rows, int64_t f_in, int64_t f_out,
                                 const DTypePair& dtypes, IntDType out_dtype,
                                 const DeviceDesc& device);

struct PipelineEstimate {
    double interval_cycles_per_sample = 0; // steady-state output interval
    double latency_cycles = 0;             // first-sample latency
    int bottleneck_layer = -1;
};

// Under ping-pong overlap the chain emits at the pace of its slowest layer.
PipelineEstimate pipeline_interval(const std::vector<ScalingEstimate>& layers,
                                   int64_t batch_rows);

} // namespace aiegrid
