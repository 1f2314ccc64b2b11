#include "perf.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace aiegrid {

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

// One load/store port moves 256 bits per cycle.
constexpr int kPortBytesPerCycle = 32;

} // namespace

PeakRates peak_compute(const DTypePair& pair, const DeviceDesc& device) {
    PeakRates r;
    r.macs_per_cycle = device.macs_for(pair);
    r.gmacs = double(r.macs_per_cycle) * device.clock_ghz;
    r.gops = 2.0 * r.gmacs;
    return r;
}

double memory_bound(const DTypePair& pair, int batch_rows, const DeviceDesc& device) {
    if (batch_rows < 1) throw ValidationError("memory_bound: batch_rows must be >= 1");
    if (batch_rows == 1) {
        // Single-sample regime: every MAC loads one fresh element of each
        // operand.
        return double(device.load_bytes_per_cycle) /
               double(pair.first.bytes() + pair.second.bytes());
    }
    // Blocked regime: one (m x k) A tile and one (k x n) W tile feed m*k*n
    // MACs, and the 2x2 scheme reuses the A tile across two output tiles and
    // the W tile across two batch-row tiles (when a second row tile exists):
    //   bytes/MAC = bytes_a / (2n) + bytes_b / (row_pairs * m)
    const Tiling nat = native_tiling(pair);
    const int row_tiles = int((batch_rows + nat.m - 1) / nat.m);
    const double row_pair = std::min(2, row_tiles);
    const double bytes_per_mac = double(pair.first.bytes()) / (2.0 * nat.n) +
                                 double(pair.second.bytes()) / (row_pair * nat.m);
    return double(device.load_bytes_per_cycle) / bytes_per_mac;
}

int emulation_factor(const Tiling& t, const DTypePair& pair) {
    const Tiling nat = native_tiling(pair);
    if (t.m == nat.m && t.k == nat.k && t.n == nat.n) return 1;
    // Emulated tiles decompose into native intrinsic calls plus one cycle of
    // data manipulation (shuffles, pointer fixup) per emulated tile.
    return int(ceil_div(t.m, nat.m) * ceil_div(t.k, nat.k) * ceil_div(t.n, nat.n)) + 1;
}

PerfEstimate estimate_kernel(const std::vector<TraceEvent>& trace, const KernelWorkload& w,
                             const DeviceDesc& device) {
    const Tiling& t = w.tiling;
    const DTypePair& pair = w.dtypes;
    const int factor = emulation_factor(t, pair);

    const int64_t vlda_cycles_each = ceil_div(int64_t(t.m) * t.k * pair.first.bytes(),
                                              kPortBytesPerCycle);
    const int64_t vldb_cycles_each = ceil_div(int64_t(t.k) * t.n * pair.second.bytes(),
                                              kPortBytesPerCycle);
    const int64_t vst_cycles_each = ceil_div(int64_t(t.m) * t.n * w.out_dtype.bytes(),
                                             kPortBytesPerCycle);

    int64_t vmac_count = 0, vlda_count = 0, vldb_count = 0, vst_count = 0;
    size_t first_vmac = trace.size();
    for (size_t i = 0; i < trace.size(); ++i) {
        switch (trace[i].kind) {
            case EventKind::vmac:
                ++vmac_count;
                if (first_vmac == trace.size()) first_vmac = i;
                break;
            case EventKind::vlda: ++vlda_count; break;
            case EventKind::vldb: ++vldb_count; break;
            case EventKind::vst: ++vst_count; break;
        }
    }

    const double compute_cycles = double(vmac_count) * factor;
    const double port_a = double(vlda_count) * vlda_cycles_each;
    const double port_b = double(vldb_count) * vldb_cycles_each;
    const double stores = double(vst_count) * vst_cycles_each;
    const double steady = std::max({compute_cycles, port_a, port_b, stores});

    // Prologue: loads issued before the first VMAC. Epilogue: the final SRS
    // plus the last tile's store.
    double prologue = 0;
    for (size_t i = 0; i < first_vmac && i < trace.size(); ++i) {
        if (trace[i].kind == EventKind::vlda) prologue += double(vlda_cycles_each);
        if (trace[i].kind == EventKind::vldb) prologue += double(vldb_cycles_each);
    }
    const double epilogue = vst_count ? double(vst_cycles_each) + 1.0 : 0.0;

    PerfEstimate est;
    est.macs_per_cycle_bound = device.macs_for(pair);
    est.mem_bound_macs_per_cycle = memory_bound(pair, w.batch_rows, device);

    const int64_t padded_macs = vmac_count * int64_t(t.m) * t.k * t.n;
    double cycles = steady + prologue + epilogue;
    const double trace_rate = cycles > 0 ? double(padded_macs) / cycles : 0.0;

    if (est.mem_bound_macs_per_cycle < std::min(trace_rate, double(est.macs_per_cycle_bound))) {
        est.bound_kind = BoundKind::memory;
        cycles = double(padded_macs) / est.mem_bound_macs_per_cycle;
    } else {
        est.bound_kind = BoundKind::compute;
    }
    est.est_cycles = cycles;

    const double seconds = cycles / (device.clock_ghz * 1e9);
    est.gops = seconds > 0 ? 2.0 * double(w.useful_macs) / seconds / 1e9 : 0.0;
    const double achieved = cycles > 0 ? double(w.useful_macs) / cycles : 0.0;
    est.efficiency = std::clamp(achieved / double(est.macs_per_cycle_bound), 1e-12, 1.0);
    return est;
}

ScalingEstimate estimate_scaling(const CascadeConfig& cfg, const Tiling& tiling,
                                 int64_t batch_rows, int64_t f_in, int64_t f_out,
                                 const DTypePair& dtypes, IntDType out_dtype,
                                 const DeviceDesc& device) {
    const int64_t b_pad = ceil_div(batch_rows, tiling.m) * tiling.m;

    KernelWorkload w;
    w.tiling = tiling;
    w.dims = {int(b_pad), cfg.f_in_slice, cfg.f_out_slice};
    // Useful work of the slice: the unpadded share of this tile's rectangle.
    const int64_t slice_in = std::min<int64_t>(cfg.f_in_slice, f_in);
    const int64_t slice_out = std::min<int64_t>(cfg.f_out_slice, f_out);
    w.useful_macs = batch_rows * slice_in * slice_out;
    w.batch_rows = int(batch_rows);
    w.dtypes = dtypes;
    w.out_dtype = out_dtype;

    const auto trace = blocked_schedule_trace(tiling, w.dims);
    ScalingEstimate s;
    s.per_tile = estimate_kernel(trace, w, device);
    s.tiles = cfg.cas_len * cfg.cas_num;
    s.ideal_gops = double(s.tiles) * s.per_tile.gops;
    s.stage_depth = (cfg.cas_len - 1) + (cfg.cas_num - 1);

    // Cascade fill: the west-to-east partial-sum chain plus the vertical
    // distribution path refill once per batch pass, one block period per
    // stage.
    const int64_t blocks = (b_pad / tiling.m) * (cfg.f_out_slice / tiling.n);
    const double block_cycles = blocks > 0 ? s.per_tile.est_cycles / double(blocks) : 0.0;
    double cycles = s.per_tile.est_cycles + double(s.stage_depth) * block_cycles;

    // Memory-tile stream ceilings: one broadcast port per column feeds the
    // A slice, one port per row drains the outputs.
    const double rate = double(device.memtile_port_bytes_per_cycle);
    const double in_stream = double(b_pad) * cfg.f_in_slice * dtypes.first.bytes() / rate;
    const double out_stream = double(b_pad) * cfg.f_out_slice * out_dtype.bytes() / rate;
    cycles = std::max({cycles, in_stream, out_stream});

    s.cycles_per_batch = cycles;
    const double seconds = cycles / (device.clock_ghz * 1e9);
    const int64_t layer_macs = batch_rows * f_in * f_out;
    s.modeled_gops = seconds > 0 ? 2.0 * double(layer_macs) / seconds / 1e9 : 0.0;
    s.modeled_efficiency = s.ideal_gops > 0 ? std::min(1.0, s.modeled_gops / s.ideal_gops) : 0.0;
    return s;
}

PipelineEstimate pipeline_interval(const std::vector<ScalingEstimate>& layers,
                                   int64_t batch_rows) {
    PipelineEstimate p;
    if (layers.empty() || batch_rows < 1) return p;
    double worst = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
        p.latency_cycles += layers[i].cycles_per_batch;
        const double interval = layers[i].cycles_per_batch / double(batch_rows);
        if (interval > worst) {
            worst = interval;
            p.bottleneck_layer = int(i);
        }
    }
    p.interval_cycles_per_sample = worst;
    return p;
}

} // namespace aiegrid
