#include "scaling.hpp"

#include <algorithm>
#include <limits>

#include "errors.hpp"
#include "perf.hpp"

namespace aiegrid {

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }
int64_t ceil_to(int64_t v, int64_t m) { return ceil_div(v, m) * m; }
int64_t align32(int64_t bytes) { return ceil_to(bytes, 32); }

// Minimal slice: the smallest multiple of `unit` whose `parts`-way replication
// covers `extent`.
int min_slice(int64_t extent, int parts, int unit) {
    return int(ceil_to(ceil_div(extent, parts), unit));
}

} // namespace

int64_t tile_memory_bytes(int f_in_slice, int f_out_slice, const Tiling& t, IntDType act,
                          IntDType wgt, IntDType acc, IntDType out, bool head, int k_folds,
                          int64_t batch_rows) {
    int64_t bytes = align32(int64_t(f_in_slice) * f_out_slice * wgt.bytes());
    if (head) bytes += int64_t(f_out_slice) * acc.bytes(); // bias slice
    // Double-buffered io tiles: two M-row tiles in flight per the 2x2 scheme.
    bytes += 2 * 2 * int64_t(t.m) * f_in_slice * act.bytes();
    bytes += 2 * 2 * int64_t(t.m) * f_out_slice * out.bytes();
    if (k_folds > 1) {
        // Folded execution keeps the full output accumulators resident
        // between passes.
        const int64_t b_pad = ceil_to(std::max<int64_t>(batch_rows, 1), t.m);
        bytes += b_pad * f_out_slice * acc.bytes();
    }
    return bytes;
}

ResolvedLayer resolve_layer(const AieIrNode& node, const DeviceDesc& device, int budget) {
    if (node.kind != NodeKind::linear)
        throw InternalError("resolve_layer: node '" + node.name + "' is not linear");
    const DTypePair pair{node.act_dtype, node.wgt_dtype};
    if (!device.supports(pair))
        throw ValidationError("layer '" + node.name + "': dtype pair " + dtype_pair_name(pair) +
                              " unsupported by device");

    Tiling tiling = node.tiling ? *node.tiling : native_tiling(pair);
    if (!tiling_supported(tiling))
        throw ValidationError("layer '" + node.name + "': tiling not in the supported set");
    tiling.native = (Tiling{tiling.m, tiling.k, tiling.n, false} ==
                     Tiling{native_tiling(pair).m, native_tiling(pair).k,
                            native_tiling(pair).n, false});

    const int64_t batch = node.in_dims[0];
    const int f_in = int(node.in_dims[1]);
    const int f_out = int(node.out_dims[1]);
    budget = std::min(budget, device.tile_count());
    if (budget < 1)
        throw InfeasibleError("layer '" + node.name + "': tile budget is empty");

    auto make_cfg = [&](int l, int n, int folds) {
        CascadeConfig c;
        c.cas_len = l;
        c.cas_num = n;
        c.k_folds = folds;
        c.f_in_slice = min_slice(f_in, l * folds, tiling.k);
        c.f_out_slice = min_slice(f_out, n, tiling.n);
        c.padded_f_in = l * folds * c.f_in_slice;
        c.padded_f_out = n * c.f_out_slice;
        return c;
    };

    auto fits_memory = [&](const CascadeConfig& c) {
        const int64_t head = tile_memory_bytes(c.f_in_slice, c.f_out_slice, tiling,
                                               node.act_dtype, node.wgt_dtype, node.acc_dtype,
                                               node.out_dtype, true, c.k_folds, batch);
        return head <= device.local_mem_bytes;
    };

    // A pinned cascade is honored as-is (validate_overrides vets it); only
    // unpinned slices are completed.
    if (node.overridden("cascade") && node.cascade) {
        CascadeConfig c = *node.cascade;
        if (c.f_in_slice <= 0) c.f_in_slice = min_slice(f_in, c.cas_len, tiling.k);
        if (c.f_out_slice <= 0) c.f_out_slice = min_slice(f_out, c.cas_num, tiling.n);
        c.k_folds = 1;
        c.padded_f_in = c.cas_len * c.f_in_slice;
        c.padded_f_out = c.cas_num * c.f_out_slice;
        if (int64_t(c.cas_len) * c.f_in_slice < f_in)
            throw InfeasibleError("layer '" + node.name +
                                  "': pinned cascade cannot cover f_in");
        if (int64_t(c.cas_num) * c.f_out_slice < f_out)
            throw InfeasibleError("layer '" + node.name +
                                  "': pinned cascade cannot cover f_out");
        if (!fits_memory(c))
            throw InfeasibleError("layer '" + node.name +
                                  "': pinned cascade exceeds local memory");
        return {tiling, c};
    }

    const int max_len = int(std::min<int64_t>(device.cols, ceil_div(f_in, tiling.k)));
    const int max_num = int(std::min<int64_t>(device.rows, ceil_div(f_out, tiling.n)));

    struct Candidate {
        CascadeConfig cfg;
        double cycles = 0;
        int depth = 0;
    };
    std::optional<Candidate> best;

    auto better = [](const Candidate& a, const Candidate& b) {
        if (a.cycles != b.cycles) return a.cycles < b.cycles;
        if (a.depth != b.depth) return a.depth < b.depth;
        if (a.cfg.cas_num != b.cfg.cas_num) return a.cfg.cas_num < b.cfg.cas_num;
        return a.cfg.cas_len < b.cfg.cas_len;
    };

    for (int n = 1; n <= max_num; ++n) {
        for (int l = 1; l <= max_len; ++l) {
            if (int64_t(l) * n > budget) continue;
            CascadeConfig c = make_cfg(l, n, 1);
            if (!fits_memory(c)) continue;

            // Steady-state cycles per batch, fill excluded: throughput is the
            // primary objective, pipeline depth the tie-break.
            const int64_t b_pad = ceil_to(std::max<int64_t>(batch, 1), tiling.m);
            KernelWorkload w;
            w.tiling = tiling;
            w.dims = {int(b_pad), c.f_in_slice, c.f_out_slice};
            w.useful_macs = batch * std::min(c.f_in_slice, f_in) *
                            int64_t(std::min(c.f_out_slice, f_out));
            w.batch_rows = int(batch);
            w.dtypes = pair;
            w.out_dtype = node.out_dtype;
            const auto trace = blocked_schedule_trace(tiling, w.dims);
            const PerfEstimate est = estimate_kernel(trace, w, device);

            const double rate = double(device.memtile_port_bytes_per_cycle);
            const double in_stream = double(b_pad) * c.f_in_slice * pair.first.bytes() / rate;
            const double out_stream =
                double(b_pad) * c.f_out_slice * node.out_dtype.bytes() / rate;
            Candidate cand;
            cand.cfg = c;
            cand.cycles = std::max({est.est_cycles, in_stream, out_stream});
            cand.depth = (l - 1) + (n - 1);
            if (!best || better(cand, *best)) best = cand;
        }
    }

    if (best) return {tiling, best->cfg};

    // No spatial rectangle fits local memory within the budget: fold the
    // reduction dimension over time on a single tile, sequencing the cascade
    // stages instead of spreading them.
    for (int folds = 2; folds <= int(ceil_div(f_in, tiling.k)); folds *= 2) {
        CascadeConfig c = make_cfg(1, 1, folds);
        if (fits_memory(c)) return {tiling, c};
    }
    throw InfeasibleError("layer '" + node.name +
                          "': no feasible cascade configuration within budget " +
                          std::to_string(budget) + " and local memory " +
                          std::to_string(device.local_mem_bytes) + " bytes");
}

int min_fitting_area(const AieIrNode& node, const DeviceDesc& device) {
    const DTypePair pair{node.act_dtype, node.wgt_dtype};
    const Tiling tiling = node.tiling ? *node.tiling : native_tiling(pair);
    const int64_t batch = node.in_dims[0];
    const int f_in = int(node.in_dims[1]);
    const int f_out = int(node.out_dims[1]);
    const int max_len = int(std::min<int64_t>(device.cols, ceil_div(f_in, tiling.k)));
    const int max_num = int(std::min<int64_t>(device.rows, ceil_div(f_out, tiling.n)));

    int best = 0;
    for (int n = 1; n <= max_num; ++n) {
        for (int l = 1; l <= max_len; ++l) {
            const int area = l * n;
            if (best && area >= best) continue;
            const int f_in_slice = min_slice(f_in, l, tiling.k);
            const int f_out_slice = min_slice(f_out, n, tiling.n);
            const int64_t bytes =
                tile_memory_bytes(f_in_slice, f_out_slice, tiling, node.act_dtype,
                                  node.wgt_dtype, node.acc_dtype, node.out_dtype, true, 1,
                                  batch);
            if (bytes <= device.local_mem_bytes) best = area;
        }
    }
    return best > 0 ? best : 1; // 1: resolve_layer falls back to k-folding
}

namespace {

void append_le(std::vector<uint8_t>& out, int64_t v, int width) {
    for (int b = 0; b < width; ++b) out.push_back(uint8_t(uint64_t(v) >> (8 * b)));
}

int64_t read_le(const std::vector<uint8_t>& in, size_t at, int width) {
    uint64_t u = 0;
    for (int b = 0; b < width; ++b) u |= uint64_t(in[at + b]) << (8 * b);
    if (width < 8) {
        const uint64_t sign = uint64_t{1} << (width * 8 - 1);
        if (u & sign) u |= ~((uint64_t{1} << (width * 8)) - 1);
    }
    return int64_t(u);
}

} // namespace

PackedWeights pack_weights(const Matrix& weights, const std::vector<int64_t>* bias,
                           const CascadeConfig& cfg, const Tiling& t, IntDType wgt_dtype,
                           IntDType acc_dtype, int64_t local_mem_bytes) {
    PackedWeights pw;
    pw.cas_len = cfg.cas_len;
    pw.cas_num = cfg.cas_num;
    pw.k_folds = cfg.k_folds;
    pw.tiling = t;
    pw.f_in_slice = cfg.f_in_slice;
    pw.f_out_slice = cfg.f_out_slice;
    pw.wgt_dtype = wgt_dtype;
    pw.acc_dtype = acc_dtype;

    const int f_out = weights.rows();
    const int f_in = weights.cols();
    const int stages = pw.stages();
    const int k_tiles = cfg.f_in_slice / t.k;
    const int n_tiles = cfg.f_out_slice / t.n;
    const int width = wgt_dtype.bytes();

    pw.blobs.resize(size_t(cfg.cas_num));
    pw.bias_rows.resize(size_t(cfg.cas_num));
    for (int row = 0; row < cfg.cas_num; ++row) {
        pw.blobs[size_t(row)].resize(size_t(stages));
        auto& brow = pw.bias_rows[size_t(row)];
        brow.assign(size_t(cfg.f_out_slice), 0);
        if (bias) {
            for (int j = 0; j < cfg.f_out_slice; ++j) {
                const int src = row * cfg.f_out_slice + j;
                if (src < int(bias->size())) brow[size_t(j)] = (*bias)[size_t(src)];
            }
        }
        for (int stage = 0; stage < stages; ++stage) {
            std::vector<uint8_t>& blob = pw.blobs[size_t(row)][size_t(stage)];
            blob.reserve(size_t(k_tiles) * n_tiles * t.k * t.n * width + 32);
            // Column-pair-major, K-sequential inside: the exact VLDB order of
            // the blocked kernel.
            for (int np = 0; np < n_tiles; np += 2) {
                const int in_pair = std::min(2, n_tiles - np);
                for (int kk = 0; kk < k_tiles; ++kk) {
                    for (int ni = 0; ni < in_pair; ++ni) {
                        for (int kq = 0; kq < t.k; ++kq) {
                            for (int nn = 0; nn < t.n; ++nn) {
                                const int out_idx =
                                    row * cfg.f_out_slice + (np + ni) * t.n + nn;
                                const int in_idx =
                                    stage * cfg.f_in_slice + kk * t.k + kq;
                                int64_t v = 0;
                                if (out_idx < f_out && in_idx < f_in)
                                    v = weights.at(out_idx, in_idx);
                                append_le(blob, v, width);
                            }
                        }
                    }
                }
            }
            while (blob.size() % 32 != 0) blob.push_back(0);
            if (local_mem_bytes > 0 && int64_t(blob.size()) > local_mem_bytes)
                throw InfeasibleError("pack_weights: tile blob of " +
                                      std::to_string(blob.size()) +
                                      " bytes exceeds local memory");
        }
    }
    return pw;
}

Matrix unpack_tile(const PackedWeights& pw, int row, int stage) {
    const Tiling& t = pw.tiling;
    const int k_tiles = pw.f_in_slice / t.k;
    const int n_tiles = pw.f_out_slice / t.n;
    const int width = pw.wgt_dtype.bytes();
    const auto& blob = pw.blobs[size_t(row)][size_t(stage)];

    Matrix slice(pw.f_out_slice, pw.f_in_slice);
    size_t at = 0;
    for (int np = 0; np < n_tiles; np += 2) {
        const int in_pair = std::min(2, n_tiles - np);
        for (int kk = 0; kk < k_tiles; ++kk) {
            for (int ni = 0; ni < in_pair; ++ni) {
                for (int kq = 0; kq < t.k; ++kq) {
                    for (int nn = 0; nn < t.n; ++nn) {
                        slice.at((np + ni) * t.n + nn, kk * t.k + kq) =
                            read_le(blob, at, width);
                        at += size_t(width);
                    }
                }
            }
        }
    }
    return slice;
}

LayerGraph layer_graph(const CascadeConfig& cfg) {
    LayerGraph g;
    g.cas_len = cfg.cas_len;
    g.cas_num = cfg.cas_num;
    g.broadcast_ports = cfg.cas_len;
    g.output_ports = cfg.cas_num;
    for (int row = 0; row < cfg.cas_num; ++row) {
        for (int col = 0; col < cfg.cas_len; ++col) {
            LayerKernelInstance k;
            k.row = row;
            k.col = col;
            if (cfg.cas_len == 1) {
                k.role = CascadeRole::solo;
            } else if (col == 0) {
                k.role = CascadeRole::head;
            } else if (col == cfg.cas_len - 1) {
                k.role = CascadeRole::tail;
            } else {
                k.role = CascadeRole::middle;
            }
            g.kernels.push_back(k);
        }
    }
    for (int row = 0; row < cfg.cas_num; ++row)
        for (int col = 0; col + 1 < cfg.cas_len; ++col)
            g.cascade_edges.emplace_back(row * cfg.cas_len + col, row * cfg.cas_len + col + 1);
    return g;
}

} // namespace aiegrid
