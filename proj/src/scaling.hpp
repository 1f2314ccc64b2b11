// Per-layer parallelization: tiling choice, cascade rectangle sizing, slice
// and padding math, packed weight layouts, and the layer-level kernel graph.
#pragma once

#include <cstdint>
#include <vector>

#include "device.hpp"
#include "ir.hpp"
#include "kernel.hpp"
#include "matrix.hpp"

namespace aiegrid {

struct ResolvedLayer {
    Tiling tiling;
    CascadeConfig cascade;
};

// Chooses the tiling (native unless pinned) and the cascade rectangle that
// maximizes modeled throughput under the tile budget. Ties prefer the
// shallowest pipeline (cas_len-1 + cas_num-1 stages), then smaller cas_num,
// then smaller cas_len. When even a 1x1 rectangle cannot hold the weight
// slice, the reduction dimension is folded over time (k_folds sequential
// cascade stages on one tile) instead of rejecting the layer.
ResolvedLayer resolve_layer(const AieIrNode& node, const DeviceDesc& device, int budget);

// Per-tile memory footprint of a candidate, in bytes: aligned weight slice,
// head-tile bias, accumulator spill for folded execution, and the double-
// buffered io tiles.
int64_t tile_memory_bytes(int f_in_slice, int f_out_slice, const Tiling& t, IntDType act,
                          IntDType wgt, IntDType acc, IntDType out, bool head, int k_folds,
                          int64_t batch_rows);

// Smallest rectangle area whose slices hold the layer's weights in local
// memory; 1 when only the time-folded fallback fits. This is the default
// per-layer tile budget: wider parallelism is an explicit config choice.
int min_fitting_area(const AieIrNode& node, const DeviceDesc& device);

struct PackedWeights {
    int cas_len = 1;
    int cas_num = 1;
    int k_folds = 1;
    Tiling tiling;
    int f_in_slice = 0;
    int f_out_slice = 0;
    IntDType wgt_dtype = kI8;
    IntDType acc_dtype = kI32;
    // blobs[row][stage]: stage spans the k_folds * cas_len virtual cascade
    // positions west to east. Every blob is zero-padded to a 32-byte multiple.
    std::vector<std::vector<std::vector<uint8_t>>> blobs;
    // bias slice per cascade row, acc-width values (head-stage prologue).
    std::vector<std::vector<int64_t>> bias_rows;

    int stages() const { return cas_len * k_folds; }
};

// Reorganizes W (out_features x in_features) and bias into per-tile blobs in
// the kernel's load order: tile (row, stage) holds the <K,N> blocks of its
// input/output slice, column-pair-major to match the VLDB sequence.
PackedWeights pack_weights(const Matrix& weights, const std::vector<int64_t>* bias,
                           const CascadeConfig& cfg, const Tiling& t, IntDType wgt_dtype,
                           IntDType acc_dtype, int64_t local_mem_bytes);

// Inverse of pack_weights for one tile: the f_out_slice x f_in_slice slice.
Matrix unpack_tile(const PackedWeights& pw, int row, int stage);

struct LayerKernelInstance {
    int row = 0;    // cascade row
    int col = 0;    // position along the cascade, west to east
    CascadeRole role = CascadeRole::solo;
};

struct LayerGraph {
    int cas_len = 1;
    int cas_num = 1;
    std::vector<LayerKernelInstance> kernels;           // row-major
    std::vector<std::pair<int, int>> cascade_edges;     // kernel index -> kernel index
    int broadcast_ports = 0;                            // one per column
    int output_ports = 0;                               // one per row
};

// The cas_num x cas_len grid of kernel instances with west-to-east cascade
// edges, one broadcast input port per column, one output port per row.
LayerGraph layer_graph(const CascadeConfig& cfg);

} // namespace aiegrid
