// Single-tile blocked linear kernel: <M,K,N> tiled multiply-accumulate with
// the 2x2 accumulator scheme, bias prologue, shift-round-saturate store,
// fused ReLU, and cascade partial-sum ports. Bit-exact by construction:
// every accumulation wraps at the accumulator width.
#pragma once

#include <optional>
#include <vector>

#include "device.hpp"
#include "dtypes.hpp"
#include "matrix.hpp"

namespace aiegrid {

struct Tiling {
    int m = 0;
    int k = 0;
    int n = 0;
    bool native = false;

    bool operator==(const Tiling& o) const { return m == o.m && k == o.k && n == o.n; }
};

// Native tilings per dtype pair (the ones that map 1:1 onto vector intrinsics).
Tiling native_tiling(const DTypePair& pair);

// Any <m,k,n> from this set is accepted; non-native ones run identically in
// simulation and pick up an emulation penalty in the performance model.
bool tiling_supported(const Tiling& t);
std::vector<Tiling> supported_tilings(const DTypePair& pair);

// Default accumulator width per pair: 32-bit for the 8-bit paths, 64-bit for
// i16xi16.
IntDType default_acc_dtype(const DTypePair& pair);

enum class CascadeRole { solo, head, middle, tail };

// Shift, round (half-to-even), saturate: the fused store-path rescaling.
// ReLU, when enabled, clamps after rounding and before saturation.
int64_t srs(int64_t acc_value, int shift, IntDType out, bool relu);

struct KernelIO {
    const Matrix* a = nullptr;          // batch-major input, B_pad x f_in_slice
    const Matrix* weights = nullptr;    // f_out_slice x f_in_slice slice of W (row = output)
    const std::vector<int64_t>* bias = nullptr; // f_out_slice entries, acc-width domain
    const Matrix* cascade_in = nullptr; // acc-width partial sums, B_pad x f_out_slice
    Matrix* cascade_out = nullptr;      // filled for head/middle roles
};

struct KernelParams {
    Tiling tiling;
    int shift = 0;
    bool use_bias = false;
    bool use_relu = false;
    IntDType act = kI8;
    IntDType wgt = kI8;
    IntDType acc = kI32;
    IntDType out = kI8;
    CascadeRole role = CascadeRole::solo;
};

// Runs the blocked kernel over one tile's slice. For solo/tail the return
// value is the stored output (out dtype); for head/middle the return value is
// empty and cascade_out carries raw accumulator-width partial sums.
Matrix run_kernel(const KernelIO& io, const KernelParams& p);

// Schedule trace for the performance model.
enum class EventKind { vlda, vldb, vmac, vst };

struct TraceEvent {
    EventKind kind;
    int row_tile;  // -1 when not applicable
    int col_tile;  // -1 when not applicable
    int k_tile;    // -1 when not applicable
};

struct ProblemDims {
    int batch = 0;  // rows of A, tile-multiple
    int f_in = 0;   // reduction dim, tile-multiple
    int f_out = 0;  // output dim, tile-multiple
};

// Event trace of the 2x2 blocked schedule: each loaded pair of A tiles and
// pair of W tiles feeds up to four accumulators before the next loads.
std::vector<TraceEvent> blocked_schedule_trace(const Tiling& t, const ProblemDims& dims);

} // namespace aiegrid
