// Memory-tile model: programmable DMA tilers (tile dims, stride/wrap
// traversal, zero padding), ping-pong buffered storage with a phase-safety
// logger, broadcast reads, and re-tiling plans between layers.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dtypes.hpp"
#include "errors.hpp"
#include "matrix.hpp"

namespace aiegrid {

inline constexpr int kMaxTilerDims = 3;

// One traversal loop: every step moves the tile origin `stride` elements
// along `dim`; `wrap` counts tiles. The last-listed entry iterates fastest.
struct TraversalStep {
    int dim = 0;
    int64_t stride = 0; // element units of the buffer dtype, may be negative
    int wrap = 1;
};

struct DmaTiler {
    std::vector<int64_t> buffer_dims;     // logical extents, outermost first
    std::vector<int64_t> tile_dims;       // inner block extents, same rank
    std::vector<int64_t> base;            // tile-origin offset per dim (empty = zeros)
    std::vector<TraversalStep> traversal; // ordered loops over tile origins
    IntDType elem_dtype = kI8;
    bool pad_out_of_bounds = false;

    int rank() const { return int(buffer_dims.size()); }
    // Elements addressed by one full traversal (tiles x elements per tile).
    int64_t addressed_count() const;
};

void validate_tiler(const DmaTiler& t);

// Expands the traversal into the flat coordinate sequence it addresses.
// Coordinates may lie outside buffer_dims; bounds handling is the caller's
// concern. Order: traversal loops outer-to-inner, then row-major within each
// tile.
std::vector<std::vector<int64_t>> tiler_addresses(const DmaTiler& t);

// Ping-pong buffer: two banks, each a flat element array over `dims`. Reads
// drain one bank while writes fill the other; the access log enforces that a
// bank is never read and written in the same phase.
class MemTileBuffer {
public:
    MemTileBuffer() = default;
    MemTileBuffer(std::vector<int64_t> dims, IntDType elem);

    const std::vector<int64_t>& dims() const { return dims_; }
    IntDType elem_dtype() const { return elem_; }
    int64_t element_count() const;
    // Storage footprint of both banks, in bytes of the element dtype.
    int64_t capacity_bytes() const { return 2 * element_count() * elem_.bytes(); }

    int write_bank() const { return write_bank_; }
    int read_bank() const { return 1 - write_bank_; }
    // Advances the phase counter and swaps the bank roles.
    void advance_phase();
    int phase() const { return phase_; }

    int64_t load(const std::vector<int64_t>& coord, int bank) const;
    void store(const std::vector<int64_t>& coord, int bank, int64_t value);

    // Phase-safety bookkeeping; throws InternalError on a same-phase conflict.
    void note_read(int bank) const;
    void note_write(int bank);

private:
    int64_t flat_index(const std::vector<int64_t>& coord) const;

    std::vector<int64_t> dims_;
    IntDType elem_ = kI8;
    std::array<std::vector<int64_t>, 2> banks_;
    int write_bank_ = 0;
    int phase_ = 0;
    struct PhaseLog {
        int phase = -1;
        bool read = false;
        bool written = false;
    };
    mutable std::array<PhaseLog, 2> log_;
};

// Streams tiles from the buffer's read bank in traversal order. Out-of-bounds
// coordinates yield 0 when the tiler pads, otherwise an error.
std::vector<int64_t> tiler_read(const MemTileBuffer& buf, const DmaTiler& t);

// Inverse of tiler_read over in-bounds coordinates; out-of-bounds writes are
// dropped when padding is enabled. Stream length must match the addressed
// count.
void tiler_write(MemTileBuffer& buf, const DmaTiler& t, const std::vector<int64_t>& stream);

// `fanout` identical copies of tiler_read(buf, t).
std::vector<std::vector<int64_t>> broadcast_read(const MemTileBuffer& buf, const DmaTiler& t,
                                                 int fanout);

// Re-tiling plan between a producer writing (m, n) output tiles and a
// consumer reading (m, k) input tiles of the same logical activation.
struct RetileSpec {
    int batch = 0;  // logical rows before padding
    int features = 0; // logical cols before padding
    int producer_m = 0, producer_n = 0;
    int consumer_m = 0, consumer_k = 0;
    IntDType producer_dtype = kI8;
    IntDType consumer_dtype = kI8;
};

struct RetilePlan {
    DmaTiler write;            // producer side, covers the stored extents
    DmaTiler read;             // consumer side, padded up to consumer tiles
    std::vector<int64_t> buffer_dims; // physical extents of the memory-tile buffer
    int64_t live_bytes = 0;    // both ping-pong banks
};

// Builds the tiler pair whose write-then-read composition hands the consumer
// (m,k)-ordered blocks of the producer's (m,n)-ordered output, zero-padding
// extents the producer never wrote. Throws InfeasibleError when the buffer
// exceeds `capacity_bytes` (pass <= 0 to skip the check).
RetilePlan plan_retile(const RetileSpec& spec, int64_t capacity_bytes);

} // namespace aiegrid
