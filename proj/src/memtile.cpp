#include "memtile.hpp"

#include <numeric>
#include <string>

namespace aiegrid {

namespace {

int64_t ceil_to(int64_t v, int64_t multiple) {
    return (v + multiple - 1) / multiple * multiple;
}

} // namespace

int64_t DmaTiler::addressed_count() const {
    int64_t tiles = 1;
    for (const auto& step : traversal) tiles *= step.wrap;
    int64_t per_tile = 1;
    for (int64_t d : tile_dims) per_tile *= d;
    return tiles * per_tile;
}

void validate_tiler(const DmaTiler& t) {
    const int rank = t.rank();
    if (rank < 1 || rank > kMaxTilerDims)
        throw ValidationError("tiler: rank must be 1.." + std::to_string(kMaxTilerDims));
    if (int(t.tile_dims.size()) != rank)
        throw ValidationError("tiler: tile_dims rank mismatch");
    if (!t.base.empty() && int(t.base.size()) != rank)
        throw ValidationError("tiler: base rank mismatch");
    for (int d = 0; d < rank; ++d) {
        if (t.buffer_dims[d] < 1) throw ValidationError("tiler: buffer dim must be >= 1");
        if (t.tile_dims[d] < 1) throw ValidationError("tiler: tile dim must be >= 1");
    }
    for (const auto& step : t.traversal) {
        if (step.dim < 0 || step.dim >= rank)
            throw ValidationError("tiler: traversal dim out of range");
        if (step.wrap < 1) throw ValidationError("tiler: traversal wrap must be >= 1");
    }
}

std::vector<std::vector<int64_t>> tiler_addresses(const DmaTiler& t) {
    validate_tiler(t);
    const int rank = t.rank();
    const int levels = int(t.traversal.size());

    std::vector<std::vector<int64_t>> out;
    out.reserve(size_t(t.addressed_count()));

    std::vector<int> idx(levels, 0);
    std::vector<int64_t> origin(rank, 0);
    const std::vector<int64_t> base =
        t.base.empty() ? std::vector<int64_t>(rank, 0) : t.base;

    auto emit_tile = [&]() {
        std::vector<int64_t> coord(rank, 0);
        // Row-major walk of the tile, outermost dim slowest.
        std::vector<int64_t> off(rank, 0);
        while (true) {
            for (int d = 0; d < rank; ++d) coord[d] = base[d] + origin[d] + off[d];
            out.push_back(coord);
            int d = rank - 1;
            while (d >= 0) {
                if (++off[d] < t.tile_dims[d]) break;
                off[d] = 0;
                --d;
            }
            if (d < 0) break;
        }
    };

    if (levels == 0) {
        emit_tile();
        return out;
    }

    // Odometer over the traversal loops; the last-listed entry spins fastest.
    while (true) {
        std::fill(origin.begin(), origin.end(), 0);
        for (int l = 0; l < levels; ++l)
            origin[t.traversal[l].dim] += int64_t(idx[l]) * t.traversal[l].stride;
        emit_tile();
        int l = levels - 1;
        while (l >= 0) {
            if (++idx[l] < t.traversal[l].wrap) break;
            idx[l] = 0;
            --l;
        }
        if (l < 0) break;
    }
    return out;
}

MemTileBuffer::MemTileBuffer(std::vector<int64_t> dims, IntDType elem)
    : dims_(std::move(dims)), elem_(elem) {
    const int64_t n = element_count();
    banks_[0].assign(size_t(n), 0);
    banks_[1].assign(size_t(n), 0);
}

int64_t MemTileBuffer::element_count() const {
    int64_t n = 1;
    for (int64_t d : dims_) n *= d;
    return n;
}

void MemTileBuffer::advance_phase() {
    ++phase_;
    write_bank_ = 1 - write_bank_;
}

int64_t MemTileBuffer::flat_index(const std::vector<int64_t>& coord) const {
    int64_t idx = 0;
    for (size_t d = 0; d < dims_.size(); ++d) idx = idx * dims_[d] + coord[d];
    return idx;
}

int64_t MemTileBuffer::load(const std::vector<int64_t>& coord, int bank) const {
    return banks_[bank][size_t(flat_index(coord))];
}

void MemTileBuffer::store(const std::vector<int64_t>& coord, int bank, int64_t value) {
    banks_[bank][size_t(flat_index(coord))] = value;
}

void MemTileBuffer::note_read(int bank) const {
    auto& l = log_[bank];
    if (l.phase != phase_) l = {phase_, false, false};
    l.read = true;
    if (l.written)
        throw InternalError("memtile bank " + std::to_string(bank) +
                            " read and written in phase " + std::to_string(phase_));
}

void MemTileBuffer::note_write(int bank) {
    auto& l = log_[bank];
    if (l.phase != phase_) l = {phase_, false, false};
    l.written = true;
    if (l.read)
        throw InternalError("memtile bank " + std::to_string(bank) +
                            " read and written in phase " + std::to_string(phase_));
}

namespace {

bool coord_in_bounds(const std::vector<int64_t>& coord, const std::vector<int64_t>& dims) {
    for (size_t d = 0; d < dims.size(); ++d)
        if (coord[d] < 0 || coord[d] >= dims[d]) return false;
    return true;
}

std::string coord_str(const std::vector<int64_t>& coord) {
    std::string s = "(";
    for (size_t i = 0; i < coord.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(coord[i]);
    }
    return s + ")";
}

} // namespace

std::vector<int64_t> tiler_read(const MemTileBuffer& buf, const DmaTiler& t) {
    if (t.buffer_dims != buf.dims())
        throw ValidationError("tiler_read: tiler buffer_dims do not match the buffer");
    buf.note_read(buf.read_bank());
    std::vector<int64_t> stream;
    const auto coords = tiler_addresses(t);
    stream.reserve(coords.size());
    for (const auto& coord : coords) {
        if (coord_in_bounds(coord, buf.dims())) {
            stream.push_back(buf.load(coord, buf.read_bank()));
        } else if (t.pad_out_of_bounds) {
            stream.push_back(0);
        } else {
            throw ValidationError("tiler_read: out-of-bounds access at " + coord_str(coord) +
                                  " with padding disabled");
        }
    }
    return stream;
}

void tiler_write(MemTileBuffer& buf, const DmaTiler& t, const std::vector<int64_t>& stream) {
    if (t.buffer_dims != buf.dims())
        throw ValidationError("tiler_write: tiler buffer_dims do not match the buffer");
    const auto coords = tiler_addresses(t);
    if (stream.size() != coords.size())
        throw ValidationError("tiler_write: stream length " + std::to_string(stream.size()) +
                              " != addressed element count " + std::to_string(coords.size()));
    buf.note_write(buf.write_bank());
    for (size_t i = 0; i < coords.size(); ++i) {
        if (coord_in_bounds(coords[i], buf.dims())) {
            buf.store(coords[i], buf.write_bank(), stream[i]);
        } else if (!t.pad_out_of_bounds) {
            throw ValidationError("tiler_write: out-of-bounds access at " +
                                  coord_str(coords[i]) + " with padding disabled");
        } // else: dropped
    }
}

std::vector<std::vector<int64_t>> broadcast_read(const MemTileBuffer& buf, const DmaTiler& t,
                                                 int fanout) {
    if (fanout < 1) throw ValidationError("broadcast_read: fanout must be >= 1");
    std::vector<std::vector<int64_t>> streams;
    streams.reserve(size_t(fanout));
    const std::vector<int64_t> one = tiler_read(buf, t);
    for (int i = 0; i < fanout; ++i) streams.push_back(one);
    return streams;
}

RetilePlan plan_retile(const RetileSpec& spec, int64_t capacity_bytes) {
    if (spec.batch < 1 || spec.features < 1)
        throw ValidationError("plan_retile: logical dims must be >= 1");
    if (spec.producer_m < 1 || spec.producer_n < 1 || spec.consumer_m < 1 || spec.consumer_k < 1)
        throw ValidationError("plan_retile: tile dims must be >= 1");

    const int64_t rows_p = ceil_to(spec.batch, spec.producer_m);
    const int64_t cols_p = ceil_to(spec.features, spec.producer_n);
    const int64_t rows_c = ceil_to(spec.batch, spec.consumer_m);
    const int64_t cols_c = ceil_to(spec.features, spec.consumer_k);

    RetilePlan plan;
    plan.buffer_dims = {rows_p, cols_p};

    plan.write.buffer_dims = plan.buffer_dims;
    plan.write.tile_dims = {spec.producer_m, spec.producer_n};
    plan.write.traversal = {
        {0, spec.producer_m, int(rows_p / spec.producer_m)},
        {1, spec.producer_n, int(cols_p / spec.producer_n)},
    };
    plan.write.elem_dtype = spec.producer_dtype;
    plan.write.pad_out_of_bounds = false;

    plan.read.buffer_dims = plan.buffer_dims;
    plan.read.tile_dims = {spec.consumer_m, spec.consumer_k};
    plan.read.traversal = {
        {0, spec.consumer_m, int(rows_c / spec.consumer_m)},
        {1, spec.consumer_k, int(cols_c / spec.consumer_k)},
    };
    plan.read.elem_dtype = spec.consumer_dtype;
    // The consumer view may extend past what the producer wrote; the DMA
    // fills those lanes with zeros.
    plan.read.pad_out_of_bounds = (rows_c > rows_p) || (cols_c > cols_p);

    plan.live_bytes = 2 * rows_p * cols_p * spec.producer_dtype.bytes();
    if (capacity_bytes > 0 && plan.live_bytes > capacity_bytes) {
        throw InfeasibleError("plan_retile: buffer needs " + std::to_string(plan.live_bytes) +
                              " bytes, memory tile holds " + std::to_string(capacity_bytes));
    }
    return plan;
}

} // namespace aiegrid
