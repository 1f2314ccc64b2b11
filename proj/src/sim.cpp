// Plan execution: fast mode computes each layer directly from the unpacked
// plan weights; checked mode pushes every activation through the memory-tile
// tilers, broadcast ports, and cascade chains, verifying occupancy, phase
// safety, and capacity invariants online.
#include <cmath>
#include <set>
#include <string>

#include "errors.hpp"
#include "plan.hpp"

namespace aiegrid {

namespace {

int64_t ceil_to(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

// Serialize a matrix as row-major (tm x tn) tiles: the drain order of a
// compute tile's output buffer and the fill order of its input stream.
std::vector<int64_t> tile_stream_from_matrix(const Matrix& m, int tm, int tn) {
    std::vector<int64_t> stream;
    stream.reserve(size_t(m.rows()) * m.cols());
    for (int rt = 0; rt < m.rows(); rt += tm)
        for (int ct = 0; ct < m.cols(); ct += tn)
            for (int mm = 0; mm < tm; ++mm)
                for (int nn = 0; nn < tn; ++nn) stream.push_back(m.at(rt + mm, ct + nn));
    return stream;
}

Matrix matrix_from_tile_stream(const std::vector<int64_t>& stream, int rows, int cols, int tm,
                               int tn) {
    Matrix m(rows, cols);
    size_t at = 0;
    for (int rt = 0; rt < rows; rt += tm)
        for (int ct = 0; ct < cols; ct += tn)
            for (int mm = 0; mm < tm; ++mm)
                for (int nn = 0; nn < tn; ++nn) m.at(rt + mm, ct + nn) = stream[at++];
    if (at != stream.size()) throw InternalError("tile stream length mismatch");
    return m;
}

// Full padded weight matrix of one layer, reassembled from the packed blobs.
Matrix assemble_weights(const PlanLayer& l) {
    const int stages = l.packed.stages();
    Matrix w(l.cascade.padded_f_out, stages * l.cascade.f_in_slice);
    for (int row = 0; row < l.cascade.cas_num; ++row) {
        for (int v = 0; v < stages; ++v) {
            const Matrix slice = unpack_tile(l.packed, row, v);
            for (int j = 0; j < slice.rows(); ++j)
                for (int i = 0; i < slice.cols(); ++i)
                    w.at(row * l.cascade.f_out_slice + j, v * l.cascade.f_in_slice + i) =
                        slice.at(j, i);
        }
    }
    return w;
}

std::vector<int64_t> assemble_bias(const PlanLayer& l) {
    std::vector<int64_t> bias;
    bias.reserve(size_t(l.cascade.padded_f_out));
    for (const auto& row : l.packed.bias_rows) bias.insert(bias.end(), row.begin(), row.end());
    return bias;
}

KernelParams layer_params(const PlanLayer& l, CascadeRole role) {
    KernelParams p;
    p.tiling = l.tiling;
    p.shift = l.shift;
    p.use_bias = l.use_bias;
    p.use_relu = l.use_relu;
    p.act = l.act;
    p.wgt = l.wgt;
    p.acc = l.acc;
    p.out = l.out;
    p.role = role;
    return p;
}

void check_inputs(const CompiledPlan& plan, const Matrix& inputs) {
    if (plan.layers.empty()) throw ValidationError("simulate: empty plan");
    const PlanLayer& first = plan.layers.front();
    if (inputs.rows() != first.batch || inputs.cols() != first.f_in)
        throw ValidationError("simulate: input is " + std::to_string(inputs.rows()) + "x" +
                              std::to_string(inputs.cols()) + ", plan expects " +
                              std::to_string(first.batch) + "x" + std::to_string(first.f_in));
    const DTypeRange r = dtype_range(first.act);
    for (int64_t v : inputs.data())
        if (v < r.min || v > r.max)
            throw ValidationError("simulate: input value " + std::to_string(v) + " outside " +
                                  dtype_name(first.act));
}

// ---------------------------------------------------------------------------
// Fast mode: direct per-layer math on the unpacked plan weights.
// ---------------------------------------------------------------------------

Matrix run_layer_fast(const PlanLayer& l, const Matrix& activation) {
    const Matrix w = assemble_weights(l);
    const std::vector<int64_t> bias = assemble_bias(l);
    const int64_t b_pad = l.batch_padded();
    const Matrix a = activation.padded(int(b_pad), l.cascade.padded_f_in);

    KernelIO io;
    io.a = &a;
    io.weights = &w;
    io.bias = l.use_bias ? &bias : nullptr;
    const Matrix out = run_kernel(io, layer_params(l, CascadeRole::solo));
    return out.cropped(int(l.batch), int(l.f_out));
}

// ---------------------------------------------------------------------------
// Checked mode: the full memory-tile / broadcast / cascade machinery.
// ---------------------------------------------------------------------------

struct CheckedState {
    std::vector<MemTileBuffer> buffers; // one per boundary
};

void verify_plan_invariants(const CompiledPlan& plan) {
    std::set<std::pair<int, int>> occupied;
    for (const auto& l : plan.layers) {
        for (int rr = 0; rr < l.cascade.cas_num; ++rr) {
            for (int cc = 0; cc < l.physical_width(); ++cc) {
                const int col = l.anchor.col + cc;
                const int row = l.anchor.row + rr;
                if (col < 0 || col >= plan.device.cols || row < 0 || row >= plan.device.rows)
                    throw InternalError("checked sim: tile (" + std::to_string(col) + "," +
                                        std::to_string(row) + ") of layer '" + l.name +
                                        "' outside the grid");
                if (!occupied.insert({col, row}).second)
                    throw InternalError("checked sim: tile (" + std::to_string(col) + "," +
                                        std::to_string(row) + ") booked twice");
            }
        }
    }
    for (size_t b = 0; b < plan.boundaries.size(); ++b) {
        if (plan.boundaries[b].live_bytes > plan.device.memtile_capacity_bytes)
            throw InternalError("checked sim: boundary " + std::to_string(b) +
                                " exceeds memory-tile capacity");
    }
}

void host_write_input(const CompiledPlan& plan, MemTileBuffer& buf, const Matrix& inputs) {
    const PlanBoundary& b = plan.boundaries.front();
    const Matrix padded = inputs.padded(int(b.buffer_dims[0]), int(b.buffer_dims[1]));
    DmaTiler whole;
    whole.buffer_dims = b.buffer_dims;
    whole.tile_dims = b.buffer_dims;
    whole.elem_dtype = b.store_dtype;
    std::vector<int64_t> stream = padded.data();
    tiler_write(buf, whole, stream);
}

Matrix host_read_output(const CompiledPlan& plan, const MemTileBuffer& buf) {
    const PlanBoundary& b = plan.boundaries.back();
    DmaTiler whole;
    whole.buffer_dims = b.buffer_dims;
    whole.tile_dims = b.buffer_dims;
    whole.elem_dtype = b.store_dtype;
    const std::vector<int64_t> stream = tiler_read(buf, whole);
    Matrix m(int(b.buffer_dims[0]), int(b.buffer_dims[1]));
    m.data() = stream;
    const PlanLayer& last = plan.layers.back();
    return m.cropped(int(last.batch), int(last.f_out));
}

// One layer stage: stream the input slices per cascade column (broadcast to
// every row), run the kernels west to east chaining accumulator-width partial
// sums, and write each row's output slice through its tiler.
void run_layer_checked(const CompiledPlan& plan, size_t li, const MemTileBuffer& in_buf,
                       MemTileBuffer& out_buf) {
    const PlanLayer& l = plan.layers[li];
    const PlanBoundary& bin = plan.boundaries[li];
    const PlanBoundary& bout = plan.boundaries[li + 1];
    const int stages = l.packed.stages();
    const int64_t view_rows = ceil_to(l.batch, l.tiling.m);

    std::vector<Matrix> carry(size_t(l.cascade.cas_num));
    for (int v = 0; v < stages; ++v) {
        DmaTiler rd = *bin.reader;
        rd.base = {0, int64_t(v) * bin.reader_base_step};
        const auto streams = broadcast_read(in_buf, rd, bin.reader_fanout);

        const CascadeRole role = stages == 1               ? CascadeRole::solo
                                 : v == 0                  ? CascadeRole::head
                                 : v == stages - 1         ? CascadeRole::tail
                                                           : CascadeRole::middle;
        for (int row = 0; row < l.cascade.cas_num; ++row) {
            const Matrix a = matrix_from_tile_stream(streams[size_t(row)], int(view_rows),
                                                     l.cascade.f_in_slice, l.tiling.m,
                                                     l.tiling.k);
            const Matrix w = unpack_tile(l.packed, row, v);
            Matrix next_carry;
            KernelIO io;
            io.a = &a;
            io.weights = &w;
            const bool at_head = role == CascadeRole::solo || role == CascadeRole::head;
            io.bias = (at_head && l.use_bias) ? &l.packed.bias_rows[size_t(row)] : nullptr;
            io.cascade_in =
                (role == CascadeRole::middle || role == CascadeRole::tail) ? &carry[size_t(row)]
                                                                           : nullptr;
            io.cascade_out =
                (role == CascadeRole::head || role == CascadeRole::middle) ? &next_carry
                                                                           : nullptr;
            const Matrix out = run_kernel(io, layer_params(l, role));
            if (role == CascadeRole::solo || role == CascadeRole::tail) {
                DmaTiler wt = *bout.writer;
                wt.base = {0, int64_t(row) * bout.writer_base_step};
                tiler_write(out_buf, wt, tile_stream_from_matrix(out, l.tiling.m, l.tiling.n));
            } else {
                carry[size_t(row)] = std::move(next_carry);
            }
        }
    }
}

} // namespace

std::vector<InferenceResult> simulate_sequence(const CompiledPlan& plan,
                                               const std::vector<Matrix>& inputs,
                                               SimMode mode) {
    for (const auto& m : inputs) check_inputs(plan, m);
    std::vector<InferenceResult> results(inputs.size());

    if (mode == SimMode::fast) {
        for (size_t i = 0; i < inputs.size(); ++i) {
            Matrix act = inputs[i];
            for (const auto& l : plan.layers) act = run_layer_fast(l, act);
            results[i].outputs = std::move(act);
        }
        return results;
    }

    verify_plan_invariants(plan);
    const size_t layer_count = plan.layers.size();
    std::vector<MemTileBuffer> buffers;
    buffers.reserve(plan.boundaries.size());
    for (const auto& b : plan.boundaries) buffers.emplace_back(b.buffer_dims, b.store_dtype);

    // Software pipeline over inferences: stage 0 loads inputs, stage s runs
    // layer s-1, the final stage drains outputs. All stages of one step touch
    // opposite banks of their shared buffer; every boundary flips banks after
    // each step.
    const int total_stages = int(layer_count) + 2;
    const int total_steps = int(inputs.size()) + total_stages - 1;
    for (int step = 0; step < total_steps; ++step) {
        for (int s = total_stages - 1; s >= 0; --s) {
            const int inference = step - s;
            if (inference < 0 || inference >= int(inputs.size())) continue;
            if (s == 0) {
                host_write_input(plan, buffers.front(), inputs[size_t(inference)]);
            } else if (s <= int(layer_count)) {
                run_layer_checked(plan, size_t(s - 1), buffers[size_t(s - 1)],
                                  buffers[size_t(s)]);
            } else {
                results[size_t(inference)].outputs = host_read_output(plan, buffers.back());
            }
        }
        for (auto& b : buffers) b.advance_phase();
    }
    return results;
}

InferenceResult simulate(const CompiledPlan& plan, const Matrix& inputs, SimMode mode) {
    return simulate_sequence(plan, {inputs}, mode).front();
}

Matrix quantize_io(const CompiledPlan& plan, const std::vector<std::vector<double>>& inputs) {
    if (!plan.input_shift)
        throw ValidationError("quantize_io: the model declares no input_shift");
    if (plan.layers.empty()) throw ValidationError("quantize_io: empty plan");
    const PlanLayer& first = plan.layers.front();
    Matrix out(int(inputs.size()), inputs.empty() ? 0 : int(inputs[0].size()));
    for (size_t r = 0; r < inputs.size(); ++r) {
        if (int(inputs[r].size()) != out.cols())
            throw ValidationError("quantize_io: ragged input rows");
        for (size_t c = 0; c < inputs[r].size(); ++c)
            out.at(int(r), int(c)) = quantize_scalar(inputs[r][c], first.act, *plan.input_shift);
    }
    return out;
}

std::vector<std::vector<double>> dequantize_io(const CompiledPlan& plan, const Matrix& outputs) {
    if (!plan.output_shift)
        throw ValidationError("dequantize_io: the model declares no output_shift");
    std::vector<std::vector<double>> out(size_t(outputs.rows()));
    for (int r = 0; r < outputs.rows(); ++r) {
        out[size_t(r)].resize(size_t(outputs.cols()));
        for (int c = 0; c < outputs.cols(); ++c)
            out[size_t(r)][size_t(c)] = std::ldexp(double(outputs.at(r, c)), -*plan.output_shift);
    }
    return out;
}

} // namespace aiegrid
