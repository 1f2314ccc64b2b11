#include "kernel.hpp"

#include <algorithm>

#include "errors.hpp"

namespace aiegrid {

Tiling native_tiling(const DTypePair& pair) {
    if (pair == DTypePair{kI8, kI8}) return {4, 8, 8, true};
    if (pair == DTypePair{kI16, kI8}) return {4, 4, 8, true};
    if (pair == DTypePair{kI16, kI16}) return {4, 4, 4, true};
    throw ValidationError("no native tiling for dtype pair " + dtype_pair_name(pair));
}

bool tiling_supported(const Tiling& t) {
    auto ok = [](int v, int lo, int hi) {
        if (v < lo || v > hi) return false;
        return (v & (v - 1)) == 0; // power of two
    };
    return ok(t.m, 2, 8) && ok(t.k, 2, 16) && ok(t.n, 2, 16);
}

std::vector<Tiling> supported_tilings(const DTypePair& pair) {
    const Tiling nat = native_tiling(pair);
    std::vector<Tiling> out;
    for (int m : {2, 4, 8})
        for (int k : {2, 4, 8, 16})
            for (int n : {2, 4, 8, 16}) {
                Tiling t{m, k, n, false};
                t.native = (t == nat);
                out.push_back(t);
            }
    return out;
}

IntDType default_acc_dtype(const DTypePair& pair) {
    if (pair == DTypePair{kI16, kI16}) return kI64;
    return kI32;
}

int64_t srs(int64_t acc_value, int shift, IntDType out, bool relu) {
    if (shift < 0) throw ValidationError("srs shift must be >= 0");
    int64_t v = rne_shift_right(acc_value, shift);
    if (relu) v = std::max<int64_t>(v, 0);
    return clamp_to(v, out);
}

namespace {

void check_kernel_shapes(const KernelIO& io, const KernelParams& p) {
    if (!io.a || !io.weights) throw ValidationError("kernel: missing input or weight buffer");
    const Matrix& a = *io.a;
    const Matrix& w = *io.weights;
    if (a.cols() != w.cols())
        throw ValidationError("kernel: A cols != W cols (f_in slice mismatch)");
    const Tiling& t = p.tiling;
    if (t.m <= 0 || t.k <= 0 || t.n <= 0) throw ValidationError("kernel: bad tiling");
    if (a.rows() % t.m != 0 || a.cols() % t.k != 0 || w.rows() % t.n != 0)
        throw ValidationError("kernel: dims not divisible by tile shape");
    if (p.shift < 0) throw ValidationError("kernel: shift must be >= 0");
    if (io.bias && int(io.bias->size()) != w.rows())
        throw ValidationError("kernel: bias length != f_out slice");

    const bool wants_cas_in = p.role == CascadeRole::middle || p.role == CascadeRole::tail;
    const bool wants_cas_out = p.role == CascadeRole::head || p.role == CascadeRole::middle;
    if (wants_cas_in != (io.cascade_in != nullptr))
        throw ValidationError("kernel: cascade_in presence does not match role");
    if (wants_cas_out != (io.cascade_out != nullptr))
        throw ValidationError("kernel: cascade_out presence does not match role");
    if (io.cascade_in &&
        (io.cascade_in->rows() != a.rows() || io.cascade_in->cols() != w.rows()))
        throw ValidationError("kernel: cascade_in shape mismatch");
    if (io.bias && !(p.role == CascadeRole::solo || p.role == CascadeRole::head))
        throw ValidationError("kernel: bias is loaded at the head stage only");
}

} // namespace

Matrix run_kernel(const KernelIO& io, const KernelParams& p) {
    check_kernel_shapes(io, p);
    const Matrix& a = *io.a;
    const Matrix& w = *io.weights;
    const Tiling& t = p.tiling;
    const int batch = a.rows();
    const int f_in = a.cols();
    const int f_out = w.rows();
    const int row_tiles = batch / t.m;
    const int col_tiles = f_out / t.n;
    const int k_tiles = f_in / t.k;

    const bool at_head = p.role == CascadeRole::solo || p.role == CascadeRole::head;
    const bool at_tail = p.role == CascadeRole::solo || p.role == CascadeRole::tail;

    // Accumulators for the whole slice, held at acc width throughout.
    Matrix acc(batch, f_out);

    // ACC_INIT / BIAS_LOAD: the head stage seeds the accumulation, downstream
    // stages start from the incoming partial sums.
    for (int r = 0; r < batch; ++r) {
        for (int c = 0; c < f_out; ++c) {
            int64_t init = 0;
            if (at_head) {
                if (p.use_bias && io.bias) init = wrap_to((*io.bias)[c], p.acc);
            } else {
                init = wrap_to(io.cascade_in->at(r, c), p.acc);
            }
            acc.at(r, c) = init;
        }
    }

    // Blocked 2x2 schedule: pairs of row tiles against pairs of column tiles,
    // K-major within each group. Order is fixed for determinism; values are
    // order-independent because adds wrap at the accumulator width.
    for (int rp = 0; rp < row_tiles; rp += 2) {
        const int r_in_pair = std::min(2, row_tiles - rp);
        for (int cp = 0; cp < col_tiles; cp += 2) {
            const int c_in_pair = std::min(2, col_tiles - cp);
            for (int kk = 0; kk < k_tiles; ++kk) {
                for (int ri = 0; ri < r_in_pair; ++ri) {
                    for (int ci = 0; ci < c_in_pair; ++ci) {
                        const int r0 = (rp + ri) * t.m;
                        const int c0 = (cp + ci) * t.n;
                        const int k0 = kk * t.k;
                        for (int mm = 0; mm < t.m; ++mm) {
                            for (int nn = 0; nn < t.n; ++nn) {
                                int64_t v = acc.at(r0 + mm, c0 + nn);
                                for (int kq = 0; kq < t.k; ++kq) {
                                    const int64_t prod = wrap_mul(
                                        a.at(r0 + mm, k0 + kq), w.at(c0 + nn, k0 + kq), p.acc);
                                    v = wrap_add(v, prod, p.acc);
                                }
                                acc.at(r0 + mm, c0 + nn) = v;
                            }
                        }
                    }
                }
            }
        }
    }

    if (!at_tail) {
        *io.cascade_out = acc;
        return Matrix{};
    }

    // Epilogue: SRS with optional ReLU, then store at out dtype.
    Matrix out(batch, f_out);
    for (int r = 0; r < batch; ++r)
        for (int c = 0; c < f_out; ++c)
            out.at(r, c) = srs(acc.at(r, c), p.shift, p.out, p.use_relu);
    return out;
}

std::vector<TraceEvent> blocked_schedule_trace(const Tiling& t, const ProblemDims& dims) {
    if (dims.batch % t.m != 0 || dims.f_in % t.k != 0 || dims.f_out % t.n != 0)
        throw ValidationError("trace: dims not divisible by tile shape");
    const int row_tiles = dims.batch / t.m;
    const int col_tiles = dims.f_out / t.n;
    const int k_tiles = dims.f_in / t.k;

    std::vector<TraceEvent> trace;
    trace.reserve(size_t(row_tiles) * col_tiles * (k_tiles * 2 + 2));
    for (int rp = 0; rp < row_tiles; rp += 2) {
        const int r_in_pair = std::min(2, row_tiles - rp);
        for (int cp = 0; cp < col_tiles; cp += 2) {
            const int c_in_pair = std::min(2, col_tiles - cp);
            for (int kk = 0; kk < k_tiles; ++kk) {
                for (int ri = 0; ri < r_in_pair; ++ri)
                    trace.push_back({EventKind::vlda, rp + ri, -1, kk});
                for (int ci = 0; ci < c_in_pair; ++ci)
                    trace.push_back({EventKind::vldb, -1, cp + ci, kk});
                for (int ri = 0; ri < r_in_pair; ++ri)
                    for (int ci = 0; ci < c_in_pair; ++ci)
                        trace.push_back({EventKind::vmac, rp + ri, cp + ci, kk});
            }
            for (int ri = 0; ri < r_in_pair; ++ri)
                for (int ci = 0; ci < c_in_pair; ++ci)
                    trace.push_back({EventKind::vst, rp + ri, cp + ci, -1});
        }
    }
    return trace;
}

} // namespace aiegrid
