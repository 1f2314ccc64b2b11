#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kernel.hpp"
#include "oracles.hpp"

using namespace aiegrid;

namespace {

int64_t ceil_to(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

struct RandomCase {
    Matrix a;       // padded batch x f_in
    Matrix w;       // padded f_out x f_in
    std::vector<int64_t> bias;
    KernelParams params;
};

RandomCase make_case(oracle::ValueGen& gen, const DTypePair& pair, int max_dim) {
    RandomCase rc;
    rc.params.tiling = native_tiling(pair);
    rc.params.act = pair.first;
    rc.params.wgt = pair.second;
    rc.params.acc = default_acc_dtype(pair);
    rc.params.out = gen.flag() ? pair.first : kI32;
    rc.params.shift = gen.uniform(0, 8);
    rc.params.use_bias = gen.flag();
    rc.params.use_relu = gen.flag();

    const Tiling& t = rc.params.tiling;
    const int batch = int(ceil_to(gen.uniform(1, max_dim), t.m));
    const int f_in = int(ceil_to(gen.uniform(1, max_dim), t.k));
    const int f_out = int(ceil_to(gen.uniform(1, max_dim), t.n));
    rc.a = gen.matrix(batch, f_in, rc.params.act);
    rc.w = gen.matrix(f_out, f_in, rc.params.wgt);
    rc.bias = gen.vec(f_out, rc.params.acc);
    return rc;
}

} // namespace

TEST_CASE("srs: shift, round, saturate examples") {
    CHECK(srs(256, 4, kI8, false) == 16);
    CHECK(srs(70000, 0, kI8, false) == 127);   // saturation ceiling
    CHECK(srs(-70000, 0, kI8, false) == -128); // saturation floor
    CHECK(srs(-3, 1, kI8, false) == -2);       // -1.5 rounds to even -2
    CHECK(srs(-1, 1, kI8, true) == 0);         // -0.5 rounds to 0, ReLU keeps 0
    CHECK(srs(-300, 1, kI8, true) == 0);       // ReLU clamps before saturation
    CHECK(srs(5, 1, kI16, false) == 2);        // 2.5 rounds to even 2
}

TEST_CASE("srs matches the scalar oracle everywhere") {
    oracle::ValueGen gen(21);
    for (int i = 0; i < 20000; ++i) {
        const int64_t acc = gen.in_dtype(kI32);
        const int shift = gen.uniform(0, 12);
        const bool relu = gen.flag();
        for (IntDType out : {kI8, kI16, kI32})
            CHECK(srs(acc, shift, out, relu) == oracle::srs_ref(acc, shift, out, relu));
    }
}

TEST_CASE("srs is monotone in the accumulator value") {
    oracle::ValueGen gen(22);
    for (int i = 0; i < 5000; ++i) {
        const int64_t a = gen.in_dtype(kI32);
        const int64_t b = gen.in_dtype(kI32);
        const int shift = gen.uniform(0, 10);
        const bool relu = gen.flag();
        const int64_t lo = std::min(a, b), hi = std::max(a, b);
        CHECK(srs(lo, shift, kI8, relu) <= srs(hi, shift, kI8, relu));
    }
}

TEST_CASE("identity weights reproduce the input") {
    const Tiling t = native_tiling({kI8, kI8});
    Matrix a(8, 8);
    oracle::ValueGen gen(23);
    for (auto& v : a.data()) v = gen.in_dtype(kI8);
    Matrix w(8, 8);
    for (int i = 0; i < 8; ++i) w.at(i, i) = 1;

    KernelIO io;
    io.a = &a;
    io.weights = &w;
    KernelParams p;
    p.tiling = t;
    p.out = kI8;
    const Matrix out = run_kernel(io, p);
    CHECK(out == a);
}

TEST_CASE("zero input isolates the bias prologue and ReLU epilogue") {
    const Tiling t = native_tiling({kI8, kI8});
    Matrix a(4, 8); // zeros
    Matrix w = oracle::ValueGen(24).matrix(8, 8, kI8);
    std::vector<int64_t> bias = {100, -5, 300, 0, -128, 127, 7, -1};

    KernelIO io;
    io.a = &a;
    io.weights = &w;
    io.bias = &bias;
    KernelParams p;
    p.tiling = t;
    p.use_bias = true;
    p.use_relu = true;
    p.out = kI8;
    const Matrix out = run_kernel(io, p);
    for (int b = 0; b < 4; ++b)
        for (int j = 0; j < 8; ++j)
            CHECK(out.at(b, j) == std::min<int64_t>(std::max<int64_t>(bias[size_t(j)], 0), 127));
}

TEST_CASE("random kernels equal the naive wrap+srs oracle") {
    const std::vector<DTypePair> pairs = {{kI8, kI8}, {kI16, kI8}, {kI16, kI16}};
    int case_id = 0;
    for (const auto& pair : pairs) {
        oracle::ValueGen gen(100 + uint64_t(case_id++));
        for (int i = 0; i < 150; ++i) {
            RandomCase rc = make_case(gen, pair, 48);
            KernelIO io;
            io.a = &rc.a;
            io.weights = &rc.w;
            io.bias = rc.params.use_bias ? &rc.bias : nullptr;
            const Matrix got = run_kernel(io, rc.params);
            const Matrix want = oracle::linear_ref(
                rc.a, rc.w, rc.params.use_bias ? &rc.bias : nullptr, rc.params.acc,
                rc.params.out, rc.params.shift, rc.params.use_relu);
            REQUIRE(got == want);
        }
    }
}

TEST_CASE("cascade split reproduces the solo kernel bit-exactly") {
    oracle::ValueGen gen(31);
    for (int trial = 0; trial < 60; ++trial) {
        const DTypePair pair = {kI8, kI8};
        const Tiling t = native_tiling(pair);
        const int slices = gen.uniform(2, 4);
        const int f_in_slice = int(ceil_to(gen.uniform(1, 3) * t.k, t.k));
        const int f_in = slices * f_in_slice;
        const int batch = int(ceil_to(gen.uniform(1, 12), t.m));
        const int f_out = int(ceil_to(gen.uniform(1, 24), t.n));

        KernelParams base;
        base.tiling = t;
        base.acc = kI32;
        base.out = kI8;
        base.shift = gen.uniform(0, 6);
        base.use_bias = gen.flag();
        base.use_relu = gen.flag();

        const Matrix a = gen.matrix(batch, f_in, kI8);
        const Matrix w = gen.matrix(f_out, f_in, kI8);
        const std::vector<int64_t> bias = gen.vec(f_out, kI32);

        KernelIO solo_io;
        solo_io.a = &a;
        solo_io.weights = &w;
        solo_io.bias = base.use_bias ? &bias : nullptr;
        KernelParams solo = base;
        solo.role = CascadeRole::solo;
        const Matrix want = run_kernel(solo_io, solo);

        // Head -> middle... -> tail over f_in slices.
        Matrix carry;
        Matrix got;
        for (int s = 0; s < slices; ++s) {
            Matrix a_slice(batch, f_in_slice);
            Matrix w_slice(f_out, f_in_slice);
            for (int r = 0; r < batch; ++r)
                for (int c = 0; c < f_in_slice; ++c)
                    a_slice.at(r, c) = a.at(r, s * f_in_slice + c);
            for (int j = 0; j < f_out; ++j)
                for (int c = 0; c < f_in_slice; ++c)
                    w_slice.at(j, c) = w.at(j, s * f_in_slice + c);

            KernelParams p = base;
            p.role = s == 0            ? CascadeRole::head
                     : s == slices - 1 ? CascadeRole::tail
                                       : CascadeRole::middle;
            Matrix next;
            KernelIO io;
            io.a = &a_slice;
            io.weights = &w_slice;
            io.bias = (s == 0 && base.use_bias) ? &bias : nullptr;
            io.cascade_in = s > 0 ? &carry : nullptr;
            io.cascade_out = s < slices - 1 ? &next : nullptr;
            const Matrix out = run_kernel(io, p);
            if (s < slices - 1)
                carry = std::move(next);
            else
                got = out;
        }
        REQUIRE(got == want);
    }
}

TEST_CASE("trace: load reuse of the 2x2 scheme") {
    const Tiling t = native_tiling({kI8, kI8}); // <4,8,8>
    // 8x8x8 problem: two row tiles, one K tile, one column tile.
    const auto trace = blocked_schedule_trace(t, {8, 8, 8});
    int vlda = 0, vldb = 0, vmac = 0, vst = 0;
    for (const auto& e : trace) {
        switch (e.kind) {
            case EventKind::vlda: ++vlda; break;
            case EventKind::vldb: ++vldb; break;
            case EventKind::vmac: ++vmac; break;
            case EventKind::vst: ++vst; break;
        }
    }
    CHECK(vlda == 2); // each A tile loaded exactly once
    CHECK(vldb == 1); // the single W tile loaded once...
    CHECK(vmac == 2); // ...and reused across both row accumulators
    CHECK(vst == 2);
    CHECK(vmac / vldb == 2); // analytic reuse factor of the blocked scheme
}

TEST_CASE("trace: single-tile problem is the degenerate boundary") {
    const Tiling t = native_tiling({kI8, kI8});
    const auto trace = blocked_schedule_trace(t, {4, 8, 8});
    int vlda = 0, vldb = 0, vmac = 0;
    for (const auto& e : trace) {
        if (e.kind == EventKind::vlda) ++vlda;
        if (e.kind == EventKind::vldb) ++vldb;
        if (e.kind == EventKind::vmac) ++vmac;
    }
    CHECK(vlda == 1);
    CHECK(vldb == 1);
    CHECK(vmac == 1); // no reuse left at the boundary
}

TEST_CASE("trace: VMAC count equals the tile-count product") {
    oracle::ValueGen gen(41);
    for (int i = 0; i < 50; ++i) {
        const Tiling t = native_tiling({kI8, kI8});
        const ProblemDims dims{int(ceil_to(gen.uniform(1, 64), t.m)),
                               int(ceil_to(gen.uniform(1, 64), t.k)),
                               int(ceil_to(gen.uniform(1, 64), t.n))};
        const auto trace = blocked_schedule_trace(t, dims);
        int vmac = 0, vst = 0;
        for (const auto& e : trace) {
            if (e.kind == EventKind::vmac) ++vmac;
            if (e.kind == EventKind::vst) ++vst;
        }
        CHECK(vmac == (dims.batch / t.m) * (dims.f_out / t.n) * (dims.f_in / t.k));
        CHECK(vst == (dims.batch / t.m) * (dims.f_out / t.n));
    }
}

TEST_CASE("shape and role errors are rejected") {
    const Tiling t = native_tiling({kI8, kI8});
    Matrix a(4, 8), w(8, 8);
    KernelIO io;
    io.a = &a;
    io.weights = &w;
    KernelParams p;
    p.tiling = t;

    SUBCASE("dims not divisible") {
        Matrix bad(3, 8);
        io.a = &bad;
        CHECK_THROWS_AS(run_kernel(io, p), ValidationError);
    }
    SUBCASE("cascade stream without role") {
        Matrix cas(4, 8);
        io.cascade_in = &cas;
        CHECK_THROWS_AS(run_kernel(io, p), ValidationError);
    }
    SUBCASE("bias on a non-head stage") {
        std::vector<int64_t> bias(8, 0);
        io.bias = &bias;
        p.role = CascadeRole::tail;
        Matrix cas(4, 8);
        io.cascade_in = &cas;
        CHECK_THROWS_AS(run_kernel(io, p), ValidationError);
    }
    SUBCASE("negative shift") {
        p.shift = -1;
        CHECK_THROWS_AS(run_kernel(io, p), ValidationError);
    }
}

TEST_CASE("supported tilings include the three natives") {
    CHECK(native_tiling({kI8, kI8}) == Tiling{4, 8, 8, true});
    CHECK(native_tiling({kI16, kI8}) == Tiling{4, 4, 8, true});
    CHECK(native_tiling({kI16, kI16}) == Tiling{4, 4, 4, true});
    for (const auto& pair : {DTypePair{kI8, kI8}, DTypePair{kI16, kI8}, DTypePair{kI16, kI16}}) {
        const auto all = supported_tilings(pair);
        int natives = 0;
        for (const auto& t : all) {
            CHECK(tiling_supported(t));
            if (t.native) ++natives;
        }
        CHECK(natives == 1);
    }
    CHECK(!tiling_supported({3, 8, 8, false}));
    CHECK(!tiling_supported({4, 32, 8, false}));
}
