#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "errors.hpp"
#include "oracles.hpp"
#include "plan.hpp"

using namespace aiegrid;

namespace {

const DeviceDesc dev = default_aieml_device();

QuantLayer dense(const std::string& name, int in, int out, DTypePair pair, IntDType out_dtype,
                 int shift, bool bias, bool relu, oracle::ValueGen& gen) {
    QuantLayer l;
    l.name = name;
    l.in_features = in;
    l.out_features = out;
    l.act_dtype = pair.first;
    l.wgt_dtype = pair.second;
    l.acc_dtype = default_acc_dtype(pair);
    l.out_dtype = out_dtype;
    l.shift = shift;
    l.use_bias = bias;
    l.use_relu = relu;
    l.weights = gen.matrix(out, in, pair.second);
    if (bias) l.bias = gen.vec(out, l.acc_dtype);
    return l;
}

// 3-layer mixed-precision chain: i8xi8 -> i16xi8 -> i8xi8 with awkward dims.
QuantModel mixed_model(int batch, oracle::ValueGen& gen) {
    QuantModel m;
    m.name = "mixed3";
    m.input_shape = {batch, 100};
    m.layers.push_back(dense("fc0", 100, 72, {kI8, kI8}, kI16, 5, true, true, gen));
    m.layers.push_back(dense("fc1", 72, 40, {kI16, kI8}, kI8, 6, true, false, gen));
    m.layers.push_back(dense("fc2", 40, 16, {kI8, kI8}, kI8, 4, false, true, gen));
    return m;
}

QuantModel wide_mlp(int layers, int width, int batch, oracle::ValueGen& gen) {
    QuantModel m;
    m.name = "mlp" + std::to_string(layers);
    m.input_shape = {batch, width};
    for (int i = 0; i < layers; ++i)
        m.layers.push_back(dense("fc" + std::to_string(i), width, width, {kI8, kI8}, kI8, 7,
                                 true, true, gen));
    return m;
}

// Reference interpreter: per-layer naive integer math on the MODEL weights.
Matrix reference_infer(const QuantModel& m, const Matrix& input) {
    Matrix act = input;
    for (const auto& l : m.layers) {
        const std::vector<int64_t>* bias = l.use_bias && l.bias ? &*l.bias : nullptr;
        act = oracle::linear_ref(act, l.weights, bias, l.acc_dtype, l.out_dtype, l.shift,
                                 l.use_relu);
    }
    return act;
}

} // namespace

TEST_CASE("single small layer compiles to one solo kernel at the origin") {
    oracle::ValueGen gen(111);
    QuantModel m;
    m.name = "tiny";
    m.input_shape = {1, 128};
    m.layers.push_back(dense("fc", 128, 128, {kI8, kI8}, kI8, 6, false, false, gen));
    const CompiledPlan plan = compile(m, dev, {});
    REQUIRE(plan.layers.size() == 1);
    CHECK(plan.layers[0].cascade.cas_len == 1);
    CHECK(plan.layers[0].cascade.cas_num == 1);
    CHECK(plan.layers[0].cascade.k_folds == 1);
    CHECK(plan.layers[0].anchor == GridPos{0, 0});
    CHECK(plan.tiles_used() == 1);
    CHECK(plan.pass_log == std::vector<std::string>{"lower", "quantize", "resolve", "pack",
                                                    "graphplan", "place", "emit"});
}

TEST_CASE("7-layer 512-wide MLP compiles to 7 rectangles with 6 inter-layer buffers") {
    oracle::ValueGen gen(112);
    const QuantModel m = wide_mlp(7, 512, 1, gen);
    const CompiledPlan plan = compile(m, dev, {});
    REQUIRE(plan.layers.size() == 7);
    REQUIRE(plan.boundaries.size() == 8);
    int inter_layer = 0;
    for (const auto& b : plan.boundaries)
        if (b.writer && b.reader) ++inter_layer;
    CHECK(inter_layer == 6);
    CHECK(plan.tiles_used() <= dev.tile_count());
    for (const auto& l : plan.layers) {
        CHECK(l.cascade.cas_len * l.cascade.cas_num > 1); // 512x512 never fits one tile
        CHECK(l.cascade.padded_f_in >= 512);
    }
}

TEST_CASE("a model needing more tiles than the array is an infeasible compile") {
    oracle::ValueGen gen(113);
    QuantModel m;
    m.name = "toomany";
    m.input_shape = {1, 8};
    for (int i = 0; i < 305; ++i)
        m.layers.push_back(dense("fc" + std::to_string(i), 8, 8, {kI8, kI8}, kI8, 0, false,
                                 false, gen));
    CHECK_THROWS_AS(compile(m, dev, {}), InfeasibleError);
}

TEST_CASE("zero input with no bias gives zero output through ReLU") {
    oracle::ValueGen gen(114);
    QuantModel m;
    m.name = "zeros";
    m.input_shape = {4, 32};
    m.layers.push_back(dense("fc0", 32, 24, {kI8, kI8}, kI8, 3, false, true, gen));
    m.layers.push_back(dense("fc1", 24, 16, {kI8, kI8}, kI8, 3, false, true, gen));
    const CompiledPlan plan = compile(m, dev, {});
    Matrix zeros(4, 32);
    for (SimMode mode : {SimMode::fast, SimMode::checked}) {
        const InferenceResult r = simulate(plan, zeros, mode);
        for (int64_t v : r.outputs.data()) CHECK(v == 0);
    }
}

TEST_CASE("mixed-precision 3-layer MLP matches the reference interpreter") {
    oracle::ValueGen gen(115);
    const QuantModel m = mixed_model(6, gen);
    const CompiledPlan plan = compile(m, dev, {});
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix input = gen.matrix(6, 100, kI8);
        const Matrix want = reference_infer(m, input);
        const InferenceResult fast = simulate(plan, input, SimMode::fast);
        const InferenceResult checked = simulate(plan, input, SimMode::checked);
        REQUIRE(fast.outputs == want);
        REQUIRE(checked.outputs == want);
    }
}

TEST_CASE("forced cascade spread stays bit-exact") {
    oracle::ValueGen gen(116);
    QuantModel m;
    m.name = "spread";
    m.input_shape = {5, 64};
    m.layers.push_back(dense("fc0", 64, 48, {kI8, kI8}, kI8, 4, true, true, gen));
    const UserConfig cfg =
        UserConfig::from_json_text(R"({"layers": {"fc0": {"cascade": [3, 2]}}})");
    const CompiledPlan plan = compile(m, dev, cfg);
    CHECK(plan.layers[0].cascade.cas_len == 3);
    CHECK(plan.layers[0].cascade.cas_num == 2);
    const Matrix input = gen.matrix(5, 64, kI8);
    const Matrix want = reference_infer(m, input);
    CHECK(simulate(plan, input, SimMode::fast).outputs == want);
    CHECK(simulate(plan, input, SimMode::checked).outputs == want);
}

TEST_CASE("time-folded single-tile execution stays bit-exact") {
    oracle::ValueGen gen(117);
    QuantModel m;
    m.name = "folded";
    m.input_shape = {4, 512};
    m.layers.push_back(dense("fc0", 512, 256, {kI8, kI8}, kI8, 6, true, false, gen));
    const UserConfig cfg = UserConfig::from_json_text(R"({"tile_budget": 1})");
    const CompiledPlan plan = compile(m, dev, cfg);
    CHECK(plan.layers[0].cascade.k_folds > 1);
    CHECK(plan.tiles_used() == 1);
    const Matrix input = gen.matrix(4, 512, kI8);
    const Matrix want = reference_infer(m, input);
    CHECK(simulate(plan, input, SimMode::fast).outputs == want);
    CHECK(simulate(plan, input, SimMode::checked).outputs == want);
}

TEST_CASE("fast and checked modes agree on random plans") {
    oracle::ValueGen gen(118);
    for (int trial = 0; trial < 50; ++trial) {
        QuantModel m;
        m.name = "rand";
        const int batch = gen.uniform(1, 9);
        int width = gen.uniform(4, 72);
        m.input_shape = {batch, width};
        const int layers = gen.uniform(1, 4);
        for (int i = 0; i < layers; ++i) {
            const int next = gen.uniform(4, 72);
            const bool wide = gen.flag();
            const DTypePair pair = wide ? DTypePair{kI16, kI8} : DTypePair{kI8, kI8};
            m.layers.push_back(dense("fc" + std::to_string(i), width, next, pair,
                                     wide ? kI16 : kI8, gen.uniform(0, 8), gen.flag(),
                                     gen.flag(), gen));
            // Keep act dtype chained: next layer reads what this one stores.
            if (i + 1 < layers && wide) m.layers.back().out_dtype = kI16;
            width = next;
        }
        // Make activation dtypes consistent along the chain.
        for (size_t i = 1; i < m.layers.size(); ++i)
            m.layers[i].act_dtype = m.layers[i - 1].out_dtype;
        for (auto& l : m.layers) {
            if (!dev.supports({l.act_dtype, l.wgt_dtype})) l.act_dtype = kI16;
            l.acc_dtype = default_acc_dtype({l.act_dtype, l.wgt_dtype});
        }

        const CompiledPlan plan = compile(m, dev, {});
        const Matrix input = gen.matrix(batch, int(m.input_shape[1]), m.layers[0].act_dtype);
        const InferenceResult fast = simulate(plan, input, SimMode::fast);
        const InferenceResult checked = simulate(plan, input, SimMode::checked);
        REQUIRE(fast.outputs == checked.outputs);
        REQUIRE(fast.outputs == reference_infer(m, input));
    }
}

TEST_CASE("pipelined sequences match independent runs") {
    oracle::ValueGen gen(119);
    const QuantModel m = mixed_model(4, gen);
    const CompiledPlan plan = compile(m, dev, {});
    std::vector<Matrix> inputs;
    for (int i = 0; i < 5; ++i) inputs.push_back(gen.matrix(4, 100, kI8));
    const auto seq = simulate_sequence(plan, inputs, SimMode::checked);
    REQUIRE(seq.size() == 5);
    for (size_t i = 0; i < inputs.size(); ++i)
        CHECK(seq[i].outputs == simulate(plan, inputs[i], SimMode::fast).outputs);
}

TEST_CASE("deep pipelines keep inferences separated across bank flips") {
    oracle::ValueGen gen(132);
    QuantModel m;
    m.name = "deep";
    m.input_shape = {4, 16};
    for (int i = 0; i < 7; ++i)
        m.layers.push_back(dense("fc" + std::to_string(i), 16, 16, {kI8, kI8}, kI8, 4, true,
                                 i % 2 == 0, gen));
    const CompiledPlan plan = compile(m, dev, {});
    std::vector<Matrix> inputs;
    for (int i = 0; i < 4; ++i) inputs.push_back(gen.matrix(4, 16, kI8));
    const auto seq = simulate_sequence(plan, inputs, SimMode::checked);
    // Each inference matching its own reference proves no cross-inference
    // bank bleed: stale data would shift a later result off its reference.
    for (size_t i = 0; i < inputs.size(); ++i) {
        CHECK(seq[i].outputs == reference_infer(m, inputs[i]));
    }
}

TEST_CASE("compilation is deterministic byte for byte") {
    oracle::ValueGen gen_a(120), gen_b(120);
    const QuantModel ma = mixed_model(4, gen_a);
    const QuantModel mb = mixed_model(4, gen_b);
    const CompiledPlan pa = compile(ma, dev, {});
    const CompiledPlan pb = compile(mb, dev, {});
    CHECK(plan_to_json(pa) == plan_to_json(pb));
    CHECK(plan_weight_blob(pa) == plan_weight_blob(pb));
}

TEST_CASE("plan serialization round-trips through files") {
    oracle::ValueGen gen(121);
    const QuantModel m = mixed_model(4, gen);
    const CompiledPlan plan = compile(m, dev, {});
    const std::string dir = "/tmp/aiegrid_plan_test";
    [[maybe_unused]] int rc_rm = std::system(("rm -rf " + dir).c_str());
    emit(plan, dir);
    const CompiledPlan back = load_plan(dir + "/plan.json");
    CHECK(plan_to_json(back) == plan_to_json(plan));

    const Matrix input = gen.matrix(4, 100, kI8);
    CHECK(simulate(back, input, SimMode::checked).outputs ==
          simulate(plan, input, SimMode::fast).outputs);

    // Emitted artifacts exist.
    for (const char* f : {"/plan.json", "/weights.bin", "/report.txt", "/report.json",
                          "/placement.txt", "/placement.svg", "/templates/graph.h"}) {
        std::ifstream probe(dir + f);
        CHECK(probe.good());
    }
}

TEST_CASE("quantize/dequantize boundary") {
    oracle::ValueGen gen(122);
    QuantModel m;
    m.name = "fp";
    m.input_shape = {2, 16};
    m.input_shift = 1;
    m.output_shift = 1;
    m.layers.push_back(dense("fc", 16, 8, {kI8, kI8}, kI8, 0, false, false, gen));
    // Identity-ish weights so the float path is easy to reason about.
    m.layers[0].weights = Matrix(8, 16);
    for (int i = 0; i < 8; ++i) m.layers[0].weights.at(i, i) = 1;
    const CompiledPlan plan = compile(m, dev, {});

    SUBCASE("0.5 quantizes to integer 1 at shift 1") {
        std::vector<std::vector<double>> in(2, std::vector<double>(16, 0.5));
        const Matrix q = quantize_io(plan, in);
        for (int c = 0; c < 16; ++c) CHECK(q.at(0, c) == 1);
    }
    SUBCASE("exactly representable floats round-trip") {
        std::vector<std::vector<double>> in(2, std::vector<double>(16, 0.0));
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 16; ++c) in[size_t(r)][size_t(c)] = (r + c % 5) * 0.5;
        const Matrix q = quantize_io(plan, in);
        const InferenceResult res = simulate(plan, q, SimMode::fast);
        const auto out = dequantize_io(plan, res.outputs);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 8; ++c) CHECK(out[size_t(r)][size_t(c)] == in[size_t(r)][size_t(c)]);
    }
    SUBCASE("missing shifts are validation errors") {
        QuantModel bare = m;
        bare.input_shift.reset();
        const CompiledPlan p2 = compile(bare, dev, {});
        CHECK_THROWS_AS(quantize_io(p2, {{0.0}}), ValidationError);
    }
}

TEST_CASE("float boundary stays within the quantization error bound") {
    // One layer with exactly representable weights: w_float = wq * 2^-s maps
    // through srs so the integer path approximates the float path. The bound
    // is computed from first principles: input rounding error <= 2^-(shift+1)
    // per element amplified by sum|w|, plus 0.5 ulp for the output rounding,
    // all at the output scale 2^-output_shift.
    oracle::ValueGen gen(123);
    QuantModel m;
    m.name = "bound";
    m.input_shape = {4, 24};
    m.input_shift = 6;
    m.output_shift = 6;
    const int wshift = 4;
    m.layers.push_back(dense("fc", 24, 12, {kI8, kI8}, kI16, wshift, false, false, gen));
    const CompiledPlan plan = compile(m, dev, {});

    std::uniform_real_distribution<double> dist(-0.9, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> in(4, std::vector<double>(24));
        for (auto& row : in)
            for (auto& v : row) v = dist(gen.raw());

        const Matrix q = quantize_io(plan, in);
        const auto out = dequantize_io(plan, simulate(plan, q, SimMode::fast).outputs);

        for (int r = 0; r < 4; ++r) {
            for (int j = 0; j < 12; ++j) {
                double acc = 0, amp = 0;
                for (int k = 0; k < 24; ++k) {
                    const double wf = std::ldexp(double(m.layers[0].weights.at(j, k)), -wshift);
                    acc += wf * in[size_t(r)][size_t(k)];
                    amp += std::abs(wf);
                }
                // Interval bound: input quantization + output rounding.
                const double bound = amp * std::ldexp(0.5, -6) + std::ldexp(0.5, -6) + 1e-12;
                CHECK(std::abs(out[size_t(r)][size_t(j)] - acc) <= bound);
            }
        }
    }
}

TEST_CASE("dump-ir stages are deterministic and ordered") {
    oracle::ValueGen gen(124);
    const QuantModel m = mixed_model(4, gen);
    for (const std::string stage : {"lower", "quantize", "resolve", "pack", "graphplan",
                                    "place"}) {
        const AieIrGraph a = compile_to_stage(m, dev, {}, stage);
        const AieIrGraph b = compile_to_stage(m, dev, {}, stage);
        CHECK(dump_ir(a) == dump_ir(b));
    }
    const std::string lower_dump = dump_ir(compile_to_stage(m, dev, {}, "lower"));
    CHECK(lower_dump.find("cascade=") == std::string::npos);
    const std::string resolve_dump = dump_ir(compile_to_stage(m, dev, {}, "resolve"));
    CHECK(resolve_dump.find("cascade=") != std::string::npos);
    CHECK(resolve_dump.find("memtile") == std::string::npos);
    const std::string planned = dump_ir(compile_to_stage(m, dev, {}, "graphplan"));
    CHECK(planned.find("memtile") != std::string::npos);
    const std::string placed = dump_ir(compile_to_stage(m, dev, {}, "place"));
    CHECK(placed.find("place=(") != std::string::npos);
    CHECK_THROWS_AS(compile_to_stage(m, dev, {}, "nope"), ValidationError);
}

TEST_CASE("pinned placement is honored by compile") {
    oracle::ValueGen gen(125);
    QuantModel m;
    m.name = "pin";
    m.input_shape = {4, 16};
    m.layers.push_back(dense("fc0", 16, 16, {kI8, kI8}, kI8, 2, false, false, gen));
    m.layers.push_back(dense("fc1", 16, 16, {kI8, kI8}, kI8, 2, false, false, gen));
    const UserConfig cfg =
        UserConfig::from_json_text(R"({"layers": {"fc1": {"placement": [10, 2]}}})");
    const CompiledPlan plan = compile(m, dev, cfg);
    CHECK(plan.layers[1].anchor == GridPos{10, 2});
    const Matrix input = gen.matrix(4, 16, kI8);
    CHECK(simulate(plan, input, SimMode::checked).outputs ==
          simulate(plan, input, SimMode::fast).outputs);
}

TEST_CASE("bad inputs are rejected with validation errors") {
    oracle::ValueGen gen(126);
    QuantModel m;
    m.name = "v";
    m.input_shape = {2, 8};
    m.layers.push_back(dense("fc", 8, 8, {kI8, kI8}, kI8, 0, false, false, gen));
    const CompiledPlan plan = compile(m, dev, {});
    Matrix wrong(3, 8);
    CHECK_THROWS_AS(simulate(plan, wrong, SimMode::fast), ValidationError);
    Matrix range(2, 8);
    range.at(0, 0) = 300; // outside i8
    CHECK_THROWS_AS(simulate(plan, range, SimMode::fast), ValidationError);
}

TEST_CASE("token-mixing block: leading reshape, two dense layers, bit-exact") {
    // [B, T, C] = [1, 196, 512] token mixing: host supplies the [B*C, T]
    // matrix; the network is 196 -> 256 -> 196 with fused ReLU.
    oracle::ValueGen gen(131);
    QuantModel m;
    m.name = "token_mix";
    m.input_shape = {1, 196, 512};
    QuantLayer r;
    r.name = "to_tokens";
    r.kind = LayerKind::reshape;
    const auto shape = mixer_reshape({1, 196, 512}, MixMode::token);
    r.reshape_spec = {shape[0], shape[1]};
    m.layers.push_back(r);
    m.layers.push_back(dense("mix0", 196, 256, {kI8, kI8}, kI8, 6, true, true, gen));
    m.layers.push_back(dense("mix1", 256, 196, {kI8, kI8}, kI8, 6, true, true, gen));

    const CompiledPlan plan = compile(m, dev, {});
    REQUIRE(plan.layers.size() == 2);
    CHECK(plan.layers[0].batch == 512);
    CHECK(plan.layers[0].f_in == 196);

    const Matrix input = gen.matrix(512, 196, kI8);
    Matrix want = input;
    for (size_t i = 1; i < m.layers.size(); ++i) {
        const auto& l = m.layers[i];
        want = oracle::linear_ref(want, l.weights, l.bias ? &*l.bias : nullptr, l.acc_dtype,
                                  l.out_dtype, l.shift, l.use_relu);
    }
    CHECK(simulate(plan, input, SimMode::fast).outputs == want);
    CHECK(simulate(plan, input, SimMode::checked).outputs == want);
}

TEST_CASE("non-native tiling override compiles and stays bit-exact") {
    oracle::ValueGen gen(130);
    QuantModel m;
    m.name = "emulated";
    m.input_shape = {10, 48};
    m.layers.push_back(dense("fc", 48, 32, {kI8, kI8}, kI8, 3, true, true, gen));
    const UserConfig cfg =
        UserConfig::from_json_text(R"({"layers": {"fc": {"tiling": [8, 8, 8]}}})");
    const CompiledPlan plan = compile(m, dev, cfg);
    CHECK(plan.layers[0].tiling.m == 8);
    CHECK(!plan.layers[0].tiling.native);
    const Matrix input = gen.matrix(10, 48, kI8);
    const Matrix want = reference_infer(m, input);
    CHECK(simulate(plan, input, SimMode::fast).outputs == want);
    CHECK(simulate(plan, input, SimMode::checked).outputs == want);
}

TEST_CASE("golden layer template for a fully pinned tiny model") {
    QuantModel m;
    m.name = "golden";
    m.input_shape = {4, 8};
    QuantLayer l;
    l.name = "fc";
    l.in_features = 8;
    l.out_features = 8;
    l.act_dtype = kI8;
    l.wgt_dtype = kI8;
    l.acc_dtype = kI32;
    l.out_dtype = kI8;
    l.shift = 2;
    l.use_bias = false;
    l.use_relu = true;
    l.weights = Matrix(8, 8);
    for (int i = 0; i < 8; ++i) l.weights.at(i, i) = 1;
    m.layers.push_back(l);
    const CompiledPlan plan = compile(m, dev, {});

    const std::string want =
        "// generated by aiegrid for plan 'golden'\n"
        "// layer 0: fc (4x8 -> 8)\n"
        "#pragma once\n"
        "#include \"linear_kernel.h\"\n"
        "\n"
        "using kernel_fc = LinearKernel<\n"
        "    /*ACT=*/int8_t, /*WGT=*/int8_t, /*ACC=*/int32_t, /*OUT=*/int8_t,\n"
        "    /*M=*/4, /*K=*/8, /*N=*/8,\n"
        "    /*F_IN_SLICE=*/8, /*F_OUT_SLICE=*/8,\n"
        "    /*SHIFT=*/2, /*USE_BIAS=*/false, /*USE_RELU=*/true>;\n"
        "\n"
        "inline constexpr int fc_cas_len = 1;\n"
        "inline constexpr int fc_cas_num = 1;\n"
        "inline constexpr int fc_k_folds = 1;\n"
        "inline constexpr int fc_anchor_col = 0;\n"
        "inline constexpr int fc_anchor_row = 0;\n";
    CHECK(render_layer_template(plan, 0) == want);
}

TEST_CASE("activation buffers that overflow a memory tile fail graph-planning") {
    oracle::ValueGen gen(128);
    QuantModel m;
    m.name = "hugebatch";
    m.input_shape = {600, 512}; // 2 banks x 600 x 512+ bytes > 512 KiB
    m.layers.push_back(dense("fc", 512, 512, {kI8, kI8}, kI8, 6, false, false, gen));
    CHECK_THROWS_WITH_AS(compile(m, dev, {}), doctest::Contains("memory tile"),
                         InfeasibleError);
}

TEST_CASE("checked mode flags double-booked tiles with coordinates") {
    oracle::ValueGen gen(129);
    QuantModel m;
    m.name = "book";
    m.input_shape = {4, 16};
    m.layers.push_back(dense("fc0", 16, 16, {kI8, kI8}, kI8, 2, false, false, gen));
    m.layers.push_back(dense("fc1", 16, 16, {kI8, kI8}, kI8, 2, false, false, gen));
    CompiledPlan plan = compile(m, dev, {});
    plan.layers[1].anchor = plan.layers[0].anchor; // corrupt the placement
    const Matrix input = gen.matrix(4, 16, kI8);
    CHECK_THROWS_WITH_AS(simulate(plan, input, SimMode::checked),
                         doctest::Contains("booked twice"), InternalError);
    // Fast mode does not run the occupancy checker; it still computes.
    CHECK_NOTHROW(simulate(plan, input, SimMode::fast));
}

TEST_CASE("rendered templates carry the resolved parameters") {
    oracle::ValueGen gen(127);
    QuantModel m;
    m.name = "tpl";
    m.input_shape = {4, 32};
    m.layers.push_back(dense("dense_a", 32, 24, {kI8, kI8}, kI8, 5, true, true, gen));
    const CompiledPlan plan = compile(m, dev, {});
    const std::string layer = render_layer_template(plan, 0);
    CHECK(layer.find("kernel_dense_a") != std::string::npos);
    CHECK(layer.find("/*SHIFT=*/5") != std::string::npos);
    CHECK(layer.find("/*USE_BIAS=*/true") != std::string::npos);
    CHECK(layer.find("/*M=*/4, /*K=*/8, /*N=*/8") != std::string::npos);
    const std::string graph = render_graph_template(plan);
    CHECK(graph.find("dense_a_kernels") != std::string::npos);
    CHECK(graph.find("ping-pong") != std::string::npos);
    // Renders are part of the deterministic surface.
    CHECK(render_graph_template(plan) == graph);
}
