// Exercises the public C surface the way an external client would: handles,
// status codes, error messages, string ownership.
#include <cassert>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "aiegrid.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                  \
        }                                                              \
    } while (0)

namespace {

const char* kModel = R"({
  "format": "aiegrid-model", "name": "capi", "input_shape": [2, 16],
  "input_shift": 2, "output_shift": 2,
  "layers": [
    {"name": "fc0", "kind": "dense", "in_features": 16, "out_features": 16,
     "act_dtype": "i8", "wgt_dtype": "i8", "out_dtype": "i8", "shift": 2,
     "use_bias": false, "use_relu": false,
     "weights": [[4,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],
                 [0,4,0,0,0,0,0,0,0,0,0,0,0,0,0,0],
                 [0,0,4,0,0,0,0,0,0,0,0,0,0,0,0,0],
                 [0,0,0,4,0,0,0,0,0,0,0,0,0,0,0,0],
                 [0,0,0,0,4,0,0,0,0,0,0,0,0,0,0,0],
                 [0,0,0,0,0,4,0,0,0,0,0,0,0,0,0,0],
                 [0,0,0,0,0,0,4,0,0,0,0,0,0,0,0,0],
                 [0,0,0,0,0,0,0,4,0,0,0,0,0,0,0,0],
                 [0,0,0,0,0,0,0,0,4,0,0,0,0,0,0,0],
                 [0,0,0,0,0,0,0,0,0,4,0,0,0,0,0,0],
                 [0,0,0,0,0,0,0,0,0,0,4,0,0,0,0,0],
                 [0,0,0,0,0,0,0,0,0,0,0,4,0,0,0,0],
                 [0,0,0,0,0,0,0,0,0,0,0,0,4,0,0,0],
                 [0,0,0,0,0,0,0,0,0,0,0,0,0,4,0,0],
                 [0,0,0,0,0,0,0,0,0,0,0,0,0,0,4,0],
                 [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,4]]}
  ]
})";

} // namespace

int main() {
    std::printf("aiegrid %s\n", aiegrid_version());

    const std::string dir = "/tmp/aiegrid_capi_test";
    [[maybe_unused]] int rc_mk = std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
    {
        std::ofstream f(dir + "/model.json");
        f << kModel;
    }

    aiegrid_device* dev = nullptr;
    CHECK(aiegrid_device_default(&dev) == AIEGRID_OK);
    CHECK(aiegrid_device_cols(dev) == 38);
    CHECK(aiegrid_device_rows(dev) == 8);

    aiegrid_model* model = nullptr;
    CHECK(aiegrid_model_from_file((dir + "/model.json").c_str(), &model) == AIEGRID_OK);
    CHECK(aiegrid_model_layer_count(model) == 1);

    // Missing file surfaces an IO status and a message.
    aiegrid_model* missing = nullptr;
    CHECK(aiegrid_model_from_file("/nonexistent/m.json", &missing) == AIEGRID_ERR_IO);
    CHECK(std::strlen(aiegrid_last_error()) > 0);

    aiegrid_plan* plan = nullptr;
    CHECK(aiegrid_compile(model, dev, nullptr, &plan) == AIEGRID_OK);
    CHECK(aiegrid_plan_layer_count(plan) == 1);
    CHECK(aiegrid_plan_tiles_used(plan) == 1);

    int64_t batch = 0, features = 0, out_batch = 0, out_features = 0;
    aiegrid_plan_input_dims(plan, &batch, &features);
    aiegrid_plan_output_dims(plan, &out_batch, &out_features);
    CHECK(batch == 2 && features == 16);
    CHECK(out_batch == 2 && out_features == 16);

    // Integer simulation: weights are 4*I with shift 2, so y = x.
    std::vector<int64_t> data(size_t(batch * features));
    for (size_t i = 0; i < data.size(); ++i) data[i] = int64_t(i % 11) - 5;
    std::vector<int64_t> out(size_t(out_batch * out_features), -1);
    CHECK(aiegrid_simulate_i64(plan, data.data(), batch, features, 1, out.data()) ==
          AIEGRID_OK);
    for (size_t i = 0; i < data.size(); ++i) CHECK(out[i] == data[i]);

    // Fast and checked agree through the C surface too.
    std::vector<int64_t> out_fast(out.size(), -2);
    CHECK(aiegrid_simulate_i64(plan, data.data(), batch, features, 0, out_fast.data()) ==
          AIEGRID_OK);
    CHECK(out == out_fast);

    // Float boundary: identity network, exactly representable values.
    std::vector<double> fdata(size_t(batch * features));
    for (size_t i = 0; i < fdata.size(); ++i) fdata[i] = 0.25 * (double(i % 7) - 3.0);
    std::vector<double> fout(size_t(out_batch * out_features), 99.0);
    CHECK(aiegrid_simulate_f64(plan, fdata.data(), batch, features, 1, fout.data()) ==
          AIEGRID_OK);
    for (size_t i = 0; i < fdata.size(); ++i) CHECK(fout[i] == fdata[i]);

    // Out-of-range integers are a validation error.
    std::vector<int64_t> bad = data;
    bad[0] = 1000;
    CHECK(aiegrid_simulate_i64(plan, bad.data(), batch, features, 0, out.data()) ==
          AIEGRID_ERR_VALIDATION);

    // Emit, reload, re-simulate.
    CHECK(aiegrid_plan_emit(plan, (dir + "/out").c_str()) == AIEGRID_OK);
    aiegrid_plan* reloaded = nullptr;
    CHECK(aiegrid_plan_load((dir + "/out/plan.json").c_str(), &reloaded) == AIEGRID_OK);
    std::vector<int64_t> out2(out.size(), -3);
    CHECK(aiegrid_simulate_i64(reloaded, data.data(), batch, features, 1, out2.data()) ==
          AIEGRID_OK);
    CHECK(out2 == out);

    // Report and renderings come back as caller-owned strings.
    char* report = nullptr;
    CHECK(aiegrid_plan_report(plan, 0, &report) == AIEGRID_OK);
    CHECK(std::strstr(report, "single-tile ceilings") != nullptr);
    aiegrid_string_free(report);
    char* report_json = nullptr;
    CHECK(aiegrid_plan_report(plan, 1, &report_json) == AIEGRID_OK);
    CHECK(std::strstr(report_json, "reference_hw") != nullptr);
    aiegrid_string_free(report_json);
    char* svg = nullptr;
    CHECK(aiegrid_plan_render(plan, 1, &svg) == AIEGRID_OK);
    CHECK(std::strstr(svg, "<svg") != nullptr);
    aiegrid_string_free(svg);

    // IR dump through the C API.
    char* ir = nullptr;
    CHECK(aiegrid_dump_ir(model, dev, nullptr, "place", &ir) == AIEGRID_OK);
    CHECK(std::strstr(ir, "place=(") != nullptr);
    aiegrid_string_free(ir);
    CHECK(aiegrid_dump_ir(model, dev, nullptr, "bogus", &ir) == AIEGRID_ERR_VALIDATION);

    // Standalone placement: B&B no worse than either greedy.
    const char* instance = R"({
        "format": "aiegrid-place", "cols": 38, "rows": 8,
        "lambda": 1.0, "mu": 0.05, "start": [0, 0],
        "blocks": [{"id": "g0", "width": 4, "height": 4},
                   {"id": "g1", "width": 4, "height": 4},
                   {"id": "g2", "width": 8, "height": 2}]
    })";
    char* sol_bnb = nullptr;
    CHECK(aiegrid_place(instance, 0, AIEGRID_PLACE_BNB, &sol_bnb, nullptr, nullptr) ==
          AIEGRID_OK);
    char* sol_right = nullptr;
    CHECK(aiegrid_place(instance, 0, AIEGRID_PLACE_GREEDY_RIGHT, &sol_right, nullptr,
                        nullptr) == AIEGRID_OK);
    auto cost_of = [](const char* json) {
        const char* p = std::strstr(json, "\"cost\":");
        return p ? std::atof(p + 7) : 1e18;
    };
    CHECK(cost_of(sol_bnb) <= cost_of(sol_right) + 1e-9);
    aiegrid_string_free(sol_bnb);
    aiegrid_string_free(sol_right);

    // Infeasible compile maps to status 3.
    std::string big = "{\"format\":\"aiegrid-model\",\"name\":\"big\",\"input_shape\":[1,8],"
                      "\"layers\":[";
    for (int i = 0; i < 305; ++i) {
        if (i) big += ",";
        big += "{\"name\":\"l" + std::to_string(i) +
               "\",\"kind\":\"dense\",\"in_features\":8,\"out_features\":8,"
               "\"act_dtype\":\"i8\",\"wgt_dtype\":\"i8\",\"out_dtype\":\"i8\",\"shift\":0,"
               "\"use_bias\":false,\"use_relu\":false,"
               "\"weights\":[[1,0,0,0,0,0,0,0],[0,1,0,0,0,0,0,0],[0,0,1,0,0,0,0,0],"
               "[0,0,0,1,0,0,0,0],[0,0,0,0,1,0,0,0],[0,0,0,0,0,1,0,0],[0,0,0,0,0,0,1,0],"
               "[0,0,0,0,0,0,0,1]]}";
    }
    big += "]}";
    {
        std::ofstream f(dir + "/big.json");
        f << big;
    }
    aiegrid_model* bigm = nullptr;
    CHECK(aiegrid_model_from_file((dir + "/big.json").c_str(), &bigm) == AIEGRID_OK);
    aiegrid_plan* bigp = nullptr;
    CHECK(aiegrid_compile(bigm, dev, nullptr, &bigp) == AIEGRID_ERR_INFEASIBLE);
    aiegrid_model_free(bigm);

    aiegrid_plan_free(reloaded);
    aiegrid_plan_free(plan);
    aiegrid_model_free(model);
    aiegrid_device_free(dev);
    std::printf("test_capi: all checks passed\n");
    return 0;
}
