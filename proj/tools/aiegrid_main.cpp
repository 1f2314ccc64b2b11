// aiegrid command-line driver. All core functionality goes through the
// public C API; this file only handles arguments, tensor files and exit
// codes.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aiegrid.h"

using nlohmann::json;

namespace {

// 0 ok, 2 validation, 3 infeasible, 4 internal invariant violation.
int exit_code(aiegrid_status s) {
    switch (s) {
        case AIEGRID_OK: return 0;
        case AIEGRID_ERR_VALIDATION: return 2;
        case AIEGRID_ERR_INFEASIBLE: return 3;
        case AIEGRID_ERR_INTERNAL: return 4;
        case AIEGRID_ERR_IO: return 2;
    }
    return 4;
}

int report_failure(aiegrid_status s) {
    std::cerr << "error: " << aiegrid_last_error() << "\n";
    return exit_code(s);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct DeviceHandle {
    aiegrid_device* d = nullptr;
    ~DeviceHandle() { aiegrid_device_free(d); }
};
struct ModelHandle {
    aiegrid_model* m = nullptr;
    ~ModelHandle() { aiegrid_model_free(m); }
};
struct PlanHandle {
    aiegrid_plan* p = nullptr;
    ~PlanHandle() { aiegrid_plan_free(p); }
};
struct CString {
    char* s = nullptr;
    ~CString() { aiegrid_string_free(s); }
};

int load_device(const std::string& path, DeviceHandle& dev) {
    const aiegrid_status s = path.empty() ? aiegrid_device_default(&dev.d)
                                          : aiegrid_device_from_file(path.c_str(), &dev.d);
    return s == AIEGRID_OK ? 0 : report_failure(s);
}

json matrix_to_json(const std::vector<int64_t>& data, int64_t batch, int64_t features) {
    json rows = json::array();
    for (int64_t r = 0; r < batch; ++r) {
        json row = json::array();
        for (int64_t c = 0; c < features; ++c) row.push_back(data[size_t(r * features + c)]);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aiegrid: compile quantized feed-forward networks onto a 2D tile array and "
                 "verify the result with a bit-exact simulator"};
    app.require_subcommand(1);

    // ---- compile ----
    std::string c_model, c_device, c_config, c_out = "out", c_dump;
    auto* c = app.add_subcommand("compile", "compile a model file into a plan directory");
    c->add_option("model", c_model, "model file")->required();
    c->add_option("--device", c_device, "device description file (default: built-in array)");
    c->add_option("--config", c_config, "user configuration file (overrides, lambda/mu)");
    c->add_option("--out", c_out, "output directory");
    c->add_option("--dump-ir", c_dump, "also print the IR after the named pass");

    // ---- simulate ----
    std::string s_plan, s_input, s_mode = "checked", s_out;
    bool s_float = false;
    auto* s = app.add_subcommand("simulate", "run inference on a compiled plan");
    s->add_option("plan", s_plan, "plan.json path")->required();
    s->add_option("--input", s_input, "input tensor file (JSON 2D array)")->required();
    s->add_option("--mode", s_mode, "fast | checked")->check(CLI::IsMember({"fast", "checked"}));
    s->add_option("--out", s_out, "write outputs to this file instead of stdout");
    s->add_flag("--float", s_float, "treat inputs as floats; quantize in, dequantize out");

    // ---- place ----
    std::string p_instance, p_out, p_ascii, p_svg, p_greedy;
    int64_t p_limit = 0;
    auto* p = app.add_subcommand("place", "solve a standalone placement instance");
    p->add_option("instance", p_instance, "placement instance file")->required();
    p->add_option("--out", p_out, "solution JSON path (default: stdout)");
    p->add_option("--ascii", p_ascii, "write the ASCII grid rendering here");
    p->add_option("--svg", p_svg, "write the SVG rendering here");
    p->add_option("--greedy", p_greedy, "use a greedy baseline instead of branch-and-bound")
        ->check(CLI::IsMember({"right", "up"}));
    p->add_option("--node-limit", p_limit, "search node cap (0 = unlimited)");

    // ---- report ----
    std::string r_plan;
    bool r_json = false;
    auto* r = app.add_subcommand("report", "print performance estimates for a plan");
    r->add_option("plan", r_plan, "plan.json path")->required();
    r->add_flag("--json", r_json, "machine-readable output");

    // ---- dump-ir ----
    std::string d_model, d_device, d_config, d_stage = "lower";
    auto* d = app.add_subcommand("dump-ir", "print the IR after a named pass");
    d->add_option("model", d_model, "model file")->required();
    d->add_option("--stage", d_stage, "lower|quantize|resolve|pack|graphplan|place");
    d->add_option("--device", d_device, "device description file");
    d->add_option("--config", d_config, "user configuration file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c->parsed()) {
            DeviceHandle dev;
            if (int rc = load_device(c_device, dev)) return rc;
            ModelHandle model;
            aiegrid_status st = aiegrid_model_from_file(c_model.c_str(), &model.m);
            if (st != AIEGRID_OK) return report_failure(st);
            const std::string config = c_config.empty() ? "" : read_file(c_config);
            PlanHandle plan;
            st = aiegrid_compile(model.m, dev.d, config.empty() ? nullptr : config.c_str(),
                                 &plan.p);
            if (st != AIEGRID_OK) return report_failure(st);
            st = aiegrid_plan_emit(plan.p, c_out.c_str());
            if (st != AIEGRID_OK) return report_failure(st);
            if (!c_dump.empty()) {
                CString text;
                st = aiegrid_dump_ir(model.m, dev.d, config.empty() ? nullptr : config.c_str(),
                                     c_dump.c_str(), &text.s);
                if (st != AIEGRID_OK) return report_failure(st);
                std::cout << text.s;
            }
            std::cout << "compiled " << c_model << " -> " << c_out << " ("
                      << aiegrid_plan_layer_count(plan.p) << " layers, "
                      << aiegrid_plan_tiles_used(plan.p) << " tiles)\n";
            return 0;
        }

        if (s->parsed()) {
            PlanHandle plan;
            aiegrid_status st = aiegrid_plan_load(s_plan.c_str(), &plan.p);
            if (st != AIEGRID_OK) return report_failure(st);
            int64_t batch = 0, features = 0, out_batch = 0, out_features = 0;
            aiegrid_plan_input_dims(plan.p, &batch, &features);
            aiegrid_plan_output_dims(plan.p, &out_batch, &out_features);

            json in;
            try {
                in = json::parse(read_file(s_input));
            } catch (const json::parse_error& e) {
                std::cerr << "error: input tensor file: " << e.what() << "\n";
                return 2;
            }
            if (in.is_object() && in.contains("data")) in = in["data"];
            if (!in.is_array() || int64_t(in.size()) != batch) {
                std::cerr << "error: input must be a " << batch << "x" << features
                          << " array\n";
                return 2;
            }
            for (const auto& row : in) {
                if (!row.is_array() || int64_t(row.size()) != features) {
                    std::cerr << "error: every input row must have " << features
                              << " values\n";
                    return 2;
                }
            }
            const int checked = s_mode == "checked" ? 1 : 0;
            json out_json;
            if (s_float) {
                std::vector<double> data;
                for (const auto& row : in)
                    for (const auto& v : row) data.push_back(v.get<double>());
                std::vector<double> out(size_t(out_batch * out_features));
                st = aiegrid_simulate_f64(plan.p, data.data(), batch, features, checked,
                                          out.data());
                if (st != AIEGRID_OK) return report_failure(st);
                json rows = json::array();
                for (int64_t rr = 0; rr < out_batch; ++rr) {
                    json row = json::array();
                    for (int64_t cc = 0; cc < out_features; ++cc)
                        row.push_back(out[size_t(rr * out_features + cc)]);
                    rows.push_back(row);
                }
                out_json = rows;
            } else {
                std::vector<int64_t> data;
                for (const auto& row : in)
                    for (const auto& v : row) data.push_back(v.get<int64_t>());
                std::vector<int64_t> out(size_t(out_batch * out_features));
                st = aiegrid_simulate_i64(plan.p, data.data(), batch, features, checked,
                                          out.data());
                if (st != AIEGRID_OK) return report_failure(st);
                out_json = matrix_to_json(out, out_batch, out_features);
            }
            const std::string text = out_json.dump() + "\n";
            if (s_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream f(s_out, std::ios::binary);
                f << text;
            }
            return 0;
        }

        if (p->parsed()) {
            const int mode = p_greedy == "right" ? AIEGRID_PLACE_GREEDY_RIGHT
                             : p_greedy == "up"  ? AIEGRID_PLACE_GREEDY_UP
                                                 : AIEGRID_PLACE_BNB;
            CString solution, ascii, svg;
            const aiegrid_status st =
                aiegrid_place(read_file(p_instance).c_str(), p_limit, mode, &solution.s,
                              &ascii.s, &svg.s);
            if (st != AIEGRID_OK) return report_failure(st);
            if (p_out.empty()) {
                std::cout << solution.s;
            } else {
                std::ofstream f(p_out, std::ios::binary);
                f << solution.s;
            }
            if (!p_ascii.empty()) {
                std::ofstream f(p_ascii, std::ios::binary);
                f << ascii.s;
            } else if (p_out.empty()) {
                std::cout << ascii.s;
            }
            if (!p_svg.empty()) {
                std::ofstream f(p_svg, std::ios::binary);
                f << svg.s;
            }
            return 0;
        }

        if (r->parsed()) {
            PlanHandle plan;
            aiegrid_status st = aiegrid_plan_load(r_plan.c_str(), &plan.p);
            if (st != AIEGRID_OK) return report_failure(st);
            CString text;
            st = aiegrid_plan_report(plan.p, r_json ? 1 : 0, &text.s);
            if (st != AIEGRID_OK) return report_failure(st);
            std::cout << text.s;
            return 0;
        }

        if (d->parsed()) {
            DeviceHandle dev;
            if (int rc = load_device(d_device, dev)) return rc;
            ModelHandle model;
            aiegrid_status st = aiegrid_model_from_file(d_model.c_str(), &model.m);
            if (st != AIEGRID_OK) return report_failure(st);
            const std::string config = d_config.empty() ? "" : read_file(d_config);
            CString text;
            st = aiegrid_dump_ir(model.m, dev.d, config.empty() ? nullptr : config.c_str(),
                                 d_stage.c_str(), &text.s);
            if (st != AIEGRID_OK) return report_failure(st);
            std::cout << text.s;
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
