// Plan emission: canonical plan file, weight blob, reports, placement
// renderings, and the rendered source templates (text only, never compiled
// here -- they document what a firmware build would instantiate).
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "plan.hpp"

namespace aiegrid {

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::string c_type(IntDType d) {
    switch (d.kind) {
        case DTypeKind::i8: return "int8_t";
        case DTypeKind::i16: return "int16_t";
        case DTypeKind::i32: return "int32_t";
        case DTypeKind::i64: return "int64_t";
    }
    return "int8_t";
}

std::string sanitized(const std::string& name) {
    std::string s;
    for (char c : name) s += (isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return s;
}

} // namespace

std::string render_layer_template(const CompiledPlan& plan, size_t layer_index) {
    const PlanLayer& l = plan.layers[layer_index];
    const std::string id = sanitized(l.name);
    std::ostringstream os;
    os << "// generated by aiegrid for plan '" << plan.model_name << "'\n";
    os << "// layer " << layer_index << ": " << l.name << " (" << l.batch << "x" << l.f_in
       << " -> " << l.f_out << ")\n";
    os << "#pragma once\n";
    os << "#include \"linear_kernel.h\"\n\n";
    os << "using kernel_" << id << " = LinearKernel<\n";
    os << "    /*ACT=*/" << c_type(l.act) << ", /*WGT=*/" << c_type(l.wgt) << ", /*ACC=*/"
       << c_type(l.acc) << ", /*OUT=*/" << c_type(l.out) << ",\n";
    os << "    /*M=*/" << l.tiling.m << ", /*K=*/" << l.tiling.k << ", /*N=*/" << l.tiling.n
       << ",\n";
    os << "    /*F_IN_SLICE=*/" << l.cascade.f_in_slice << ", /*F_OUT_SLICE=*/"
       << l.cascade.f_out_slice << ",\n";
    os << "    /*SHIFT=*/" << l.shift << ", /*USE_BIAS=*/" << (l.use_bias ? "true" : "false")
       << ", /*USE_RELU=*/" << (l.use_relu ? "true" : "false") << ">;\n\n";
    os << "inline constexpr int " << id << "_cas_len = " << l.cascade.cas_len << ";\n";
    os << "inline constexpr int " << id << "_cas_num = " << l.cascade.cas_num << ";\n";
    os << "inline constexpr int " << id << "_k_folds = " << l.cascade.k_folds << ";\n";
    os << "inline constexpr int " << id << "_anchor_col = " << l.anchor.col << ";\n";
    os << "inline constexpr int " << id << "_anchor_row = " << l.anchor.row << ";\n";
    return os.str();
}

std::string render_graph_template(const CompiledPlan& plan) {
    std::ostringstream os;
    os << "// generated by aiegrid for plan '" << plan.model_name << "'\n";
    os << "// top-level graph: " << plan.layers.size() << " layers, "
       << plan.boundaries.size() << " memory-tile buffers, " << plan.tiles_used()
       << " compute tiles\n";
    os << "#pragma once\n";
    for (size_t i = 0; i < plan.layers.size(); ++i)
        os << "#include \"layer_" << i << "_" << sanitized(plan.layers[i].name) << ".h\"\n";
    os << "\nstruct ModelGraph {\n";
    for (size_t b = 0; b < plan.boundaries.size(); ++b) {
        const auto& bd = plan.boundaries[b];
        os << "    // buf" << b << ": " << bd.buffer_dims[0] << "x" << bd.buffer_dims[1] << " "
           << dtype_name(bd.store_dtype) << ", ping-pong, " << bd.live_bytes << " bytes";
        if (bd.writer) os << ", " << bd.writer_count << " write tilers";
        if (bd.reader)
            os << ", " << bd.reader_count << " read tilers broadcast x" << bd.reader_fanout;
        os << "\n";
    }
    os << "\n";
    for (size_t i = 0; i < plan.layers.size(); ++i) {
        const auto& l = plan.layers[i];
        os << "    // " << l.name << ": kernels at (" << l.anchor.col << ".."
           << l.anchor.col + l.physical_width() - 1 << ", " << l.anchor.row << ".."
           << l.anchor.row + l.cascade.cas_num - 1 << ")";
        if (l.cascade.cas_len > 1 && l.cascade.k_folds == 1)
            os << ", cascade west->east per row";
        if (l.cascade.k_folds > 1) os << ", " << l.cascade.k_folds << " folds in time";
        os << "\n";
        os << "    kernel_" << sanitized(l.name) << " " << sanitized(l.name) << "_kernels["
           << l.cascade.cas_num << "][" << l.physical_width() << "];\n";
    }
    os << "};\n";
    return os.str();
}

void emit(const CompiledPlan& plan, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    fs::create_directories(out_dir + "/templates", ec);
    if (ec) throw IoError("cannot create " + out_dir + "/templates: " + ec.message());

    write_file(out_dir + "/plan.json", plan_to_json(plan));
    write_bytes(out_dir + "/weights.bin", plan_weight_blob(plan));

    const PlanReport report = analyze_plan(plan);
    write_file(out_dir + "/report.txt", render_report_text(plan, report));
    write_file(out_dir + "/report.json", render_report_json(plan, report));

    const PlacementInstance inst = plan_placement_instance(plan);
    const PlacementSolution sol = plan_placement_solution(plan);
    write_file(out_dir + "/placement.txt", render_ascii(inst, sol));
    write_file(out_dir + "/placement.svg", render_svg(inst, sol));

    for (size_t i = 0; i < plan.layers.size(); ++i) {
        write_file(out_dir + "/templates/layer_" + std::to_string(i) + "_" +
                       sanitized(plan.layers[i].name) + ".h",
                   render_layer_template(plan, i));
    }
    write_file(out_dir + "/templates/graph.h", render_graph_template(plan));
}

} // namespace aiegrid
