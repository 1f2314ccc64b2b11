#include "model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "kernel.hpp"

namespace aiegrid {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

[[noreturn]] void layer_error(const std::string& layer, const std::string& field,
                              const std::string& what) {
    throw ValidationError("layer '" + layer + "': field '" + field + "' " + what);
}

IntDType dtype_field(const json& j, const std::string& layer, const std::string& field,
                     IntDType fallback, bool required) {
    if (!j.contains(field)) {
        if (required) layer_error(layer, field, "is missing");
        return fallback;
    }
    if (!j[field].is_string()) layer_error(layer, field, "must be a dtype string");
    auto d = dtype_from_name(j[field].get<std::string>());
    if (!d) layer_error(layer, field, "names an unknown dtype");
    return *d;
}

std::vector<int64_t> read_blob_i64(const std::string& base_dir, const std::string& blob_file,
                                   int64_t offset, int64_t len, IntDType elem,
                                   const std::string& layer, const std::string& field) {
    if (blob_file.empty())
        layer_error(layer, field, "uses @blob but the model declares no 'blob' sidecar");
    const std::string path = base_dir + "/" + blob_file;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weight blob: " + path);
    in.seekg(0, std::ios::end);
    const int64_t size = in.tellg();
    if (offset < 0 || len < 0 || offset + len > size)
        layer_error(layer, field, "blob range [" + std::to_string(offset) + "," +
                                      std::to_string(offset + len) + ") exceeds sidecar size " +
                                      std::to_string(size));
    const int width = elem.bytes();
    if (len % width != 0)
        layer_error(layer, field, "blob length is not a multiple of the element width");
    in.seekg(offset);
    std::vector<int64_t> out(size_t(len / width));
    for (auto& v : out) {
        uint64_t u = 0;
        for (int b = 0; b < width; ++b) {
            int ch = in.get();
            if (ch == EOF) throw IoError("unexpected EOF in weight blob: " + path);
            u |= uint64_t(uint8_t(ch)) << (8 * b); // little-endian
        }
        // sign-extend
        if (width < 8) {
            const uint64_t sign = uint64_t{1} << (width * 8 - 1);
            if (u & sign) u |= ~((uint64_t{1} << (width * 8)) - 1);
        }
        v = int64_t(u);
    }
    return out;
}

// Tensor fields are either nested JSON arrays of base-10 integers or a
// "@blob:<offset>:<len>" reference into the binary sidecar.
std::vector<int64_t> parse_tensor_1d(const json& v, const std::string& base_dir,
                                     const std::string& blob_file, IntDType elem,
                                     const std::string& layer, const std::string& field) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.rfind("@blob:", 0) != 0)
            layer_error(layer, field, "string value must be a @blob:<offset>:<len> reference");
        const size_t c1 = s.find(':', 6);
        if (c1 == std::string::npos) layer_error(layer, field, "malformed @blob reference");
        int64_t off = 0, len = 0;
        try {
            off = std::stoll(s.substr(6, c1 - 6));
            len = std::stoll(s.substr(c1 + 1));
        } catch (...) {
            layer_error(layer, field, "malformed @blob reference");
        }
        return read_blob_i64(base_dir, blob_file, off, len, elem, layer, field);
    }
    if (!v.is_array()) layer_error(layer, field, "must be an array or @blob reference");
    std::vector<int64_t> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number_integer())
            layer_error(layer, field, "must contain only base-10 integers");
        out.push_back(e.get<int64_t>());
    }
    return out;
}

Matrix parse_tensor_2d(const json& v, int rows, int cols, const std::string& base_dir,
                       const std::string& blob_file, IntDType elem, const std::string& layer,
                       const std::string& field) {
    std::vector<int64_t> flat;
    if (v.is_array() && !v.empty() && v[0].is_array()) {
        if (int(v.size()) != rows)
            layer_error(layer, field, "has " + std::to_string(v.size()) + " rows, expected " +
                                          std::to_string(rows));
        for (const auto& row : v) {
            if (!row.is_array() || int(row.size()) != cols)
                layer_error(layer, field, "row width != " + std::to_string(cols));
            for (const auto& e : row) {
                if (!e.is_number_integer())
                    layer_error(layer, field, "must contain only base-10 integers");
                flat.push_back(e.get<int64_t>());
            }
        }
    } else {
        flat = parse_tensor_1d(v, base_dir, blob_file, elem, layer, field);
    }
    if (int64_t(flat.size()) != int64_t(rows) * cols)
        layer_error(layer, field, "has " + std::to_string(flat.size()) + " elements, expected " +
                                      std::to_string(int64_t(rows) * cols));
    Matrix m(rows, cols);
    m.data() = std::move(flat);
    return m;
}

} // namespace

QuantModel parse_model(const std::string& file_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(file_text);
    } catch (const json::parse_error& e) {
        throw ValidationError("model file parse error at line " +
                              std::to_string(line_of_offset(file_text, e.byte)) + ": " +
                              e.what());
    }
    if (!j.is_object() || j.value("format", "") != "aiegrid-model")
        throw ValidationError("model file: expected format 'aiegrid-model'");

    QuantModel m;
    m.name = j.value("name", "model");
    if (!j.contains("input_shape") || !j["input_shape"].is_array() || j["input_shape"].empty())
        throw ValidationError("model file: 'input_shape' must be a non-empty array");
    for (const auto& d : j["input_shape"]) {
        if (!d.is_number_integer() || d.get<int64_t>() < 1)
            throw ValidationError("model file: 'input_shape' entries must be positive integers");
        m.input_shape.push_back(d.get<int64_t>());
    }
    if (j.contains("input_shift")) m.input_shift = j["input_shift"].get<int>();
    if (j.contains("output_shift")) m.output_shift = j["output_shift"].get<int>();
    const std::string blob_file = j.value("blob", "");

    if (!j.contains("layers") || !j["layers"].is_array())
        throw ValidationError("model file: 'layers' must be an array");

    int index = 0;
    for (const auto& lj : j["layers"]) {
        QuantLayer l;
        l.name = lj.value("name", "layer" + std::to_string(index));
        const std::string kind = lj.value("kind", "");
        if (kind == "dense") {
            l.kind = LayerKind::dense;
        } else if (kind == "reshape") {
            l.kind = LayerKind::reshape;
        } else {
            layer_error(l.name, "kind", "must be 'dense' or 'reshape'");
        }

        if (l.kind == LayerKind::reshape) {
            if (!lj.contains("shape") || !lj["shape"].is_array() || lj["shape"].size() != 2)
                layer_error(l.name, "shape", "must be a [rows, cols] array");
            for (const auto& d : lj["shape"]) l.reshape_spec.push_back(d.get<int64_t>());
            m.layers.push_back(std::move(l));
            ++index;
            continue;
        }

        l.in_features = lj.value("in_features", 0);
        l.out_features = lj.value("out_features", 0);
        l.act_dtype = dtype_field(lj, l.name, "act_dtype", kI8, true);
        l.wgt_dtype = dtype_field(lj, l.name, "wgt_dtype", kI8, true);
        l.acc_dtype = dtype_field(lj, l.name, "acc_dtype",
                                  default_acc_dtype({l.act_dtype, l.wgt_dtype}), false);
        l.out_dtype = dtype_field(lj, l.name, "out_dtype", kI8, true);
        l.shift = lj.value("shift", 0);
        l.use_bias = lj.value("use_bias", false);
        l.use_relu = lj.value("use_relu", false);
        if (l.in_features < 1) layer_error(l.name, "in_features", "must be >= 1");
        if (l.out_features < 1) layer_error(l.name, "out_features", "must be >= 1");

        if (!lj.contains("weights")) layer_error(l.name, "weights", "is missing");
        l.weights = parse_tensor_2d(lj["weights"], l.out_features, l.in_features, base_dir,
                                    blob_file, l.wgt_dtype, l.name, "weights");
        if (l.use_bias) {
            if (!lj.contains("bias")) layer_error(l.name, "bias", "is missing (use_bias=true)");
            l.bias = parse_tensor_1d(lj["bias"], base_dir, blob_file, l.acc_dtype, l.name,
                                     "bias");
            if (int(l.bias->size()) != l.out_features)
                layer_error(l.name, "bias", "length != out_features");
        }
        m.layers.push_back(std::move(l));
        ++index;
    }

    validate_model(m);
    return m;
}

QuantModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const size_t slash = path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return parse_model(ss.str(), dir);
}

void validate_model(const QuantModel& m) {
    if (m.layers.empty()) throw ValidationError("model '" + m.name + "': needs at least one layer");
    if (m.input_shift && *m.input_shift < 0)
        throw ValidationError("model '" + m.name + "': input_shift must be >= 0");

    // Walk the chain: reshape re-interprets [batch, features], dense maps
    // features in -> out.
    int64_t elements = 1;
    for (int64_t d : m.input_shape) elements *= d;
    int64_t features = m.input_shape.back();

    for (const auto& l : m.layers) {
        if (l.kind == LayerKind::reshape) {
            if (l.reshape_spec.size() != 2 || l.reshape_spec[0] < 1 || l.reshape_spec[1] < 1)
                layer_error(l.name, "shape", "must be two positive extents");
            if (l.reshape_spec[0] * l.reshape_spec[1] != elements)
                layer_error(l.name, "shape",
                            "does not preserve the element count (" + std::to_string(elements) +
                                ")");
            features = l.reshape_spec[1];
            continue;
        }
        if (elements % features != 0)
            layer_error(l.name, "in_features", "input shape does not factor into a matrix");
        if (l.in_features != features)
            layer_error(l.name, "in_features",
                        "= " + std::to_string(l.in_features) + " does not chain from previous " +
                            std::to_string(features));
        if (l.shift < 0) layer_error(l.name, "shift", "must be >= 0");
        if (l.weights.rows() != l.out_features || l.weights.cols() != l.in_features)
            layer_error(l.name, "weights", "shape != out_features x in_features");
        const DTypeRange wr = dtype_range(l.wgt_dtype);
        for (int64_t v : l.weights.data()) {
            if (v < wr.min || v > wr.max)
                layer_error(l.name, "weights",
                            "entry " + std::to_string(v) + " outside " + dtype_name(l.wgt_dtype));
        }
        if (l.use_bias) {
            if (!l.bias) layer_error(l.name, "bias", "is missing (use_bias=true)");
            const DTypeRange ar = dtype_range(l.acc_dtype);
            for (int64_t v : *l.bias) {
                if (v < ar.min || v > ar.max)
                    layer_error(l.name, "bias",
                                "entry " + std::to_string(v) + " outside accumulator dtype " +
                                    dtype_name(l.acc_dtype));
            }
        }
        if (l.acc_dtype.bits() < l.wgt_dtype.bits() || l.acc_dtype.bits() < l.act_dtype.bits())
            layer_error(l.name, "acc_dtype", "is narrower than an operand dtype");
        const int64_t batch = elements / features;
        features = l.out_features;
        elements = batch * features;
    }
}

std::string serialize_model(const QuantModel& m) {
    json j;
    j["format"] = "aiegrid-model";
    j["version"] = 1;
    j["name"] = m.name;
    j["input_shape"] = m.input_shape;
    if (m.input_shift) j["input_shift"] = *m.input_shift;
    if (m.output_shift) j["output_shift"] = *m.output_shift;
    json layers = json::array();
    for (const auto& l : m.layers) {
        json lj;
        lj["name"] = l.name;
        if (l.kind == LayerKind::reshape) {
            lj["kind"] = "reshape";
            lj["shape"] = l.reshape_spec;
            layers.push_back(lj);
            continue;
        }
        lj["kind"] = "dense";
        lj["in_features"] = l.in_features;
        lj["out_features"] = l.out_features;
        lj["act_dtype"] = dtype_name(l.act_dtype);
        lj["wgt_dtype"] = dtype_name(l.wgt_dtype);
        lj["acc_dtype"] = dtype_name(l.acc_dtype);
        lj["out_dtype"] = dtype_name(l.out_dtype);
        lj["shift"] = l.shift;
        lj["use_bias"] = l.use_bias;
        lj["use_relu"] = l.use_relu;
        json rows = json::array();
        for (int r = 0; r < l.weights.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < l.weights.cols(); ++c) row.push_back(l.weights.at(r, c));
            rows.push_back(row);
        }
        lj["weights"] = rows;
        if (l.use_bias && l.bias) lj["bias"] = *l.bias;
        layers.push_back(lj);
    }
    j["layers"] = layers;
    return j.dump(2) + "\n";
}

std::array<int64_t, 2> mixer_reshape(const std::array<int64_t, 3>& shape, MixMode mode) {
    const auto [b, t, c] = shape;
    if (b < 1 || t < 1 || c < 1)
        throw ValidationError("mixer_reshape: B, T, C must all be >= 1");
    if (mode == MixMode::token) return {b * c, t};
    return {b * t, c};
}

int64_t quantize_scalar(double v, IntDType target, int shift) {
    if (shift < 0) throw ValidationError("quantize: shift must be >= 0");
    if (std::isnan(v)) throw ValidationError("quantize: NaN input");
    const double scaled = std::ldexp(v, shift); // exact power-of-two scaling
    const DTypeRange r = dtype_range(target);
    if (scaled >= double(r.max)) return r.max;
    if (scaled <= double(r.min)) return r.min;
    const double fl = std::floor(scaled);
    const double frac = scaled - fl;
    int64_t q = int64_t(fl);
    if (frac > 0.5) {
        q += 1;
    } else if (frac == 0.5) {
        if (q & 1) q += 1; // tie: round to even
    }
    return clamp_to(q, target);
}

Matrix quantize_float_weights(const std::vector<std::vector<double>>& w, IntDType target,
                              int shift) {
    const int rows = int(w.size());
    const int cols = rows ? int(w[0].size()) : 0;
    Matrix out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (int(w[r].size()) != cols)
            throw ValidationError("quantize: ragged float weight matrix");
        for (int c = 0; c < cols; ++c) out.at(r, c) = quantize_scalar(w[r][c], target, shift);
    }
    return out;
}

} // namespace aiegrid
