// Quantized network description: parsing, validation, serialization, the
// mixer reshape helper, and optional float-to-integer weight ingestion.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtypes.hpp"
#include "matrix.hpp"

namespace aiegrid {

enum class LayerKind { dense, reshape };

struct QuantLayer {
    std::string name;
    LayerKind kind = LayerKind::dense;
    int in_features = 0;
    int out_features = 0;
    Matrix weights;                   // out_features x in_features
    std::optional<std::vector<int64_t>> bias; // out_features, stored at acc width
    IntDType act_dtype = kI8;
    IntDType wgt_dtype = kI8;
    IntDType acc_dtype = kI32;
    IntDType out_dtype = kI8;
    int shift = 0;
    bool use_bias = false;
    bool use_relu = false;
    std::vector<int64_t> reshape_spec; // kind==reshape: target [rows, cols]
};

struct QuantModel {
    std::string name;
    std::vector<int64_t> input_shape;  // [batch, features] or [B, T, C] + leading reshape
    std::vector<QuantLayer> layers;
    std::optional<int> input_shift;    // enables float input quantization
    std::optional<int> output_shift;   // enables float output dequantization

    int64_t batch() const { return input_shape.empty() ? 0 : input_shape.front(); }
};

// Parses and fully validates a model document. `base_dir` resolves @blob
// sidecar references. Malformed documents report line/field; invariant
// violations name the layer and field.
QuantModel parse_model(const std::string& file_text, const std::string& base_dir = ".");
QuantModel load_model_file(const std::string& path);

// Canonical serialization (weights inline); parse(serialize(m)) == m.
std::string serialize_model(const QuantModel& m);

void validate_model(const QuantModel& m);

enum class MixMode { token, channel };

// [B, T, C] -> [B*C, T] for token mixing, [B*T, C] for channel mixing.
std::array<int64_t, 2> mixer_reshape(const std::array<int64_t, 3>& shape, MixMode mode);

// Round-to-nearest-even of w * 2^shift, saturated to the target range.
Matrix quantize_float_weights(const std::vector<std::vector<double>>& w, IntDType target,
                              int shift);
int64_t quantize_scalar(double v, IntDType target, int shift);

} // namespace aiegrid
