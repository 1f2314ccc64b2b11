// Target array description: grid geometry, per-tile compute rates, memories.
// Immutable after construction; shared read-only by every pass.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "dtypes.hpp"

namespace aiegrid {

using DTypePair = std::pair<IntDType, IntDType>; // (activation, weight)

struct DeviceDesc {
    std::string name = "aieml";
    int cols = 0;
    int rows = 0;
    double clock_ghz = 0.0;
    int load_bytes_per_cycle = 0;              // both load ports combined
    std::map<DTypePair, int> macs_per_cycle;   // parallel MACs per cycle per pair
    int64_t memtile_capacity_bytes = 0;
    int64_t local_mem_bytes = 0;
    int memtile_port_bytes_per_cycle = 32;     // stream rate per memory-tile port

    int tile_count() const { return cols * rows; }
    bool supports(const DTypePair& p) const { return macs_per_cycle.count(p) > 0; }
    int macs_for(const DTypePair& p) const;
};

// The default AIE-ML-like target: 38x8 grid at 1.25 GHz, two 256-bit load
// ports, 256/128/64 MACs per cycle for i8xi8 / i16xi8 / i16xi16.
DeviceDesc default_aieml_device();

// Throws ValidationError naming the offending field.
void validate_device(const DeviceDesc& d);

DeviceDesc device_from_json_text(const std::string& text);
DeviceDesc load_device_file(const std::string& path);
std::string device_to_json_text(const DeviceDesc& d);

std::string dtype_pair_name(const DTypePair& p);

} // namespace aiegrid
