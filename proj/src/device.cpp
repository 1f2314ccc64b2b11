#include "device.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace aiegrid {

using nlohmann::json;

int DeviceDesc::macs_for(const DTypePair& p) const {
    auto it = macs_per_cycle.find(p);
    if (it == macs_per_cycle.end()) {
        throw ValidationError("device '" + name + "' does not support dtype pair " +
                              dtype_pair_name(p));
    }
    return it->second;
}

DeviceDesc default_aieml_device() {
    DeviceDesc d;
    d.name = "aieml";
    d.cols = 38;
    d.rows = 8;
    d.clock_ghz = 1.25;
    d.load_bytes_per_cycle = 64;
    d.macs_per_cycle[{kI8, kI8}] = 256;
    d.macs_per_cycle[{kI16, kI8}] = 128;
    d.macs_per_cycle[{kI16, kI16}] = 64;
    d.memtile_capacity_bytes = 512 * 1024;
    d.local_mem_bytes = 64 * 1024;
    d.memtile_port_bytes_per_cycle = 32;
    return d;
}

void validate_device(const DeviceDesc& d) {
    if (d.cols < 1) throw ValidationError("device field 'cols' must be >= 1");
    if (d.rows < 1) throw ValidationError("device field 'rows' must be >= 1");
    if (d.clock_ghz <= 0.0) throw ValidationError("device field 'clock_ghz' must be positive");
    if (d.load_bytes_per_cycle <= 0)
        throw ValidationError("device field 'load_bytes_per_cycle' must be positive");
    if (d.macs_per_cycle.empty())
        throw ValidationError("device field 'macs_per_cycle' must list at least one dtype pair");
    for (const auto& [pair, macs] : d.macs_per_cycle) {
        if (macs <= 0) {
            throw ValidationError("device macs_per_cycle entry " + dtype_pair_name(pair) +
                                  " must be positive");
        }
    }
    if (d.memtile_capacity_bytes <= 0)
        throw ValidationError("device field 'memtile_capacity_bytes' must be positive");
    if (d.local_mem_bytes <= 0)
        throw ValidationError("device field 'local_mem_bytes' must be positive");
    if (d.memtile_port_bytes_per_cycle <= 0)
        throw ValidationError("device field 'memtile_port_bytes_per_cycle' must be positive");
}

std::string dtype_pair_name(const DTypePair& p) {
    return dtype_name(p.first) + "x" + dtype_name(p.second);
}

static DTypePair pair_from_name(const std::string& s) {
    auto x = s.find('x');
    if (x == std::string::npos) throw ValidationError("bad dtype pair '" + s + "'");
    auto a = dtype_from_name(s.substr(0, x));
    auto b = dtype_from_name(s.substr(x + 1));
    if (!a || !b) throw ValidationError("bad dtype pair '" + s + "'");
    return {*a, *b};
}

DeviceDesc device_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("device file parse error: ") + e.what());
    }
    if (j.value("format", "") != "aiegrid-device")
        throw ValidationError("device file: expected format 'aiegrid-device'");

    DeviceDesc d;
    d.name = j.value("name", "custom");
    d.cols = j.value("cols", 0);
    d.rows = j.value("rows", 0);
    d.clock_ghz = j.value("clock_ghz", 0.0);
    d.load_bytes_per_cycle = j.value("load_bytes_per_cycle", 0);
    d.memtile_capacity_bytes = j.value("memtile_capacity_bytes", int64_t{0});
    d.local_mem_bytes = j.value("local_mem_bytes", int64_t{0});
    d.memtile_port_bytes_per_cycle = j.value("memtile_port_bytes_per_cycle", 32);
    if (!j.contains("macs_per_cycle") || !j["macs_per_cycle"].is_object())
        throw ValidationError("device file: missing 'macs_per_cycle' map");
    for (auto& [key, val] : j["macs_per_cycle"].items()) {
        d.macs_per_cycle[pair_from_name(key)] = val.get<int>();
    }
    validate_device(d);
    return d;
}

DeviceDesc load_device_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open device file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return device_from_json_text(ss.str());
}

std::string device_to_json_text(const DeviceDesc& d) {
    json j;
    j["format"] = "aiegrid-device";
    j["version"] = 1;
    j["name"] = d.name;
    j["cols"] = d.cols;
    j["rows"] = d.rows;
    j["clock_ghz"] = d.clock_ghz;
    j["load_bytes_per_cycle"] = d.load_bytes_per_cycle;
    json macs = json::object();
    for (const auto& [pair, m] : d.macs_per_cycle) macs[dtype_pair_name(pair)] = m;
    j["macs_per_cycle"] = macs;
    j["memtile_capacity_bytes"] = d.memtile_capacity_bytes;
    j["local_mem_bytes"] = d.local_mem_bytes;
    j["memtile_port_bytes_per_cycle"] = d.memtile_port_bytes_per_cycle;
    return j.dump(2) + "\n";
}

} // namespace aiegrid
