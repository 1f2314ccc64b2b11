#include "ir.hpp"

#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace aiegrid {

using nlohmann::json;

std::vector<int> AieIrGraph::linear_ids() const {
    std::vector<int> ids;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::linear) ids.push_back(n.id);
    return ids;
}

const std::vector<std::string>& pass_names() {
    static const std::vector<std::string> names = {"lower",     "quantize", "resolve",
                                                   "pack",      "graphplan", "place",
                                                   "emit"};
    return names;
}

UserConfig UserConfig::from_json_text(const std::string& text) {
    UserConfig cfg;
    if (text.empty()) return cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    cfg.lambda = j.value("lambda", 1.0);
    cfg.mu = j.value("mu", 0.05);
    if (j.contains("start")) {
        if (!j["start"].is_array() || j["start"].size() != 2)
            throw ValidationError("config: 'start' must be [col, row]");
        cfg.start = {j["start"][0].get<int>(), j["start"][1].get<int>()};
    }
    if (j.contains("tile_budget")) cfg.tile_budget = j["tile_budget"].get<int>();
    cfg.bnb_node_limit = j.value("bnb_node_limit", int64_t{0});

    if (j.contains("layers")) {
        if (!j["layers"].is_object()) throw ValidationError("config: 'layers' must be a map");
        for (auto& [name, lj] : j["layers"].items()) {
            NodeOverride ov;
            if (lj.contains("tiling")) {
                const auto& t = lj["tiling"];
                if (!t.is_array() || t.size() != 3)
                    throw ValidationError("config layer '" + name + "': tiling must be [m,k,n]");
                ov.tiling = Tiling{t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), false};
            }
            if (lj.contains("cascade")) {
                const auto& c = lj["cascade"];
                if (c.is_array() && c.size() == 2) {
                    ov.cascade = {c[0].get<int>(), c[1].get<int>()};
                } else if (c.is_object()) {
                    ov.cascade = {c.value("len", 1), c.value("num", 1)};
                    if (c.contains("f_in_slice")) ov.f_in_slice = c["f_in_slice"].get<int>();
                    if (c.contains("f_out_slice")) ov.f_out_slice = c["f_out_slice"].get<int>();
                } else {
                    throw ValidationError("config layer '" + name +
                                          "': cascade must be [len,num] or an object");
                }
            }
            if (lj.contains("placement")) {
                const auto& p = lj["placement"];
                if (!p.is_array() || p.size() != 2)
                    throw ValidationError("config layer '" + name +
                                          "': placement must be [col,row]");
                ov.placement = GridPos{p[0].get<int>(), p[1].get<int>()};
            }
            if (lj.contains("dtypes")) {
                const auto& d = lj["dtypes"];
                auto get = [&](const char* key) -> std::optional<IntDType> {
                    if (!d.contains(key)) return std::nullopt;
                    auto t = dtype_from_name(d[key].get<std::string>());
                    if (!t)
                        throw ValidationError("config layer '" + name + "': unknown dtype for '" +
                                              key + "'");
                    return t;
                };
                ov.act_dtype = get("act");
                ov.wgt_dtype = get("wgt");
                ov.acc_dtype = get("acc");
                ov.out_dtype = get("out");
            }
            cfg.layers[name] = ov;
        }
    }
    return cfg;
}

std::string UserConfig::to_json_text() const {
    json j;
    j["lambda"] = lambda;
    j["mu"] = mu;
    j["start"] = {start.col, start.row};
    if (tile_budget) j["tile_budget"] = *tile_budget;
    if (bnb_node_limit) j["bnb_node_limit"] = bnb_node_limit;
    json layers = json::object();
    for (const auto& [name, ov] : this->layers) {
        json lj = json::object();
        if (ov.tiling) lj["tiling"] = {ov.tiling->m, ov.tiling->k, ov.tiling->n};
        if (ov.cascade) {
            json c;
            c["len"] = ov.cascade->first;
            c["num"] = ov.cascade->second;
            if (ov.f_in_slice) c["f_in_slice"] = *ov.f_in_slice;
            if (ov.f_out_slice) c["f_out_slice"] = *ov.f_out_slice;
            lj["cascade"] = c;
        }
        if (ov.placement) lj["placement"] = {ov.placement->col, ov.placement->row};
        json d = json::object();
        if (ov.act_dtype) d["act"] = dtype_name(*ov.act_dtype);
        if (ov.wgt_dtype) d["wgt"] = dtype_name(*ov.wgt_dtype);
        if (ov.acc_dtype) d["acc"] = dtype_name(*ov.acc_dtype);
        if (ov.out_dtype) d["out"] = dtype_name(*ov.out_dtype);
        if (!d.empty()) lj["dtypes"] = d;
        layers[name] = lj;
    }
    if (!layers.empty()) j["layers"] = layers;
    return j.dump();
}

AieIrGraph lower(const QuantModel& model, const DeviceDesc& device, const UserConfig& config) {
    validate_model(model);
    validate_device(device);

    AieIrGraph g;
    g.model_name = model.name;
    g.device = device;

    int64_t elements = 1;
    for (int64_t d : model.input_shape) elements *= d;
    int64_t features = model.input_shape.back();

    auto add_node = [&](AieIrNode n) -> int {
        n.id = int(g.nodes.size());
        g.nodes.push_back(std::move(n));
        return g.nodes.back().id;
    };

    AieIrNode input;
    input.kind = NodeKind::input;
    input.name = "input";
    input.out_dims = {elements / features, features};
    int prev = add_node(input);

    int layer_index = -1;
    bool seen_dense = false;
    for (const auto& l : model.layers) {
        ++layer_index;
        if (l.kind == LayerKind::reshape) {
            // A leading reshape re-flows the host tensor into matrix form and
            // becomes part of the input boundary. Mid-chain reshapes would
            // need an on-array data reordering this flow does not build.
            if (seen_dense)
                throw ValidationError("lowering: reshape layer '" + l.name +
                                      "' after a dense layer is unsupported; reshape the host "
                                      "tensor instead");
            elements = l.reshape_spec[0] * l.reshape_spec[1];
            features = l.reshape_spec[1];
            g.nodes[size_t(prev)].out_dims = {l.reshape_spec[0], l.reshape_spec[1]};
            continue;
        }
        seen_dense = true;
        if (l.kind != LayerKind::dense)
            throw ValidationError("lowering: unsupported op kind in layer '" + l.name + "'");

        const int64_t batch = elements / features;
        AieIrNode n;
        n.kind = NodeKind::linear;
        n.name = l.name;
        n.layer_index = layer_index;
        n.in_dims = {batch, l.in_features};
        n.out_dims = {batch, l.out_features};
        n.act_dtype = l.act_dtype;
        n.wgt_dtype = l.wgt_dtype;
        n.acc_dtype = l.acc_dtype;
        n.out_dtype = l.out_dtype;
        n.fused_bias = l.use_bias;
        n.fused_relu = l.use_relu; // Dense+ReLU fuse into one node
        n.shift = l.shift;

        auto ov = config.layers.find(l.name);
        if (ov != config.layers.end()) {
            const NodeOverride& o = ov->second;
            if (o.tiling) {
                Tiling t = *o.tiling;
                t.native = (t == native_tiling({n.act_dtype, n.wgt_dtype}));
                n.tiling = t;
                n.overrides.insert("tiling");
            }
            if (o.cascade) {
                CascadeConfig c;
                c.cas_len = o.cascade->first;
                c.cas_num = o.cascade->second;
                if (o.f_in_slice) c.f_in_slice = *o.f_in_slice;
                if (o.f_out_slice) c.f_out_slice = *o.f_out_slice;
                n.cascade = c;
                n.overrides.insert("cascade");
            }
            if (o.placement) {
                n.placement = *o.placement;
                n.overrides.insert("placement");
            }
            if (o.act_dtype || o.wgt_dtype || o.acc_dtype || o.out_dtype) {
                if (o.act_dtype) n.act_dtype = *o.act_dtype;
                if (o.wgt_dtype) n.wgt_dtype = *o.wgt_dtype;
                if (o.acc_dtype) n.acc_dtype = *o.acc_dtype;
                if (o.out_dtype) n.out_dtype = *o.out_dtype;
                n.overrides.insert("dtypes");
            }
        }

        const int id = add_node(std::move(n));
        g.edges.emplace_back(prev, id);
        prev = id;
        features = l.out_features;
        elements = batch * features;
    }

    if (g.linear_ids().empty())
        throw ValidationError("lowering: model contains no dense layers");

    AieIrNode output;
    output.kind = NodeKind::output;
    output.name = "output";
    output.in_dims = g.nodes[size_t(prev)].out_dims;
    const int out_id = add_node(std::move(output));
    g.edges.emplace_back(prev, out_id);

    g.pass_log.push_back("lower");
    return g;
}

std::vector<OverrideViolation> validate_overrides(const AieIrGraph& graph,
                                                  const DeviceDesc& device) {
    std::vector<OverrideViolation> out;
    for (const auto& n : graph.nodes) {
        if (n.kind != NodeKind::linear) continue;
        const DTypePair pair{n.act_dtype, n.wgt_dtype};
        if (n.overridden("dtypes") && !device.supports(pair)) {
            out.push_back({n.name, "dtypes",
                           "dtype pair " + dtype_pair_name(pair) + " unsupported by device"});
        }
        Tiling t = device.supports(pair) ? native_tiling(pair) : Tiling{4, 8, 8, true};
        if (n.tiling) {
            t = *n.tiling;
            if (n.overridden("tiling") && !tiling_supported(t)) {
                out.push_back({n.name, "tiling",
                               "tiling <" + std::to_string(t.m) + "," + std::to_string(t.k) +
                                   "," + std::to_string(t.n) + "> is not in the supported set"});
                continue;
            }
        }
        if (n.overridden("placement") && n.placement) {
            if (n.placement->col < 0 || n.placement->col >= device.cols ||
                n.placement->row < 0 || n.placement->row >= device.rows) {
                out.push_back({n.name, "placement",
                               "anchor (" + std::to_string(n.placement->col) + "," +
                                   std::to_string(n.placement->row) + ") outside " +
                                   std::to_string(device.cols) + "x" +
                                   std::to_string(device.rows) + " grid"});
            }
        }
        if (n.overridden("cascade") && n.cascade) {
            const CascadeConfig& c = *n.cascade;
            if (c.cas_len < 1 || c.cas_len > device.cols) {
                out.push_back({n.name, "cascade", "cas_len outside [1, cols]"});
            }
            if (c.cas_num < 1 || c.cas_num > device.rows) {
                out.push_back({n.name, "cascade", "cas_num outside [1, rows]"});
            }
            if (int64_t(c.cas_len) * c.cas_num > device.tile_count()) {
                out.push_back({n.name, "cascade", "rectangle exceeds the tile count"});
            }
            const int f_in = int(n.in_dims[1]);
            const int f_out = int(n.out_dims[1]);
            if (c.f_in_slice > 0) {
                if (c.f_in_slice % t.k != 0) {
                    out.push_back({n.name, "cascade", "f_in_slice not divisible by K"});
                } else if (int64_t(c.cas_len) * c.f_in_slice < f_in) {
                    out.push_back({n.name, "cascade",
                                   "cas_len*f_in_slice = " +
                                       std::to_string(int64_t(c.cas_len) * c.f_in_slice) +
                                       " cannot cover f_in = " + std::to_string(f_in)});
                }
            }
            if (c.f_out_slice > 0) {
                if (c.f_out_slice % t.n != 0) {
                    out.push_back({n.name, "cascade", "f_out_slice not divisible by N"});
                } else if (int64_t(c.cas_num) * c.f_out_slice < f_out) {
                    out.push_back({n.name, "cascade",
                                   "cas_num*f_out_slice = " +
                                       std::to_string(int64_t(c.cas_num) * c.f_out_slice) +
                                       " cannot cover f_out = " + std::to_string(f_out)});
                }
            }
        }
    }
    return out;
}

std::string dump_ir(const AieIrGraph& g) {
    std::ostringstream os;
    os << "graph " << g.model_name << " device=" << g.device.cols << "x" << g.device.rows
       << "\n";
    os << "passes";
    for (const auto& p : g.pass_log) os << " " << p;
    os << "\n";
    for (const auto& n : g.nodes) {
        os << "node " << n.id << " ";
        switch (n.kind) {
            case NodeKind::input: os << "input"; break;
            case NodeKind::output: os << "output"; break;
            case NodeKind::linear: os << "linear"; break;
            case NodeKind::memtile_buffer: os << "memtile"; break;
        }
        if (!n.name.empty()) os << " name=" << n.name;
        auto dims = [&](const char* tag, const std::vector<int64_t>& d) {
            if (d.empty()) return;
            os << " " << tag << "=[";
            for (size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
            os << "]";
        };
        dims("in", n.in_dims);
        dims("out", n.out_dims);
        if (n.kind == NodeKind::linear) {
            os << " act=" << dtype_name(n.act_dtype) << " wgt=" << dtype_name(n.wgt_dtype)
               << " acc=" << dtype_name(n.acc_dtype) << " outd=" << dtype_name(n.out_dtype)
               << " shift=" << n.shift << " bias=" << (n.fused_bias ? 1 : 0)
               << " relu=" << (n.fused_relu ? 1 : 0);
            if (n.tiling)
                os << " tiling=<" << n.tiling->m << "," << n.tiling->k << "," << n.tiling->n
                   << ">" << (n.tiling->native ? "" : " (non-native)");
            if (n.cascade) {
                const auto& c = *n.cascade;
                os << " cascade=(" << c.cas_len << "," << c.cas_num << "," << c.f_in_slice
                   << "," << c.f_out_slice << ")";
                if (c.k_folds > 1) os << " k_folds=" << c.k_folds;
            }
            if (n.placement) os << " place=(" << n.placement->col << "," << n.placement->row << ")";
        }
        if (n.kind == NodeKind::memtile_buffer && n.dma_plans) {
            os << " buffer=[";
            for (size_t i = 0; i < n.dma_plans->buffer_dims.size(); ++i)
                os << (i ? "," : "") << n.dma_plans->buffer_dims[i];
            os << "] bytes=" << n.dma_plans->live_bytes;
        }
        if (!n.overrides.empty()) {
            os << " overrides={";
            bool first = true;
            for (const auto& o : n.overrides) {
                os << (first ? "" : ",") << o;
                first = false;
            }
            os << "}";
        }
        os << "\n";
    }
    for (const auto& [a, b] : g.edges) os << "edge " << a << "->" << b << "\n";
    return os.str();
}

} // namespace aiegrid
