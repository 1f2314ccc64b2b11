#include "plan.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace aiegrid {

using nlohmann::json;

namespace {

int64_t ceil_to(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Passes
// ---------------------------------------------------------------------------

void quantize_pass(AieIrGraph& g, const QuantModel& model) {
    for (auto& n : g.nodes) {
        if (n.kind != NodeKind::linear) continue;
        const DTypePair pair{n.act_dtype, n.wgt_dtype};
        if (!g.device.supports(pair))
            throw ValidationError("layer '" + n.name + "': dtype pair " + dtype_pair_name(pair) +
                                  " unsupported by device");
        if (n.acc_dtype.bits() < n.act_dtype.bits() || n.acc_dtype.bits() < n.wgt_dtype.bits())
            throw ValidationError("layer '" + n.name + "': accumulator narrower than operands");
        const QuantLayer& l = model.layers[size_t(n.layer_index)];
        const DTypeRange wr = dtype_range(n.wgt_dtype);
        for (int64_t v : l.weights.data())
            if (v < wr.min || v > wr.max)
                throw ValidationError("layer '" + n.name + "': weight " + std::to_string(v) +
                                      " outside " + dtype_name(n.wgt_dtype));
        if (n.fused_bias && l.bias) {
            const DTypeRange ar = dtype_range(n.acc_dtype);
            for (int64_t v : *l.bias)
                if (v < ar.min || v > ar.max)
                    throw ValidationError("layer '" + n.name + "': bias " + std::to_string(v) +
                                          " outside " + dtype_name(n.acc_dtype));
        }
    }
    if (g.pass_log.empty() || g.pass_log.back() != "quantize") g.pass_log.push_back("quantize");
}

void resolve_pass(AieIrGraph& g, const std::vector<int>& budgets,
                  std::vector<std::string>* detail = nullptr) {
    size_t li = 0;
    for (auto& n : g.nodes) {
        if (n.kind != NodeKind::linear) continue;
        // resolve_layer keeps pinned attributes intact and fills the rest.
        const ResolvedLayer r = resolve_layer(n, g.device, budgets[li]);
        n.tiling = r.tiling;
        n.cascade = r.cascade;
        if (detail) {
            std::ostringstream os;
            os << "resolve: " << n.name << " budget=" << budgets[li] << " tiling=<"
               << r.tiling.m << "," << r.tiling.k << "," << r.tiling.n << ">"
               << (r.tiling.native ? "" : " non-native") << " cascade=(" << r.cascade.cas_len
               << "," << r.cascade.cas_num << ") slices=(" << r.cascade.f_in_slice << ","
               << r.cascade.f_out_slice << ")";
            if (r.cascade.k_folds > 1) os << " k_folds=" << r.cascade.k_folds;
            if (n.overridden("tiling")) os << " [tiling pinned]";
            if (n.overridden("cascade")) os << " [cascade pinned]";
            detail->push_back(os.str());
        }
        ++li;
    }
    if (std::find(g.pass_log.begin(), g.pass_log.end(), "resolve") == g.pass_log.end())
        g.pass_log.push_back("resolve");
}

// Pinned attributes must survive every pass untouched.
void verify_overrides_preserved(const AieIrGraph& before, const AieIrGraph& after) {
    std::map<std::string, const AieIrNode*> prior;
    for (const auto& n : before.nodes)
        if (n.kind == NodeKind::linear) prior[n.name] = &n;
    for (const auto& n : after.nodes) {
        if (n.kind != NodeKind::linear) continue;
        auto it = prior.find(n.name);
        if (it == prior.end()) continue;
        const AieIrNode& p = *it->second;
        if (p.overridden("tiling") && p.tiling && n.tiling &&
            !(n.tiling->m == p.tiling->m && n.tiling->k == p.tiling->k &&
              n.tiling->n == p.tiling->n))
            throw InternalError("pass rewrote pinned tiling on '" + n.name + "'");
        if (p.overridden("cascade") && p.cascade && n.cascade &&
            (n.cascade->cas_len != p.cascade->cas_len ||
             n.cascade->cas_num != p.cascade->cas_num))
            throw InternalError("pass rewrote pinned cascade on '" + n.name + "'");
        if (p.overridden("placement") && p.placement && n.placement &&
            !(*n.placement == *p.placement))
            throw InternalError("pass rewrote pinned placement on '" + n.name + "'");
        if (p.overridden("dtypes") &&
            !(n.act_dtype == p.act_dtype && n.wgt_dtype == p.wgt_dtype &&
              n.acc_dtype == p.acc_dtype && n.out_dtype == p.out_dtype))
            throw InternalError("pass rewrote pinned dtypes on '" + n.name + "'");
    }
}

std::vector<PackedWeights> pack_pass(AieIrGraph& g, const QuantModel& model) {
    std::vector<PackedWeights> packs;
    for (auto& n : g.nodes) {
        if (n.kind != NodeKind::linear) continue;
        const QuantLayer& l = model.layers[size_t(n.layer_index)];
        const std::vector<int64_t>* bias = (n.fused_bias && l.bias) ? &*l.bias : nullptr;
        packs.push_back(pack_weights(l.weights, bias, *n.cascade, *n.tiling, n.wgt_dtype,
                                     n.acc_dtype, g.device.local_mem_bytes));
    }
    if (std::find(g.pass_log.begin(), g.pass_log.end(), "pack") == g.pass_log.end())
        g.pass_log.push_back("pack");
    return packs;
}

struct BoundarySpec {
    PlanBoundary boundary;
};

// Explicit connections between compute graphs and memory tiles: one buffer
// per layer boundary, writer tilers per producer row, reader tilers per
// consumer cascade stage.
std::vector<PlanBoundary> graphplan_pass(AieIrGraph& g) {
    std::vector<const AieIrNode*> lin;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::linear) lin.push_back(&n);

    std::vector<PlanBoundary> boundaries;
    const size_t count = lin.size();
    for (size_t b = 0; b <= count; ++b) {
        PlanBoundary pb;
        const AieIrNode* producer = b > 0 ? lin[b - 1] : nullptr;
        const AieIrNode* consumer = b < count ? lin[b] : nullptr;

        if (producer) {
            const auto& c = *producer->cascade;
            const auto& t = *producer->tiling;
            const int64_t rows = ceil_to(producer->in_dims[0], t.m);
            pb.buffer_dims = {rows, int64_t(c.padded_f_out)};
            pb.store_dtype = producer->out_dtype;

            DmaTiler w;
            w.buffer_dims = pb.buffer_dims;
            w.tile_dims = {t.m, t.n};
            w.base = {0, 0};
            w.traversal = {{0, t.m, int(rows / t.m)}, {1, t.n, c.f_out_slice / t.n}};
            w.elem_dtype = producer->out_dtype;
            w.pad_out_of_bounds = false;
            pb.writer = w;
            pb.writer_count = c.cas_num;
            pb.writer_base_step = c.f_out_slice;
        } else {
            // Network input: host-filled, shaped for the first consumer.
            const auto& c = *consumer->cascade;
            const auto& t = *consumer->tiling;
            pb.buffer_dims = {ceil_to(consumer->in_dims[0], t.m), int64_t(c.padded_f_in)};
            pb.store_dtype = consumer->act_dtype;
        }

        if (consumer) {
            const auto& c = *consumer->cascade;
            const auto& t = *consumer->tiling;
            const int64_t view_rows = ceil_to(consumer->in_dims[0], t.m);
            DmaTiler r;
            r.buffer_dims = pb.buffer_dims;
            r.tile_dims = {t.m, t.k};
            r.base = {0, 0};
            r.traversal = {{0, t.m, int(view_rows / t.m)}, {1, t.k, c.f_in_slice / t.k}};
            r.elem_dtype = consumer->act_dtype;
            const int64_t view_cols = int64_t(c.padded_f_in);
            r.pad_out_of_bounds =
                view_rows > pb.buffer_dims[0] || view_cols > pb.buffer_dims[1];
            pb.reader = r;
            pb.reader_count = c.cas_len * c.k_folds;
            pb.reader_base_step = c.f_in_slice;
            pb.reader_fanout = c.cas_num;
        }

        pb.live_bytes = 2 * pb.buffer_dims[0] * pb.buffer_dims[1] * pb.store_dtype.bytes();
        if (pb.live_bytes > g.device.memtile_capacity_bytes)
            throw InfeasibleError("graph-planning: boundary " + std::to_string(b) + " needs " +
                                  std::to_string(pb.live_bytes) + " bytes, memory tile holds " +
                                  std::to_string(g.device.memtile_capacity_bytes));
        boundaries.push_back(std::move(pb));
    }

    // Rebuild the node chain with memtile nodes between compute stages.
    bool already = false;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::memtile_buffer) already = true;
    if (!already) {
        AieIrGraph out;
        out.model_name = g.model_name;
        out.device = g.device;
        out.pass_log = g.pass_log;
        auto add = [&](AieIrNode n) {
            n.id = int(out.nodes.size());
            out.nodes.push_back(std::move(n));
            return out.nodes.back().id;
        };
        int prev = -1;
        size_t li = 0;
        for (const auto& n : g.nodes) {
            if (n.kind == NodeKind::output) continue;
            if (n.kind == NodeKind::linear) {
                AieIrNode mem;
                mem.kind = NodeKind::memtile_buffer;
                mem.name = "buf" + std::to_string(li);
                RetilePlan rp;
                rp.buffer_dims = boundaries[li].buffer_dims;
                if (boundaries[li].writer) rp.write = *boundaries[li].writer;
                if (boundaries[li].reader) rp.read = *boundaries[li].reader;
                rp.live_bytes = boundaries[li].live_bytes;
                mem.dma_plans = rp;
                const int mid = add(std::move(mem));
                out.edges.emplace_back(prev, mid);
                AieIrNode ln = n;
                const int lid = add(std::move(ln));
                out.edges.emplace_back(mid, lid);
                prev = lid;
                ++li;
            } else {
                const int id = add(n);
                if (prev >= 0) out.edges.emplace_back(prev, id);
                prev = id;
            }
        }
        AieIrNode mem;
        mem.kind = NodeKind::memtile_buffer;
        mem.name = "buf" + std::to_string(li);
        RetilePlan rp;
        rp.buffer_dims = boundaries[li].buffer_dims;
        if (boundaries[li].writer) rp.write = *boundaries[li].writer;
        rp.live_bytes = boundaries[li].live_bytes;
        mem.dma_plans = rp;
        const int mid = add(std::move(mem));
        out.edges.emplace_back(prev, mid);
        AieIrNode outn;
        outn.kind = NodeKind::output;
        outn.name = "output";
        outn.in_dims = lin.back()->out_dims;
        const int oid = add(std::move(outn));
        out.edges.emplace_back(mid, oid);
        g = std::move(out);
    }
    if (std::find(g.pass_log.begin(), g.pass_log.end(), "graphplan") == g.pass_log.end())
        g.pass_log.push_back("graphplan");
    return boundaries;
}

PlacementInstance build_instance(const AieIrGraph& g, const UserConfig& config) {
    PlacementInstance inst;
    inst.cols = g.device.cols;
    inst.rows = g.device.rows;
    inst.lambda = config.lambda;
    inst.mu = config.mu;
    inst.start = config.start;
    for (const auto& n : g.nodes) {
        if (n.kind != NodeKind::linear) continue;
        BlockInstance b;
        b.id = n.name;
        b.width = n.cascade->k_folds > 1 ? 1 : n.cascade->cas_len;
        b.height = n.cascade->cas_num;
        if (n.overridden("placement") && n.placement) b.pin = n.placement;
        inst.blocks.push_back(std::move(b));
    }
    return inst;
}

void place_pass(AieIrGraph& g, const UserConfig& config) {
    const PlacementInstance inst = build_instance(g, config);
    const PlacementSolution sol = place_bnb(inst, config.bnb_node_limit);
    size_t li = 0;
    for (auto& n : g.nodes) {
        if (n.kind != NodeKind::linear) continue;
        if (!n.overridden("placement")) n.placement = sol.anchors[li];
        ++li;
    }
    if (std::find(g.pass_log.begin(), g.pass_log.end(), "place") == g.pass_log.end())
        g.pass_log.push_back("place");
}

// Default budgets are capacity-lean: each layer gets the smallest rectangle
// that holds its weight slice, and wider parallelism is an explicit config
// choice. A user-supplied tile_budget is split proportional to MACs.
std::vector<int> layer_budgets(const AieIrGraph& g, const std::optional<int>& total,
                               double scale) {
    std::vector<int> budgets;
    if (!total) {
        for (const auto& n : g.nodes)
            if (n.kind == NodeKind::linear)
                budgets.push_back(std::max(1, int(min_fitting_area(n, g.device) * scale)));
        return budgets;
    }
    std::vector<int64_t> macs;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::linear)
            macs.push_back(n.in_dims[0] * n.in_dims[1] * n.out_dims[1]);
    int64_t sum = 0;
    for (int64_t m : macs) sum += m;
    for (int64_t m : macs) {
        const double share = sum > 0 ? double(m) / double(sum) : 1.0;
        budgets.push_back(std::max(1, int(double(*total) * share * scale)));
    }
    return budgets;
}

struct PipelineResult {
    AieIrGraph graph;
    std::vector<PackedWeights> packs;
    std::vector<PlanBoundary> boundaries;
    std::vector<int> budgets;         // the ladder step that placed
    AieIrGraph lowered;               // graph after lower + quantize, pre-resolve
    std::vector<std::string> detail;  // inferred attributes and honored overrides
};

// Lower + quantize once, then resolve/pack/plan/place under a shrinking tile
// budget until placement succeeds. The budget ladder is the documented
// proportional-to-MACs heuristic; each attempt is deterministic.
PipelineResult run_pipeline(const QuantModel& model, const DeviceDesc& device,
                            const UserConfig& config) {
    AieIrGraph lowered = lower(model, device, config);
    const auto violations = validate_overrides(lowered, device);
    if (!violations.empty()) {
        std::string msg = "invalid overrides:";
        for (const auto& v : violations)
            msg += "\n  node '" + v.node + "' attribute '" + v.attribute + "': " + v.rule;
        throw ValidationError(msg);
    }
    quantize_pass(lowered, model);

    double scale = 1.0;
    constexpr int kAttempts = 12;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        PipelineResult r;
        r.lowered = lowered;
        r.graph = lowered;
        for (const auto& n : lowered.nodes) {
            if (n.kind != NodeKind::linear || n.overrides.empty()) continue;
            std::string ovs = "lower: " + n.name + " honors overrides {";
            bool first = true;
            for (const auto& o : n.overrides) {
                ovs += (first ? "" : ", ") + o;
                first = false;
            }
            r.detail.push_back(ovs + "}");
        }
        r.budgets = layer_budgets(r.graph, config.tile_budget, scale);
        resolve_pass(r.graph, r.budgets, &r.detail);
        r.packs = pack_pass(r.graph, model);
        r.boundaries = graphplan_pass(r.graph);
        for (size_t b = 0; b < r.boundaries.size(); ++b)
            r.detail.push_back("graphplan: buf" + std::to_string(b) + " dims=[" +
                               std::to_string(r.boundaries[b].buffer_dims[0]) + "," +
                               std::to_string(r.boundaries[b].buffer_dims[1]) + "] bytes=" +
                               std::to_string(r.boundaries[b].live_bytes));
        try {
            place_pass(r.graph, config);
        } catch (const InfeasibleError&) {
            if (attempt + 1 == kAttempts) throw;
            scale *= 0.75;
            continue;
        }
        for (const auto& n : r.graph.nodes) {
            if (n.kind != NodeKind::linear) continue;
            r.detail.push_back("place: " + n.name + " anchor=(" +
                               std::to_string(n.placement->col) + "," +
                               std::to_string(n.placement->row) + ")" +
                               (n.overridden("placement") ? " [pinned]" : ""));
        }
        verify_overrides_preserved(lowered, r.graph);
        return r;
    }
    throw InfeasibleError("compile: placement failed at every budget scale");
}

} // namespace

int CompiledPlan::tiles_used() const {
    int n = 0;
    for (const auto& l : layers) n += l.physical_width() * l.cascade.cas_num;
    return n;
}

CompiledPlan compile(const QuantModel& model, const DeviceDesc& device,
                     const UserConfig& config) {
    PipelineResult r = run_pipeline(model, device, config);

    CompiledPlan plan;
    plan.model_name = model.name;
    plan.device = device;
    plan.lambda = config.lambda;
    plan.mu = config.mu;
    plan.start = config.start;
    plan.input_shift = model.input_shift;
    plan.output_shift = model.output_shift;
    plan.boundaries = r.boundaries;

    size_t li = 0;
    for (const auto& n : r.graph.nodes) {
        if (n.kind != NodeKind::linear) continue;
        PlanLayer l;
        l.name = n.name;
        l.batch = n.in_dims[0];
        l.f_in = n.in_dims[1];
        l.f_out = n.out_dims[1];
        l.act = n.act_dtype;
        l.wgt = n.wgt_dtype;
        l.acc = n.acc_dtype;
        l.out = n.out_dtype;
        l.use_bias = n.fused_bias;
        l.use_relu = n.fused_relu;
        l.shift = n.shift;
        l.tiling = *n.tiling;
        l.cascade = *n.cascade;
        l.anchor = *n.placement;
        l.packed = r.packs[li];
        plan.layers.push_back(std::move(l));
        ++li;
    }

    // No compute tile may be booked twice across layer rectangles.
    std::set<std::pair<int, int>> occupied;
    for (const auto& l : plan.layers) {
        for (int rr = 0; rr < l.cascade.cas_num; ++rr)
            for (int cc = 0; cc < l.physical_width(); ++cc) {
                const auto key = std::make_pair(l.anchor.col + cc, l.anchor.row + rr);
                if (!occupied.insert(key).second)
                    throw InternalError("emission: tile (" + std::to_string(key.first) + "," +
                                        std::to_string(key.second) + ") booked twice");
            }
    }

    r.graph.pass_log.push_back("emit");
    plan.pass_log = r.graph.pass_log;
    plan.pass_detail = r.detail;
    plan.config_hash = fnv1a_hex(serialize_model(model) + device_to_json_text(device) +
                                 config.to_json_text());
    return plan;
}

AieIrGraph compile_to_stage(const QuantModel& model, const DeviceDesc& device,
                            const UserConfig& config, const std::string& stage) {
    const auto& names = pass_names();
    if (std::find(names.begin(), names.end(), stage) == names.end())
        throw ValidationError("unknown pass stage '" + stage + "'");

    AieIrGraph g = lower(model, device, config);
    if (stage == "lower") return g;
    const auto violations = validate_overrides(g, device);
    if (!violations.empty())
        throw ValidationError("invalid overrides on node '" + violations.front().node + "': " +
                              violations.front().rule);
    quantize_pass(g, model);
    if (stage == "quantize") return g;

    // Later stages depend on the budget ladder; replay the successful step.
    PipelineResult r = run_pipeline(model, device, config);
    if (stage == "resolve" || stage == "pack") {
        AieIrGraph replay = r.lowered;
        resolve_pass(replay, r.budgets);
        if (stage == "pack") pack_pass(replay, model);
        return replay;
    }
    if (stage == "graphplan") {
        AieIrGraph replay = r.lowered;
        resolve_pass(replay, r.budgets);
        pack_pass(replay, model);
        graphplan_pass(replay);
        return replay;
    }
    return r.graph; // place (and emit: the chain is final after placement)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json tiler_to_json(const DmaTiler& t) {
    json j;
    j["buffer_dims"] = t.buffer_dims;
    j["tile_dims"] = t.tile_dims;
    j["base"] = t.base;
    json steps = json::array();
    for (const auto& s : t.traversal) steps.push_back({s.dim, s.stride, s.wrap});
    j["traversal"] = steps;
    j["elem_dtype"] = dtype_name(t.elem_dtype);
    j["pad_out_of_bounds"] = t.pad_out_of_bounds;
    return j;
}

DmaTiler tiler_from_json(const json& j) {
    DmaTiler t;
    t.buffer_dims = j["buffer_dims"].get<std::vector<int64_t>>();
    t.tile_dims = j["tile_dims"].get<std::vector<int64_t>>();
    t.base = j["base"].get<std::vector<int64_t>>();
    for (const auto& s : j["traversal"])
        t.traversal.push_back({s[0].get<int>(), s[1].get<int64_t>(), s[2].get<int>()});
    t.elem_dtype = *dtype_from_name(j["elem_dtype"].get<std::string>());
    t.pad_out_of_bounds = j["pad_out_of_bounds"].get<bool>();
    return t;
}

void append_le_bytes(std::vector<uint8_t>& out, int64_t v, int width) {
    for (int b = 0; b < width; ++b) out.push_back(uint8_t(uint64_t(v) >> (8 * b)));
}

} // namespace

std::vector<uint8_t> plan_weight_blob(const CompiledPlan& plan) {
    std::vector<uint8_t> blob;
    for (const auto& l : plan.layers) {
        for (const auto& row : l.packed.blobs)
            for (const auto& tile : row) blob.insert(blob.end(), tile.begin(), tile.end());
        for (const auto& brow : l.packed.bias_rows)
            for (int64_t v : brow) append_le_bytes(blob, v, l.acc.bytes());
        while (blob.size() % 32 != 0) blob.push_back(0);
    }
    return blob;
}

std::string plan_to_json(const CompiledPlan& plan) {
    json j;
    j["format"] = "aiegrid-plan";
    j["version"] = plan.version;
    j["model"] = plan.model_name;
    j["config_hash"] = plan.config_hash;
    j["lambda"] = plan.lambda;
    j["mu"] = plan.mu;
    j["start"] = {plan.start.col, plan.start.row};
    if (plan.input_shift) j["input_shift"] = *plan.input_shift;
    if (plan.output_shift) j["output_shift"] = *plan.output_shift;
    j["pass_log"] = plan.pass_log;
    j["pass_detail"] = plan.pass_detail;
    j["weights_file"] = "weights.bin";
    j["device"] = json::parse(device_to_json_text(plan.device));

    int64_t offset = 0;
    json layers = json::array();
    for (const auto& l : plan.layers) {
        json lj;
        lj["name"] = l.name;
        lj["batch"] = l.batch;
        lj["f_in"] = l.f_in;
        lj["f_out"] = l.f_out;
        lj["act"] = dtype_name(l.act);
        lj["wgt"] = dtype_name(l.wgt);
        lj["acc"] = dtype_name(l.acc);
        lj["out"] = dtype_name(l.out);
        lj["use_bias"] = l.use_bias;
        lj["use_relu"] = l.use_relu;
        lj["shift"] = l.shift;
        lj["tiling"] = {l.tiling.m, l.tiling.k, l.tiling.n};
        lj["native"] = l.tiling.native;
        json cj;
        cj["cas_len"] = l.cascade.cas_len;
        cj["cas_num"] = l.cascade.cas_num;
        cj["f_in_slice"] = l.cascade.f_in_slice;
        cj["f_out_slice"] = l.cascade.f_out_slice;
        cj["padded_f_in"] = l.cascade.padded_f_in;
        cj["padded_f_out"] = l.cascade.padded_f_out;
        cj["k_folds"] = l.cascade.k_folds;
        lj["cascade"] = cj;
        lj["anchor"] = {l.anchor.col, l.anchor.row};

        json rows = json::array();
        for (const auto& row : l.packed.blobs) {
            json tiles = json::array();
            for (const auto& tile : row) {
                tiles.push_back({{"offset", offset}, {"len", int64_t(tile.size())}});
                offset += int64_t(tile.size());
            }
            rows.push_back(tiles);
        }
        lj["weight_tiles"] = rows;
        json biases = json::array();
        for (const auto& brow : l.packed.bias_rows) {
            const int64_t len = int64_t(brow.size()) * l.acc.bytes();
            biases.push_back({{"offset", offset}, {"len", len}});
            offset += len;
        }
        lj["bias_rows"] = biases;
        offset = ceil_to(offset, 32);
        layers.push_back(lj);
    }
    j["layers"] = layers;

    json bounds = json::array();
    for (const auto& b : plan.boundaries) {
        json bj;
        bj["buffer_dims"] = b.buffer_dims;
        bj["store_dtype"] = dtype_name(b.store_dtype);
        bj["live_bytes"] = b.live_bytes;
        if (b.writer) {
            bj["writer"] = tiler_to_json(*b.writer);
            bj["writer_count"] = b.writer_count;
            bj["writer_base_step"] = b.writer_base_step;
        }
        if (b.reader) {
            bj["reader"] = tiler_to_json(*b.reader);
            bj["reader_count"] = b.reader_count;
            bj["reader_base_step"] = b.reader_base_step;
            bj["reader_fanout"] = b.reader_fanout;
        }
        bounds.push_back(bj);
    }
    j["boundaries"] = bounds;
    return j.dump(2) + "\n";
}

CompiledPlan plan_from_json(const std::string& text, const std::vector<uint8_t>& blob) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("plan parse error: ") + e.what());
    }
    if (j.value("format", "") != "aiegrid-plan")
        throw ValidationError("plan file: expected format 'aiegrid-plan'");

    CompiledPlan plan;
    plan.version = j.value("version", 1);
    plan.model_name = j.value("model", "");
    plan.config_hash = j.value("config_hash", "");
    plan.lambda = j.value("lambda", 1.0);
    plan.mu = j.value("mu", 0.05);
    plan.start = {j["start"][0].get<int>(), j["start"][1].get<int>()};
    if (j.contains("input_shift")) plan.input_shift = j["input_shift"].get<int>();
    if (j.contains("output_shift")) plan.output_shift = j["output_shift"].get<int>();
    plan.pass_log = j.value("pass_log", std::vector<std::string>{});
    plan.pass_detail = j.value("pass_detail", std::vector<std::string>{});
    plan.device = device_from_json_text(j["device"].dump());

    auto slice_bytes = [&](int64_t offset, int64_t len) {
        if (offset < 0 || len < 0 || offset + len > int64_t(blob.size()))
            throw ValidationError("plan: weight reference outside the blob");
        return std::vector<uint8_t>(blob.begin() + offset, blob.begin() + offset + len);
    };

    for (const auto& lj : j["layers"]) {
        PlanLayer l;
        l.name = lj["name"].get<std::string>();
        l.batch = lj["batch"].get<int64_t>();
        l.f_in = lj["f_in"].get<int64_t>();
        l.f_out = lj["f_out"].get<int64_t>();
        l.act = *dtype_from_name(lj["act"].get<std::string>());
        l.wgt = *dtype_from_name(lj["wgt"].get<std::string>());
        l.acc = *dtype_from_name(lj["acc"].get<std::string>());
        l.out = *dtype_from_name(lj["out"].get<std::string>());
        l.use_bias = lj["use_bias"].get<bool>();
        l.use_relu = lj["use_relu"].get<bool>();
        l.shift = lj["shift"].get<int>();
        l.tiling = {lj["tiling"][0].get<int>(), lj["tiling"][1].get<int>(),
                    lj["tiling"][2].get<int>(), lj.value("native", false)};
        const auto& cj = lj["cascade"];
        l.cascade.cas_len = cj["cas_len"].get<int>();
        l.cascade.cas_num = cj["cas_num"].get<int>();
        l.cascade.f_in_slice = cj["f_in_slice"].get<int>();
        l.cascade.f_out_slice = cj["f_out_slice"].get<int>();
        l.cascade.padded_f_in = cj["padded_f_in"].get<int>();
        l.cascade.padded_f_out = cj["padded_f_out"].get<int>();
        l.cascade.k_folds = cj["k_folds"].get<int>();
        l.anchor = {lj["anchor"][0].get<int>(), lj["anchor"][1].get<int>()};

        l.packed.cas_len = l.cascade.cas_len;
        l.packed.cas_num = l.cascade.cas_num;
        l.packed.k_folds = l.cascade.k_folds;
        l.packed.tiling = l.tiling;
        l.packed.f_in_slice = l.cascade.f_in_slice;
        l.packed.f_out_slice = l.cascade.f_out_slice;
        l.packed.wgt_dtype = l.wgt;
        l.packed.acc_dtype = l.acc;
        for (const auto& row : lj["weight_tiles"]) {
            std::vector<std::vector<uint8_t>> tiles;
            for (const auto& t : row)
                tiles.push_back(slice_bytes(t["offset"].get<int64_t>(), t["len"].get<int64_t>()));
            l.packed.blobs.push_back(std::move(tiles));
        }
        for (const auto& bj : lj["bias_rows"]) {
            const auto bytes = slice_bytes(bj["offset"].get<int64_t>(), bj["len"].get<int64_t>());
            std::vector<int64_t> brow;
            const int width = l.acc.bytes();
            for (size_t at = 0; at + size_t(width) <= bytes.size(); at += size_t(width)) {
                uint64_t u = 0;
                for (int bb = 0; bb < width; ++bb) u |= uint64_t(bytes[at + bb]) << (8 * bb);
                if (width < 8) {
                    const uint64_t sign = uint64_t{1} << (width * 8 - 1);
                    if (u & sign) u |= ~((uint64_t{1} << (width * 8)) - 1);
                }
                brow.push_back(int64_t(u));
            }
            l.packed.bias_rows.push_back(std::move(brow));
        }
        plan.layers.push_back(std::move(l));
    }

    for (const auto& bj : j["boundaries"]) {
        PlanBoundary b;
        b.buffer_dims = bj["buffer_dims"].get<std::vector<int64_t>>();
        b.store_dtype = *dtype_from_name(bj["store_dtype"].get<std::string>());
        b.live_bytes = bj["live_bytes"].get<int64_t>();
        if (bj.contains("writer")) {
            b.writer = tiler_from_json(bj["writer"]);
            b.writer_count = bj["writer_count"].get<int>();
            b.writer_base_step = bj["writer_base_step"].get<int64_t>();
        }
        if (bj.contains("reader")) {
            b.reader = tiler_from_json(bj["reader"]);
            b.reader_count = bj["reader_count"].get<int>();
            b.reader_base_step = bj["reader_base_step"].get<int64_t>();
            b.reader_fanout = bj["reader_fanout"].get<int>();
        }
        plan.boundaries.push_back(std::move(b));
    }
    return plan;
}

CompiledPlan load_plan(const std::string& plan_path) {
    std::ifstream in(plan_path, std::ios::binary);
    if (!in) throw IoError("cannot open plan file: " + plan_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const size_t slash = plan_path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : plan_path.substr(0, slash);

    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("plan parse error: ") + e.what());
    }
    const std::string weights_file = j.value("weights_file", "weights.bin");
    std::ifstream wf(dir + "/" + weights_file, std::ios::binary);
    if (!wf) throw IoError("cannot open weight blob: " + dir + "/" + weights_file);
    std::vector<uint8_t> blob((std::istreambuf_iterator<char>(wf)),
                              std::istreambuf_iterator<char>());
    return plan_from_json(ss.str(), blob);
}

PlacementInstance plan_placement_instance(const CompiledPlan& plan) {
    PlacementInstance inst;
    inst.cols = plan.device.cols;
    inst.rows = plan.device.rows;
    inst.lambda = plan.lambda;
    inst.mu = plan.mu;
    inst.start = plan.start;
    for (const auto& l : plan.layers) {
        BlockInstance b;
        b.id = l.name;
        b.width = l.physical_width();
        b.height = l.cascade.cas_num;
        inst.blocks.push_back(std::move(b));
    }
    return inst;
}

PlacementSolution plan_placement_solution(const CompiledPlan& plan) {
    PlacementSolution sol;
    for (const auto& l : plan.layers) sol.anchors.push_back(l.anchor);
    sol.cost = cost_J(plan_placement_instance(plan), sol.anchors);
    sol.legal = true;
    return sol;
}

} // namespace aiegrid
