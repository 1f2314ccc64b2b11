// Compiler IR: a chain of operation nodes whose attributes are populated
// pass by pass. User configuration can pin attributes up front; pinned
// attributes are never rewritten by a pass (verified after the pipeline
// runs).
//
// Attribute ownership:
//   lower      node identity, in/out dims, dtypes, fused_bias/relu, shift,
//              overrides (applied from the user config and marked)
//   quantize   validates dtypes and tensor ranges; writes nothing
//   resolve    tiling, cascade
//   pack       packed weight blobs (carried plan-side, not on nodes)
//   graphplan  memtile_buffer nodes, dma_plans
//   place      placement
//   emit       assembles the plan; the graph is final after place
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "device.hpp"
#include "dtypes.hpp"
#include "kernel.hpp"
#include "memtile.hpp"
#include "model.hpp"

namespace aiegrid {

enum class NodeKind { input, output, linear, memtile_buffer };

// Resolved parallelization of one layer onto a cas_len x cas_num rectangle.
struct CascadeConfig {
    int cas_len = 1;       // tiles per cascade row (input split)
    int cas_num = 1;       // cascade rows (output split)
    int f_in_slice = 0;    // input features per tile, multiple of K
    int f_out_slice = 0;   // output features per row, multiple of N
    int padded_f_in = 0;   // cas_len * f_in_slice
    int padded_f_out = 0;  // cas_num * f_out_slice
    int k_folds = 1;       // >1: cascade stages run sequentially on one tile

    bool operator==(const CascadeConfig& o) const {
        return cas_len == o.cas_len && cas_num == o.cas_num && f_in_slice == o.f_in_slice &&
               f_out_slice == o.f_out_slice && padded_f_in == o.padded_f_in &&
               padded_f_out == o.padded_f_out && k_folds == o.k_folds;
    }
};

struct GridPos {
    int col = 0;
    int row = 0;
    bool operator==(const GridPos& o) const { return col == o.col && row == o.row; }
};

struct AieIrNode {
    int id = 0;
    NodeKind kind = NodeKind::linear;
    std::string name;

    // Logical [batch, features] at the node boundary.
    std::vector<int64_t> in_dims;
    std::vector<int64_t> out_dims;

    // linear-node payload
    int layer_index = -1; // into QuantModel::layers
    IntDType act_dtype = kI8, wgt_dtype = kI8, acc_dtype = kI32, out_dtype = kI8;
    bool fused_bias = false;
    bool fused_relu = false;
    int shift = 0;

    std::optional<Tiling> tiling;
    std::optional<CascadeConfig> cascade;
    std::optional<GridPos> placement;

    // memtile-node payload (graph-planning pass)
    std::optional<RetilePlan> dma_plans;

    // Attribute names pinned by the user configuration.
    std::set<std::string> overrides;

    bool overridden(const std::string& attr) const { return overrides.count(attr) > 0; }
};

struct AieIrGraph {
    std::string model_name;
    DeviceDesc device;
    std::vector<AieIrNode> nodes;                 // topological order
    std::vector<std::pair<int, int>> edges;       // producer id -> consumer id
    std::vector<std::string> pass_log;            // one entry per applied pass

    AieIrNode& node(int id) { return nodes[size_t(id)]; }
    const AieIrNode& node(int id) const { return nodes[size_t(id)]; }
    std::vector<int> linear_ids() const;
};

// Per-layer user directives: the four override families plus placement
// search knobs.
struct NodeOverride {
    std::optional<Tiling> tiling;
    std::optional<std::pair<int, int>> cascade;       // (cas_len, cas_num)
    std::optional<int> f_in_slice;                    // optional slice pins
    std::optional<int> f_out_slice;
    std::optional<GridPos> placement;
    std::optional<IntDType> act_dtype, wgt_dtype, acc_dtype, out_dtype;
};

struct UserConfig {
    double lambda = 1.0;
    double mu = 0.05;
    GridPos start{0, 0};
    std::optional<int> tile_budget;                   // defaults to the whole array
    int64_t bnb_node_limit = 0;                       // 0 = unlimited
    std::map<std::string, NodeOverride> layers;

    static UserConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// Lowering: one linear node per dense layer (ReLU fused), reshape layers
// folded into the boundary dims, config overrides applied and marked.
AieIrGraph lower(const QuantModel& model, const DeviceDesc& device, const UserConfig& config);

struct OverrideViolation {
    std::string node;
    std::string attribute;
    std::string rule;
};

// Rejects pinned attributes that violate device limits; empty result = ok.
std::vector<OverrideViolation> validate_overrides(const AieIrGraph& graph,
                                                  const DeviceDesc& device);

// Deterministic text form of the graph for --dump-ir golden tests.
std::string dump_ir(const AieIrGraph& graph);

// Pass bookkeeping: names in pipeline order.
const std::vector<std::string>& pass_names();

} // namespace aiegrid
