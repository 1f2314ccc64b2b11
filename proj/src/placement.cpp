#include "placement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace aiegrid {

using nlohmann::json;

bool blocks_overlap(const BlockInstance& a, const GridPos& pa, const BlockInstance& b,
                    const GridPos& pb) {
    const bool col_disjoint = pa.col + a.width <= pb.col || pb.col + b.width <= pa.col;
    const bool row_disjoint = pa.row + a.height <= pb.row || pb.row + b.height <= pa.row;
    return !(col_disjoint || row_disjoint);
}

bool block_in_bounds(const PlacementInstance& inst, const BlockInstance& b, const GridPos& p) {
    return p.col >= 0 && p.row >= 0 && p.col + b.width <= inst.cols &&
           p.row + b.height <= inst.rows;
}

namespace {

// Per-block cost increment: the transition from the previous block plus this
// block's mu-term. Summing these in order defines J.
double step_cost(const PlacementInstance& inst, size_t i, const std::vector<GridPos>& anchors) {
    const BlockInstance& b = inst.blocks[i];
    double cost = inst.mu * b.r_top(anchors[i]);
    if (i > 0) {
        const BlockInstance& prev = inst.blocks[i - 1];
        cost += std::abs(prev.c_out(anchors[i - 1]) - b.c_in(anchors[i])) +
                inst.lambda * std::abs(prev.r_out(anchors[i - 1]) - b.r_in(anchors[i]));
    }
    return cost;
}

} // namespace

double cost_J(const PlacementInstance& inst, const std::vector<GridPos>& anchors) {
    if (anchors.size() != inst.blocks.size())
        throw ValidationError("cost_J: anchor count != block count");
    double j = 0.0;
    for (size_t i = 0; i < anchors.size(); ++i) j += step_cost(inst, i, anchors);
    return j;
}

double lower_bound(const PlacementInstance& inst, const std::vector<GridPos>& prefix) {
    double j = 0.0;
    for (size_t i = 0; i < prefix.size(); ++i) j += step_cost(inst, i, prefix);
    return j;
}

double remaining_bound(const PlacementInstance& inst, size_t placed_count) {
    double bound = 0.0;
    const double per_transition = std::min(1.0, inst.lambda);
    for (size_t i = placed_count; i < inst.blocks.size(); ++i) {
        bound += inst.mu * (inst.blocks[i].height - 1);
        if (i > 0) bound += per_transition;
    }
    return bound;
}

PlacementSolution place_greedy(const PlacementInstance& inst, GreedyMode mode) {
    PlacementSolution sol;
    sol.anchors.reserve(inst.blocks.size());

    auto legal = [&](size_t i, const GridPos& p) {
        if (!block_in_bounds(inst, inst.blocks[i], p)) return false;
        for (size_t j = 0; j < sol.anchors.size(); ++j)
            if (blocks_overlap(inst.blocks[i], p, inst.blocks[j], sol.anchors[j])) return false;
        return true;
    };

    if (mode == GreedyMode::right) {
        int band_row = inst.start.row;
        int band_height = 0;
        int cursor = inst.start.col;
        for (size_t i = 0; i < inst.blocks.size(); ++i) {
            const BlockInstance& b = inst.blocks[i];
            GridPos p;
            if (b.pin) {
                p = *b.pin;
                if (!legal(i, p))
                    throw InfeasibleError("greedy placement: pinned block '" + b.id +
                                          "' is not placeable");
                cursor = p.col + b.width;
                band_row = p.row;
                band_height = std::max(band_height, b.height);
            } else {
                // Immediately to the right; wrap into the band above on
                // boundary collision or overlap.
                int c = cursor, r = band_row, bh = band_height;
                while (true) {
                    if (c + b.width > inst.cols) {
                        r += std::max(bh, 1);
                        c = 0;
                        bh = 0;
                        if (r + b.height > inst.rows)
                            throw InfeasibleError("greedy placement: block '" + b.id +
                                                  "' does not fit");
                        continue;
                    }
                    if (legal(i, {c, r})) break;
                    ++c;
                }
                p = {c, r};
                cursor = c + b.width;
                band_row = r;
                band_height = std::max(bh, b.height);
            }
            sol.anchors.push_back(p);
        }
    } else {
        int band_col = inst.start.col;
        int band_width = 0;
        int cursor = inst.start.row;
        for (size_t i = 0; i < inst.blocks.size(); ++i) {
            const BlockInstance& b = inst.blocks[i];
            GridPos p;
            if (b.pin) {
                p = *b.pin;
                if (!legal(i, p))
                    throw InfeasibleError("greedy placement: pinned block '" + b.id +
                                          "' is not placeable");
                cursor = p.row + b.height;
                band_col = p.col;
                band_width = std::max(band_width, b.width);
            } else {
                // Directly above; wrap into the next column band at the top.
                int c = band_col, r = cursor, bw = band_width;
                while (true) {
                    if (r + b.height > inst.rows) {
                        c += std::max(bw, 1);
                        r = 0;
                        bw = 0;
                        if (c + b.width > inst.cols)
                            throw InfeasibleError("greedy placement: block '" + b.id +
                                                  "' does not fit");
                        continue;
                    }
                    if (legal(i, {c, r})) break;
                    ++r;
                }
                p = {c, r};
                cursor = r + b.height;
                band_col = c;
                band_width = std::max(bw, b.width);
            }
            sol.anchors.push_back(p);
        }
    }

    sol.cost = cost_J(inst, sol.anchors);
    sol.legal = true;
    return sol;
}

namespace {

struct BnbState {
    const PlacementInstance& inst;
    int64_t node_limit;
    int64_t nodes = 0;
    bool truncated = false;
    std::vector<GridPos> current;
    std::vector<double> cost_stack; // cost after placing block i
    std::vector<GridPos> best;
    double best_cost = 0;
    bool have_best = false;
    size_t deepest = 0;

    explicit BnbState(const PlacementInstance& i, int64_t limit)
        : inst(i), node_limit(limit) {}

    bool legal_at(size_t i, const GridPos& p) const {
        if (!block_in_bounds(inst, inst.blocks[i], p)) return false;
        for (size_t j = 0; j < current.size(); ++j)
            if (blocks_overlap(inst.blocks[i], p, inst.blocks[j], current[j])) return false;
        return true;
    }

    void search(size_t i) {
        if (truncated) return;
        if (i == inst.blocks.size()) {
            const double cost = cost_stack.empty() ? 0.0 : cost_stack.back();
            if (!have_best || cost < best_cost) {
                best = current;
                best_cost = cost;
                have_best = true;
            }
            return;
        }
        const double so_far = cost_stack.empty() ? 0.0 : cost_stack.back();
        const BlockInstance& b = inst.blocks[i];

        auto try_anchor = [&](const GridPos& p) {
            if (node_limit > 0 && nodes >= node_limit) {
                truncated = true;
                return;
            }
            ++nodes;
            if (!legal_at(i, p)) return;
            current.push_back(p);
            deepest = std::max(deepest, current.size());
            const double cost = so_far + step_cost(inst, i, current);
            // Prune: even an optimistic completion cannot beat the incumbent.
            if (!have_best || cost + remaining_bound(inst, i + 1) < best_cost) {
                cost_stack.push_back(cost);
                search(i + 1);
                cost_stack.pop_back();
            }
            current.pop_back();
        };

        if (i == 0) {
            // The first block is anchored at the start unless pinned elsewhere.
            try_anchor(b.pin ? *b.pin : inst.start);
            return;
        }
        if (b.pin) {
            try_anchor(*b.pin);
            return;
        }
        for (int r = 0; r < inst.rows && !truncated; ++r) {
            if (r + b.height > inst.rows) break;
            for (int c = 0; c + b.width <= inst.cols && !truncated; ++c)
                try_anchor({c, r});
        }
    }
};

} // namespace

PlacementSolution place_bnb(const PlacementInstance& inst, int64_t node_limit) {
    if (inst.cols < 1 || inst.rows < 1)
        throw ValidationError("placement: grid must be at least 1x1");
    int64_t area = 0;
    for (const auto& b : inst.blocks) {
        if (b.width < 1 || b.width > inst.cols || b.height < 1 || b.height > inst.rows)
            throw InfeasibleError("placement: block '" + b.id + "' exceeds the grid");
        area += int64_t(b.width) * b.height;
    }
    if (area > int64_t(inst.cols) * inst.rows)
        throw InfeasibleError("placement: total block area exceeds the grid");

    BnbState state(inst, node_limit);
    state.search(0);

    if (!state.have_best) {
        const size_t blocked = std::min(state.deepest, inst.blocks.size() - 1);
        throw InfeasibleError("placement: no legal packing; first unplaceable graph is '" +
                              inst.blocks[blocked].id + "'");
    }
    PlacementSolution sol;
    sol.anchors = state.best;
    sol.cost = state.best_cost;
    sol.legal = true;
    sol.complete_search = !state.truncated;
    sol.nodes_explored = state.nodes;
    return sol;
}

std::string render_ascii(const PlacementInstance& inst, const PlacementSolution& sol) {
    static const char* kLabels = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    std::vector<std::string> grid(size_t(inst.rows), std::string(size_t(inst.cols), '.'));
    for (size_t i = 0; i < sol.anchors.size(); ++i) {
        const auto& b = inst.blocks[i];
        const auto& p = sol.anchors[i];
        const char label = kLabels[i % 62];
        for (int r = p.row; r < p.row + b.height; ++r)
            for (int c = p.col; c < p.col + b.width; ++c) grid[size_t(r)][size_t(c)] = label;
    }
    std::ostringstream os;
    // Row 0 is the bottom edge (where the memory tiles sit); print top first.
    for (int r = inst.rows - 1; r >= 0; --r) os << grid[size_t(r)] << "\n";
    return os.str();
}

std::string render_svg(const PlacementInstance& inst, const PlacementSolution& sol) {
    const int cell = 20;
    const int w = inst.cols * cell;
    const int h = inst.rows * cell;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 << "\" height=\""
       << h + 2 << "\" viewBox=\"0 0 " << w + 2 << " " << h + 2 << "\">\n";
    os << "<rect x=\"1\" y=\"1\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"white\" stroke=\"black\"/>\n";
    for (int c = 1; c < inst.cols; ++c)
        os << "<line x1=\"" << 1 + c * cell << "\" y1=\"1\" x2=\"" << 1 + c * cell << "\" y2=\""
           << 1 + h << "\" stroke=\"#ddd\"/>\n";
    for (int r = 1; r < inst.rows; ++r)
        os << "<line x1=\"1\" y1=\"" << 1 + r * cell << "\" x2=\"" << 1 + w << "\" y2=\""
           << 1 + r * cell << "\" stroke=\"#ddd\"/>\n";
    static const char* kFills[] = {"#8dd3c7", "#ffffb3", "#bebada", "#fb8072",
                                   "#80b1d3", "#fdb462", "#b3de69", "#fccde5"};
    for (size_t i = 0; i < sol.anchors.size(); ++i) {
        const auto& b = inst.blocks[i];
        const auto& p = sol.anchors[i];
        // SVG y axis grows downward, grid rows grow upward from the bottom.
        const int x = 1 + p.col * cell;
        const int y = 1 + (inst.rows - p.row - b.height) * cell;
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << b.width * cell
           << "\" height=\"" << b.height * cell << "\" fill=\"" << kFills[i % 8]
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x + 3 << "\" y=\"" << y + 14 << "\" font-size=\"11\">" << b.id
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

PlacementInstance placement_instance_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("placement instance parse error: ") + e.what());
    }
    if (j.value("format", "") != "aiegrid-place")
        throw ValidationError("placement instance: expected format 'aiegrid-place'");
    PlacementInstance inst;
    inst.cols = j.value("cols", 0);
    inst.rows = j.value("rows", 0);
    inst.lambda = j.value("lambda", 1.0);
    inst.mu = j.value("mu", 0.05);
    if (j.contains("start")) inst.start = {j["start"][0].get<int>(), j["start"][1].get<int>()};
    if (!j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].empty())
        throw ValidationError("placement instance: 'blocks' must be a non-empty array");
    for (const auto& bj : j["blocks"]) {
        BlockInstance b;
        b.id = bj.value("id", "g" + std::to_string(inst.blocks.size()));
        b.width = bj.value("width", 0);
        b.height = bj.value("height", 0);
        if (b.width < 1 || b.height < 1)
            throw ValidationError("placement instance: block '" + b.id +
                                  "' needs positive width and height");
        if (bj.contains("pin")) b.pin = GridPos{bj["pin"][0].get<int>(), bj["pin"][1].get<int>()};
        inst.blocks.push_back(std::move(b));
    }
    return inst;
}

std::string placement_solution_to_json(const PlacementInstance& inst,
                                       const PlacementSolution& sol) {
    json j;
    j["cost"] = sol.cost;
    j["legal"] = sol.legal;
    j["complete_search"] = sol.complete_search;
    json anchors = json::object();
    for (size_t i = 0; i < sol.anchors.size(); ++i)
        anchors[inst.blocks[i].id] = {sol.anchors[i].col, sol.anchors[i].row};
    j["anchors"] = anchors;
    return j.dump(2) + "\n";
}

} // namespace aiegrid
