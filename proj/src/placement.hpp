// Chain placement on the 2D grid: transition-cost objective, greedy
// baselines, and an exact branch-and-bound search with admissible pruning.
//
// Port convention (documented, used consistently here and in the tests):
// inputs enter at a block's leftmost column, outputs leave at its rightmost
// column, both at the block's bottom row; cascades run west to east and
// memory tiles sit along the bottom edge. r_top is the topmost occupied row.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ir.hpp"

namespace aiegrid {

struct BlockInstance {
    std::string id;
    int width = 1;   // cascade length
    int height = 1;  // cascade count
    std::optional<GridPos> pin;

    int c_in(const GridPos& a) const { return a.col; }
    int c_out(const GridPos& a) const { return a.col + width - 1; }
    int r_in(const GridPos& a) const { return a.row; }
    int r_out(const GridPos& a) const { return a.row; }
    int r_top(const GridPos& a) const { return a.row + height - 1; }
};

struct PlacementInstance {
    int cols = 0;
    int rows = 0;
    double lambda = 1.0;
    double mu = 0.05;
    GridPos start{0, 0};
    std::vector<BlockInstance> blocks; // chain order
};

struct PlacementSolution {
    std::vector<GridPos> anchors;
    double cost = 0.0;
    bool legal = false;
    bool complete_search = true; // false when a node limit stopped the search
    int64_t nodes_explored = 0;
};

// J = sum over consecutive pairs of |c_out - c_in| + lambda*|r_out - r_in|,
// plus mu * r_top for every block. The last block contributes only its
// mu-term. Terms accumulate in block order so incremental search costs match
// bit-for-bit.
double cost_J(const PlacementInstance& inst, const std::vector<GridPos>& anchors);

// Spec'd lower bound for a placed prefix: the accumulated J of the prefix
// and zero for everything unplaced. Admissible because every remaining term
// is nonnegative.
double lower_bound(const PlacementInstance& inst, const std::vector<GridPos>& prefix);

// Tighter internal bound used for pruning, still admissible: remaining
// transitions cost at least min(1, lambda) each (consecutive blocks cannot
// share their in/out port cell), and a remaining block's r_top is at least
// height - 1.
double remaining_bound(const PlacementInstance& inst, size_t placed_count);

enum class GreedyMode { right, up };

// Deterministic baselines: next block immediately to the right (wrapping to
// the row band above when the grid edge is hit) or directly above (wrapping
// to the next column band).
PlacementSolution place_greedy(const PlacementInstance& inst, GreedyMode mode);

// Exact search: anchors enumerated row-major ascending, incremental J,
// admissible pruning against the incumbent. Returns the minimum-J solution
// (ties: lexicographically smallest anchor sequence in enumeration order).
// node_limit > 0 caps explored placements and returns the best incumbent.
PlacementSolution place_bnb(const PlacementInstance& inst, int64_t node_limit = 0);

bool blocks_overlap(const BlockInstance& a, const GridPos& pa, const BlockInstance& b,
                    const GridPos& pb);
bool block_in_bounds(const PlacementInstance& inst, const BlockInstance& b, const GridPos& p);

// Fig-3-style renderings: ASCII grid (top row printed first) and SVG.
std::string render_ascii(const PlacementInstance& inst, const PlacementSolution& sol);
std::string render_svg(const PlacementInstance& inst, const PlacementSolution& sol);

PlacementInstance placement_instance_from_json(const std::string& text);
std::string placement_solution_to_json(const PlacementInstance& inst,
                                       const PlacementSolution& sol);

} // namespace aiegrid
