#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "oneshot/grid.hpp"
#include "oneshot/mlp.hpp"

namespace oneshot {

/// Relative node offset inside a local domain; dj is the time offset and stays
/// zero for purely spatial stencils.
struct Offset {
    int di = 0;
    int dj = 0;
    bool operator==(const Offset&) const = default;
};

/// Local domain: which relative u and f values feed the operator. The target
/// is always the center node (offset 0).
struct StencilSpec {
    std::string name;
    bool space_time = false;
    std::vector<Offset> u_offsets;
    std::vector<Offset> f_offsets;

    /// poisson_g1, poisson_g2, diffusion_g1, diffusion_g2.
    static StencilSpec preset(const std::string& name);
    static std::vector<std::string> preset_names();

    int input_dim() const { return static_cast<int>(u_offsets.size() + f_offsets.size()); }
    void validate() const;
};

nlohmann::json stencil_to_json(const StencilSpec& s);
StencilSpec stencil_from_json(const nlohmann::json& j);

/// Gather plan for one (grid, stencil) pair: flat node indices of every
/// admissible anchor plus, per offset, the node to read for each anchor.
/// Admissible anchors are the interior nodes (1D) or i in [1, nx-2],
/// j in [1, nt-1] (space-time) whose offsets stay inside the grid; anchors are
/// enumerated row-major. For space-time grids the f indices address the
/// spatial forcing grid (f depends on x only).
struct AnchorSet {
    std::vector<std::size_t> anchors;
    std::vector<std::vector<std::size_t>> u_nodes;  // [u_offset][anchor]
    std::vector<std::vector<std::size_t>> f_nodes;  // [f_offset][anchor]

    std::size_t count() const { return anchors.size(); }
};

AnchorSet enumerate_anchors(const AnyGrid& grid, const StencilSpec& stencil);

/// Closed-form admissible-anchor count for a grid/stencil pair.
std::size_t admissible_anchor_count(const AnyGrid& grid, const StencilSpec& stencil);

/// Fills X ([input_dim][count], u rows first) from the fields along a gather
/// plan. `u_only` skips the f rows (they are loop-invariant in FPI sweeps).
void gather_stencil_inputs(const AnchorSet& plan, const Field& u, const Field& f, double* x,
                           bool u_only = false);

/// One-shot training set: one sample per admissible anchor, inputs in stencil
/// order (u offsets then f offsets), target u at the anchor.
Dataset extract_dataset(const Field& u_t, const Field& f_t, const StencilSpec& stencil);

}  // namespace oneshot
