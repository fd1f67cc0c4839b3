#pragma once

#include <optional>

#include "oneshot/local_operator.hpp"

namespace oneshot {

/// Meshfree prediction: a coordinate network u_hat(x) trained so that u_hat is
/// a fixed point of the frozen local operator on the interior collocation set
/// and satisfies the (zero Dirichlet) conditions on the boundary set.
struct LoinnConfig {
    MlpConfig net_config;     // input_dim is overwritten with the grid dimension
    bool corrected = false;   // cLOINN: u_hat(x) = N(x) + u0(x)
    double interior_weight = 1.0;
    double boundary_weight = 1.0;
    TrainBudget budget;
    int patience = 0;  // Adam plateau stop (0 = run the full budget)
    /// The squared-residual loss weights smooth solution-error modes by the
    /// fourth power of the discrete operator's smallest eigenvalues, so
    /// first-order steps stall far from the collocation optimum. A damped
    /// Gauss-Newton polish (normal equations solved matrix-free by conjugate
    /// gradients) recovers those modes; 0 outer iterations disables it.
    int gauss_newton_iters = 40;
    int gauss_newton_cg_iters = 64;
    /// Zero the output layer at init so training starts from u_hat = u0
    /// (corrected) or u_hat = 0; hidden layers keep their random init.
    bool zero_output_init = true;

    /// Collocation sets; empty optionals mean "all admissible anchors" and
    /// "all boundary/initial nodes". Custom interior nodes must be admissible
    /// anchors, custom boundary nodes must lie on the boundary/initial set.
    std::optional<std::vector<std::size_t>> interior_nodes;
    std::optional<std::vector<std::size_t>> boundary_nodes;
};

/// Two-term loss: mean squared fixed-point discrepancy over the interior set
/// plus mean squared boundary violation. The gradient flows through both the
/// direct u_hat evaluation and the frozen operator's u inputs; the operator's
/// parameters receive no updates. u0 is required iff cfg.corrected.
std::pair<double, std::vector<double>> loinn_loss(const Mlp& net, const LocalOperator& op,
                                                  const AnyGrid& grid, const Field& f,
                                                  const Field* u0, const LoinnConfig& cfg);

struct LoinnResult {
    Field u_hat;  // evaluated through the net on the coarse grid, boundary included
    TrainRecord adam;
    TrainRecord lbfgs;
    TrainRecord gauss_newton;
};

LoinnResult train_loinn(const LocalOperator& op, const AnyGrid& grid, const Field& f,
                        const Field* u0, const LoinnConfig& cfg);

/// Boundary/initial node indices of a grid (1D: both ends; space-time: j = 0,
/// i = 0 and i = nx-1), each node listed once.
std::vector<std::size_t> boundary_node_indices(const AnyGrid& grid);

}  // namespace oneshot
