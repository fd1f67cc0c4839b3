#pragma once

#include "oneshot/local_operator.hpp"

namespace oneshot {

struct FpiConfig {
    double tol = 1e-8;                  // max-norm of the per-sweep update
    int max_iter = 100000;
    double divergence_threshold = 1e6;  // max-norm blow-up bound
    double relaxation = 1.0;            // omega in (0,1]; 1 = plain Jacobi update

    void validate() const;
};

struct FpiResult {
    Field u;
    int iterations = 0;
    bool converged = false;
    bool diverged = false;  // blow-up past the threshold (a reported outcome, not an error)
    std::vector<double> residual_history;  // per-sweep max-norm update sizes
};

/// Mesh-based fixed-point prediction: synchronous (Jacobi-style) sweeps of the
/// local operator over every admissible anchor, boundary/initial nodes
/// overwritten with the exact (zero) condition values before each global
/// update.
FpiResult fpi_solve(const LocalOperator& op, const Field& f, const Field& u0,
                    const EquationSpec& eq, const FpiConfig& cfg = {});

}  // namespace oneshot
