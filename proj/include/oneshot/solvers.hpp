#pragma once

#include <string>

#include "oneshot/grid.hpp"

namespace oneshot {

struct SolverReport {
    std::string scheme;
    std::string grid;
    double residual_norm = 0.0;
    int steps = 0;
};

/// Central-difference Poisson solve on [0,1] with zero Dirichlet ends,
/// (u_{i-1} - 2 u_i + u_{i+1}) / h^2 = f_i, direct tridiagonal elimination.
Field solve_poisson(const Field& f, SolverReport* report = nullptr);

/// du/dt = D u_xx + f(x), zero boundary and initial conditions. Backward Euler
/// in time, central differences in space; f is a function of x broadcast over
/// time.
Field solve_linear_diffusion(const Field& f, const EquationSpec& eq, const GridST& grid,
                             SolverReport* report = nullptr);

/// du/dt = D u_xx + k u^2 + f(x), zero initial and boundary conditions.
/// Diffusion implicit, reaction explicit from the previous time level.
/// Throws BlowUp if the stepping produces non-finite values.
Field solve_nonlinear_dr(const Field& f, const EquationSpec& eq, const GridST& grid,
                         SolverReport* report = nullptr);

/// Ground-truth solve dispatched on the equation kind. For Poisson the result
/// lives on `spatial`; otherwise on `spacetime`.
Field solve_reference(const EquationSpec& eq, const Field& f, const Grid1D& spatial,
                      const GridST& spacetime, SolverReport* report = nullptr);

}  // namespace oneshot
