#pragma once

#include <cassert>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oneshot/errors.hpp"

namespace oneshot {

/// Equispaced nodes on [0,1], x_i = i*h with h = 1/(n-1).
struct Grid1D {
    int n = 0;
    double h = 0.0;

    static Grid1D uniform(int n);
    double x(int i) const { return i * h; }
    std::size_t node_count() const { return static_cast<std::size_t>(n); }
    bool operator==(const Grid1D&) const = default;
};

/// Equispaced space-time grid on [0,1]x[0,1]. Node (i,j) sits at (i*hx, j*ht)
/// and is stored at index j*nx + i (time index outermost).
struct GridST {
    int nx = 0;
    int nt = 0;
    double hx = 0.0;
    double ht = 0.0;

    static GridST uniform(int nx, int nt);
    double x(int i) const { return i * hx; }
    double t(int j) const { return j * ht; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    std::size_t node_count() const { return static_cast<std::size_t>(nx) * nt; }
    bool is_boundary_or_initial(int i, int j) const { return i == 0 || i == nx - 1 || j == 0; }
    bool operator==(const GridST&) const = default;
};

using AnyGrid = std::variant<Grid1D, GridST>;

std::size_t node_count(const AnyGrid& g);

/// Nodal values of a solution or forcing on a grid.
struct Field {
    AnyGrid grid;
    std::vector<double> values;

    Field() : grid(Grid1D{}) {}
    Field(Grid1D g, std::vector<double> v);
    Field(GridST g, std::vector<double> v);
    static Field zeros(const AnyGrid& g);

    bool is_spatial() const { return std::holds_alternative<Grid1D>(grid); }
    const Grid1D& grid1d() const { return std::get<Grid1D>(grid); }
    const GridST& grid_st() const { return std::get<GridST>(grid); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const { return values.size(); }

    /// Throws if any entry is non-finite.
    void check_finite(const std::string& context) const;
};

enum class EquationKind { Poisson1D, LinearDiffusion, NonlinearDiffusionReaction };

std::string to_string(EquationKind k);
EquationKind equation_kind_from_string(const std::string& s);

/// PDE descriptor. All three benchmarks use zero Dirichlet (and zero initial)
/// conditions, so the boundary data is implicit.
struct EquationSpec {
    EquationKind kind = EquationKind::Poisson1D;
    double diffusion = 0.01;               // D, diffusion kinds only
    std::optional<double> reaction;        // k, nonlinear kind only

    static EquationSpec poisson();
    static EquationSpec linear_diffusion(double d = 0.01);
    static EquationSpec nonlinear_dr(double d = 0.01, double k = 0.01);
    bool is_time_dependent() const { return kind != EquationKind::Poisson1D; }
    void validate() const;
};

/// Injection of a dense field onto a nested coarse grid (no averaging).
Field restrict_to(const Field& dense, const Grid1D& coarse);
Field restrict_to(const Field& dense, const GridST& coarse);
Field restrict_to(const Field& dense, const AnyGrid& coarse);

/// ||pred - ref||_2 / ||ref||_2 over all nodes, plain vector norm.
double l2_relative_error(const Field& pred, const Field& ref);

}  // namespace oneshot
