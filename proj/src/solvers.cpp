#include "oneshot/solvers.hpp"

#include <cmath>
#include <vector>

namespace oneshot {

namespace {

/// Constant-coefficient symmetric tridiagonal solver (diag d, off-diagonal o)
/// with the forward-elimination pivots precomputed, so one factorization
/// serves every time step.
class TridiagConst {
public:
    TridiagConst(std::size_t m, double diag, double off) : off_(off), pivot_(m), scratch_(m) {
        pivot_[0] = diag;
        for (std::size_t i = 1; i < m; ++i) pivot_[i] = diag - off * off / pivot_[i - 1];
    }

    // Solves in place: rhs becomes the solution.
    void solve(std::vector<double>& rhs) const {
        const std::size_t m = pivot_.size();
        scratch_[0] = rhs[0];
        for (std::size_t i = 1; i < m; ++i)
            scratch_[i] = rhs[i] - off_ * scratch_[i - 1] / pivot_[i - 1];
        rhs[m - 1] = scratch_[m - 1] / pivot_[m - 1];
        for (std::size_t i = m - 1; i-- > 0;)
            rhs[i] = (scratch_[i] - off_ * rhs[i + 1]) / pivot_[i];
    }

private:
    double off_;
    std::vector<double> pivot_;
    mutable std::vector<double> scratch_;
};

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

const Grid1D& spatial_grid_of(const Field& f) {
    if (!f.is_spatial()) throw GridMismatch("forcing must live on a spatial grid");
    return f.grid1d();
}

Field step_diffusion(const Field& f, const EquationSpec& eq, const GridST& grid, bool nonlinear,
                     SolverReport* report) {
    eq.validate();
    const Grid1D& fg = spatial_grid_of(f);
    if (fg.n != grid.nx || std::abs(fg.h - grid.hx) > 1e-12)
        throw GridMismatch("forcing grid does not match the spatial part of the space-time grid");

    const int nx = grid.nx;
    const int m = nx - 2;  // interior unknowns
    const double r = eq.diffusion * grid.ht / (grid.hx * grid.hx);
    const double k = nonlinear ? eq.reaction.value() : 0.0;
    TridiagConst solver(m, 1.0 + 2.0 * r, -r);

    Field u = Field::zeros(grid);  // zero initial condition at j = 0
    std::vector<double> rhs(m);
    for (int j = 1; j < grid.nt; ++j) {
        const double* prev = u.values.data() + grid.index(0, j - 1);
        for (int i = 1; i < nx - 1; ++i) {
            double v = prev[i] + grid.ht * f.values[i];
            if (nonlinear) v += grid.ht * k * prev[i] * prev[i];
            rhs[i - 1] = v;
        }
        solver.solve(rhs);
        double* cur = u.values.data() + grid.index(0, j);
        cur[0] = 0.0;
        cur[nx - 1] = 0.0;
        for (int i = 1; i < nx - 1; ++i) {
            if (!std::isfinite(rhs[i - 1]))
                throw BlowUp("diffusion stepping produced non-finite values at time level " +
                             std::to_string(j));
            cur[i] = rhs[i - 1];
        }
    }

    if (report) {
        report->scheme = nonlinear ? "backward-euler central, explicit reaction"
                                   : "backward-euler central";
        report->grid = std::to_string(grid.nx) + "x" + std::to_string(grid.nt);
        report->steps = grid.nt - 1;
        // Residual of the final implicit step, a cheap consistency check.
        double res = 0.0;
        const double* prev = u.values.data() + grid.index(0, grid.nt - 2);
        const double* cur = u.values.data() + grid.index(0, grid.nt - 1);
        for (int i = 1; i < nx - 1; ++i) {
            double lap = cur[i - 1] - 2.0 * cur[i] + cur[i + 1];
            double rhs_i = prev[i] + grid.ht * f.values[i];
            if (nonlinear) rhs_i += grid.ht * k * prev[i] * prev[i];
            double ri = cur[i] - r * lap - rhs_i;
            res += ri * ri;
        }
        report->residual_norm = std::sqrt(res);
    }
    return u;
}

}  // namespace

Field solve_poisson(const Field& f, SolverReport* report) {
    const Grid1D& g = spatial_grid_of(f);
    const int n = g.n;
    const int m = n - 2;
    const double h2 = g.h * g.h;

    TridiagConst solver(m, -2.0 / h2, 1.0 / h2);
    std::vector<double> rhs(f.values.begin() + 1, f.values.begin() + 1 + m);
    solver.solve(rhs);

    std::vector<double> u(n, 0.0);
    for (int i = 0; i < m; ++i) u[i + 1] = rhs[i];

    double res = 0.0;
    for (int i = 1; i < n - 1; ++i) {
        double ri = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2 - f.values[i];
        res += ri * ri;
    }
    if (report) {
        report->scheme = "central-difference tridiagonal";
        report->grid = std::to_string(n);
        report->residual_norm = std::sqrt(res);
        report->steps = 1;
    }
    if (std::sqrt(res) > 1e-10 * std::max(1.0, l2_norm(f.values)))
        throw BlowUp("poisson solve residual exceeds tolerance");
    return Field(g, std::move(u));
}

Field solve_linear_diffusion(const Field& f, const EquationSpec& eq, const GridST& grid,
                             SolverReport* report) {
    if (eq.kind != EquationKind::LinearDiffusion)
        throw ConfigError("solve_linear_diffusion requires the linear diffusion kind");
    return step_diffusion(f, eq, grid, false, report);
}

Field solve_nonlinear_dr(const Field& f, const EquationSpec& eq, const GridST& grid,
                         SolverReport* report) {
    if (eq.kind != EquationKind::NonlinearDiffusionReaction)
        throw ConfigError("solve_nonlinear_dr requires the nonlinear kind");
    return step_diffusion(f, eq, grid, true, report);
}

Field solve_reference(const EquationSpec& eq, const Field& f, const Grid1D& spatial,
                      const GridST& spacetime, SolverReport* report) {
    switch (eq.kind) {
        case EquationKind::Poisson1D: {
            if (f.grid1d() != spatial) throw GridMismatch("forcing not on the dense spatial grid");
            return solve_poisson(f, report);
        }
        case EquationKind::LinearDiffusion:
            return solve_linear_diffusion(f, eq, spacetime, report);
        case EquationKind::NonlinearDiffusionReaction:
            return solve_nonlinear_dr(f, eq, spacetime, report);
    }
    throw ConfigError("unknown equation kind");
}

}  // namespace oneshot
