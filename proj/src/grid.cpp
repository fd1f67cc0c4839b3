#include "oneshot/grid.hpp"

#include <cmath>

namespace oneshot {

Grid1D Grid1D::uniform(int n) {
    if (n < 3) throw ConfigError("Grid1D needs at least 3 nodes, got " + std::to_string(n));
    Grid1D g;
    g.n = n;
    g.h = 1.0 / (n - 1);
    return g;
}

GridST GridST::uniform(int nx, int nt) {
    if (nx < 3 || nt < 2)
        throw ConfigError("GridST needs nx >= 3 and nt >= 2, got " + std::to_string(nx) + "x" +
                          std::to_string(nt));
    GridST g;
    g.nx = nx;
    g.nt = nt;
    g.hx = 1.0 / (nx - 1);
    g.ht = 1.0 / (nt - 1);
    return g;
}

std::size_t node_count(const AnyGrid& g) {
    return std::visit([](const auto& gr) { return gr.node_count(); }, g);
}

Field::Field(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.node_count())
        throw DimensionMismatch("Field values length " + std::to_string(values.size()) +
                                " does not match grid node count " + std::to_string(g.node_count()));
}

Field::Field(GridST g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.node_count())
        throw DimensionMismatch("Field values length " + std::to_string(values.size()) +
                                " does not match grid node count " + std::to_string(g.node_count()));
}

Field Field::zeros(const AnyGrid& g) {
    Field f;
    f.grid = g;
    f.values.assign(node_count(g), 0.0);
    return f;
}

void Field::check_finite(const std::string& context) const {
    for (double v : values)
        if (!std::isfinite(v)) throw BlowUp("non-finite field value in " + context);
}

std::string to_string(EquationKind k) {
    switch (k) {
        case EquationKind::Poisson1D: return "poisson";
        case EquationKind::LinearDiffusion: return "linear_diffusion";
        case EquationKind::NonlinearDiffusionReaction: return "nonlinear_dr";
    }
    return "?";
}

EquationKind equation_kind_from_string(const std::string& s) {
    if (s == "poisson") return EquationKind::Poisson1D;
    if (s == "linear_diffusion") return EquationKind::LinearDiffusion;
    if (s == "nonlinear_dr") return EquationKind::NonlinearDiffusionReaction;
    throw ConfigError("unknown equation kind: " + s);
}

EquationSpec EquationSpec::poisson() { return EquationSpec{EquationKind::Poisson1D, 0.0, {}}; }

EquationSpec EquationSpec::linear_diffusion(double d) {
    return EquationSpec{EquationKind::LinearDiffusion, d, {}};
}

EquationSpec EquationSpec::nonlinear_dr(double d, double k) {
    return EquationSpec{EquationKind::NonlinearDiffusionReaction, d, k};
}

void EquationSpec::validate() const {
    if (kind != EquationKind::Poisson1D && diffusion <= 0.0)
        throw ConfigError("diffusion coefficient must be positive");
    if (reaction.has_value() && kind != EquationKind::NonlinearDiffusionReaction)
        throw ConfigError("reaction rate only applies to the nonlinear kind");
    if (kind == EquationKind::NonlinearDiffusionReaction && !reaction.has_value())
        throw ConfigError("nonlinear kind requires a reaction rate");
}

namespace {

// Spacing ratio must be an integer within 1e-9 for the coarse nodes to be a
// subset of the dense nodes.
// Spacing ratio within 1e-9 of an integer means the coarse nodes are a
// subset of the dense nodes; restriction is then exact subsampling.
int nesting_ratio_or_zero(double coarse_h, double dense_h) {
    double ratio = coarse_h / dense_h;
    double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) return 0;
    return static_cast<int>(rounded);
}

// Fractional dense index of a coarse node plus its interpolation weight.
// Non-nested grids fall back to piecewise-linear sampling between the two
// bracketing dense nodes.
struct InterpCoord {
    int i0;
    double w;  // value = (1-w)*v[i0] + w*v[i0+1]
};

InterpCoord interp_coord(int coarse_index, double coarse_h, double dense_h, int dense_n) {
    double s = coarse_index * coarse_h / dense_h;
    int i0 = static_cast<int>(std::floor(s));
    if (i0 >= dense_n - 1) return {dense_n - 2, 1.0};
    return {i0, s - i0};
}

}  // namespace

Field restrict_to(const Field& dense, const Grid1D& coarse) {
    const Grid1D& dg = dense.grid1d();
    std::vector<double> out(coarse.node_count());
    if (int r = nesting_ratio_or_zero(coarse.h, dg.h)) {
        for (int i = 0; i < coarse.n; ++i) out[i] = dense.values[static_cast<std::size_t>(i) * r];
    } else {
        for (int i = 0; i < coarse.n; ++i) {
            InterpCoord c = interp_coord(i, coarse.h, dg.h, dg.n);
            out[i] = (1.0 - c.w) * dense.values[c.i0] + c.w * dense.values[c.i0 + 1];
        }
    }
    return Field(coarse, std::move(out));
}

Field restrict_to(const Field& dense, const GridST& coarse) {
    const GridST& dg = dense.grid_st();
    std::vector<double> out(coarse.node_count());
    int rx = nesting_ratio_or_zero(coarse.hx, dg.hx);
    int rt = nesting_ratio_or_zero(coarse.ht, dg.ht);
    if (rx && rt) {
        for (int j = 0; j < coarse.nt; ++j)
            for (int i = 0; i < coarse.nx; ++i)
                out[coarse.index(i, j)] = dense.values[dg.index(i * rx, j * rt)];
    } else {
        for (int j = 0; j < coarse.nt; ++j) {
            InterpCoord ct = interp_coord(j, coarse.ht, dg.ht, dg.nt);
            for (int i = 0; i < coarse.nx; ++i) {
                InterpCoord cx = interp_coord(i, coarse.hx, dg.hx, dg.nx);
                double lo = (1.0 - cx.w) * dense.values[dg.index(cx.i0, ct.i0)] +
                            cx.w * dense.values[dg.index(cx.i0 + 1, ct.i0)];
                double hi = (1.0 - cx.w) * dense.values[dg.index(cx.i0, ct.i0 + 1)] +
                            cx.w * dense.values[dg.index(cx.i0 + 1, ct.i0 + 1)];
                out[coarse.index(i, j)] = (1.0 - ct.w) * lo + ct.w * hi;
            }
        }
    }
    return Field(coarse, std::move(out));
}

Field restrict_to(const Field& dense, const AnyGrid& coarse) {
    return std::visit([&](const auto& g) { return restrict_to(dense, g); }, coarse);
}

double l2_relative_error(const Field& pred, const Field& ref) {
    if (pred.grid != ref.grid) throw GridMismatch("l2_relative_error: fields on different grids");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        double d = pred.values[i] - ref.values[i];
        num += d * d;
        den += ref.values[i] * ref.values[i];
    }
    if (den == 0.0) throw DegenerateReference("l2_relative_error: reference field is identically zero");
    return std::sqrt(num) / std::sqrt(den);
}

}  // namespace oneshot
