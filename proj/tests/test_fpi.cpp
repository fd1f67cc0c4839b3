#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "oneshot/fpi.hpp"
#include "oneshot/solvers.hpp"

using namespace oneshot;

namespace {

Field sin_forcing(const Grid1D& g, double amplitude, double freq = 2.0) {
    std::vector<double> v(g.node_count());
    for (int i = 0; i < g.n; ++i)
        v[i] = amplitude * std::sin(freq * std::numbers::pi * g.x(i));
    return Field(g, v);
}

}  // namespace

TEST_CASE("iterating the closed-form stencil map reproduces the direct solve") {
    Grid1D g = Grid1D::uniform(101);
    Field f = sin_forcing(g, 1.0);
    Field u_ref = solve_poisson(f);

    LocalOperator op =
        oracle_stencil_map(EquationSpec::poisson(), StencilSpec::preset("poisson_g1"), g.h);
    Field u0(g, std::vector<double>(101, 0.0));
    // The per-sweep update tolerance is amplified by ~2/(pi h)^2 in the final
    // error, so a tight tolerance is needed to compare against the solver.
    FpiConfig cfg;
    cfg.tol = 1e-12;
    FpiResult res = fpi_solve(op, f, u0, EquationSpec::poisson(), cfg);
    CHECK(res.converged);
    CHECK(!res.diverged);
    CHECK(l2_relative_error(res.u, u_ref) < 1e-7);
    CHECK(res.u[0] == 0.0);
    CHECK(res.u[100] == 0.0);
}

TEST_CASE("the direct solution is an exact fixed point") {
    Grid1D g = Grid1D::uniform(101);
    Field f = sin_forcing(g, 0.9);
    Field u_ref = solve_poisson(f);
    LocalOperator op =
        oracle_stencil_map(EquationSpec::poisson(), StencilSpec::preset("poisson_g1"), g.h);
    // one sweep from the solution must move (almost) nowhere
    FpiConfig cfg;
    cfg.max_iter = 1;
    cfg.tol = 1e-12;
    FpiResult res = fpi_solve(op, f, u_ref, EquationSpec::poisson(), cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < res.u.size(); ++i)
        worst = std::max(worst, std::abs(res.u[i] - u_ref[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("time-stepping stencil iteration matches the marching solver") {
    GridST st = GridST::uniform(101, 101);
    Grid1D gx = Grid1D::uniform(101);
    EquationSpec eq = EquationSpec::linear_diffusion(0.01);
    Field f = sin_forcing(gx, 0.9);
    Field u_ref = solve_linear_diffusion(f, eq, st);

    LocalOperator op = oracle_stencil_map(eq, StencilSpec::preset("diffusion_g1"), st.hx, st.ht);
    Field u0(st, std::vector<double>(st.node_count(), 0.0));
    FpiResult res = fpi_solve(op, f, u0, eq);
    CHECK(res.converged);
    CHECK(l2_relative_error(res.u, u_ref) < 1e-6);
}

TEST_CASE("an expanding map is flagged diverged, not thrown") {
    // Hand-built linear net computing 1.1 * (u_l + u_r): Jacobi sweeps with
    // this update have spectral radius > 1 and must blow up.
    MlpConfig cfg_net;
    cfg_net.input_dim = 3;
    cfg_net.width = 4;
    cfg_net.depth = 2;
    cfg_net.activation = MlpConfig::Activation::Identity;
    Mlp net = Mlp::init(cfg_net);
    std::fill(net.params.begin(), net.params.end(), 0.0);
    auto layers = net.layers();
    net.params[layers[0].w_off + 0 * 3 + 0] = 1.0;  // h0 = u_l
    net.params[layers[0].w_off + 1 * 3 + 1] = 1.0;  // h1 = u_r
    net.params[layers[1].w_off + 0 * 4 + 0] = 1.0;
    net.params[layers[1].w_off + 1 * 4 + 1] = 1.0;
    net.params[layers[2].w_off + 0] = 1.1;
    net.params[layers[2].w_off + 1] = 1.1;

    LocalOperator op;
    op.stencil = StencilSpec::preset("poisson_g1");
    op.equation = EquationSpec::poisson();
    op.hx = 0.01;
    op.net = net;
    op.norm = Normalization::identity(3);

    Grid1D g = Grid1D::uniform(101);
    Field f = sin_forcing(g, 1.0);
    Field u0(g, std::vector<double>(101, 0.1));
    FpiResult res = fpi_solve(op, f, u0, EquationSpec::poisson());
    CHECK(res.diverged);
    CHECK(!res.converged);
    CHECK(res.iterations < FpiConfig{}.max_iter);
}

TEST_CASE("an exhausted sweep budget counts as divergence") {
    Grid1D g = Grid1D::uniform(101);
    Field f = sin_forcing(g, 1.0);
    Field u0(g, std::vector<double>(101, 0.0));
    LocalOperator op =
        oracle_stencil_map(EquationSpec::poisson(), StencilSpec::preset("poisson_g1"), g.h);
    FpiConfig cfg;
    cfg.max_iter = 3;
    FpiResult res = fpi_solve(op, f, u0, EquationSpec::poisson(), cfg);
    CHECK(!res.converged);
    CHECK(res.diverged);
    CHECK(res.iterations == 3);
    CHECK(res.residual_history.size() == 3);
}

TEST_CASE("boundary values stay exactly zero throughout") {
    GridST st = GridST::uniform(51, 51);
    Grid1D gx = Grid1D::uniform(51);
    EquationSpec eq = EquationSpec::linear_diffusion(0.01);
    Field f = sin_forcing(gx, 0.9);
    LocalOperator op = oracle_stencil_map(eq, StencilSpec::preset("diffusion_g1"), st.hx, st.ht);
    Field u0(st, std::vector<double>(st.node_count(), 0.5));  // deliberately wrong on the boundary
    FpiConfig cfg;
    cfg.max_iter = 7;
    FpiResult res = fpi_solve(op, f, u0, eq, cfg);
    for (int i = 0; i < st.nx; ++i) CHECK(res.u.values[st.index(i, 0)] == 0.0);
    for (int j = 0; j < st.nt; ++j) {
        CHECK(res.u.values[st.index(0, j)] == 0.0);
        CHECK(res.u.values[st.index(st.nx - 1, j)] == 0.0);
    }
}

TEST_CASE("under-relaxation still reaches the same fixed point") {
    Grid1D g = Grid1D::uniform(51);
    Field f = sin_forcing(g, 1.0);
    Field u_ref = solve_poisson(f);
    LocalOperator op =
        oracle_stencil_map(EquationSpec::poisson(), StencilSpec::preset("poisson_g1"), g.h);
    Field u0(g, std::vector<double>(51, 0.0));
    FpiConfig cfg;
    cfg.relaxation = 0.7;
    cfg.tol = 1e-12;
    FpiResult res = fpi_solve(op, f, u0, EquationSpec::poisson(), cfg);
    CHECK(res.converged);
    CHECK(l2_relative_error(res.u, u_ref) < 1e-7);
}

TEST_CASE("configuration validation rejects bad settings") {
    FpiConfig cfg;
    cfg.relaxation = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = FpiConfig{};
    cfg.max_iter = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
