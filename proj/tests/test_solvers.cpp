#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "oneshot/solvers.hpp"

using namespace oneshot;

namespace {

Field constant_forcing(const Grid1D& g, double value) {
    return Field(g, std::vector<double>(g.node_count(), value));
}

Field sin_forcing(const Grid1D& g, double amplitude) {
    std::vector<double> v(g.node_count());
    for (int i = 0; i < g.n; ++i)
        v[i] = amplitude * std::sin(2.0 * std::numbers::pi * g.x(i));
    return Field(g, v);
}

}  // namespace

TEST_CASE("poisson solve is exact for quadratic solutions") {
    // u'' = 1, u(0) = u(1) = 0 has u = x(x-1)/2; central differences are exact
    // for quadratics, so only rounding error remains.
    Grid1D g = Grid1D::uniform(101);
    Field u = solve_poisson(constant_forcing(g, 1.0));
    for (int i = 0; i < g.n; ++i)
        CHECK(u[i] == doctest::Approx(g.x(i) * (g.x(i) - 1.0) / 2.0).epsilon(1e-12));
    CHECK(u[0] == 0.0);
    CHECK(u[100] == 0.0);
}

TEST_CASE("poisson discretization error decays as h^2") {
    // u'' = -4 pi^2 sin(2 pi x) has u = sin(2 pi x).
    auto error_at = [](int n) {
        Grid1D g = Grid1D::uniform(n);
        Field f = sin_forcing(g, -4.0 * std::numbers::pi * std::numbers::pi);
        Field u = solve_poisson(f);
        double err = 0.0;
        for (int i = 0; i < g.n; ++i)
            err = std::max(err, std::abs(u[i] - std::sin(2.0 * std::numbers::pi * g.x(i))));
        return err;
    };
    double e1 = error_at(51), e2 = error_at(101);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("poisson residual report is tiny") {
    Grid1D g = Grid1D::uniform(101);
    SolverReport rep;
    Field u = solve_poisson(sin_forcing(g, 1.0), &rep);
    CHECK(rep.residual_norm < 1e-12);
    CHECK(rep.scheme.find("tridiagonal") != std::string::npos);
}

TEST_CASE("linear diffusion matches the closed-form transient solution") {
    // For f = A sin(k pi x), zero initial data: the exact solution is
    // u(x,t) = A / lambda * (1 - exp(-lambda t)) * sin(k pi x) with
    // lambda = D k^2 pi^2. Compare the final slice, tolerance covering the
    // O(ht) + O(h^2) discretization error.
    Grid1D g = Grid1D::uniform(101);
    GridST st = GridST::uniform(101, 1001);
    EquationSpec eq = EquationSpec::linear_diffusion(0.01);
    double A = 0.9;
    Field f = sin_forcing(g, A);
    Field u = solve_linear_diffusion(f, eq, st);

    double k = 2.0, lambda = eq.diffusion * k * k * std::numbers::pi * std::numbers::pi;
    double t_end = st.ht * (st.nt - 1);
    double diff = 0.0, scale = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double exact = A / lambda * (1.0 - std::exp(-lambda * t_end)) *
                       std::sin(k * std::numbers::pi * g.x(i));
        diff = std::max(diff, std::abs(u.values[st.index(i, st.nt - 1)] - exact));
        scale = std::max(scale, std::abs(exact));
    }
    CHECK(diff / scale < 1e-2);
}

TEST_CASE("zero reaction reduces the nonlinear solver to the linear one") {
    Grid1D g = Grid1D::uniform(51);
    GridST st = GridST::uniform(51, 51);
    Field f = sin_forcing(g, 0.9);
    Field lin = solve_linear_diffusion(f, EquationSpec::linear_diffusion(0.01), st);
    Field non = solve_nonlinear_dr(f, EquationSpec::nonlinear_dr(0.01, 0.0), st);
    for (std::size_t i = 0; i < lin.size(); ++i)
        CHECK(non[i] == doctest::Approx(lin[i]).epsilon(1e-13));
}

TEST_CASE("small reaction perturbs the linear solution slightly") {
    Grid1D g = Grid1D::uniform(51);
    GridST st = GridST::uniform(51, 51);
    Field f = sin_forcing(g, 0.9);
    Field lin = solve_linear_diffusion(f, EquationSpec::linear_diffusion(0.01), st);
    Field non = solve_nonlinear_dr(f, EquationSpec::nonlinear_dr(0.01, 0.01), st);
    CHECK(l2_relative_error(non, lin) > 0.0);
    CHECK(l2_relative_error(non, lin) < 0.15);
}

TEST_CASE("explosive reaction raises BlowUp") {
    Grid1D g = Grid1D::uniform(51);
    GridST st = GridST::uniform(51, 51);
    Field f = constant_forcing(g, 100.0);
    CHECK_THROWS_AS(solve_nonlinear_dr(f, EquationSpec::nonlinear_dr(0.01, 1e6), st), BlowUp);
}

TEST_CASE("solution fields satisfy zero boundary and initial conditions") {
    Grid1D g = Grid1D::uniform(51);
    GridST st = GridST::uniform(51, 51);
    Field f = sin_forcing(g, 0.9);
    Field u = solve_linear_diffusion(f, EquationSpec::linear_diffusion(0.01), st);
    for (int i = 0; i < st.nx; ++i) CHECK(u.values[st.index(i, 0)] == 0.0);
    for (int j = 0; j < st.nt; ++j) {
        CHECK(u.values[st.index(0, j)] == 0.0);
        CHECK(u.values[st.index(st.nx - 1, j)] == 0.0);
    }
}

TEST_CASE("solve_reference dispatches on the equation kind") {
    Grid1D g = Grid1D::uniform(51);
    GridST st = GridST::uniform(51, 51);
    Field f = sin_forcing(g, 1.0);
    Field up = solve_reference(EquationSpec::poisson(), f, g, st);
    CHECK(up.is_spatial());
    Field ud = solve_reference(EquationSpec::linear_diffusion(), f, g, st);
    CHECK(!ud.is_spatial());
}
