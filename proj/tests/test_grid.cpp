#include <cmath>

#include "doctest.h"

#include "oneshot/grid.hpp"

using namespace oneshot;

TEST_CASE("uniform grids cover [0,1] with the stated spacing") {
    Grid1D g = Grid1D::uniform(101);
    CHECK(g.n == 101);
    CHECK(g.h == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(g.x(0) == 0.0);
    CHECK(g.x(100) == doctest::Approx(1.0).epsilon(1e-14));

    GridST st = GridST::uniform(11, 21);
    CHECK(st.hx == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(st.ht == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(st.index(3, 2) == 2 * 11 + 3);
    CHECK(st.node_count() == 231);
    CHECK(st.is_boundary_or_initial(0, 5));
    CHECK(st.is_boundary_or_initial(10, 5));
    CHECK(st.is_boundary_or_initial(4, 0));
    CHECK(!st.is_boundary_or_initial(4, 1));
}

TEST_CASE("restriction subsamples exactly, no averaging") {
    Grid1D dense = Grid1D::uniform(1001);
    std::vector<double> v(1001);
    for (int i = 0; i <= 1000; ++i) v[i] = dense.x(i) * dense.x(i);
    Field fd(dense, v);

    Grid1D coarse = Grid1D::uniform(101);
    Field fc = restrict_to(fd, coarse);
    REQUIRE(fc.size() == 101);
    for (int i = 0; i <= 100; ++i)
        CHECK(fc[i] == fd.values[static_cast<std::size_t>(10) * i]);  // bit-exact injection
}

TEST_CASE("restriction to the same grid is the identity") {
    Grid1D g = Grid1D::uniform(11);
    std::vector<double> v(11);
    for (int i = 0; i < 11; ++i) v[i] = std::sin(3.0 * i);
    Field f(g, v);
    Field same = restrict_to(f, g);
    CHECK(same.values == v);
}

TEST_CASE("space-time restriction picks every k-th node in both dimensions") {
    GridST dense = GridST::uniform(51, 101);
    std::vector<double> v(dense.node_count());
    for (int j = 0; j < 101; ++j)
        for (int i = 0; i < 51; ++i) v[dense.index(i, j)] = 1000.0 * j + i;
    Field fd(dense, v);

    GridST coarse = GridST::uniform(11, 21);
    Field fc = restrict_to(fd, coarse);
    for (int j = 0; j < 21; ++j)
        for (int i = 0; i < 11; ++i)
            CHECK(fc.values[coarse.index(i, j)] == 1000.0 * (5 * j) + 5 * i);
}

TEST_CASE("two-stage restriction equals direct restriction") {
    Grid1D dense = Grid1D::uniform(1001), mid = Grid1D::uniform(101), coarse = Grid1D::uniform(21);
    std::vector<double> v(1001);
    for (int i = 0; i <= 1000; ++i) v[i] = std::cos(7.0 * dense.x(i));
    Field fd(dense, v);
    Field two = restrict_to(restrict_to(fd, mid), coarse);
    Field one = restrict_to(fd, coarse);
    CHECK(two.values == one.values);
}

TEST_CASE("non-nested restriction falls back to linear interpolation") {
    // 101 -> 34 nodes: spacing ratio 100/33 is fractional. A linear field is
    // reproduced exactly by piecewise-linear sampling; endpoints always
    // coincide with dense nodes.
    Grid1D dense = Grid1D::uniform(101);
    std::vector<double> v(101);
    for (int i = 0; i < 101; ++i) v[i] = 2.0 * dense.x(i) - 0.5;
    Field fd(dense, v);
    Grid1D coarse = Grid1D::uniform(34);
    Field fc = restrict_to(fd, coarse);
    for (int i = 0; i < 34; ++i)
        CHECK(fc[i] == doctest::Approx(2.0 * coarse.x(i) - 0.5).epsilon(1e-12));

    // A kink between dense nodes shows the two-point weighting: the coarse
    // node at s = 100/33 sits between dense nodes 3 and 4.
    std::vector<double> w(101, 0.0);
    w[3] = 1.0;
    Field kink(dense, w);
    double s = 100.0 / 33.0;
    CHECK(restrict_to(kink, coarse)[1] == doctest::Approx(1.0 - (s - 3.0)).epsilon(1e-12));
}

TEST_CASE("l2 relative error is a plain vector-norm ratio") {
    Grid1D g = Grid1D::uniform(3);
    Field ref(g, {3.0, 0.0, 4.0});           // norm 5
    Field pred(g, {3.0, 1.0, 4.0});          // diff norm 1
    CHECK(l2_relative_error(pred, ref) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(l2_relative_error(ref, ref) == 0.0);
}

TEST_CASE("check_finite rejects NaN fields") {
    Field f(Grid1D::uniform(3), {0.0, std::nan(""), 0.0});
    CHECK_THROWS_AS(f.check_finite("test"), BlowUp);
}

TEST_CASE("equation descriptors validate their coefficients") {
    CHECK(EquationSpec::poisson().is_time_dependent() == false);
    CHECK(EquationSpec::linear_diffusion().is_time_dependent());
    CHECK(EquationSpec::nonlinear_dr().reaction.has_value());
    EquationSpec bad = EquationSpec::linear_diffusion(-1.0);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
