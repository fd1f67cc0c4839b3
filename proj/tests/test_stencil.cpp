#include <cmath>
#include <set>

#include "doctest.h"

#include "oneshot/stencil.hpp"

using namespace oneshot;

TEST_CASE("presets describe the documented local domains") {
    StencilSpec g1 = StencilSpec::preset("poisson_g1");
    CHECK(!g1.space_time);
    CHECK(g1.u_offsets.size() == 2);
    CHECK(g1.f_offsets.size() == 1);
    CHECK(g1.input_dim() == 3);

    StencilSpec g2 = StencilSpec::preset("poisson_g2");
    CHECK(g2.input_dim() == 5);

    StencilSpec d1 = StencilSpec::preset("diffusion_g1");
    CHECK(d1.space_time);
    CHECK(d1.input_dim() == 4);

    StencilSpec d2 = StencilSpec::preset("diffusion_g2");
    CHECK(d2.input_dim() == 6);

    CHECK(StencilSpec::preset_names().size() == 4);
    CHECK_THROWS_AS(StencilSpec::preset("no_such_stencil"), Error);
}

TEST_CASE("anchor enumeration matches the closed-form count") {
    for (const auto& name : StencilSpec::preset_names()) {
        StencilSpec s = StencilSpec::preset(name);
        AnyGrid grid = s.space_time ? AnyGrid(GridST::uniform(101, 101))
                                    : AnyGrid(Grid1D::uniform(101));
        AnchorSet plan = enumerate_anchors(grid, s);
        CHECK(plan.count() == admissible_anchor_count(grid, s));
        CHECK(plan.u_nodes.size() == s.u_offsets.size());
        CHECK(plan.f_nodes.size() == s.f_offsets.size());
    }
}

TEST_CASE("interior 1d stencils admit every interior node") {
    Grid1D g = Grid1D::uniform(101);
    AnchorSet plan = enumerate_anchors(g, StencilSpec::preset("poisson_g1"));
    REQUIRE(plan.count() == 99);
    for (std::size_t a = 0; a < plan.count(); ++a) {
        CHECK(plan.anchors[a] == a + 1);
        CHECK(plan.u_nodes[0][a] == plan.anchors[a] - 1);
        CHECK(plan.u_nodes[1][a] == plan.anchors[a] + 1);
        CHECK(plan.f_nodes[0][a] == plan.anchors[a]);
    }
    // the 5-input variant keeps all its offsets within +-1, so the admissible
    // set is the same interior
    AnchorSet wide = enumerate_anchors(g, StencilSpec::preset("poisson_g2"));
    CHECK(wide.count() == 99);
    CHECK(wide.anchors.front() == 1);
    CHECK(wide.anchors.back() == 99);
}

TEST_CASE("space-time stencils skip boundary and initial rows") {
    GridST g = GridST::uniform(101, 101);
    AnchorSet plan = enumerate_anchors(g, StencilSpec::preset("diffusion_g1"));
    CHECK(plan.count() == 9900);  // 99 interior x-nodes, 100 time rows j >= 1
    std::set<std::size_t> seen(plan.anchors.begin(), plan.anchors.end());
    CHECK(seen.size() == plan.count());
    for (std::size_t node : plan.anchors) {
        int i = static_cast<int>(node % g.nx), j = static_cast<int>(node / g.nx);
        CHECK(i >= 1);
        CHECK(i <= g.nx - 2);
        CHECK(j >= 1);
    }
}

TEST_CASE("gathered inputs reproduce the field values at the offsets") {
    Grid1D g = Grid1D::uniform(21);
    std::vector<double> uv(21), fv(21);
    for (int i = 0; i < 21; ++i) {
        uv[i] = std::sin(2.0 * i);
        fv[i] = std::cos(3.0 * i);
    }
    Field u(g, uv), f(g, fv);
    StencilSpec s = StencilSpec::preset("poisson_g1");
    AnchorSet plan = enumerate_anchors(g, s);
    std::vector<double> x(static_cast<std::size_t>(s.input_dim()) * plan.count());
    gather_stencil_inputs(plan, u, f, x.data());
    for (std::size_t a = 0; a < plan.count(); ++a) {
        std::size_t c = plan.anchors[a];
        CHECK(x[0 * plan.count() + a] == uv[c - 1]);
        CHECK(x[1 * plan.count() + a] == uv[c + 1]);
        CHECK(x[2 * plan.count() + a] == fv[c]);
    }

    // u_only leaves the f rows untouched
    std::vector<double> x2(x.size(), -7.0);
    gather_stencil_inputs(plan, u, f, x2.data(), true);
    for (std::size_t a = 0; a < plan.count(); ++a) {
        CHECK(x2[a] == uv[plan.anchors[a] - 1]);
        CHECK(x2[2 * plan.count() + a] == -7.0);
    }
}

TEST_CASE("space-time gather reads the forcing from the spatial grid") {
    GridST g = GridST::uniform(11, 6);
    std::vector<double> uv(g.node_count());
    for (std::size_t k = 0; k < uv.size(); ++k) uv[k] = static_cast<double>(k);
    Grid1D gx = Grid1D::uniform(11);
    std::vector<double> fv(11);
    for (int i = 0; i < 11; ++i) fv[i] = 100.0 + i;
    Field u(g, uv), f(gx, fv);

    StencilSpec s = StencilSpec::preset("diffusion_g1");
    AnchorSet plan = enumerate_anchors(g, s);
    std::vector<double> x(static_cast<std::size_t>(s.input_dim()) * plan.count());
    gather_stencil_inputs(plan, u, f, x.data());
    std::size_t nf = s.u_offsets.size();
    for (std::size_t a = 0; a < plan.count(); ++a) {
        int i = static_cast<int>(plan.anchors[a] % g.nx);
        CHECK(x[nf * plan.count() + a] == 100.0 + i);
    }
}

TEST_CASE("the one-shot dataset has one sample per admissible anchor") {
    Grid1D g = Grid1D::uniform(101);
    std::vector<double> uv(101), fv(101);
    for (int i = 0; i < 101; ++i) {
        uv[i] = g.x(i) * (1.0 - g.x(i));
        fv[i] = -2.0;
    }
    Field u(g, uv), f(g, fv);
    StencilSpec s = StencilSpec::preset("poisson_g1");
    Dataset data = extract_dataset(u, f, s);
    CHECK(data.count == 99);
    CHECK(data.input_dim == 3);
    CHECK(data.output_dim == 1);
    for (std::size_t a = 0; a < data.count; ++a) {
        std::size_t c = a + 1;
        CHECK(data.input(0, a) == uv[c - 1]);
        CHECK(data.input(1, a) == uv[c + 1]);
        CHECK(data.input(2, a) == -2.0);
        CHECK(data.target(0, a) == uv[c]);
    }
}

TEST_CASE("stencil JSON round-trips") {
    for (const auto& name : StencilSpec::preset_names()) {
        StencilSpec s = StencilSpec::preset(name);
        StencilSpec back = stencil_from_json(stencil_to_json(s));
        CHECK(back.name == s.name);
        CHECK(back.space_time == s.space_time);
        CHECK(back.u_offsets == s.u_offsets);
        CHECK(back.f_offsets == s.f_offsets);
    }
}
