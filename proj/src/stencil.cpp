#include "oneshot/stencil.hpp"

#include <algorithm>

namespace oneshot {

void StencilSpec::validate() const {
    if (u_offsets.empty()) throw ConfigError("stencil needs at least one u offset");
    Offset target{0, 0};
    if (std::find(u_offsets.begin(), u_offsets.end(), target) != u_offsets.end())
        throw ConfigError("stencil target (offset 0) must not be a u input");
    if (!space_time)
        for (const auto& group : {u_offsets, f_offsets})
            for (const auto& o : group)
                if (o.dj != 0) throw ConfigError("spatial stencil has a nonzero time offset");
}

StencilSpec StencilSpec::preset(const std::string& name) {
    StencilSpec s;
    s.name = name;
    if (name == "poisson_g1") {
        s.u_offsets = {{-1, 0}, {+1, 0}};
        s.f_offsets = {{0, 0}};
    } else if (name == "poisson_g2") {
        s.u_offsets = {{-1, 0}, {+1, 0}};
        s.f_offsets = {{-1, 0}, {0, 0}, {+1, 0}};
    } else if (name == "diffusion_g1") {
        s.space_time = true;
        s.u_offsets = {{0, -1}, {-1, 0}, {+1, 0}};
        s.f_offsets = {{0, 0}};
    } else if (name == "diffusion_g2") {
        s.space_time = true;
        s.u_offsets = {{-1, -1}, {0, -1}, {+1, -1}, {-1, 0}, {+1, 0}};
        s.f_offsets = {{0, 0}};
    } else {
        throw ConfigError("unknown stencil preset: " + name);
    }
    s.validate();
    return s;
}

std::vector<std::string> StencilSpec::preset_names() {
    return {"poisson_g1", "poisson_g2", "diffusion_g1", "diffusion_g2"};
}

nlohmann::json stencil_to_json(const StencilSpec& s) {
    auto offsets = [](const std::vector<Offset>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& o : v) arr.push_back({o.di, o.dj});
        return arr;
    };
    return {{"name", s.name},
            {"space_time", s.space_time},
            {"u_offsets", offsets(s.u_offsets)},
            {"f_offsets", offsets(s.f_offsets)}};
}

StencilSpec stencil_from_json(const nlohmann::json& j) {
    StencilSpec s;
    s.name = j.at("name").get<std::string>();
    s.space_time = j.at("space_time").get<bool>();
    auto offsets = [](const nlohmann::json& arr) {
        std::vector<Offset> v;
        for (const auto& o : arr) v.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
        return v;
    };
    s.u_offsets = offsets(j.at("u_offsets"));
    s.f_offsets = offsets(j.at("f_offsets"));
    s.validate();
    return s;
}

namespace {

bool anchor_fits_1d(int i, int n, const StencilSpec& s) {
    for (const auto& group : {&s.u_offsets, &s.f_offsets})
        for (const auto& o : *group)
            if (i + o.di < 0 || i + o.di > n - 1) return false;
    return true;
}

bool anchor_fits_st(int i, int j, const GridST& g, const StencilSpec& s) {
    for (const auto& group : {&s.u_offsets, &s.f_offsets})
        for (const auto& o : *group) {
            int ii = i + o.di, jj = j + o.dj;
            if (ii < 0 || ii > g.nx - 1 || jj < 0 || jj > g.nt - 1) return false;
        }
    return true;
}

}  // namespace

AnchorSet enumerate_anchors(const AnyGrid& grid, const StencilSpec& stencil) {
    stencil.validate();
    AnchorSet plan;
    plan.u_nodes.resize(stencil.u_offsets.size());
    plan.f_nodes.resize(stencil.f_offsets.size());

    if (const auto* g1 = std::get_if<Grid1D>(&grid)) {
        if (stencil.space_time) throw GridMismatch("space-time stencil on a spatial grid");
        for (int i = 1; i <= g1->n - 2; ++i) {
            if (!anchor_fits_1d(i, g1->n, stencil)) continue;
            plan.anchors.push_back(static_cast<std::size_t>(i));
            for (std::size_t k = 0; k < stencil.u_offsets.size(); ++k)
                plan.u_nodes[k].push_back(static_cast<std::size_t>(i + stencil.u_offsets[k].di));
            for (std::size_t k = 0; k < stencil.f_offsets.size(); ++k)
                plan.f_nodes[k].push_back(static_cast<std::size_t>(i + stencil.f_offsets[k].di));
        }
    } else {
        const auto& g = std::get<GridST>(grid);
        if (!stencil.space_time) throw GridMismatch("spatial stencil on a space-time grid");
        for (int j = 1; j <= g.nt - 1; ++j)
            for (int i = 1; i <= g.nx - 2; ++i) {
                if (!anchor_fits_st(i, j, g, stencil)) continue;
                plan.anchors.push_back(g.index(i, j));
                for (std::size_t k = 0; k < stencil.u_offsets.size(); ++k)
                    plan.u_nodes[k].push_back(
                        g.index(i + stencil.u_offsets[k].di, j + stencil.u_offsets[k].dj));
                // f depends on x only: index the spatial grid
                for (std::size_t k = 0; k < stencil.f_offsets.size(); ++k)
                    plan.f_nodes[k].push_back(static_cast<std::size_t>(i + stencil.f_offsets[k].di));
            }
    }
    if (plan.anchors.empty()) throw GridMismatch("grid too small to anchor the stencil");
    return plan;
}

std::size_t admissible_anchor_count(const AnyGrid& grid, const StencilSpec& stencil) {
    return enumerate_anchors(grid, stencil).count();
}

void gather_stencil_inputs(const AnchorSet& plan, const Field& u, const Field& f, double* x,
                           bool u_only) {
    const std::size_t n = plan.count();
    std::size_t row = 0;
    for (const auto& nodes : plan.u_nodes) {
        double* out = x + row * n;
        for (std::size_t s = 0; s < n; ++s) out[s] = u.values[nodes[s]];
        ++row;
    }
    if (u_only) return;
    for (const auto& nodes : plan.f_nodes) {
        double* out = x + row * n;
        for (std::size_t s = 0; s < n; ++s) out[s] = f.values[nodes[s]];
        ++row;
    }
}

Dataset extract_dataset(const Field& u_t, const Field& f_t, const StencilSpec& stencil) {
    if (stencil.space_time) {
        const GridST& g = u_t.grid_st();
        if (!f_t.is_spatial() || f_t.grid1d().n != g.nx)
            throw GridMismatch("space-time extraction needs f on the matching spatial grid");
    } else if (u_t.grid != f_t.grid) {
        throw GridMismatch("u and f must share a grid");
    }

    AnchorSet plan = enumerate_anchors(u_t.grid, stencil);
    Dataset data(stencil.input_dim(), 1, plan.count());
    gather_stencil_inputs(plan, u_t, f_t, data.inputs.data());
    for (std::size_t s = 0; s < plan.count(); ++s) data.target(0, s) = u_t.values[plan.anchors[s]];
    return data;
}

}  // namespace oneshot
