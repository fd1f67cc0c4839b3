#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "oneshot/experiment.hpp"
#include "oneshot/field_io.hpp"
#include "oneshot/stencil.hpp"

using namespace oneshot;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// A drastically shrunk configuration so end-to-end runs finish in seconds.
ExperimentConfig tiny_poisson(const std::string& out_dir) {
    ExperimentConfig cfg = default_experiment_config("poisson");
    cfg.dense_nx = 201;
    cfg.resolutions = {21};
    cfg.test_sigmas = {0.05};
    cfg.test_count = 2;
    cfg.stencils = {{"poisson_g1", 16, 2}};
    cfg.backends = {"fpi", "cloinn"};
    cfg.budget.adam_iters = 400;
    cfg.budget.lbfgs_iters = 100;
    cfg.loinn_budget.adam_iters = 200;
    cfg.loinn_budget.lbfgs_iters = 50;
    cfg.out_dir = out_dir;
    return cfg;
}

}  // namespace

TEST_CASE("default configs round-trip through JSON") {
    for (const std::string name : {"poisson", "diffusion", "nonlinear-dr"}) {
        ExperimentConfig cfg = default_experiment_config(name);
        nlohmann::json j = experiment_config_to_json(cfg);
        ExperimentConfig back = experiment_config_from_json(j);
        CHECK(back.name == cfg.name);
        CHECK(back.dense_nx == cfg.dense_nx);
        CHECK(back.dense_nt == cfg.dense_nt);
        CHECK(back.resolutions == cfg.resolutions);
        CHECK(back.test_sigmas == cfg.test_sigmas);
        CHECK(back.test_count == cfg.test_count);
        CHECK(back.train_grf.sigma == cfg.train_grf.sigma);
        CHECK(back.budget.adam_iters == cfg.budget.adam_iters);
        CHECK(back.budget.init_scale == cfg.budget.init_scale);
        CHECK(back.fpi.max_iter == cfg.fpi.max_iter);
        CHECK(back.backends == cfg.backends);
        REQUIRE(back.stencils.size() == cfg.stencils.size());
        for (std::size_t i = 0; i < cfg.stencils.size(); ++i)
            CHECK(back.stencils[i].preset == cfg.stencils[i].preset);
    }
}

TEST_CASE("a config file acts as a sparse override of its base") {
    ExperimentConfig base = default_experiment_config("poisson");
    nlohmann::json j = {{"test", {{"sigmas", {0.07}}, {"count", 3}}},
                        {"budget_scale", 0.25}};
    ExperimentConfig cfg = experiment_config_from_json(j, &base);
    CHECK(cfg.test_sigmas == std::vector<double>{0.07});
    CHECK(cfg.test_count == 3);
    CHECK(cfg.budget_scale == 0.25);
    // untouched fields keep the base values
    CHECK(cfg.name == "poisson");
    CHECK(cfg.dense_nx == base.dense_nx);
    CHECK(cfg.budget.adam_iters == base.budget.adam_iters);
    CHECK(cfg.test_ell == base.test_ell);
}

TEST_CASE("validation rejects inconsistent configurations") {
    ExperimentConfig cfg = default_experiment_config("poisson");
    cfg.backends = {"fpi", "bogus"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = default_experiment_config("poisson");
    cfg.test_count = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = default_experiment_config("poisson");
    cfg.resolutions = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("budget scaling shrinks iteration counts but not the protocol") {
    ExperimentConfig cfg = default_experiment_config("poisson");
    cfg.budget_scale = 0.1;
    ExperimentConfig scaled = cfg.with_budget_scale_applied();
    CHECK(scaled.budget.adam_iters == cfg.budget.adam_iters / 10);
    CHECK(scaled.budget_scale == 1.0);
    CHECK(scaled.budget.init_scale == cfg.budget.init_scale);
    CHECK(scaled.budget.refit_output == cfg.budget.refit_output);
}

TEST_CASE("coarse training solutions satisfy the stencil relation exactly") {
    // The one-shot dataset must lie on the operator's zero-residual manifold:
    // the fixed-point iteration amplifies any systematic offset by the
    // inverse of the discrete operator, so restricted dense solutions
    // (O(h_dense^2) off the coarse relation) are not usable as training data.
    SUBCASE("elliptic") {
        ExperimentConfig cfg = default_experiment_config("poisson");
        cfg.dense_nx = 201;
        cfg.resolutions = {51};
        GeneratedData data = generate_data(cfg);
        const auto& c = data.at_resolution(51);
        LocalOperator op = oracle_stencil_map(cfg.equation, StencilSpec::preset("poisson_g1"),
                                              c.spatial.h);
        double worst = 0.0;
        for (int i = 1; i < 50; ++i)
            worst = std::max(worst, std::abs(op.apply(c.ut, c.ft, i) - c.ut[i]));
        CHECK(worst < 1e-10);
    }
    SUBCASE("time stepping") {
        ExperimentConfig cfg = default_experiment_config("diffusion");
        cfg.dense_nx = 201;
        cfg.dense_nt = 201;
        cfg.resolutions = {26};
        GeneratedData data = generate_data(cfg);
        const auto& c = data.at_resolution(26);
        const GridST& st = std::get<GridST>(c.solution_grid);
        LocalOperator op = oracle_stencil_map(cfg.equation, StencilSpec::preset("diffusion_g1"),
                                              st.hx, st.ht);
        double worst = 0.0;
        for (int j = 1; j < st.nt; ++j)
            for (int i = 1; i < st.nx - 1; ++i)
                worst = std::max(worst,
                                 std::abs(op.apply(c.ut, c.ft, i, j) - c.ut.values[st.index(i, j)]));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("dense and coarse forcings agree on shared nodes") {
    ExperimentConfig cfg = default_experiment_config("poisson");
    cfg.dense_nx = 201;
    cfg.resolutions = {21};
    GeneratedData data = generate_data(cfg);
    const auto& c = data.at_resolution(21);
    for (int i = 0; i < 21; ++i) {
        CHECK(c.f0[i] == data.f0_dense[static_cast<std::size_t>(10) * i]);
        CHECK(c.ft[i] == data.ft_dense[static_cast<std::size_t>(10) * i]);
    }
}

TEST_CASE("full pipeline reruns are bit-identical") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "oneshot_repro_test";
    fs::remove_all(base);
    ExperimentConfig a = tiny_poisson((base / "a").string());
    ExperimentConfig b = tiny_poisson((base / "b").string());
    run_reproduce(a);
    run_reproduce(b);

    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), base / "a");
        fs::path other = base / "b" / rel;
        REQUIRE(fs::exists(other));
        if (entry.path().extension() == ".csv") {
            CHECK(slurp(entry.path()) == slurp(other));
            ++compared;
        } else if (entry.path().extension() == ".json") {
            // identical up to wall-clock timing fields in training records and
            // the output directory in the resolved config
            auto scrub = [](std::string s) {
                for (const std::string key : {"\"wall_seconds\"", "\"out_dir\""}) {
                    for (std::size_t pos = 0; (pos = s.find(key, pos)) != std::string::npos;) {
                        std::size_t end = s.find_first_of(",}", pos);
                        REQUIRE(end != std::string::npos);
                        s.erase(pos, end - pos);
                    }
                }
                return s;
            };
            CHECK(scrub(slurp(entry.path())) == scrub(slurp(other)));
            ++compared;
        }
    }
    CHECK(compared >= 3);  // at least data, summary, and case CSVs

    // and the summary table actually contains our cells
    bool found_summary = false;
    for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
        if (entry.path().filename().string().find("summary") != std::string::npos) {
            std::string text = slurp(entry.path());
            CHECK(text.find("fpi") != std::string::npos);
            CHECK(text.find("cloinn") != std::string::npos);
            found_summary = true;
        }
    }
    CHECK(found_summary);
    fs::remove_all(base);
}
