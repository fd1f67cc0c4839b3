#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "oneshot/metrics.hpp"

using namespace oneshot;

namespace {

SummaryLabels labels(const std::string& backend = "fpi", double sigma = 0.1) {
    SummaryLabels l;
    l.equation = "poisson";
    l.backend = backend;
    l.stencil = "poisson_g1";
    l.resolution = 101;
    l.sigma = sigma;
    l.seed_lo = 5000;
    l.seed_hi = 5009;
    return l;
}

}  // namespace

TEST_CASE("summary statistics match closed forms") {
    ErrorSummary s = summarize({0.01, 0.04}, labels());
    CHECK(s.count == 2);
    CHECK(s.mean == doctest::Approx(0.025).epsilon(1e-14));
    CHECK(s.geomean == doctest::Approx(0.02).epsilon(1e-12));  // sqrt(0.01 * 0.04)
    CHECK(s.stddev == doctest::Approx(0.015).epsilon(1e-12));  // population
}

TEST_CASE("geometric mean never exceeds the arithmetic mean") {
    std::mt19937_64 rng(77);
    std::lognormal_distribution<double> ln(-4.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> errs(20);
        for (auto& e : errs) e = ln(rng);
        ErrorSummary s = summarize(errs, labels());
        CHECK(s.geomean <= s.mean * (1.0 + 1e-12));
    }
}

TEST_CASE("statistics are invariant under permutation of the errors") {
    std::vector<double> errs = {0.031, 0.002, 0.17, 0.008, 0.05};
    ErrorSummary a = summarize(errs, labels());
    std::reverse(errs.begin(), errs.end());
    ErrorSummary b = summarize(errs, labels());
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == doctest::Approx(b.stddev).epsilon(1e-15));
    CHECK(a.geomean == doctest::Approx(b.geomean).epsilon(1e-15));
}

TEST_CASE("failed forcings are excluded, not averaged in") {
    ErrorSummary s = summarize({0.02, 0.03}, labels(), 3);
    CHECK(s.count == 2);
    CHECK(s.n_failed == 3);
    CHECK(s.mean == doctest::Approx(0.025));
    CHECK(!s.all_failed());

    ErrorSummary dead = summarize({}, labels(), 10);
    CHECK(dead.all_failed());
    CHECK(dead.count == 0);
    CHECK(dead.n_failed == 10);
}

TEST_CASE("negative errors are rejected") {
    CHECK_THROWS_AS(summarize({0.01, -0.02}, labels()), Error);
}

TEST_CASE("csv table has one row per summary with the documented schema") {
    std::vector<ErrorSummary> rows = {summarize({0.01, 0.02}, labels("fpi", 0.05)),
                                      summarize({0.03}, labels("loinn", 0.05))};
    std::string csv = emit_table_csv(rows);
    auto lines = [&] {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (pos < csv.size()) {
            std::size_t nl = csv.find('\n', pos);
            if (nl == std::string::npos) nl = csv.size();
            out.push_back(csv.substr(pos, nl - pos));
            pos = nl + 1;
        }
        return out;
    }();
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0].find("equation") == 0);
    CHECK(lines[0].find("geomean_pct") != std::string::npos);
    CHECK(lines[1].find("poisson,fpi,poisson_g1,101,") == 0);
    CHECK(lines[2].find("loinn") != std::string::npos);
}

TEST_CASE("markdown pivot renders all-failed cells as a dash") {
    std::vector<ErrorSummary> rows = {summarize({0.01}, labels("fpi", 0.1)),
                                      summarize({}, labels("loinn", 0.1), 5)};
    std::string md = emit_table_markdown(rows);
    CHECK(md.find('|') != std::string::npos);
    CHECK(md.find("-") != std::string::npos);
    CHECK(md.find("fpi") != std::string::npos);
}

TEST_CASE("curves group cells into per-backend series") {
    std::vector<ErrorSummary> rows = {summarize({0.01}, labels("fpi", 0.02)),
                                      summarize({0.05}, labels("fpi", 0.15)),
                                      summarize({0.02}, labels("cloinn", 0.02)),
                                      summarize({}, labels("cloinn", 0.15), 4)};
    auto curves = curves_from_summaries(rows, false);
    REQUIRE(curves.size() == 2);
    auto fpi = std::find_if(curves.begin(), curves.end(), [](const Curve& c) {
        return c.name.find("fpi") != std::string::npos;
    });
    REQUIRE(fpi != curves.end());
    REQUIRE(fpi->points.size() == 2);
    CHECK(fpi->points[0].x == 0.02);
    CHECK(fpi->points[1].x == 0.15);
    // the all-failed cloinn cell is skipped
    auto cl = std::find_if(curves.begin(), curves.end(), [](const Curve& c) {
        return c.name.find("cloinn") != std::string::npos;
    });
    REQUIRE(cl != curves.end());
    CHECK(cl->points.size() == 1);

    std::string svg = emit_curves_svg(curves, "sigma", "errors");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
}
