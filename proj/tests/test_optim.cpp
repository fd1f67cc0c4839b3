#include <cmath>
#include <vector>

#include "doctest.h"

#include "oneshot/optim.hpp"

using namespace oneshot;

namespace {

// Separable quadratic with known minimizer at (1, -2, 3).
double quadratic(const std::vector<double>& x, std::vector<double>& g, int) {
    const double c[3] = {1.0, -2.0, 3.0};
    double loss = 0.0;
    for (int i = 0; i < 3; ++i) {
        double d = x[i] - c[i];
        loss += d * d;
        g[i] = 2.0 * d;
    }
    return loss;
}

double rosenbrock(const std::vector<double>& x, std::vector<double>& g, int) {
    double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("adam minimizes a quadratic") {
    std::vector<double> x = {0.0, 0.0, 0.0};
    AdamOptions opt;
    opt.lr = 0.05;
    opt.iters = 4000;
    TrainRecord rec = adam_minimize(x, quadratic, opt);
    CHECK(rec.final_loss < 1e-8);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(x[1] == doctest::Approx(-2.0).epsilon(1e-4));
    CHECK(x[2] == doctest::Approx(3.0).epsilon(1e-4));
    CHECK(rec.iterations == 4000);
    CHECK(!rec.loss_history.empty());
}

TEST_CASE("adam plateau patience stops a converged run early") {
    std::vector<double> x = {1.0, -2.0, 3.0};  // start at the optimum
    AdamOptions opt;
    opt.iters = 100000;
    opt.patience = 50;
    TrainRecord rec = adam_minimize(x, quadratic, opt);
    CHECK(rec.iterations < 1000);
    CHECK(rec.termination.find("plateau") != std::string::npos);
}

TEST_CASE("adam reports divergence with the record attached") {
    auto bad = [](const std::vector<double>& x, std::vector<double>& g, int it) {
        g.assign(x.size(), 1.0);
        return it < 5 ? 1.0 : std::nan("");
    };
    std::vector<double> x = {0.0};
    AdamOptions opt;
    opt.iters = 100;
    try {
        adam_minimize(x, bad, opt);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(e.record.iterations >= 5);
    }
}

TEST_CASE("lbfgs solves Rosenbrock to high precision") {
    std::vector<double> x = {-1.2, 1.0};
    LbfgsOptions opt;
    opt.max_iters = 500;
    TrainRecord rec = lbfgs_minimize(x, rosenbrock, opt);
    CHECK(rec.final_loss < 1e-16);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("lbfgs never leaves the iterate worse than it started") {
    // A ridge-like objective that line search struggles on.
    auto stiff = [](const std::vector<double>& x, std::vector<double>& g, int) {
        g[0] = 2e8 * x[0];
        g[1] = 2e-4 * x[1];
        return 1e8 * x[0] * x[0] + 1e-4 * x[1] * x[1];
    };
    std::vector<double> x = {1.0, 1.0};
    std::vector<double> g(2);
    double start = stiff(x, g, -1);
    LbfgsOptions opt;
    opt.max_iters = 50;
    TrainRecord rec = lbfgs_minimize(x, stiff, opt);
    CHECK(rec.final_loss <= start);
    CHECK(stiff(x, g, -1) == doctest::Approx(rec.final_loss));
}

TEST_CASE("optimizers are deterministic") {
    std::vector<double> a = {0.3, 0.3, 0.3}, b = {0.3, 0.3, 0.3};
    AdamOptions opt;
    opt.iters = 500;
    adam_minimize(a, quadratic, opt);
    adam_minimize(b, quadratic, opt);
    CHECK(a == b);
}
