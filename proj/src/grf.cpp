#include "oneshot/grf.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "oneshot/rng.hpp"

namespace oneshot {

void GrfParams::validate() const {
    if (sigma < 0.0) throw ConfigError("GRF sigma must be nonnegative");
    if (ell <= 0.0) throw ConfigError("GRF correlation length must be positive");
    if (jitter < 0.0) throw ConfigError("GRF jitter must be nonnegative");
}

Eigen::MatrixXd kernel_matrix(const Grid1D& grid, const GrfParams& p) {
    p.validate();
    const int n = grid.n;
    const double s2 = p.sigma * p.sigma;
    const double inv2l2 = 1.0 / (2.0 * p.ell * p.ell);
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
        K(i, i) = s2;
        for (int j = 0; j < i; ++j) {
            double d = grid.x(i) - grid.x(j);
            double v = s2 * std::exp(-d * d * inv2l2);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

GrfSampler::GrfSampler(Grid1D grid, GrfParams params) : grid_(grid), params_(params) {
    params_.validate();
    if (params_.sigma == 0.0) return;  // samples are identically zero

    GrfParams unit = params_;
    unit.sigma = 1.0;
    Eigen::MatrixXd K = kernel_matrix(grid_, unit);

    // RBF Gram matrices on fine grids are numerically rank deficient; escalate
    // the diagonal jitter by 10x until the factorization succeeds.
    double jitter = params_.jitter > 0.0 ? params_.jitter : 1e-10;
    for (; jitter <= 1e-6; jitter *= 10.0) {
        Eigen::MatrixXd A = K + jitter * Eigen::MatrixXd::Identity(grid_.n, grid_.n);
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            effective_jitter_ = jitter;
            return;
        }
    }
    throw NotPositiveDefinite("GRF kernel not positive definite even with jitter 1e-6");
}

Field GrfSampler::sample(std::uint64_t seed) const {
    const int n = grid_.n;
    if (params_.sigma == 0.0) return Field::zeros(grid_);

    Rng rng(seed);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    Eigen::VectorXd y = chol_ * z;

    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) values[i] = params_.sigma * y(i);
    return Field(grid_, std::move(values));
}

Field sample_grf(const Grid1D& grid, const GrfParams& p, std::uint64_t seed) {
    return GrfSampler(grid, p).sample(seed);
}

namespace {

Field add_sample(const Field& f0, const GrfParams& p, std::uint64_t seed) {
    if (!f0.is_spatial()) throw GridMismatch("forcing base field must live on a spatial grid");
    Field s = sample_grf(f0.grid1d(), p, seed);
    for (std::size_t i = 0; i < s.size(); ++i) s.values[i] += f0.values[i];
    return s;
}

}  // namespace

Field make_training_forcing(const Field& f0, const GrfParams& p, std::uint64_t seed) {
    return add_sample(f0, p, seed);
}

Field make_test_forcing(const Field& f0, double sigma, std::uint64_t seed) {
    GrfParams p;
    p.sigma = sigma;
    p.ell = 0.1;
    return add_sample(f0, p, seed);
}

}  // namespace oneshot
