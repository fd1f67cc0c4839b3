#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "oneshot/grid.hpp"

namespace oneshot {

/// Gaussian random field with RBF covariance sigma^2 exp(-(x1-x2)^2 / (2 l^2)).
struct GrfParams {
    double sigma = 1.0;
    double ell = 0.1;
    double jitter = 1e-10;

    void validate() const;
};

/// K[i][j] = sigma^2 exp(-(x_i - x_j)^2 / (2 l^2)); diagonal is exactly sigma^2.
Eigen::MatrixXd kernel_matrix(const Grid1D& grid, const GrfParams& p);

/// Caches the Cholesky factor of the unit-variance kernel so many forcings can
/// be drawn against one factorization. Samples are sigma * L * z with z iid
/// standard normal from the seeded generator, so sampling is exactly linear in
/// sigma and deterministic given (grid, params, seed).
class GrfSampler {
public:
    GrfSampler(Grid1D grid, GrfParams params);

    Field sample(std::uint64_t seed) const;

    const Grid1D& grid() const { return grid_; }
    const GrfParams& params() const { return params_; }
    /// Jitter actually used after escalation (relative to unit variance).
    double effective_jitter() const { return effective_jitter_; }

private:
    Grid1D grid_;
    GrfParams params_;
    Eigen::MatrixXd chol_;  // lower factor of the unit-variance kernel + jitter*I
    double effective_jitter_ = 0.0;
};

Field sample_grf(const Grid1D& grid, const GrfParams& p, std::uint64_t seed);

/// f_T = f0 + GRF(p) sample on f0's grid.
Field make_training_forcing(const Field& f0, const GrfParams& p, std::uint64_t seed);

/// f = f0 + delta_f with delta_f ~ GRF(sigma, l = 0.1).
Field make_test_forcing(const Field& f0, double sigma, std::uint64_t seed);

}  // namespace oneshot
