#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "oneshot/errors.hpp"

namespace oneshot {

struct TrainRecord {
    std::vector<std::pair<int, double>> loss_history;  // (iteration, loss)
    double final_loss = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
    std::string termination;
};

struct TrainingDiverged : Error {
    TrainingDiverged(const std::string& what, TrainRecord rec)
        : Error("TrainingDiverged", what), record(std::move(rec)) {}
    TrainRecord record;
};

/// Evaluates loss and writes the gradient. `iter` is the optimizer iteration
/// (for seeded minibatching); deterministic full-batch objectives ignore it.
/// L-BFGS passes iter = -1 and requires a deterministic objective.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad,
                                       int iter)>;

struct AdamOptions {
    double lr = 1e-3;
    int iters = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int log_every = 1000;
    /// Plateau stop: give up after `patience` iterations without the loss
    /// improving on its best by a factor of at least (1 - min_rel_improve).
    /// 0 disables the check (default). Only meaningful for deterministic
    /// full-batch objectives.
    int patience = 0;
    double min_rel_improve = 1e-4;
};

/// Minimizes in place. Throws TrainingDiverged (record attached) on a
/// non-finite loss.
TrainRecord adam_minimize(std::vector<double>& x, const Objective& objective,
                          const AdamOptions& opt);

struct LbfgsOptions {
    int max_iters = 1000;
    int history = 10;       // two-loop recursion memory
    double armijo_c1 = 1e-4;
    int max_backtracks = 40;
    double grad_tol = 1e-13;  // sup-norm stopping threshold
    int log_every = 1000;
};

/// Full-batch L-BFGS with Armijo backtracking. Never increases the loss: the
/// best iterate seen is restored on exit. Line-search failure terminates with
/// a reason in the record, not an error.
TrainRecord lbfgs_minimize(std::vector<double>& x, const Objective& objective,
                           const LbfgsOptions& opt);

}  // namespace oneshot
