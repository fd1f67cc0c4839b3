#include "oneshot/optim.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "oneshot/kernels.hpp"

namespace oneshot {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        double a = std::abs(x);
        if (a > m) m = a;
    }
    return m;
}

}  // namespace

TrainRecord adam_minimize(std::vector<double>& x, const Objective& objective,
                          const AdamOptions& opt) {
    const auto t0 = Clock::now();
    const std::size_t n = x.size();
    const auto& ops = kernels::active();

    TrainRecord rec;
    std::vector<double> grad(n, 0.0);

    if (opt.iters <= 0) {
        rec.final_loss = objective(x, grad, 0);
        rec.termination = "zero_iterations";
        rec.wall_seconds = seconds_since(t0);
        return rec;
    }

    std::vector<double> m(n, 0.0), v(n, 0.0);
    double b1t = 1.0, b2t = 1.0;
    double loss = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_improve = 0;
    int done = 0;
    rec.termination = "max_iterations";
    for (int it = 0; it < opt.iters; ++it, done = it) {
        loss = objective(x, grad, it);
        if (!std::isfinite(loss)) {
            rec.final_loss = loss;
            rec.iterations = it;
            rec.termination = "diverged";
            rec.wall_seconds = seconds_since(t0);
            throw TrainingDiverged("Adam loss became non-finite at iteration " + std::to_string(it),
                                   rec);
        }
        if (it % opt.log_every == 0) rec.loss_history.emplace_back(it, loss);
        if (opt.patience > 0) {
            if (loss < best_loss * (1.0 - opt.min_rel_improve)) {
                best_loss = loss;
                since_improve = 0;
            } else if (++since_improve >= opt.patience) {
                rec.termination = "plateau";
                break;
            }
        }
        b1t *= opt.beta1;
        b2t *= opt.beta2;
        ops.adam_step(n, x.data(), grad.data(), m.data(), v.data(), opt.lr, opt.beta1, opt.beta2,
                      opt.eps, 1.0 - b1t, 1.0 - b2t);
    }
    rec.final_loss = objective(x, grad, done);
    rec.iterations = done;
    rec.loss_history.emplace_back(done, rec.final_loss);
    rec.wall_seconds = seconds_since(t0);
    return rec;
}

TrainRecord lbfgs_minimize(std::vector<double>& x, const Objective& objective,
                           const LbfgsOptions& opt) {
    const auto t0 = Clock::now();
    const std::size_t n = x.size();
    const auto& ops = kernels::active();

    TrainRecord rec;
    std::vector<double> grad(n), grad_new(n), x_new(n), direction(n);
    std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
    std::deque<double> rho;

    double loss = objective(x, grad, -1);
    rec.loss_history.emplace_back(0, loss);
    double best_loss = loss;
    std::vector<double> best_x = x;

    int it = 0;
    rec.termination = "max_iterations";
    for (; it < opt.max_iters; ++it) {
        if (inf_norm(grad) <= opt.grad_tol) {
            rec.termination = "gradient_tolerance";
            break;
        }

        // Two-loop recursion for d = -H grad.
        direction = grad;
        std::vector<double> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            const auto& [s, y] = memory[i];
            alpha[i] = rho[i] * ops.dot(n, s.data(), direction.data());
            ops.axpy(n, -alpha[i], y.data(), direction.data());
        }
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            double yy = ops.dot(n, y.data(), y.data());
            double sy = ops.dot(n, s.data(), y.data());
            if (yy > 0.0 && sy > 0.0) {
                double gamma = sy / yy;
                for (double& d : direction) d *= gamma;
            }
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const auto& [s, y] = memory[i];
            double beta = rho[i] * ops.dot(n, y.data(), direction.data());
            ops.axpy(n, alpha[i] - beta, s.data(), direction.data());
        }
        for (double& d : direction) d = -d;

        double dg = ops.dot(n, direction.data(), grad.data());
        if (!(dg < 0.0)) {
            // Not a descent direction; fall back to steepest descent once.
            direction = grad;
            for (double& d : direction) d = -d;
            dg = -ops.dot(n, grad.data(), grad.data());
            memory.clear();
            rho.clear();
        }

        // Weak-Wolfe line search by bisection bracketing. Armijo alone is not
        // enough here: it happily accepts steps whose (s, y) pair has
        // s.y < 0, those pairs are skipped, and the memory goes stale while
        // the iteration crawls along curved valleys. The curvature condition
        // g_new.d >= c2 * dg keeps every accepted pair usable.
        double loss_new = 0.0;
        auto line_search = [&]() {
            const double c2 = 0.9;
            double lo = 0.0, hi = std::numeric_limits<double>::infinity();
            double step = 1.0;
            double armijo_step = 0.0;  // best sufficient-decrease point seen
            for (int bt = 0; bt < opt.max_backtracks; ++bt) {
                for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * direction[i];
                loss_new = objective(x_new, grad_new, -1);
                if (!std::isfinite(loss_new) ||
                    loss_new > loss + opt.armijo_c1 * step * dg) {
                    hi = step;
                    step = 0.5 * (lo + hi);
                    continue;
                }
                armijo_step = step;
                double dg_new = ops.dot(n, direction.data(), grad_new.data());
                if (dg_new < c2 * dg) {  // too steep still: bracket from the left
                    lo = step;
                    step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
                    continue;
                }
                return true;
            }
            if (armijo_step > 0.0) {  // settle for plain decrease
                for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + armijo_step * direction[i];
                loss_new = objective(x_new, grad_new, -1);
                return true;
            }
            return false;
        };
        bool accepted = line_search();
        if (!accepted && !memory.empty()) {
            // A stale curvature model can produce a direction no step length
            // rescues; drop the memory and retry along the raw gradient.
            memory.clear();
            rho.clear();
            direction = grad;
            for (double& d : direction) d = -d;
            dg = -ops.dot(n, grad.data(), grad.data());
            accepted = line_search();
        }
        if (!accepted) {
            rec.termination = "line_search_failure";
            break;
        }

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = grad_new[i] - grad[i];
        }
        double sy = ops.dot(n, s.data(), y.data());
        if (sy > 1e-300) {
            memory.emplace_back(std::move(s), std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(memory.size()) > opt.history) {
                memory.pop_front();
                rho.pop_front();
            }
        }

        x.swap(x_new);
        grad.swap(grad_new);
        loss = loss_new;
        if (loss < best_loss) {
            best_loss = loss;
            best_x = x;
        }
        if ((it + 1) % opt.log_every == 0) rec.loss_history.emplace_back(it + 1, loss);
    }

    if (loss > best_loss) {
        x = best_x;
        loss = best_loss;
    }
    rec.final_loss = loss;
    rec.iterations = it;
    rec.loss_history.emplace_back(it, loss);
    rec.wall_seconds = seconds_since(t0);
    return rec;
}

}  // namespace oneshot
