#include "oneshot/loinn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "oneshot/kernels.hpp"

namespace oneshot {

std::vector<std::size_t> boundary_node_indices(const AnyGrid& grid) {
    std::vector<std::size_t> out;
    if (const auto* g1 = std::get_if<Grid1D>(&grid)) {
        out = {0, static_cast<std::size_t>(g1->n - 1)};
        return out;
    }
    const auto& g = std::get<GridST>(grid);
    for (int i = 0; i < g.nx; ++i) out.push_back(g.index(i, 0));  // initial line
    for (int j = 1; j < g.nt; ++j) {
        out.push_back(g.index(0, j));
        out.push_back(g.index(g.nx - 1, j));
    }
    return out;
}

namespace {

/// Precomputed collocation machinery reused across loss evaluations.
class LoinnSystem {
public:
    LoinnSystem(const LocalOperator& op, const AnyGrid& grid, const Field& f, const Field* u0,
                const LoinnConfig& cfg)
        : op_(op), grid_(grid), u0_(u0), corrected_(cfg.corrected),
          interior_weight_(cfg.interior_weight), boundary_weight_(cfg.boundary_weight) {
        if (corrected_ && u0_ == nullptr)
            throw ConfigError("cLOINN requires the base solution u0");
        if (corrected_ && u0_->grid != grid)
            throw GridMismatch("u0 must live on the collocation grid");

        plan_ = enumerate_anchors(grid, op.stencil);
        if (cfg.interior_nodes) restrict_plan(*cfg.interior_nodes);
        boundary_ = cfg.boundary_nodes ? *cfg.boundary_nodes : boundary_node_indices(grid);
        if (cfg.boundary_nodes) {
            auto all = boundary_node_indices(grid);
            std::unordered_set<std::size_t> allowed(all.begin(), all.end());
            for (std::size_t b : boundary_)
                if (!allowed.count(b))
                    throw DegenerateCollocation("boundary collocation node is not on the boundary");
        }
        if (plan_.count() == 0) throw DegenerateCollocation("empty interior collocation set");
        if (boundary_.empty()) throw DegenerateCollocation("empty boundary collocation set");

        // Coordinates affinely mapped to [-1,1] per dimension.
        n_nodes_ = node_count(grid);
        if (const auto* g1 = std::get_if<Grid1D>(&grid_)) {
            dim_ = 1;
            coords_.resize(n_nodes_);
            for (int i = 0; i < g1->n; ++i) coords_[i] = 2.0 * g1->x(i) - 1.0;
        } else {
            const auto& g = std::get<GridST>(grid_);
            dim_ = 2;
            coords_.resize(2 * n_nodes_);
            for (int j = 0; j < g.nt; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    std::size_t s = g.index(i, j);
                    coords_[s] = 2.0 * g.x(i) - 1.0;
                    coords_[n_nodes_ + s] = 2.0 * g.t(j) - 1.0;
                }
        }

        // f rows of the stencil inputs never change.
        x_.resize(static_cast<std::size_t>(op.input_dim()) * plan_.count());
        u_hat_ = Field::zeros(grid);
        gather_stencil_inputs(plan_, u_hat_, f, x_.data());

        y_.resize(plan_.count());
        u_grads_.resize(op.stencil.u_offsets.size() * plan_.count());
        dldu_.resize(n_nodes_);
    }

    int coord_dim() const { return dim_; }

    /// Loss and parameter gradient at the net's current parameters.
    double eval(const Mlp& net, std::vector<double>* grad) {
        net.forward_batch(coords_.data(), n_nodes_, ws_);
        const double* nvals = net.output_of(ws_);
        for (std::size_t s = 0; s < n_nodes_; ++s)
            u_hat_.values[s] = corrected_ ? nvals[s] + u0_->values[s] : nvals[s];

        const std::size_t batch = plan_.count();
        gather_stencil_inputs(plan_, u_hat_, u_hat_, x_.data(), /*u_only=*/true);
        op_.apply_batch(x_.data(), batch, y_.data(), grad ? u_grads_.data() : nullptr, op_ws_);

        const double ci = interior_weight_ / static_cast<double>(batch);
        const double cb = boundary_weight_ / static_cast<double>(boundary_.size());
        std::fill(dldu_.begin(), dldu_.end(), 0.0);

        double loss = 0.0;
        for (std::size_t s = 0; s < batch; ++s) {
            double r = u_hat_.values[plan_.anchors[s]] - y_[s];
            loss += ci * r * r;
            if (grad) {
                dldu_[plan_.anchors[s]] += 2.0 * ci * r;
                for (std::size_t k = 0; k < plan_.u_nodes.size(); ++k)
                    dldu_[plan_.u_nodes[k][s]] -= 2.0 * ci * r * u_grads_[k * batch + s];
            }
        }
        for (std::size_t b : boundary_) {
            double v = u_hat_.values[b];  // zero Dirichlet: B(u_hat) = u_hat
            loss += cb * v * v;
            if (grad) dldu_[b] += 2.0 * cb * v;
        }

        if (grad) {
            grad->assign(net.params.size(), 0.0);
            net.backward_batch(ws_, dldu_.data(), grad->data(), nullptr);
        }
        return loss;
    }

    /// Weighted residual vector (interior then boundary rows) and the
    /// operator linearization at the net's current parameters; leaves the
    /// forward activations in ws_ for the Jacobian products below. Returns
    /// the loss, which equals the squared norm of the residual vector.
    double linearize(const Mlp& net) {
        net.forward_batch(coords_.data(), n_nodes_, ws_);
        const double* nvals = net.output_of(ws_);
        for (std::size_t s = 0; s < n_nodes_; ++s)
            u_hat_.values[s] = corrected_ ? nvals[s] + u0_->values[s] : nvals[s];

        const std::size_t batch = plan_.count();
        gather_stencil_inputs(plan_, u_hat_, u_hat_, x_.data(), /*u_only=*/true);
        op_.apply_batch(x_.data(), batch, y_.data(), u_grads_.data(), op_ws_);

        sqci_ = std::sqrt(interior_weight_ / static_cast<double>(batch));
        sqcb_ = std::sqrt(boundary_weight_ / static_cast<double>(boundary_.size()));
        r_.resize(batch + boundary_.size());
        double loss = 0.0;
        for (std::size_t s = 0; s < batch; ++s) {
            r_[s] = sqci_ * (u_hat_.values[plan_.anchors[s]] - y_[s]);
            loss += r_[s] * r_[s];
        }
        for (std::size_t b = 0; b < boundary_.size(); ++b) {
            r_[batch + b] = sqcb_ * u_hat_.values[boundary_[b]];
            loss += r_[batch + b] * r_[batch + b];
        }
        return loss;
    }

    std::size_t residual_count() const { return plan_.count() + boundary_.size(); }

    /// out = J v where J is the residual Jacobian at the last linearize().
    void jac_vec(const Mlp& net, const double* v, std::vector<double>& out) {
        tan_.resize(n_nodes_);
        net.param_jvp_batch(ws_, v, tan_.data());
        const std::size_t batch = plan_.count();
        out.resize(residual_count());
        for (std::size_t s = 0; s < batch; ++s) {
            double t = tan_[plan_.anchors[s]];
            for (std::size_t k = 0; k < plan_.u_nodes.size(); ++k)
                t -= u_grads_[k * batch + s] * tan_[plan_.u_nodes[k][s]];
            out[s] = sqci_ * t;
        }
        for (std::size_t b = 0; b < boundary_.size(); ++b)
            out[batch + b] = sqcb_ * tan_[boundary_[b]];
    }

    /// out = Jᵀ q at the last linearize().
    void jac_transpose_vec(const Mlp& net, const double* q, std::vector<double>& out) {
        const std::size_t batch = plan_.count();
        std::fill(dldu_.begin(), dldu_.end(), 0.0);
        for (std::size_t s = 0; s < batch; ++s) {
            dldu_[plan_.anchors[s]] += sqci_ * q[s];
            for (std::size_t k = 0; k < plan_.u_nodes.size(); ++k)
                dldu_[plan_.u_nodes[k][s]] -= sqci_ * u_grads_[k * batch + s] * q[s];
        }
        for (std::size_t b = 0; b < boundary_.size(); ++b)
            dldu_[boundary_[b]] += sqcb_ * q[batch + b];
        out.assign(net.params.size(), 0.0);
        net.backward_batch(ws_, dldu_.data(), out.data(), nullptr);
    }

    /// Left preconditioner for the Gauss-Newton stage: applies the scaled
    /// inverse of the discretized differential operator to the interior
    /// residual block (boundary rows pass through). Interior residuals are
    /// the discrete operator applied to the solution error times ~h²; the
    /// smooth error modes the iteration must remove are therefore almost
    /// invisible to the plain least-squares problem. Mapping residuals back
    /// to solution-error units makes the problem well conditioned while
    /// keeping the same zero-residual set.
    void precondition(std::vector<double>& rv, bool transpose) {
        const std::size_t batch = plan_.count();
        scatter_.assign(n_nodes_, 0.0);
        for (std::size_t s = 0; s < batch; ++s) scatter_[plan_.anchors[s]] = rv[s];

        if (const auto* g1 = std::get_if<Grid1D>(&grid_)) {
            // Solve w_{i-1} - 2 w_i + w_{i+1} = 2 s_i on the interior with
            // zero ends: this is (2/h²) A⁻¹ in one pass, and A is symmetric
            // so the transpose is identical.
            (void)transpose;
            const int n = g1->n;
            std::vector<double>& w = scatter_;
            thom_c_.assign(n, 0.0);
            thom_d_.assign(n, 0.0);
            double denom = -2.0;
            thom_c_[1] = 1.0 / denom;
            thom_d_[1] = 2.0 * w[1] / denom;
            for (int i = 2; i < n - 1; ++i) {
                denom = -2.0 - thom_c_[i - 1];
                thom_c_[i] = 1.0 / denom;
                thom_d_[i] = (2.0 * w[i] - thom_d_[i - 1]) / denom;
            }
            w[n - 2] = thom_d_[n - 2];
            for (int i = n - 3; i >= 1; --i) w[i] = thom_d_[i] - thom_c_[i] * w[i + 1];
            w[0] = w[n - 1] = 0.0;
        } else {
            // Backward-Euler stepping operator M (block lower triangular in
            // time): forward sweep applies M⁻¹, reverse sweep applies M⁻ᵀ.
            const auto& g = std::get<GridST>(grid_);
            const double ratio = g.ht * op_.equation.diffusion / (g.hx * g.hx);
            const double diag = 1.0 + 2.0 * ratio;
            const int nx = g.nx, nt = g.nt;
            std::vector<double>& w = scatter_;
            thom_c_.assign(nx, 0.0);
            thom_d_.assign(nx, 0.0);
            auto step = [&](int j, int j_prev) {
                // Solve (I - ht D Δ_h) row = s_j + row_{j_prev} on interior i.
                double denom = diag;
                std::size_t base = g.index(0, j);
                std::size_t prev = j_prev >= 0 ? g.index(0, j_prev) : 0;
                auto rhs = [&](int i) {
                    return w[base + i] + (j_prev >= 0 ? w[prev + i] : 0.0);
                };
                thom_c_[1] = -ratio / denom;
                thom_d_[1] = rhs(1) / denom;
                for (int i = 2; i < nx - 1; ++i) {
                    denom = diag + ratio * thom_c_[i - 1];
                    thom_c_[i] = -ratio / denom;
                    thom_d_[i] = (rhs(i) + ratio * thom_d_[i - 1]) / denom;
                }
                w[base + nx - 2] = thom_d_[nx - 2];
                for (int i = nx - 3; i >= 1; --i)
                    w[base + i] = thom_d_[i] - thom_c_[i] * w[base + i + 1];
                w[base] = w[base + nx - 1] = 0.0;
            };
            if (!transpose) {
                for (int j = 1; j < nt; ++j) step(j, j - 1);
            } else {
                for (int j = nt - 1; j >= 1; --j) step(j, j + 1 < nt ? j + 1 : -1);
            }
            // Scale to solution units: interior residuals carry 1/(1+2r).
            for (std::size_t s = 0; s < w.size(); ++s) w[s] *= diag;
        }

        for (std::size_t s = 0; s < batch; ++s) rv[s] = scatter_[plan_.anchors[s]];
    }

    /// Damped Gauss-Newton: each outer step solves (JᵀJ + λI) δ = Jᵀr by
    /// conjugate gradients with matrix-free products, with multiplicative λ
    /// adjustment on accept/reject.
    TrainRecord gauss_newton(Mlp& net, int max_iters, int cg_iters) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& ops = kernels::active();
        const std::size_t np = net.params.size();

        TrainRecord rec;
        rec.termination = "max_iterations";
        std::vector<double> pr;
        auto prec_loss = [&]() {
            pr = r_;
            precondition(pr, /*transpose=*/false);
            double l = 0.0;
            for (double v : pr) l += v * v;
            return l;
        };
        linearize(net);
        double loss = prec_loss();
        rec.loss_history.emplace_back(0, loss);

        std::vector<double> g(np), delta(np), cg_r(np), cg_p(np), cg_ap(np), jp, saved;
        double lambda = 1e-4;
        int it = 0;
        for (; it < max_iters; ++it) {
            // g = (PJ)ᵀ (P r): pr already holds P r for the current iterate.
            jp = pr;
            precondition(jp, /*transpose=*/true);
            jac_transpose_vec(net, jp.data(), g);
            double gg = ops.dot(np, g.data(), g.data());
            if (!(gg > 1e-40)) {
                rec.termination = "gradient_tolerance";
                break;
            }

            std::fill(delta.begin(), delta.end(), 0.0);
            cg_r = g;
            cg_p = g;
            double rr = gg;
            for (int cgi = 0; cgi < cg_iters && rr > 1e-8 * gg; ++cgi) {
                jac_vec(net, cg_p.data(), jp);
                precondition(jp, /*transpose=*/false);
                precondition(jp, /*transpose=*/true);
                jac_transpose_vec(net, jp.data(), cg_ap);
                ops.axpy(np, lambda, cg_p.data(), cg_ap.data());
                double pap = ops.dot(np, cg_p.data(), cg_ap.data());
                if (!(pap > 0.0)) break;
                double alpha = rr / pap;
                ops.axpy(np, alpha, cg_p.data(), delta.data());
                ops.axpy(np, -alpha, cg_ap.data(), cg_r.data());
                double rr_new = ops.dot(np, cg_r.data(), cg_r.data());
                double beta = rr_new / rr;
                rr = rr_new;
                for (std::size_t i = 0; i < np; ++i) cg_p[i] = cg_r[i] + beta * cg_p[i];
            }

            saved = net.params;
            for (std::size_t i = 0; i < np; ++i) net.params[i] -= delta[i];
            linearize(net);
            double loss_new = prec_loss();
            if (std::isfinite(loss_new) && loss_new <= loss) {
                loss = loss_new;
                lambda = std::max(lambda / 3.0, 1e-14);
            } else {
                net.params = saved;
                linearize(net);  // restore the accepted linearization state
                loss = prec_loss();
                lambda *= 4.0;
                if (lambda > 1e10) {
                    rec.termination = "damping_limit";
                    ++it;
                    break;
                }
            }
            rec.loss_history.emplace_back(it + 1, loss);
        }
        rec.iterations = it;
        rec.final_loss = loss;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rec;
    }

    Field predict(const Mlp& net) {
        net.forward_batch(coords_.data(), n_nodes_, ws_);
        const double* nvals = net.output_of(ws_);
        Field out = Field::zeros(grid_);
        for (std::size_t s = 0; s < n_nodes_; ++s)
            out.values[s] = corrected_ ? nvals[s] + u0_->values[s] : nvals[s];
        return out;
    }

private:
    void restrict_plan(const std::vector<std::size_t>& wanted) {
        std::unordered_set<std::size_t> keep(wanted.begin(), wanted.end());
        AnchorSet filtered;
        filtered.u_nodes.resize(plan_.u_nodes.size());
        filtered.f_nodes.resize(plan_.f_nodes.size());
        for (std::size_t s = 0; s < plan_.count(); ++s) {
            if (!keep.count(plan_.anchors[s])) continue;
            filtered.anchors.push_back(plan_.anchors[s]);
            for (std::size_t k = 0; k < plan_.u_nodes.size(); ++k)
                filtered.u_nodes[k].push_back(plan_.u_nodes[k][s]);
            for (std::size_t k = 0; k < plan_.f_nodes.size(); ++k)
                filtered.f_nodes[k].push_back(plan_.f_nodes[k][s]);
        }
        if (filtered.anchors.size() != keep.size())
            throw DegenerateCollocation("interior collocation node is not an admissible anchor");
        plan_ = std::move(filtered);
    }

    const LocalOperator& op_;
    AnyGrid grid_;
    const Field* u0_;
    bool corrected_;
    double interior_weight_, boundary_weight_;

    AnchorSet plan_;
    std::vector<std::size_t> boundary_;
    std::size_t n_nodes_ = 0;
    int dim_ = 1;
    std::vector<double> coords_;  // [dim][n_nodes]
    Field u_hat_;
    std::vector<double> x_, y_, u_grads_, dldu_, r_, tan_, scatter_, thom_c_, thom_d_;
    double sqci_ = 0.0, sqcb_ = 0.0;
    Mlp::Workspace ws_;
    LocalOperator::ApplyWorkspace op_ws_;
};

}  // namespace

std::pair<double, std::vector<double>> loinn_loss(const Mlp& net, const LocalOperator& op,
                                                  const AnyGrid& grid, const Field& f,
                                                  const Field* u0, const LoinnConfig& cfg) {
    LoinnSystem system(op, grid, f, u0, cfg);
    std::vector<double> grad;
    double loss = system.eval(net, &grad);
    return {loss, std::move(grad)};
}

LoinnResult train_loinn(const LocalOperator& op, const AnyGrid& grid, const Field& f,
                        const Field* u0, const LoinnConfig& cfg) {
    LoinnSystem system(op, grid, f, u0, cfg);

    MlpConfig net_config = cfg.net_config;
    net_config.input_dim = system.coord_dim();
    net_config.output_dim = 1;
    Mlp net = Mlp::init(net_config);
    if (cfg.zero_output_init) {
        auto out_layer = net.layers().back();
        std::size_t n_out = static_cast<std::size_t>(out_layer.fan_in) * out_layer.fan_out +
                            static_cast<std::size_t>(out_layer.fan_out);
        std::fill_n(net.params.begin() + static_cast<std::ptrdiff_t>(out_layer.w_off), n_out, 0.0);
    }
    Mlp scratch = net;

    auto objective = [&](const std::vector<double>& x, std::vector<double>& grad, int) {
        scratch.params = x;
        return system.eval(scratch, &grad);
    };

    AdamOptions adam;
    adam.lr = cfg.budget.lr;
    adam.iters = cfg.budget.adam_iters;
    adam.log_every = cfg.budget.log_every;
    adam.patience = cfg.patience;
    LoinnResult result;
    result.adam = adam_minimize(net.params, objective, adam);

    LbfgsOptions lbfgs;
    lbfgs.max_iters = cfg.budget.lbfgs_iters;
    result.lbfgs = lbfgs_minimize(net.params, objective, lbfgs);

    if (cfg.gauss_newton_iters > 0)
        result.gauss_newton =
            system.gauss_newton(net, cfg.gauss_newton_iters, cfg.gauss_newton_cg_iters);

    result.u_hat = system.predict(net);
    return result;
}

}  // namespace oneshot
