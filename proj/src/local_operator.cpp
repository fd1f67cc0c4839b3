#include "oneshot/local_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "oneshot/kernels.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

Normalization Normalization::identity(int input_dim) {
    Normalization n;
    n.in_mean.assign(input_dim, 0.0);
    n.in_scale.assign(input_dim, 1.0);
    return n;
}

namespace {

enum class OracleKind { PoissonCentral, DiffusionImplicit, NonlinearDrImplicit, None };

OracleKind oracle_kind(const EquationSpec& eq, const StencilSpec& stencil) {
    switch (eq.kind) {
        case EquationKind::Poisson1D:
            if (stencil.name == "poisson_g1" || stencil.name == "poisson_g2")
                return OracleKind::PoissonCentral;
            break;
        case EquationKind::LinearDiffusion:
            if (stencil.name == "diffusion_g1") return OracleKind::DiffusionImplicit;
            break;
        case EquationKind::NonlinearDiffusionReaction:
            if (stencil.name == "diffusion_g1") return OracleKind::NonlinearDrImplicit;
            break;
    }
    return OracleKind::None;
}

std::size_t center_f_row(const StencilSpec& stencil) {
    for (std::size_t k = 0; k < stencil.f_offsets.size(); ++k)
        if (stencil.f_offsets[k] == Offset{0, 0}) return stencil.u_offsets.size() + k;
    throw ConfigError("oracle stencil has no center f input");
}

}  // namespace

void LocalOperator::validate() const {
    stencil.validate();
    equation.validate();
    if (net) {
        if (net->config.input_dim != input_dim() || net->config.output_dim != 1)
            throw DimensionMismatch("operator net dimensions do not match the stencil");
        if (norm.in_mean.size() != static_cast<std::size_t>(input_dim()))
            throw DimensionMismatch("operator normalization does not match the stencil");
    } else if (oracle_kind(equation, stencil) == OracleKind::None) {
        throw ConfigError("unsupported (equation, stencil) pair for the analytic oracle");
    }
}

void LocalOperator::apply_batch(const double* x, std::size_t batch, double* y, double* u_grads,
                                ApplyWorkspace& scratch) const {
    const auto& ops = kernels::active();
    const std::size_t dim = static_cast<std::size_t>(input_dim());
    const std::size_t nu = stencil.u_offsets.size();

    if (net) {
        scratch.xnorm.resize(dim * batch);
        for (std::size_t d = 0; d < dim; ++d) {
            double inv = 1.0 / norm.in_scale[d];
            ops.affine(batch, inv, -norm.in_mean[d] * inv, x + d * batch,
                       scratch.xnorm.data() + d * batch);
        }
        net->forward_batch(scratch.xnorm.data(), batch, scratch.ws);
        ops.affine(batch, norm.out_scale, norm.out_mean, net->output_of(scratch.ws), y);
        if (u_grads != nullptr) {
            scratch.dy.assign(batch, norm.out_scale);
            scratch.dx.resize(dim * batch);
            net->backward_batch(scratch.ws, scratch.dy.data(), nullptr, scratch.dx.data());
            for (std::size_t k = 0; k < nu; ++k)
                ops.affine(batch, 1.0 / norm.in_scale[k], 0.0, scratch.dx.data() + k * batch,
                           u_grads + k * batch);
        }
        return;
    }

    switch (oracle_kind(equation, stencil)) {
        case OracleKind::PoissonCentral: {
            // u_i = (u_{i-1} + u_{i+1} - h^2 f_i) / 2
            const double h2 = hx * hx;
            const double* ul = x;
            const double* ur = x + batch;
            const double* fc = x + center_f_row(stencil) * batch;
            for (std::size_t s = 0; s < batch; ++s) y[s] = 0.5 * (ul[s] + ur[s] - h2 * fc[s]);
            if (u_grads != nullptr)
                for (std::size_t k = 0; k < nu; ++k)
                    std::fill(u_grads + k * batch, u_grads + (k + 1) * batch, k < 2 ? 0.5 : 0.0);
            return;
        }
        case OracleKind::DiffusionImplicit:
        case OracleKind::NonlinearDrImplicit: {
            // Backward Euler solved for the center:
            // u_i^j = (u_i^{j-1} + r (u_{i-1}^j + u_{i+1}^j) + ht (k u_prev^2 + f_i)) / (1 + 2r)
            const double r = equation.diffusion * ht / (hx * hx);
            const double denom = 1.0 / (1.0 + 2.0 * r);
            const double k_rate = equation.reaction.value_or(0.0);
            const double* uprev = x;                // offset (0,-1)
            const double* ul = x + batch;           // offset (-1,0)
            const double* ur = x + 2 * batch;       // offset (+1,0)
            const double* fc = x + center_f_row(stencil) * batch;
            for (std::size_t s = 0; s < batch; ++s) {
                double rhs = uprev[s] + r * (ul[s] + ur[s]) + ht * fc[s];
                rhs += ht * k_rate * uprev[s] * uprev[s];
                y[s] = rhs * denom;
            }
            if (u_grads != nullptr) {
                double* gp = u_grads;
                for (std::size_t s = 0; s < batch; ++s)
                    gp[s] = (1.0 + 2.0 * ht * k_rate * uprev[s]) * denom;
                std::fill(u_grads + batch, u_grads + 3 * batch, r * denom);
            }
            return;
        }
        case OracleKind::None: break;
    }
    throw ConfigError("unsupported (equation, stencil) pair for the analytic oracle");
}

namespace {

void check_anchor(const LocalOperator& op, const Field& u, const Field& f, int i, int j) {
    if (op.stencil.space_time) {
        const GridST& g = u.grid_st();
        if (!f.is_spatial() || f.grid1d().n != g.nx)
            throw GridMismatch("apply: f must live on the matching spatial grid");
        if (i < 1 || i > g.nx - 2 || j < 1 || j > g.nt - 1)
            throw ConfigError("apply: inadmissible anchor (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
        for (const auto& group : {&op.stencil.u_offsets, &op.stencil.f_offsets})
            for (const auto& o : *group) {
                int ii = i + o.di, jj = j + o.dj;
                if (ii < 0 || ii > g.nx - 1 || jj < 0 || jj > g.nt - 1)
                    throw ConfigError("apply: stencil leaves the grid at the anchor");
            }
    } else {
        const Grid1D& g = u.grid1d();
        if (u.grid != f.grid) throw GridMismatch("apply: u and f must share a grid");
        if (i < 1 || i > g.n - 2) throw ConfigError("apply: inadmissible anchor " + std::to_string(i));
        for (const auto& group : {&op.stencil.u_offsets, &op.stencil.f_offsets})
            for (const auto& o : *group)
                if (i + o.di < 0 || i + o.di > g.n - 1)
                    throw ConfigError("apply: stencil leaves the grid at the anchor");
    }
}

std::vector<double> gather_one(const LocalOperator& op, const Field& u, const Field& f, int i,
                               int j) {
    std::vector<double> x(op.input_dim());
    std::size_t row = 0;
    if (op.stencil.space_time) {
        const GridST& g = u.grid_st();
        for (const auto& o : op.stencil.u_offsets) x[row++] = u.values[g.index(i + o.di, j + o.dj)];
        for (const auto& o : op.stencil.f_offsets) x[row++] = f.values[i + o.di];
    } else {
        for (const auto& o : op.stencil.u_offsets) x[row++] = u.values[i + o.di];
        for (const auto& o : op.stencil.f_offsets) x[row++] = f.values[i + o.di];
    }
    return x;
}

}  // namespace

double LocalOperator::apply(const Field& u, const Field& f, int i, int j) const {
    check_anchor(*this, u, f, i, j);
    std::vector<double> x = gather_one(*this, u, f, i, j);
    double y = 0.0;
    ApplyWorkspace scratch;
    apply_batch(x.data(), 1, &y, nullptr, scratch);
    return y;
}

std::vector<double> LocalOperator::apply_grad(const Field& u, const Field& f, int i, int j) const {
    check_anchor(*this, u, f, i, j);
    std::vector<double> x = gather_one(*this, u, f, i, j);
    double y = 0.0;
    std::vector<double> g(stencil.u_offsets.size());
    ApplyWorkspace scratch;
    apply_batch(x.data(), 1, &y, g.data(), scratch);
    return g;
}

LocalOperator oracle_stencil_map(const EquationSpec& eq, const StencilSpec& stencil, double hx,
                                 double ht) {
    if (oracle_kind(eq, stencil) == OracleKind::None)
        throw ConfigError("unsupported (equation, stencil) pair for the analytic oracle");
    if (hx <= 0.0) throw ConfigError("oracle needs a positive spatial spacing");
    if (eq.is_time_dependent() && ht <= 0.0)
        throw ConfigError("oracle needs a positive time spacing for time-dependent equations");
    LocalOperator op;
    op.stencil = stencil;
    op.equation = eq;
    op.hx = hx;
    op.ht = ht;
    op.validate();
    return op;
}

namespace {

// Closed-form least-squares solve for the linear output layer given the
// last hidden activations, QR with column pivoting for rank safety.
void refit_output_layer(Mlp& net, const Dataset& train) {
    const std::size_t n = train.count;
    const int width = net.config.width;
    Mlp::Workspace ws;
    net.forward_batch(train.inputs.data(), n, ws);
    const auto& hidden = ws.acts[ws.acts.size() - 2];
    Eigen::MatrixXd phi(n, width + 1);
    Eigen::VectorXd y(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (int k = 0; k < width; ++k)
            phi(static_cast<Eigen::Index>(s), k) = hidden[static_cast<std::size_t>(k) * n + s];
        phi(static_cast<Eigen::Index>(s), width) = 1.0;
        y(static_cast<Eigen::Index>(s)) = train.target(0, s);
    }
    Eigen::VectorXd w = phi.colPivHouseholderQr().solve(y);
    const auto out_layer = net.layers().back();
    for (int k = 0; k < width; ++k) net.params[out_layer.w_off + k] = w(k);
    net.params[out_layer.b_off] = w(width);
}

}  // namespace

TrainBudget TrainBudget::scaled(double factor) const {
    TrainBudget b = *this;
    b.adam_iters = std::max(0, static_cast<int>(std::llround(adam_iters * factor)));
    b.lbfgs_iters = std::max(0, static_cast<int>(std::llround(lbfgs_iters * factor)));
    return b;
}

LocalOperatorTraining train_local_operator(const Dataset& data, const StencilSpec& stencil,
                                           const EquationSpec& eq, double hx, double ht,
                                           MlpConfig net_config, const TrainBudget& budget) {
    if (data.count == 0) throw ConfigError("train_local_operator: empty dataset");
    if (data.input_dim != static_cast<std::size_t>(stencil.input_dim()))
        throw DimensionMismatch("dataset does not match the stencil input size");

    // Seed-deterministic shuffle, then hold out the validation tail.
    std::vector<std::size_t> order(data.count);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(budget.seed ^ 0x5be5a1b4c0ffee00ULL);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    std::size_t n_val = static_cast<std::size_t>(budget.val_fraction * data.count);
    if (n_val >= data.count) n_val = data.count - 1;
    std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
    std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
    Dataset train = data.take(train_idx);
    Dataset val = data.take(val_idx);

    // Standardize inputs and target over the training split.
    Normalization norm = Normalization::identity(stencil.input_dim());
    auto standardize = [&](const double* v, std::size_t n, double& mean, double& scale) {
        double m = 0.0;
        for (std::size_t s = 0; s < n; ++s) m += v[s];
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t s = 0; s < n; ++s) var += (v[s] - m) * (v[s] - m);
        var /= static_cast<double>(n);
        mean = m;
        scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    };
    for (std::size_t d = 0; d < train.input_dim; ++d)
        standardize(train.inputs.data() + d * train.count, train.count, norm.in_mean[d],
                    norm.in_scale[d]);
    standardize(train.targets.data(), train.count, norm.out_mean, norm.out_scale);

    auto normalize = [&](Dataset& ds) {
        for (std::size_t d = 0; d < ds.input_dim; ++d)
            for (std::size_t s = 0; s < ds.count; ++s)
                ds.input(d, s) = (ds.input(d, s) - norm.in_mean[d]) / norm.in_scale[d];
        for (std::size_t s = 0; s < ds.count; ++s)
            ds.target(0, s) = (ds.target(0, s) - norm.out_mean) / norm.out_scale;
    };
    normalize(train);
    normalize(val);

    net_config.input_dim = stencil.input_dim();
    net_config.output_dim = 1;
    Mlp net = Mlp::init(net_config);
    if (budget.init_scale != 1.0) {
        auto layer_views = net.layers();
        for (std::size_t l = 0; l + 1 < layer_views.size(); ++l) {
            const auto& lv = layer_views[l];
            for (std::size_t k = lv.w_off; k < lv.b_off; ++k) net.params[k] *= budget.init_scale;
        }
        const auto& out_layer = layer_views.back();
        std::fill(net.params.begin() + out_layer.w_off,
                  net.params.begin() + out_layer.b_off + out_layer.fan_out, 0.0);
    }

    AdamOptions adam;
    adam.lr = budget.lr;
    adam.iters = budget.adam_iters;
    adam.log_every = budget.log_every;
    LocalOperatorTraining result;
    result.adam = train_adam(net, train, adam, budget.batch, budget.seed ^ 0xadA3577ULL);
    result.lbfgs = refine_lbfgs(net, train, budget.lbfgs_iters);
    if (budget.refit_output) refit_output_layer(net, train);

    LocalOperator op;
    op.stencil = stencil;
    op.equation = eq;
    op.hx = hx;
    op.ht = ht;
    op.net = std::move(net);
    op.norm = norm;
    op.train_mse = mse_loss(*op.net, train) * norm.out_scale * norm.out_scale;
    op.val_mse = val.count > 0 ? mse_loss(*op.net, val) * norm.out_scale * norm.out_scale : 0.0;
    op.validate();
    result.op = std::move(op);
    return result;
}

nlohmann::json local_operator_to_json(const LocalOperator& op) {
    nlohmann::json j{
        {"stencil", stencil_to_json(op.stencil)},
        {"equation",
         {{"kind", to_string(op.equation.kind)},
          {"diffusion", op.equation.diffusion},
          {"reaction", op.equation.reaction.has_value() ? nlohmann::json(*op.equation.reaction)
                                                        : nlohmann::json(nullptr)}}},
        {"hx", op.hx},
        {"ht", op.ht},
        {"oracle", op.is_oracle()},
    };
    if (op.net) {
        j["net"] = mlp_to_json(*op.net);
        j["normalization"] = {{"in_mean", op.norm.in_mean},
                              {"in_scale", op.norm.in_scale},
                              {"out_mean", op.norm.out_mean},
                              {"out_scale", op.norm.out_scale}};
        j["train_mse"] = op.train_mse;
        j["val_mse"] = op.val_mse;
    }
    return j;
}

LocalOperator local_operator_from_json(const nlohmann::json& j) {
    LocalOperator op;
    op.stencil = stencil_from_json(j.at("stencil"));
    const auto& e = j.at("equation");
    op.equation.kind = equation_kind_from_string(e.at("kind").get<std::string>());
    op.equation.diffusion = e.at("diffusion").get<double>();
    if (!e.at("reaction").is_null()) op.equation.reaction = e.at("reaction").get<double>();
    op.hx = j.at("hx").get<double>();
    op.ht = j.at("ht").get<double>();
    if (!j.at("oracle").get<bool>()) {
        op.net = mlp_from_json(j.at("net"));
        const auto& n = j.at("normalization");
        op.norm.in_mean = n.at("in_mean").get<std::vector<double>>();
        op.norm.in_scale = n.at("in_scale").get<std::vector<double>>();
        op.norm.out_mean = n.at("out_mean").get<double>();
        op.norm.out_scale = n.at("out_scale").get<double>();
        op.train_mse = j.value("train_mse", 0.0);
        op.val_mse = j.value("val_mse", 0.0);
    }
    op.validate();
    return op;
}

}  // namespace oneshot
