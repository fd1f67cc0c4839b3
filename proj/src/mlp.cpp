#include "oneshot/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "oneshot/kernels.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

void MlpConfig::validate() const {
    if (input_dim < 1 || output_dim < 1) throw ConfigError("Mlp dimensions must be positive");
    if (depth < 1 || width < 1) throw ConfigError("Mlp needs depth >= 1 and width >= 1");
}

std::size_t MlpConfig::param_count() const {
    std::size_t total = 0;
    for (int l = 0; l <= depth; ++l) {
        int fan_in = (l == 0) ? input_dim : width;
        int fan_out = (l == depth) ? output_dim : width;
        total += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
    }
    return total;
}

std::string to_string(MlpConfig::Activation a) {
    return a == MlpConfig::Activation::Tanh ? "tanh" : "identity";
}

MlpConfig::Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return MlpConfig::Activation::Tanh;
    if (s == "identity") return MlpConfig::Activation::Identity;
    throw ConfigError("unknown activation: " + s);
}

std::vector<Mlp::LayerView> Mlp::layers() const {
    std::vector<LayerView> out;
    out.reserve(config.layer_count());
    std::size_t off = 0;
    for (int l = 0; l <= config.depth; ++l) {
        LayerView v;
        v.fan_in = (l == 0) ? config.input_dim : config.width;
        v.fan_out = (l == config.depth) ? config.output_dim : config.width;
        v.w_off = off;
        v.b_off = off + static_cast<std::size_t>(v.fan_in) * v.fan_out;
        off = v.b_off + v.fan_out;
        out.push_back(v);
    }
    return out;
}

Mlp Mlp::init(const MlpConfig& config) {
    config.validate();
    Mlp net;
    net.config = config;
    net.params.assign(config.param_count(), 0.0);
    Rng rng(config.seed);
    for (const auto& layer : net.layers()) {
        double limit = std::sqrt(6.0 / (layer.fan_in + layer.fan_out));
        std::size_t nw = static_cast<std::size_t>(layer.fan_in) * layer.fan_out;
        for (std::size_t i = 0; i < nw; ++i)
            net.params[layer.w_off + i] = rng.uniform(-limit, limit);
        // biases stay zero
    }
    return net;
}

void Mlp::forward_batch(const double* x, std::size_t batch, Workspace& ws) const {
    const auto& ops = kernels::active();
    const auto views = layers();
    const std::size_t n_layers = views.size();

    ws.batch = batch;
    ws.acts.resize(n_layers + 1);
    ws.acts[0].assign(x, x + static_cast<std::size_t>(config.input_dim) * batch);

    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& v = views[l];
        const std::vector<double>& a = ws.acts[l];
        std::vector<double>& z = ws.acts[l + 1];
        z.resize(static_cast<std::size_t>(v.fan_out) * batch);

        const double* w = params.data() + v.w_off;
        const double* b = params.data() + v.b_off;
        for (int i = 0; i < v.fan_out; ++i) {
            double* zi = z.data() + static_cast<std::size_t>(i) * batch;
            std::fill(zi, zi + batch, b[i]);
            const double* wi = w + static_cast<std::size_t>(i) * v.fan_in;
            for (int k = 0; k < v.fan_in; ++k)
                ops.axpy(batch, wi[k], a.data() + static_cast<std::size_t>(k) * batch, zi);
        }
        bool hidden = l + 1 < n_layers;
        if (hidden && config.activation == MlpConfig::Activation::Tanh)
            ops.tanh_vec(z.size(), z.data(), z.data());
    }
}

void Mlp::param_jvp_batch(const Workspace& ws, const double* v, double* out) const {
    const auto& ops = kernels::active();
    const auto views = layers();
    const std::size_t batch = ws.batch;

    std::vector<double> t, t_next;
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& lv = views[l];
        const std::vector<double>& a = ws.acts[l];
        t_next.assign(static_cast<std::size_t>(lv.fan_out) * batch, 0.0);
        const double* w = params.data() + lv.w_off;
        const double* vw = v + lv.w_off;
        const double* vb = v + lv.b_off;
        for (int i = 0; i < lv.fan_out; ++i) {
            double* ti = t_next.data() + static_cast<std::size_t>(i) * batch;
            std::fill(ti, ti + batch, vb[i]);
            const double* wi = w + static_cast<std::size_t>(i) * lv.fan_in;
            const double* vwi = vw + static_cast<std::size_t>(i) * lv.fan_in;
            for (int k = 0; k < lv.fan_in; ++k) {
                ops.axpy(batch, vwi[k], a.data() + static_cast<std::size_t>(k) * batch, ti);
                if (l > 0)  // inputs have no tangent at l == 0
                    ops.axpy(batch, wi[k], t.data() + static_cast<std::size_t>(k) * batch, ti);
            }
        }
        bool hidden = l + 1 < views.size();
        if (hidden && config.activation == MlpConfig::Activation::Tanh) {
            const std::vector<double>& y = ws.acts[l + 1];
            ops.tanh_backward(t_next.size(), y.data(), t_next.data(), t_next.data());
        }
        t.swap(t_next);
    }
    std::copy(t.begin(), t.end(), out);
}

void Mlp::backward_batch(Workspace& ws, const double* dy, double* param_grad, double* dx) const {
    const auto& ops = kernels::active();
    const auto views = layers();
    const std::size_t batch = ws.batch;

    ws.delta.assign(dy, dy + static_cast<std::size_t>(config.output_dim) * batch);

    for (std::size_t l = views.size(); l-- > 0;) {
        const auto& v = views[l];
        bool hidden = l + 1 < views.size();
        if (hidden && config.activation == MlpConfig::Activation::Tanh) {
            const std::vector<double>& y = ws.acts[l + 1];
            ops.tanh_backward(ws.delta.size(), y.data(), ws.delta.data(), ws.delta.data());
        }

        const std::vector<double>& a = ws.acts[l];
        const double* w = params.data() + v.w_off;
        if (param_grad != nullptr) {
            double* dw = param_grad + v.w_off;
            double* db = param_grad + v.b_off;
            for (int i = 0; i < v.fan_out; ++i) {
                const double* di = ws.delta.data() + static_cast<std::size_t>(i) * batch;
                double* dwi = dw + static_cast<std::size_t>(i) * v.fan_in;
                for (int k = 0; k < v.fan_in; ++k)
                    dwi[k] += ops.dot(batch, di, a.data() + static_cast<std::size_t>(k) * batch);
                db[i] += ops.sum(batch, di);
            }
        }

        bool need_input_grad = (l > 0) || (dx != nullptr);
        if (!need_input_grad) continue;
        ws.delta_prev.assign(static_cast<std::size_t>(v.fan_in) * batch, 0.0);
        for (int i = 0; i < v.fan_out; ++i) {
            const double* di = ws.delta.data() + static_cast<std::size_t>(i) * batch;
            const double* wi = w + static_cast<std::size_t>(i) * v.fan_in;
            for (int k = 0; k < v.fan_in; ++k)
                ops.axpy(batch, wi[k], di, ws.delta_prev.data() + static_cast<std::size_t>(k) * batch);
        }
        ws.delta.swap(ws.delta_prev);
    }

    if (dx != nullptr)
        std::memcpy(dx, ws.delta.data(),
                    static_cast<std::size_t>(config.input_dim) * batch * sizeof(double));
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != config.input_dim)
        throw DimensionMismatch("forward: expected " + std::to_string(config.input_dim) +
                                " inputs, got " + std::to_string(x.size()));
    Workspace ws;
    forward_batch(x.data(), 1, ws);
    return ws.acts.back();
}

Mlp::Gradients Mlp::grad(std::span<const double> x, double upstream) const {
    if (static_cast<int>(x.size()) != config.input_dim)
        throw DimensionMismatch("grad: expected " + std::to_string(config.input_dim) +
                                " inputs, got " + std::to_string(x.size()));
    if (config.output_dim != 1)
        throw DimensionMismatch("grad: scalar-output networks only");
    Workspace ws;
    forward_batch(x.data(), 1, ws);
    Gradients g;
    g.param_grad.assign(params.size(), 0.0);
    g.input_grad.assign(config.input_dim, 0.0);
    backward_batch(ws, &upstream, g.param_grad.data(), g.input_grad.data());
    return g;
}

Dataset Dataset::take(const std::vector<std::size_t>& indices) const {
    Dataset out(input_dim, output_dim, indices.size());
    for (std::size_t s = 0; s < indices.size(); ++s) {
        for (std::size_t d = 0; d < input_dim; ++d) out.input(d, s) = input(d, indices[s]);
        for (std::size_t d = 0; d < output_dim; ++d) out.target(d, s) = target(d, indices[s]);
    }
    return out;
}

namespace {

void check_dataset(const Mlp& net, const Dataset& data) {
    if (data.count == 0) throw ConfigError("training dataset is empty");
    if (data.input_dim != static_cast<std::size_t>(net.config.input_dim) ||
        data.output_dim != static_cast<std::size_t>(net.config.output_dim))
        throw DimensionMismatch("dataset dimensions do not match the network");
}

/// MSE over the batch plus its parameter gradient, reusing one workspace.
struct MseObjective {
    Mlp scratch;
    const Dataset* full;
    std::size_t batch;
    std::uint64_t batch_seed;
    Mlp::Workspace ws;
    std::vector<double> dy;
    Dataset sub;

    double operator()(const std::vector<double>& x, std::vector<double>& grad, int iter) {
        scratch.params = x;
        const Dataset* d = full;
        if (batch > 0 && batch < full->count && iter >= 0) {
            std::vector<std::size_t> idx(batch);
            Rng rng(batch_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iter + 1)));
            for (auto& i : idx) i = rng.below(full->count);
            sub = full->take(idx);
            d = &sub;
        }
        scratch.forward_batch(d->inputs.data(), d->count, ws);
        const double* pred = scratch.output_of(ws);
        const std::size_t total = d->output_dim * d->count;
        const double inv = 1.0 / static_cast<double>(total);
        dy.resize(total);
        double loss = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            double r = pred[i] - d->targets[i];
            loss += r * r;
            dy[i] = 2.0 * inv * r;
        }
        grad.assign(x.size(), 0.0);
        scratch.backward_batch(ws, dy.data(), grad.data(), nullptr);
        return loss * inv;
    }
};

}  // namespace

double mse_loss(const Mlp& net, const Dataset& data) {
    check_dataset(net, data);
    Mlp::Workspace ws;
    net.forward_batch(data.inputs.data(), data.count, ws);
    const double* pred = net.output_of(ws);
    const std::size_t total = data.output_dim * data.count;
    double loss = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        double r = pred[i] - data.targets[i];
        loss += r * r;
    }
    return loss / static_cast<double>(total);
}

TrainRecord train_adam(Mlp& net, const Dataset& data, const AdamOptions& opt, std::size_t batch,
                       std::uint64_t batch_seed) {
    check_dataset(net, data);
    MseObjective obj{net, &data, batch, batch_seed, {}, {}, {}};
    return adam_minimize(net.params, std::ref(obj), opt);
}

TrainRecord refine_lbfgs(Mlp& net, const Dataset& data, int max_iters) {
    check_dataset(net, data);
    MseObjective obj{net, &data, 0, 0, {}, {}, {}};
    LbfgsOptions opt;
    opt.max_iters = max_iters;
    return lbfgs_minimize(net.params, std::ref(obj), opt);
}

nlohmann::json mlp_to_json(const Mlp& net) {
    return nlohmann::json{
        {"config",
         {{"input_dim", net.config.input_dim},
          {"output_dim", net.config.output_dim},
          {"depth", net.config.depth},
          {"width", net.config.width},
          {"activation", to_string(net.config.activation)},
          {"seed", net.config.seed}}},
        {"params", net.params},
    };
}

Mlp mlp_from_json(const nlohmann::json& j) {
    Mlp net;
    const auto& c = j.at("config");
    net.config.input_dim = c.at("input_dim").get<int>();
    net.config.output_dim = c.at("output_dim").get<int>();
    net.config.depth = c.at("depth").get<int>();
    net.config.width = c.at("width").get<int>();
    net.config.activation = activation_from_string(c.at("activation").get<std::string>());
    net.config.seed = c.at("seed").get<std::uint64_t>();
    net.config.validate();
    net.params = j.at("params").get<std::vector<double>>();
    if (net.params.size() != net.config.param_count())
        throw ConfigError("checkpoint parameter count mismatch");
    return net;
}

}  // namespace oneshot
