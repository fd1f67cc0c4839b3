#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "oneshot/optim.hpp"

namespace oneshot {

struct MlpConfig {
    int input_dim = 1;
    int output_dim = 1;
    int depth = 2;  // hidden layers
    int width = 32;
    enum class Activation { Tanh, Identity } activation = Activation::Tanh;
    std::uint64_t seed = 0;

    void validate() const;
    int layer_count() const { return depth + 1; }
    std::size_t param_count() const;
};

std::string to_string(MlpConfig::Activation a);
MlpConfig::Activation activation_from_string(const std::string& s);

/// Dense feed-forward net, linear output layer. Parameters live in one flat
/// vector, per layer: row-major weights [fan_out x fan_in], then biases.
/// Batched buffers are stored dimension-major: X[d * batch + s].
class Mlp {
public:
    MlpConfig config;
    std::vector<double> params;

    /// Glorot-uniform weights, zero biases, deterministic per config.seed.
    static Mlp init(const MlpConfig& config);

    struct LayerView {
        std::size_t w_off, b_off;
        int fan_in, fan_out;
    };
    std::vector<LayerView> layers() const;

    std::vector<double> forward(std::span<const double> x) const;

    struct Gradients {
        std::vector<double> param_grad;
        std::vector<double> input_grad;
    };
    /// Reverse-mode gradients of upstream * output (scalar output).
    Gradients grad(std::span<const double> x, double upstream = 1.0) const;

    /// Reusable batch buffers; acts[l] holds the layer-l activations
    /// ([dim][batch]), acts[0] being the input copy.
    struct Workspace {
        std::size_t batch = 0;
        std::vector<std::vector<double>> acts;
        std::vector<double> delta, delta_prev;
    };

    /// Runs the whole batch through the net; output is ws.acts.back().
    void forward_batch(const double* x, std::size_t batch, Workspace& ws) const;

    /// Backpropagates dY ([output_dim][batch]) through the activations left by
    /// forward_batch. Accumulates into param_grad when non-null (caller
    /// zeroes it); writes dX ([input_dim][batch]) when non-null.
    void backward_batch(Workspace& ws, const double* dy, double* param_grad, double* dx) const;

    /// Forward-mode directional derivative of the batched outputs with
    /// respect to the parameters: out ([output_dim][batch]) = (dY/dparams) v,
    /// reusing the activations left by the last forward_batch. Inputs carry
    /// no tangent.
    void param_jvp_batch(const Workspace& ws, const double* v, double* out) const;

    const double* output_of(const Workspace& ws) const { return ws.acts.back().data(); }
};

/// Training set in the same dimension-major layout the batch kernels use.
struct Dataset {
    std::size_t input_dim = 0;
    std::size_t output_dim = 1;
    std::size_t count = 0;
    std::vector<double> inputs;   // [input_dim][count]
    std::vector<double> targets;  // [output_dim][count]

    Dataset() = default;
    Dataset(std::size_t in_dim, std::size_t out_dim, std::size_t n)
        : input_dim(in_dim), output_dim(out_dim), count(n), inputs(in_dim * n, 0.0),
          targets(out_dim * n, 0.0) {}
    double& input(std::size_t dim, std::size_t sample) { return inputs[dim * count + sample]; }
    double& target(std::size_t dim, std::size_t sample) { return targets[dim * count + sample]; }
    double input(std::size_t dim, std::size_t sample) const { return inputs[dim * count + sample]; }
    double target(std::size_t dim, std::size_t sample) const { return targets[dim * count + sample]; }
    Dataset take(const std::vector<std::size_t>& indices) const;
};

double mse_loss(const Mlp& net, const Dataset& data);

/// Full-batch MSE by default; batch > 0 draws a seeded uniform subsample per
/// iteration. Throws TrainingDiverged on a non-finite loss.
TrainRecord train_adam(Mlp& net, const Dataset& data, const AdamOptions& opt,
                       std::size_t batch = 0, std::uint64_t batch_seed = 0);

/// Full-batch L-BFGS refinement from the current parameters.
TrainRecord refine_lbfgs(Mlp& net, const Dataset& data, int max_iters);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace oneshot
