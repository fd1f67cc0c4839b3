#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "oneshot/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<double> budget_scale;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
    auto* c = cmd->add_option("--config", o.config_path, "Experiment config JSON");
    if (config_required) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--budget-scale", o.budget_scale,
                    "Uniform scale on all optimizer iteration budgets");
    cmd->add_option("--seed", o.seed, "Override the training and data seeds");
    cmd->add_option("--out", o.out_dir, "Override the output directory");
}

oneshot::ExperimentConfig resolve(const CommonOpts& o, const oneshot::ExperimentConfig* base) {
    oneshot::ExperimentConfig cfg =
        o.config_path.empty() ? *base : oneshot::load_experiment_config(o.config_path, base);
    if (o.budget_scale) cfg.budget_scale = *o.budget_scale;
    if (o.seed) {
        cfg.train_seed = *o.seed;
        cfg.budget.seed = *o.seed;
        cfg.loinn_budget.seed = *o.seed;
    }
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-shot local solution operators for PDEs"};
    app.require_subcommand(1);

    CommonOpts gen_o, train_o, pred_o, eval_o, repro_o;
    std::string repro_name;
    std::string pred_forcing, pred_backend = "fpi", pred_stencil;
    int pred_resolution = 0;

    auto* gen = app.add_subcommand("gen-data", "Generate the one-shot training pair");
    add_common(gen, gen_o, true);

    auto* train = app.add_subcommand("train-local", "Train the local operators");
    add_common(train, train_o, true);

    auto* pred = app.add_subcommand("predict", "Predict the solution for one forcing");
    add_common(pred, pred_o, true);
    pred->add_option("--forcing", pred_forcing, "Forcing field CSV on the coarse spatial grid")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--backend", pred_backend, "fpi | loinn | cloinn");
    pred->add_option("--resolution", pred_resolution, "Coarse resolution to predict at")
        ->required();
    pred->add_option("--stencil", pred_stencil, "Stencil preset of the operator")->required();

    auto* eval = app.add_subcommand("evaluate", "Evaluate trained operators on random forcings");
    add_common(eval, eval_o, true);

    auto* repro = app.add_subcommand(
        "reproduce", "Run gen-data, train-local, and evaluate with a benchmark's defaults");
    repro->add_option("name", repro_name, "poisson | diffusion | nonlinear-dr")->required();
    add_common(repro, repro_o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            oneshot::run_gen_data(resolve(gen_o, nullptr));
        } else if (train->parsed()) {
            oneshot::run_train_local(resolve(train_o, nullptr));
        } else if (pred->parsed()) {
            oneshot::run_predict(resolve(pred_o, nullptr), pred_forcing, pred_backend,
                                 pred_resolution, pred_stencil);
        } else if (eval->parsed()) {
            oneshot::run_evaluate(resolve(eval_o, nullptr));
        } else if (repro->parsed()) {
            oneshot::ExperimentConfig base = oneshot::default_experiment_config(repro_name);
            oneshot::run_reproduce(resolve(repro_o, &base));
        }
    } catch (const oneshot::Error& e) {
        std::cerr << nlohmann::json{{"error", e.kind}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "Unhandled"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
