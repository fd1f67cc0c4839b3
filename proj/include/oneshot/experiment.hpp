#pragma once

#include <map>
#include <string>

#include "oneshot/fpi.hpp"
#include "oneshot/grf.hpp"
#include "oneshot/loinn.hpp"
#include "oneshot/metrics.hpp"
#include "oneshot/solvers.hpp"

namespace oneshot {

/// One local operator to train: stencil preset plus its net size.
struct StencilRun {
    std::string preset;
    int width = 32;
    int depth = 2;
};

/// Everything one benchmark needs, JSON round-trippable. Budgets are stored at
/// full scale; apply_budget_scale() produces the config actually run.
struct ExperimentConfig {
    std::string name;
    EquationSpec equation;

    int dense_nx = 1001;
    int dense_nt = 0;                    // 0 for time-independent equations
    std::vector<int> resolutions{101};   // coarse node counts (square in space-time)

    std::string f0_kind = "sin2pi";
    double f0_amplitude = 1.0;

    GrfParams train_grf{0.5, 0.01};
    std::uint64_t train_seed = 2024;
    // Training pair source: restrict the dense solve (true one-shot data,
    // carries the coarse scheme's truncation error into the learned relation)
    // or re-solve on the coarse grid (data sits exactly on the coarse
    // relation manifold). See generate_data for the tradeoff.
    bool train_restrict_dense = false;

    std::vector<double> test_sigmas;
    double test_ell = 0.1;
    std::uint64_t test_base_seed = 5000;
    int test_count = 100;

    std::vector<StencilRun> stencils;
    TrainBudget budget;                  // local-operator training
    std::vector<std::string> backends{"fpi", "loinn", "cloinn"};
    FpiConfig fpi;

    int loinn_width = 32;
    int loinn_depth = 2;
    TrainBudget loinn_budget;
    int loinn_patience = 1000;
    int loinn_gn_iters = 40;  // Gauss-Newton polish sweeps after Adam/L-BFGS

    double budget_scale = 1.0;
    std::string out_dir = "out";

    void validate() const;
    ExperimentConfig with_budget_scale_applied() const;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
/// Missing keys fall back to the defaults above (or to `base` when given), so
/// a config file can be a sparse override.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const ExperimentConfig* base = nullptr);
ExperimentConfig load_experiment_config(const std::string& path,
                                        const ExperimentConfig* base = nullptr);

/// Paper-default configs; name is poisson, diffusion, or nonlinear-dr.
ExperimentConfig default_experiment_config(const std::string& name);

/// f0 evaluated on a spatial grid (sin2pi: amplitude * sin(2 pi x)).
Field make_base_forcing(const ExperimentConfig& cfg, const Grid1D& grid);

/// Dense solves plus per-resolution restrictions of the base pair (f0, u0)
/// and the one-shot training pair (f_T, u_T).
struct GeneratedData {
    Grid1D dense_spatial;
    GridST dense_st;                 // valid iff time-dependent
    Field f0_dense, u0_dense;
    Field ft_dense, ut_dense;
    SolverReport u0_report, ut_report;

    struct Coarse {
        int resolution = 0;
        Grid1D spatial;
        AnyGrid solution_grid;       // spatial or space-time
        Field f0, u0, ft, ut;
    };
    std::vector<Coarse> coarse;

    const Coarse& at_resolution(int res) const;
};

GeneratedData generate_data(const ExperimentConfig& cfg);

/// Key: (stencil preset, resolution).
using OperatorMap = std::map<std::pair<std::string, int>, LocalOperatorTraining>;

OperatorMap train_operators(const ExperimentConfig& cfg, const GeneratedData& data);

struct CaseRecord {
    int resolution = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string stencil, backend;
    double error = 0.0;
    bool failed = false;
    std::string failure;  // diverged | not_converged | <error kind>
};

struct EvaluationResult {
    std::vector<ErrorSummary> summaries;  // resolution-major, then sigma/stencil/backend
    std::vector<CaseRecord> cases;
};

/// Runs every (resolution, sigma, forcing, stencil, backend) cell against the
/// dense-solve-then-restrict reference; per-case failures are recorded, never
/// thrown. Operators are used read-only.
EvaluationResult evaluate(const ExperimentConfig& cfg, const GeneratedData& data,
                          const OperatorMap& ops);

/// Predict a single forcing with one backend; throws on divergence.
Field predict_one(const ExperimentConfig& cfg, const LocalOperator& op,
                  const GeneratedData::Coarse& coarse, const Field& f_coarse,
                  const std::string& backend, std::uint64_t loinn_seed);

/// Command bodies behind the CLI; each writes its artifacts under cfg.out_dir
/// (data/, operators/, results/) plus the resolved config.
void run_gen_data(const ExperimentConfig& cfg);
void run_train_local(const ExperimentConfig& cfg);
void run_evaluate(const ExperimentConfig& cfg);
void run_predict(const ExperimentConfig& cfg, const std::string& forcing_csv,
                 const std::string& backend, int resolution, const std::string& stencil);
void run_reproduce(const ExperimentConfig& cfg);

std::string case_records_csv(const std::vector<CaseRecord>& cases);

}  // namespace oneshot
