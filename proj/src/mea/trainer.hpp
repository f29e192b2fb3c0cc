#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/hard_bc.hpp"
#include "mea/mea_core.hpp"
#include "mea/network.hpp"
#include "mea/reference.hpp"

namespace mea::train {

enum class Formulation { soft, hard };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& name);

struct RelobraloConfig {
    double alpha = 0.999;
    double rho = 0.8;
    double tau = 2.0;
};

struct TrainConfig {
    Formulation formulation = Formulation::hard;
    int hidden_layers = 3;
    int width = 64;

    double adam_lr = 1e-3;
    int adam_epochs = 5000;
    int lbfgs_steps = 0;
    std::size_t lbfgs_history = 10;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    double lbfgs_step = 1.0;
    int line_search_trials = 25;

    std::size_t n_pde = 4096;
    std::size_t n_bc = 1024;
    std::size_t n_bc_curv = 0;  // circular domains only
    int resample_every = 10;    // 0 disables resampling

    RelobraloConfig relobralo;

    std::uint64_t init_seed = 1;
    std::uint64_t sample_seed = 2;
    std::uint64_t validation_seed = 3;
    std::uint64_t weight_seed = 4;

    std::size_t n_val = 4096;
    int validate_every = 10;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints
    bool record_wallclock = true;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// One row of the convergence log. Quantities that were not evaluated at
/// this epoch are NaN and print as empty cells.
struct LossRecord {
    int epoch = 0;
    std::string stage;  // "adam" or "lbfgs"
    double l_pde = 0.0;
    double l_bc = 0.0;  // NaN for the hard formulation
    double w_pde = 1.0;
    double w_bc = 1.0;
    double total = 0.0;
    double pde_rmse_train = 0.0;
    double pde_rmse_val = 0.0;
    double ref_rmse = 0.0;
    double wallclock_s = 0.0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const LossRecord& rec);

// ---- optimizers ----------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;
};

/// Bias-corrected Adam update of `params` in place. Throws DivergenceError on
/// a non-finite gradient or update.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, const AdamConfig& cfg);

/// f(x) with its gradient written to g.
using Objective = std::function<double(std::span<const double> x, std::span<double> g)>;

struct LbfgsConfig {
    std::size_t history = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    double initial_step = 1.0;
    int max_trials = 25;
};

struct LbfgsState {
    std::vector<std::vector<double>> s;
    std::vector<std::vector<double>> y;
    std::vector<double> rho;

    void flush();
    std::size_t size() const { return s.size(); }
};

struct LineSearchReport {
    double step = 0.0;
    double f0 = 0.0;
    double f1 = 0.0;
    double dg0 = 0.0;  // directional derivative at step 0
    double dg1 = 0.0;  // directional derivative at the accepted step
    double c1 = 0.0;
    double c2 = 0.0;
    int evaluations = 0;
    bool wolfe = false;     // strong Wolfe line search succeeded
    bool fallback = false;  // steepest-descent backtracking was used
    bool moved = false;

    /// Re-checks both strong Wolfe inequalities from the stored numbers.
    bool satisfies_wolfe() const;
};

/// One L-BFGS iteration from (x, f, g), which must be consistent. On return
/// x, f and g describe the accepted point. A failed strong Wolfe search falls
/// back to steepest descent with backtracking and flushes the history.
LineSearchReport lbfgs_step(LbfgsState& state, std::vector<double>& x, double& f, std::vector<double>& g,
                            const Objective& objective, const LbfgsConfig& cfg);

// ---- loss weighting -------------------------------------------------------

/// ReLoBRaLo: w_hat = n softmax(L(t) / (tau L(t') + eps)) with t' the previous
/// epoch with probability rho and the first epoch otherwise; returns
/// alpha * prev + (1 - alpha) * w_hat.
std::vector<double> relobralo_update(std::span<const double> prev_weights, std::span<const double> loss_now,
                                     std::span<const double> loss_prev, std::span<const double> loss_ref,
                                     const RelobraloConfig& cfg, Rng& rng);

// ---- problem and fields ---------------------------------------------------

struct Problem {
    geometry::Domain domain;
    geometry::BoundaryProfile profile;
    std::shared_ptr<const PdeContext> context;
    /// Optional ground truth, evaluated on `oracle_points`.
    reference::ScalarFunction oracle;
    std::vector<Point> oracle_points;
};

/// Soft surface N(x) or hard surface D N + G.
class TrainedField {
  public:
    TrainedField() = default;
    TrainedField(nn::Mlp network, geometry::Domain domain, std::optional<hard_bc::LiftSpec> lift);

    Jet jet(const Point& p) const;
    double value(const Point& p) const { return jet(p).f; }
    std::vector<Jet> jets(std::span<const Point> points) const;
    std::vector<double> values(std::span<const Point> points) const;

    Formulation formulation() const { return lift_ ? Formulation::hard : Formulation::soft; }
    const nn::Mlp& network() const { return network_; }
    nn::Mlp& network() { return network_; }
    const geometry::Domain& domain() const { return domain_; }
    const std::optional<hard_bc::LiftSpec>& lift() const { return lift_; }

  private:
    nn::Mlp network_;
    geometry::Domain domain_;
    std::optional<hard_bc::LiftSpec> lift_;
};

struct SoftLosses {
    double l_pde = 0.0;
    double l_bc = 0.0;
};

/// Mean squared PDE residual over `interior` and mean squared boundary
/// mismatch over `boundary` (heights from the problem profile).
SoftLosses soft_losses(const JetFunction& field, const PdeContext& context, const geometry::Domain& domain,
                       const geometry::BoundaryProfile& profile, const geometry::PointCloud& interior,
                       const geometry::PointCloud& boundary);

/// PDE-RMSE on a fixed interior cloud drawn from `seed`.
double validate_pde(const TrainedField& field, const PdeContext& context, std::size_t n_val, std::uint64_t seed);

struct TrainHooks {
    std::ostream* log = nullptr;  // convergence CSV, header written by train()
    std::function<void(const LossRecord&)> on_record;
    std::function<void(const std::string&)> on_warning;
    /// Called once per epoch with the parameters the epoch's loss was taken at.
    std::function<void(int epoch, const TrainedField&)> on_epoch;
    std::string checkpoint_path;  // empty disables checkpoint files
};

struct TrainResult {
    TrainedField field;  // final model, selected by validation PDE-RMSE
    std::vector<LossRecord> history;
    AdmissibilityReport admissibility;
    std::vector<std::string> warnings;
    int stage1_best_epoch = 0;
    int selected_epoch = 0;
    double final_train_rmse = 0.0;
    double final_val_rmse = 0.0;
    std::optional<reference::FieldMetrics> reference_metrics;
    bool diverged = false;
    std::string divergence_message;
    double wallclock_s = 0.0;
    int lbfgs_fallbacks = 0;
    int lbfgs_wolfe_violations = 0;
};

/// Two-stage training: Adam for `adam_epochs`, then L-BFGS for `lbfgs_steps`
/// starting from the Stage-1 checkpoint with the lowest total loss.
/// Divergence stops training and returns the last good model with
/// `diverged` set.
TrainResult train(const TrainConfig& config, const Problem& problem, const TrainHooks& hooks = {});

/// Atomic checkpoint: network, optimizer moments and epoch index.
void save_checkpoint(const std::string& path, const nn::Mlp& network, const AdamState& adam, int epoch,
                     const std::string& stage, std::uint64_t seed);

struct Checkpoint {
    nn::Mlp network;
    AdamState adam;
    int epoch = 0;
    std::string stage;
};

Checkpoint load_checkpoint(const std::string& path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace mea::train
