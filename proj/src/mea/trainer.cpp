#include "mea/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mea/residual.hpp"

namespace mea::train {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDivergenceLoss = 1e12;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm1(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

void write_cell(std::ostream& out, double v) {
    if (std::isfinite(v)) out << v;
}

// Weights of the PDE residual in the jet: r = c . (f, f1, f2, f11, f12, f22) - q.
Jet residual_weights(const PdeCoefficients& c) {
    return {0.0, -c.p.p1, -c.p.p2, c.s.s22, 2.0 * c.s.s12, c.s.s11};
}

}  // namespace

std::string to_string(Formulation f) {
    return f == Formulation::soft ? "soft" : "hard";
}

Formulation formulation_from_string(const std::string& name) {
    if (name == "soft") return Formulation::soft;
    if (name == "hard") return Formulation::hard;
    throw ConfigError("unknown formulation '" + name + "' (expected soft or hard)");
}

void TrainConfig::validate() const {
    if (hidden_layers < 1 || width < 1) throw ConfigError("network needs at least one hidden layer of width >= 1");
    if (!(adam_lr > 0.0)) throw ConfigError("adam learning rate must be positive");
    if (adam_epochs < 0 || lbfgs_steps < 0) throw ConfigError("epoch counts must be non-negative");
    if (adam_epochs + lbfgs_steps == 0) throw ConfigError("no training epochs requested");
    if (lbfgs_history == 0) throw ConfigError("L-BFGS history must be positive");
    if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) throw ConfigError("need 0 < c1 < c2 < 1");
    if (!(lbfgs_step > 0.0)) throw ConfigError("L-BFGS initial step must be positive");
    if (line_search_trials < 1) throw ConfigError("line search needs at least one trial");
    if (n_pde == 0) throw ConfigError("n_pde must be positive");
    if (formulation == Formulation::soft && n_bc + n_bc_curv == 0) throw ConfigError("soft BC needs boundary points");
    if (resample_every < 0) throw ConfigError("resample period must be non-negative");
    if (!(relobralo.alpha > 0.0 && relobralo.alpha <= 1.0)) throw ConfigError("ReLoBRaLo alpha must be in (0, 1]");
    if (!(relobralo.rho > 0.0 && relobralo.rho <= 1.0)) throw ConfigError("ReLoBRaLo rho must be in (0, 1]");
    if (!(relobralo.tau > 0.0)) throw ConfigError("ReLoBRaLo tau must be positive");
    if (n_val == 0) throw ConfigError("validation set must be non-empty");
    if (validate_every < 1) throw ConfigError("validate_every must be positive");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
    if (validation_seed == sample_seed) throw ConfigError("validation seed must differ from the sampling seed");
}

void write_log_header(std::ostream& out) {
    out << "epoch,stage,L_pde,L_bc,w_pde,w_bc,total,pde_rmse_train,pde_rmse_val,ref_rmse,wallclock_s\n";
}

void write_log_row(std::ostream& out, const LossRecord& rec) {
    const auto old = out.precision(17);
    out << rec.epoch << ',' << rec.stage << ',';
    write_cell(out, rec.l_pde);
    out << ',';
    write_cell(out, rec.l_bc);
    out << ',';
    write_cell(out, rec.w_pde);
    out << ',';
    write_cell(out, rec.w_bc);
    out << ',';
    write_cell(out, rec.total);
    out << ',';
    write_cell(out, rec.pde_rmse_train);
    out << ',';
    write_cell(out, rec.pde_rmse_val);
    out << ',';
    write_cell(out, rec.ref_rmse);
    out << ',';
    write_cell(out, rec.wallclock_s);
    out << '\n';
    out.precision(old);
}

// ---- Adam ----------------------------------------------------------------

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, const AdamConfig& cfg) {
    const std::size_t n = params.size();
    if (grad.size() != n) throw ConfigError("gradient length mismatch");
    if (state.m.size() != n) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
        state.step = 0;
    }
    for (double g : grad)
        if (!std::isfinite(g)) throw DivergenceError("non-finite gradient in Adam step");
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        if (!std::isfinite(params[i])) throw DivergenceError("non-finite parameter after Adam step");
    }
}

// ---- L-BFGS --------------------------------------------------------------

void LbfgsState::flush() {
    s.clear();
    y.clear();
    rho.clear();
}

bool LineSearchReport::satisfies_wolfe() const {
    if (!moved) return dg0 == 0.0;
    return f1 <= f0 + c1 * step * dg0 && std::abs(dg1) <= c2 * std::abs(dg0);
}

namespace {

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), kept 10% away
// from both ends of the bracket.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    double t = 0.5 * (a + b);
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = db - da + 2.0 * d2;
        if (denom != 0.0) {
            const double c = b - (b - a) * (db + d2 - d1) / denom;
            if (std::isfinite(c)) t = c;
        }
    }
    return std::clamp(t, lo + margin, hi - margin);
}

struct SearchPoint {
    double a = 0.0;
    double f = 0.0;
    double d = 0.0;
};

class LineSearch {
  public:
    LineSearch(const std::vector<double>& x, const std::vector<double>& dir, const Objective& objective)
        : x_(x), dir_(dir), objective_(objective), trial_(x.size()), grad_(x.size()) {}

    SearchPoint eval(double a) {
        for (std::size_t i = 0; i < x_.size(); ++i) trial_[i] = x_[i] + a * dir_[i];
        const double f = objective_(trial_, grad_);
        ++evaluations;
        if (!std::isfinite(f)) throw DivergenceError("objective is not finite during line search");
        return {a, f, dot(grad_, dir_)};
    }

    const std::vector<double>& grad() const { return grad_; }
    const std::vector<double>& trial() const { return trial_; }
    int evaluations = 0;

  private:
    const std::vector<double>& x_;
    const std::vector<double>& dir_;
    const Objective& objective_;
    std::vector<double> trial_;
    std::vector<double> grad_;
};

// Strong Wolfe search (bracketing then zoom). On success the search object
// holds the accepted point and its gradient.
bool strong_wolfe(LineSearch& ls, const SearchPoint& origin, double a0, const LbfgsConfig& cfg, SearchPoint& out) {
    const double f0 = origin.f;
    const double dg0 = origin.d;
    auto sufficient = [&](const SearchPoint& p) { return p.f <= f0 + cfg.c1 * p.a * dg0; };
    auto curvature = [&](const SearchPoint& p) { return std::abs(p.d) <= -cfg.c2 * dg0; };

    auto zoom = [&](SearchPoint lo, SearchPoint hi) {
        while (ls.evaluations < cfg.max_trials) {
            if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) return false;
            const SearchPoint p = ls.eval(cubic_step(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d));
            if (!sufficient(p) || p.f >= lo.f) {
                hi = p;
            } else {
                if (curvature(p)) {
                    out = p;
                    return true;
                }
                if (p.d * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = p;
            }
        }
        return false;
    };

    SearchPoint prev = origin;
    double a = a0;
    while (ls.evaluations < cfg.max_trials) {
        const SearchPoint p = ls.eval(a);
        if (!sufficient(p) || (ls.evaluations > 1 && p.f >= prev.f)) return zoom(prev, p);
        if (curvature(p)) {
            out = p;
            return true;
        }
        if (p.d >= 0.0) return zoom(p, prev);
        prev = p;
        a *= 2.0;
    }
    return false;
}

}  // namespace

LineSearchReport lbfgs_step(LbfgsState& state, std::vector<double>& x, double& f, std::vector<double>& g,
                            const Objective& objective, const LbfgsConfig& cfg) {
    const std::size_t n = x.size();
    LineSearchReport rep;
    rep.f0 = f;
    rep.f1 = f;
    rep.c1 = cfg.c1;
    rep.c2 = cfg.c2;

    const double gnorm1 = norm1(g);
    if (gnorm1 == 0.0) {
        rep.wolfe = true;
        return rep;
    }

    // two-loop recursion
    std::vector<double> dir(g);
    const std::size_t k = state.size();
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
        alpha[i] = state.rho[i] * dot(state.s[i], dir);
        for (std::size_t j = 0; j < n; ++j) dir[j] -= alpha[i] * state.y[i][j];
    }
    if (k > 0) {
        const double gamma = dot(state.s.back(), state.y.back()) / dot(state.y.back(), state.y.back());
        for (double& v : dir) v *= gamma;
    }
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = state.rho[i] * dot(state.y[i], dir);
        for (std::size_t j = 0; j < n; ++j) dir[j] += state.s[i][j] * (alpha[i] - beta);
    }
    for (double& v : dir) v = -v;

    double dg0 = dot(g, dir);
    if (!(dg0 < 0.0)) {
        state.flush();
        for (std::size_t j = 0; j < n; ++j) dir[j] = -g[j];
        dg0 = dot(g, dir);
    }
    rep.dg0 = dg0;
    const double a0 = state.size() == 0 ? std::min(1.0, 1.0 / gnorm1) * cfg.initial_step : cfg.initial_step;

    {
        LineSearch ls(x, dir, objective);
        SearchPoint accepted;
        const bool ok = strong_wolfe(ls, {0.0, f, dg0}, a0, cfg, accepted);
        rep.evaluations = ls.evaluations;
        if (ok) {
            const std::vector<double>& gnew = ls.grad();
            std::vector<double> s(n);
            std::vector<double> y(n);
            for (std::size_t j = 0; j < n; ++j) {
                s[j] = accepted.a * dir[j];
                y[j] = gnew[j] - g[j];
            }
            const double sy = dot(s, y);
            if (sy > 1e-12 * dot(y, y)) {
                if (state.size() == cfg.history) {
                    state.s.erase(state.s.begin());
                    state.y.erase(state.y.begin());
                    state.rho.erase(state.rho.begin());
                }
                state.s.push_back(std::move(s));
                state.y.push_back(std::move(y));
                state.rho.push_back(1.0 / sy);
            }
            x = ls.trial();
            g = gnew;
            f = accepted.f;
            rep.step = accepted.a;
            rep.f1 = accepted.f;
            rep.dg1 = accepted.d;
            rep.wolfe = true;
            rep.moved = true;
            return rep;
        }
    }

    // steepest descent with Armijo backtracking
    state.flush();
    rep.fallback = true;
    for (std::size_t j = 0; j < n; ++j) dir[j] = -g[j];
    dg0 = dot(g, dir);
    rep.dg0 = dg0;
    LineSearch ls(x, dir, objective);
    double a = std::min(1.0, 1.0 / gnorm1) * cfg.initial_step;
    for (int t = 0; t < 60; ++t, a *= 0.5) {
        const SearchPoint p = ls.eval(a);
        if (p.f <= f + cfg.c1 * a * dg0) {
            x = ls.trial();
            g = ls.grad();
            f = p.f;
            rep.step = a;
            rep.f1 = p.f;
            rep.dg1 = p.d;
            rep.moved = true;
            break;
        }
    }
    rep.evaluations += ls.evaluations;
    return rep;
}

// ---- ReLoBRaLo -------------------------------------------------------------

std::vector<double> relobralo_update(std::span<const double> prev_weights, std::span<const double> loss_now,
                                     std::span<const double> loss_prev, std::span<const double> loss_ref,
                                     const RelobraloConfig& cfg, Rng& rng) {
    const std::size_t n = loss_now.size();
    if (n == 0 || prev_weights.size() != n || loss_prev.size() != n || loss_ref.size() != n)
        throw ConfigError("ReLoBRaLo inputs must have the same non-zero length");
    for (std::size_t i = 0; i < n; ++i)
        if (!(loss_now[i] > 0.0 && loss_prev[i] > 0.0 && loss_ref[i] > 0.0))
            throw ConfigError("ReLoBRaLo needs positive losses");
    constexpr double eps = 1e-12;
    const bool lookback_previous = uniform01(rng) < cfg.rho;
    const auto past = lookback_previous ? loss_prev : loss_ref;

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = loss_now[i] / (cfg.tau * past[i] + eps);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        denom += v;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hat = static_cast<double>(n) * z[i] / denom;
        w[i] = cfg.alpha * prev_weights[i] + (1.0 - cfg.alpha) * hat;
    }
    return w;
}

// ---- fields ----------------------------------------------------------------

TrainedField::TrainedField(nn::Mlp network, geometry::Domain domain, std::optional<hard_bc::LiftSpec> lift)
    : network_(std::move(network)), domain_(domain), lift_(std::move(lift)) {}

Jet TrainedField::jet(const Point& p) const {
    const Jet n = network_.forward_jet(p);
    if (!lift_) return n;
    return hard_bc::compose(hard_bc::distance_jet(domain_, p), n, hard_bc::lift_jet(*lift_, p));
}

std::vector<Jet> TrainedField::jets(std::span<const Point> points) const {
    auto out = network_.forward_jets(points);
    if (lift_)
        for (std::size_t i = 0; i < points.size(); ++i)
            out[i] = hard_bc::compose(hard_bc::distance_jet(domain_, points[i]), out[i],
                                      hard_bc::lift_jet(*lift_, points[i]));
    return out;
}

std::vector<double> TrainedField::values(std::span<const Point> points) const {
    auto v = network_.forward_values(points);
    if (lift_)
        for (std::size_t i = 0; i < points.size(); ++i)
            v[i] = hard_bc::distance_jet(domain_, points[i]).f * v[i] + hard_bc::lift_jet(*lift_, points[i]).f;
    return v;
}

SoftLosses soft_losses(const JetFunction& field, const PdeContext& context, const geometry::Domain& domain,
                       const geometry::BoundaryProfile& profile, const geometry::PointCloud& interior,
                       const geometry::PointCloud& boundary) {
    if (interior.empty() || boundary.empty()) throw ConfigError("soft losses need non-empty clouds");
    std::vector<double> r2(interior.size());
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const double r = pde_residual(field(interior.points[i]), context.at(interior.points[i]));
        r2[i] = r * r;
    }
    const auto b = geometry::boundary_heights(domain, profile, boundary);
    std::vector<double> e2(boundary.size());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const double e = field(boundary.points[i]).f - b[i];
        e2[i] = e * e;
    }
    return {pairwise_sum(r2) / static_cast<double>(r2.size()), pairwise_sum(e2) / static_cast<double>(e2.size())};
}

namespace {

// Interior points with everything the residual needs, precomputed once per
// draw. Hard runs also cache the distance and lift jets.
struct InteriorSet {
    std::vector<Point> points;
    std::vector<PdeCoefficients> coeffs;
    std::vector<Jet> distance;
    std::vector<Jet> lift;

    void build(const geometry::PointCloud& cloud, const PdeContext& ctx, const geometry::Domain& domain,
               const std::optional<hard_bc::LiftSpec>& lift_spec) {
        points = cloud.points;
        coeffs.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) coeffs[i] = ctx.at(points[i]);
        distance.clear();
        lift.clear();
        if (lift_spec) {
            distance.resize(points.size());
            lift.resize(points.size());
            for (std::size_t i = 0; i < points.size(); ++i) {
                distance[i] = hard_bc::distance_jet(domain, points[i]);
                lift[i] = hard_bc::lift_jet(*lift_spec, points[i]);
            }
        }
    }

    bool hard() const { return !distance.empty(); }
};

double rmse_of(const InteriorSet& set, const std::vector<Jet>& net_jets) {
    std::vector<double> r2(set.points.size());
    for (std::size_t i = 0; i < r2.size(); ++i) {
        const Jet f = set.hard() ? hard_bc::compose(set.distance[i], net_jets[i], set.lift[i]) : net_jets[i];
        const double r = pde_residual(f, set.coeffs[i]);
        r2[i] = r * r;
    }
    return std::sqrt(pairwise_sum(r2) / static_cast<double>(r2.size()));
}

}  // namespace

double validate_pde(const TrainedField& field, const PdeContext& context, std::size_t n_val, std::uint64_t seed) {
    if (n_val == 0) throw ConfigError("validation set must be non-empty");
    Rng rng(seed);
    InteriorSet set;
    set.build(geometry::sample_interior(field.domain(), n_val, rng), context, field.domain(), field.lift());
    return rmse_of(set, field.network().forward_jets(set.points));
}

// ---- checkpoints -------------------------------------------------------------

void atomic_write(const std::string& path, const std::string& contents) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw Error("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, target);
}

void save_checkpoint(const std::string& path, const nn::Mlp& network, const AdamState& adam, int epoch,
                     const std::string& stage, std::uint64_t seed) {
    std::ostringstream out(std::ios::binary);
    network.save(out, seed);
    nlohmann::json meta{{"format", "mea-checkpoint"},
                        {"epoch", epoch},
                        {"stage", stage},
                        {"adam_step", adam.step},
                        {"moments", adam.m.size()}};
    out << meta.dump() << '\n';
    out.write(reinterpret_cast<const char*>(adam.m.data()), static_cast<std::streamsize>(adam.m.size() * 8));
    out.write(reinterpret_cast<const char*>(adam.v.data()), static_cast<std::streamsize>(adam.v.size() * 8));
    atomic_write(path, out.str());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
    Checkpoint cp;
    cp.network = nn::Mlp::load(in);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("checkpoint '" + path + "' has no optimizer state");
    const auto meta = nlohmann::json::parse(line, nullptr, false);
    if (meta.is_discarded() || meta.value("format", "") != "mea-checkpoint")
        throw ConfigError("checkpoint '" + path + "' has a malformed optimizer header");
    cp.epoch = meta.at("epoch").get<int>();
    cp.stage = meta.at("stage").get<std::string>();
    cp.adam.step = meta.at("adam_step").get<std::int64_t>();
    const auto n = meta.at("moments").get<std::size_t>();
    cp.adam.m.resize(n);
    cp.adam.v.resize(n);
    in.read(reinterpret_cast<char*>(cp.adam.m.data()), static_cast<std::streamsize>(n * 8));
    in.read(reinterpret_cast<char*>(cp.adam.v.data()), static_cast<std::streamsize>(n * 8));
    if (!in) throw ConfigError("checkpoint '" + path + "' is truncated");
    return cp;
}

// ---- training loop -----------------------------------------------------------

namespace {

class Trainer {
  public:
    Trainer(const TrainConfig& cfg, const Problem& problem, const TrainHooks& hooks)
        : cfg_(cfg), problem_(problem), hooks_(hooks), sample_rng_(cfg.sample_seed), weight_rng_(cfg.weight_seed) {
        const auto& domain = problem.domain;
        const Point half = domain.half_extent();
        nn::InputNormalization norm{domain.centroid(), half};
        net_ = nn::Mlp::init(cfg.hidden_layers, cfg.width, norm, cfg.init_seed);
        if (cfg.formulation == Formulation::hard) lift_ = hard_bc::fit_lift(domain, problem.profile);
        gpde_.resize(net_.size());
        gbc_.resize(net_.size());

        Rng val_rng(cfg.validation_seed);
        validation_.build(geometry::sample_interior(domain, cfg.n_val, val_rng), *problem.context, domain, lift_);
        if (problem.oracle && !problem.oracle_points.empty()) {
            oracle_values_.resize(problem.oracle_points.size());
            for (std::size_t i = 0; i < oracle_values_.size(); ++i)
                oracle_values_[i] = problem.oracle(problem.oracle_points[i]);
        }
        resample();
    }

    TrainResult run();

  private:
    struct Losses {
        double l_pde = 0.0;
        double l_bc = kNaN;
    };

    bool soft() const { return cfg_.formulation == Formulation::soft; }

    void resample() {
        interior_.build(geometry::sample_interior(problem_.domain, cfg_.n_pde, sample_rng_), *problem_.context,
                        problem_.domain, lift_);
        if (!soft()) return;
        geometry::PointCloud bc;
        if (cfg_.n_bc > 0) bc = geometry::sample_boundary_uniform(problem_.domain, cfg_.n_bc, sample_rng_);
        if (cfg_.n_bc_curv > 0 && problem_.domain.circular())
            bc.append(geometry::sample_boundary_curvature(problem_.domain, problem_.profile, cfg_.n_bc_curv,
                                                          sample_rng_));
        boundary_ = bc.points;
        heights_ = geometry::boundary_heights(problem_.domain, problem_.profile, bc);
    }

    // Losses at x with their separate gradients in gpde_ and gbc_.
    Losses evaluate(std::span<const double> x) {
        net_.set_params(x);
        Losses out;
        const double inv_n = 1.0 / static_cast<double>(interior_.points.size());
        const bool hard = interior_.hard();
        out.l_pde = net_.loss_and_gradient(
            interior_.points,
            [&](std::size_t i, const Jet& n, Jet& grad) {
                const Jet f = hard ? hard_bc::compose(interior_.distance[i], n, interior_.lift[i]) : n;
                const auto& c = interior_.coeffs[i];
                const double r = pde_residual(f, c);
                const Jet df = (2.0 * r * inv_n) * residual_weights(c);
                grad = hard ? hard_bc::compose_adjoint(interior_.distance[i], df) : df;
                return r * r * inv_n;
            },
            gpde_);
        if (soft()) {
            const double inv_b = 1.0 / static_cast<double>(boundary_.size());
            out.l_bc = net_.loss_and_gradient(
                boundary_,
                [&](std::size_t i, const Jet& n, Jet& grad) {
                    const double e = n.f - heights_[i];
                    grad = Jet{2.0 * e * inv_b, 0, 0, 0, 0, 0};
                    return e * e * inv_b;
                },
                gbc_);
        }
        if (!std::isfinite(out.l_pde) || (soft() && !std::isfinite(out.l_bc)))
            throw DivergenceError("training loss is not finite");
        return out;
    }

    double total(const Losses& l) const { return soft() ? w_[0] * l.l_pde + w_[1] * l.l_bc : l.l_pde; }

    void combine(std::span<double> g) const {
        if (!soft()) {
            std::copy(gpde_.begin(), gpde_.end(), g.begin());
            return;
        }
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = w_[0] * gpde_[i] + w_[1] * gbc_[i];
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    // Fills validation columns and tracks the best-by-validation model.
    void validate_and_track(LossRecord& rec, std::span<const double> x) {
        net_.set_params(x);
        const auto jets = net_.forward_jets(validation_.points);
        rec.pde_rmse_val = rmse_of(validation_, jets);
        if (!oracle_values_.empty()) {
            const TrainedField field(net_, problem_.domain, lift_);
            const auto vals = field.values(problem_.oracle_points);
            std::vector<double> d2(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) d2[i] = (vals[i] - oracle_values_[i]) * (vals[i] - oracle_values_[i]);
            rec.ref_rmse = std::sqrt(pairwise_sum(d2) / static_cast<double>(d2.size()));
        }
        if (!(rec.pde_rmse_val >= best_val_)) {
            best_val_ = rec.pde_rmse_val;
            best_val_params_.assign(x.begin(), x.end());
            best_val_epoch_ = rec.epoch;
            best_val_train_rmse_ = rec.pde_rmse_train;
        }
    }

    void epoch_hook(int epoch) {
        if (hooks_.on_epoch) hooks_.on_epoch(epoch, TrainedField(net_, problem_.domain, lift_));
    }

    void emit(LossRecord rec) {
        rec.wallclock_s = cfg_.record_wallclock ? elapsed() : kNaN;
        if (hooks_.log) write_log_row(*hooks_.log, rec);
        if (hooks_.on_record) hooks_.on_record(rec);
        history_.push_back(std::move(rec));
    }

    LossRecord make_record(int epoch, const char* stage, const Losses& l) const {
        LossRecord rec;
        rec.epoch = epoch;
        rec.stage = stage;
        rec.l_pde = l.l_pde;
        rec.l_bc = l.l_bc;
        rec.w_pde = soft() ? w_[0] : 1.0;
        rec.w_bc = soft() ? w_[1] : kNaN;
        rec.total = total(l);
        rec.pde_rmse_train = std::sqrt(l.l_pde);
        rec.pde_rmse_val = kNaN;
        rec.ref_rmse = kNaN;
        return rec;
    }

    void check_total(double t) const {
        if (!std::isfinite(t) || t > kDivergenceLoss)
            throw DivergenceError("training loss exceeded the divergence threshold (" + std::to_string(t) + ")");
    }

    void checkpoint(int epoch, const char* stage, std::span<const double> x) {
        if (hooks_.checkpoint_path.empty()) return;
        net_.set_params(x);
        save_checkpoint(hooks_.checkpoint_path, net_, adam_, epoch, stage, cfg_.init_seed);
    }

    void warn(const std::string& msg) {
        warnings_.push_back(msg);
        if (hooks_.on_warning) hooks_.on_warning(msg);
    }

    void run_adam(std::vector<double>& x);
    void run_lbfgs(std::vector<double>& x);

    const TrainConfig& cfg_;
    const Problem& problem_;
    const TrainHooks& hooks_;
    Rng sample_rng_;
    Rng weight_rng_;
    nn::Mlp net_;
    std::optional<hard_bc::LiftSpec> lift_;
    InteriorSet interior_;
    InteriorSet validation_;
    std::vector<Point> boundary_;
    std::vector<double> heights_;
    std::vector<double> oracle_values_;
    std::vector<double> gpde_;
    std::vector<double> gbc_;
    double w_[2] = {1.0, 1.0};
    AdamState adam_;
    std::vector<LossRecord> history_;
    std::vector<std::string> warnings_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

    int epoch_ = 0;
    std::vector<double> last_good_;
    double best_total_ = std::numeric_limits<double>::infinity();
    std::vector<double> best_total_params_;
    int best_total_epoch_ = 0;
    double best_val_ = std::numeric_limits<double>::infinity();
    std::vector<double> best_val_params_;
    int best_val_epoch_ = 0;
    double best_val_train_rmse_ = 0.0;
    int fallbacks_ = 0;
    int wolfe_violations_ = 0;
};

void Trainer::run_adam(std::vector<double>& x) {
    const AdamConfig acfg{cfg_.adam_lr};
    std::vector<double> grad(x.size());
    double prev[2] = {0.0, 0.0};
    double first[2] = {0.0, 0.0};
    for (int e = 0; e < cfg_.adam_epochs; ++e, ++epoch_) {
        if (epoch_ > 0 && cfg_.resample_every > 0 && epoch_ % cfg_.resample_every == 0) resample();
        const Losses l = evaluate(x);
        if (soft()) {
            const double now[2] = {l.l_pde, l.l_bc};
            if (e == 0) {
                std::copy(now, now + 2, first);
            } else {
                const auto w = relobralo_update(w_, now, prev, first, cfg_.relobralo, weight_rng_);
                w_[0] = w[0];
                w_[1] = w[1];
            }
            std::copy(now, now + 2, prev);
        }
        LossRecord rec = make_record(epoch_, "adam", l);
        check_total(rec.total);
        last_good_ = x;
        if (rec.total < best_total_) {
            best_total_ = rec.total;
            best_total_params_ = x;
            best_total_epoch_ = epoch_;
        }
        if (epoch_ % cfg_.validate_every == 0 || e + 1 == cfg_.adam_epochs) validate_and_track(rec, x);
        emit(std::move(rec));
        net_.set_params(x);
        epoch_hook(epoch_);
        if (cfg_.checkpoint_every > 0 && epoch_ % cfg_.checkpoint_every == 0) checkpoint(epoch_, "adam", x);
        combine(grad);
        adam_step(adam_, x, grad, acfg);
    }
}

void Trainer::run_lbfgs(std::vector<double>& x) {
    const LbfgsConfig lcfg{cfg_.lbfgs_history, cfg_.wolfe_c1, cfg_.wolfe_c2, cfg_.lbfgs_step,
                           cfg_.line_search_trials};
    LbfgsState state;
    std::vector<double> g(x.size());
    Losses trial;
    const Objective objective = [&](std::span<const double> p, std::span<double> out) {
        trial = evaluate(p);
        combine(out);
        return total(trial);
    };
    Losses l = evaluate(x);
    double f = total(l);
    combine(g);
    for (int s = 0; s < cfg_.lbfgs_steps; ++s, ++epoch_) {
        if (epoch_ > 0 && cfg_.resample_every > 0 && epoch_ % cfg_.resample_every == 0) {
            resample();
            state.flush();
            l = evaluate(x);
            f = total(l);
            combine(g);
        }
        LossRecord rec = make_record(epoch_, "lbfgs", l);
        check_total(rec.total);
        last_good_ = x;
        if (epoch_ % cfg_.validate_every == 0 || s + 1 == cfg_.lbfgs_steps) validate_and_track(rec, x);
        emit(std::move(rec));
        net_.set_params(x);
        epoch_hook(epoch_);
        if (cfg_.checkpoint_every > 0 && epoch_ % cfg_.checkpoint_every == 0) checkpoint(epoch_, "lbfgs", x);

        const auto rep = lbfgs_step(state, x, f, g, objective, lcfg);
        if (rep.fallback) ++fallbacks_;
        if (rep.wolfe && !rep.satisfies_wolfe()) ++wolfe_violations_;
        // every line search ends on an evaluation of the accepted point
        if (rep.moved) l = trial;
    }
}

TrainResult Trainer::run() {
    TrainResult result;
    const auto& ctx = *problem_.context;
    result.admissibility = check_admissibility(ctx.airy(), ctx.loads(), problem_.domain, 4096, cfg_.validation_seed);
    if (!result.admissibility.pass)
        warn("stress field is not admissible (worst margin " + std::to_string(result.admissibility.worst_margin) +
             "); training continues");
    if (hooks_.log) write_log_header(*hooks_.log);

    std::vector<double> x(net_.params().begin(), net_.params().end());
    last_good_ = x;
    const char* stage = "adam";
    try {
        run_adam(x);
        if (cfg_.lbfgs_steps > 0) {
            if (!best_total_params_.empty()) x = best_total_params_;
            stage = "lbfgs";
            run_lbfgs(x);
        }
        // final parameters as the last candidate
        const Losses l = evaluate(x);
        LossRecord rec = make_record(epoch_, stage, l);
        check_total(rec.total);
        last_good_ = x;
        validate_and_track(rec, x);
        emit(std::move(rec));
    } catch (const DivergenceError& e) {
        result.diverged = true;
        result.divergence_message = e.what();
        warn(std::string("training diverged at epoch ") + std::to_string(epoch_) + ": " + e.what());
    }

    const std::vector<double>& chosen = !best_val_params_.empty() ? best_val_params_ : last_good_;
    net_.set_params(chosen);
    result.field = TrainedField(net_, problem_.domain, lift_);
    result.selected_epoch = !best_val_params_.empty() ? best_val_epoch_ : epoch_;
    result.stage1_best_epoch = best_total_epoch_;
    result.final_val_rmse = best_val_params_.empty() ? kNaN : best_val_;
    result.final_train_rmse = best_val_params_.empty() ? kNaN : best_val_train_rmse_;
    if (!problem_.oracle_points.empty() && problem_.oracle)
        result.reference_metrics = reference::compare_fields(
            [&](const Point& p) { return result.field.value(p); }, problem_.oracle, problem_.oracle_points);
    if (!hooks_.checkpoint_path.empty()) checkpoint(result.selected_epoch, stage, chosen);
    result.history = std::move(history_);
    result.warnings = std::move(warnings_);
    result.lbfgs_fallbacks = fallbacks_;
    result.lbfgs_wolfe_violations = wolfe_violations_;
    result.wallclock_s = elapsed();
    return result;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Problem& problem, const TrainHooks& hooks) {
    config.validate();
    problem.domain.validate();
    if (!problem.context) throw ConfigError("training problem has no PDE context");
    Trainer trainer(config, problem, hooks);
    return trainer.run();
}

}  // namespace mea::train
