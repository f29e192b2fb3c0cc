#include "mea/mea.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mea/config.hpp"
#include "mea/postproc.hpp"
#include "mea/residual.hpp"
#include "mea/trainer.hpp"
#include "mea/verify.hpp"

struct mea_config {
    mea::config::RunConfig value;
};

struct mea_run {
    std::string directory;
    std::string report;
    mea::train::TrainResult result;
};

namespace {

thread_local std::string last_error;

namespace fs = std::filesystem;

class IoError : public mea::Error {
  public:
    using mea::Error::Error;
};

mea_status fail(mea_status code, const std::string& message) {
    last_error = message;
    return code;
}

// Maps exceptions from the core onto status codes.
template <class F>
mea_status guarded(F&& body) {
    try {
        last_error.clear();
        return body();
    } catch (const mea::ConfigError& e) {
        return fail(MEA_ERR_CONFIG, e.what());
    } catch (const mea::DivergenceError& e) {
        return fail(MEA_ERR_DIVERGED, e.what());
    } catch (const IoError& e) {
        return fail(MEA_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(MEA_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(MEA_ERR_INTERNAL, "unknown error");
    }
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(const void* p, const char* what) {
    if (!p) throw mea::ConfigError(std::string(what) + " must not be NULL");
}

void write_file(const fs::path& path, const std::string& contents) {
    try {
        mea::train::atomic_write(path.string(), contents);
    } catch (const std::exception& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::optional<mea::hard_bc::LiftSpec> lift_for(const mea::config::RunConfig& cfg, const mea::train::Problem& pb) {
    if (cfg.train.formulation != mea::train::Formulation::hard) return std::nullopt;
    return mea::hard_bc::fit_lift(pb.domain, pb.profile);
}

std::string reference_summary(const mea::config::RunConfig& cfg, const mea::config::BuiltCase& built,
                              const fs::path& dir) {
    nlohmann::json j;
    j["kind"] = cfg.reference.kind == mea::config::ReferenceKind::fd             ? "fd"
                : cfg.reference.kind == mea::config::ReferenceKind::manufactured ? "manufactured"
                                                                                 : "none";
    if (built.fd) {
        std::ostringstream csv;
        built.fd->write_csv(csv);
        write_file(dir / "reference_fd.csv", csv.str());
        j["nx"] = built.fd->nx;
        j["ny"] = built.fd->ny;
        j["algebraic_residual"] = built.fd->algebraic_residual;
        if (built.fd_refinement_error >= 0.0) j["refinement_rel_l2_percent"] = 100.0 * built.fd_refinement_error;
        j["file"] = (dir / "reference_fd.csv").string();
    }
    if (built.manufactured) {
        const std::string text = built.manufactured->to_json();
        write_file(dir / "manufactured.json", text + "\n");
        j["manufactured"] = nlohmann::json::parse(text);
        j["file"] = (dir / "manufactured.json").string();
    }
    return j.dump(2);
}

struct CsvField {
    std::vector<mea::Point> points;
    std::vector<double> values;
};

CsvField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    CsvField out;
    std::string line;
    if (!std::getline(in, line)) throw mea::ConfigError("'" + path + "' is empty");
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        double x1 = 0.0, x2 = 0.0, f = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(line);
        if (!(ss >> x1 >> c1 >> x2 >> c2 >> f) || c1 != ',' || c2 != ',')
            throw mea::ConfigError("'" + path + "' line " + std::to_string(row) + ": expected x1,x2,f");
        out.points.push_back({x1, x2});
        out.values.push_back(f);
    }
    if (out.values.empty()) throw mea::ConfigError("'" + path + "' has no data rows");
    return out;
}

}  // namespace

extern "C" {

const char* mea_last_error(void) { return last_error.c_str(); }

const char* mea_version(void) { return "1.0.0"; }

void mea_string_free(char* s) { std::free(s); }

mea_status mea_config_load(const char* path, mea_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new mea_config{mea::config::load(path)};
        return MEA_OK;
    });
}

mea_status mea_config_parse(const char* text, mea_config** out) {
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = new mea_config{mea::config::parse_string(text)};
        return MEA_OK;
    });
}

mea_status mea_config_preset(const char* name, mea_config** out) {
    return guarded([&] {
        require(name, "name");
        require(out, "out");
        *out = new mea_config{mea::config::preset(name)};
        return MEA_OK;
    });
}

mea_status mea_config_set(mea_config* cfg, const char* section, const char* key, const char* value) {
    return guarded([&] {
        require(cfg, "cfg");
        require(section, "section");
        require(key, "key");
        require(value, "value");
        cfg->value = mea::config::with_value(cfg->value, section, key, value);
        return MEA_OK;
    });
}

mea_status mea_config_serialize(const mea_config* cfg, char** out) {
    return guarded([&] {
        require(cfg, "cfg");
        require(out, "out");
        *out = dup(mea::config::serialize(cfg->value));
        return MEA_OK;
    });
}

void mea_config_free(mea_config* cfg) { delete cfg; }

mea_status mea_solve(const mea_config* cfg, mea_progress_fn progress, void* user, mea_run** out) {
    return guarded([&] {
        require(cfg, "cfg");
        require(out, "out");
        *out = nullptr;
        const auto& rc = cfg->value;
        rc.train.validate();
        const fs::path dir = mea::config::resolve_output_directory(rc.outputs);
        ensure_directory(dir);
        const std::string config_text = mea::config::serialize(rc);
        write_file(dir / "config.ini", config_text);

        const auto built = mea::config::build_case(rc, rc.reference.kind == mea::config::ReferenceKind::fd);
        if (rc.reference.kind != mea::config::ReferenceKind::none) reference_summary(rc, built, dir);

        const fs::path log_path = dir / "convergence.csv";
        const fs::path log_tmp = dir / "convergence.csv.part";
        std::ofstream log(log_tmp);
        if (!log) throw IoError("cannot write '" + log_tmp.string() + "'");

        mea::train::TrainHooks hooks;
        hooks.log = &log;
        if (rc.train.checkpoint_every > 0) hooks.checkpoint_path = (dir / "checkpoint.bin").string();
        if (progress)
            hooks.on_record = [&](const mea::train::LossRecord& r) {
                progress(r.epoch, r.stage.c_str(), r.total, r.pde_rmse_val, user);
            };
        std::vector<std::string> warnings;
        hooks.on_warning = [&](const std::string& w) { warnings.push_back(w); };

        auto run = std::make_unique<mea_run>();
        run->directory = dir.string();
        run->result = mea::train::train(rc.train, built.problem, hooks);
        log.close();
        std::error_code ec;
        fs::rename(log_tmp, log_path, ec);
        if (ec) throw IoError("cannot move the convergence log into place: " + ec.message());

        const auto& res = run->result;
        const auto& field = res.field;
        std::ostringstream model;
        field.network().save(model, rc.train.init_seed);
        write_file(dir / "model.bin", model.str());
        if (field.lift()) write_file(dir / "lift.json", field.lift()->to_json() + "\n");

        const mea::reference::ScalarFunction eval = [&](const mea::Point& p) { return field.value(p); };
        for (const auto& f : rc.outputs.formats) {
            const auto format = mea::post::surface_format_from_string(f);
            std::ostringstream s;
            mea::post::export_surface(s, eval, built.problem.domain, rc.outputs.grid, format);
            write_file(dir / ("surface." + f), s.str());
        }
        std::ostringstream principal;
        mea::post::export_principal(principal, *built.context, built.problem.domain, rc.outputs.grid);
        write_file(dir / "principal.csv", principal.str());

        mea::post::RunReport report;
        report.comparison = res.reference_metrics;
        report.final_train_rmse = res.final_train_rmse;
        report.final_val_rmse = res.final_val_rmse;
        report.admissibility = res.admissibility;
        report.init_seed = rc.train.init_seed;
        report.sample_seed = rc.train.sample_seed;
        report.validation_seed = rc.train.validation_seed;
        report.config_hash = mea::post::fnv1a_hex(config_text);
        report.wallclock_s = rc.outputs.wallclock ? res.wallclock_s : 0.0;
        report.formulation = mea::train::to_string(rc.train.formulation);
        report.selected_epoch = res.selected_epoch;
        report.diverged = res.diverged;
        run->report = mea::post::report_metrics(report);
        write_file(dir / "report.json", run->report + "\n");

        const bool diverged = res.diverged;
        const std::string message = res.divergence_message;
        *out = run.release();
        if (diverged) return fail(MEA_ERR_DIVERGED, "training diverged: " + message);
        return MEA_OK;
    });
}

mea_status mea_run_report(const mea_run* run, char** json) {
    return guarded([&] {
        require(run, "run");
        require(json, "json");
        *json = dup(run->report);
        return MEA_OK;
    });
}

const char* mea_run_output_directory(const mea_run* run) { return run ? run->directory.c_str() : ""; }

void mea_run_free(mea_run* run) { delete run; }

mea_status mea_reference(const mea_config* cfg, char** json) {
    return guarded([&] {
        require(cfg, "cfg");
        require(json, "json");
        const auto& rc = cfg->value;
        if (rc.reference.kind == mea::config::ReferenceKind::none)
            throw mea::ConfigError("no reference configured ([reference] kind = none)");
        const fs::path dir = mea::config::resolve_output_directory(rc.outputs);
        ensure_directory(dir);
        const auto built = mea::config::build_case(rc, true);
        *json = dup(reference_summary(rc, built, dir));
        return MEA_OK;
    });
}

mea_status mea_check(const mea_config* cfg, size_t n_samples, uint64_t seed, int* pass, char** json) {
    return guarded([&] {
        require(cfg, "cfg");
        require(pass, "pass");
        require(json, "json");
        if (n_samples == 0) throw mea::ConfigError("n_samples must be positive");
        auto rc = cfg->value;
        rc.reference.kind = mea::config::ReferenceKind::none;
        const auto built = mea::config::build_case(rc, false);
        const auto report = mea::check_admissibility(built.context->airy(), built.context->loads(),
                                                     built.problem.domain, n_samples, seed);
        *pass = report.pass ? 1 : 0;
        *json = dup(report.to_json());
        return MEA_OK;
    });
}

mea_status mea_compare_csv(const char* candidate_csv, const char* reference_csv, char** json) {
    return guarded([&] {
        require(candidate_csv, "candidate_csv");
        require(reference_csv, "reference_csv");
        require(json, "json");
        const auto cand = read_field_csv(candidate_csv);
        const auto ref = read_field_csv(reference_csv);
        if (cand.values.size() != ref.values.size())
            throw mea::ConfigError("row counts differ (" + std::to_string(cand.values.size()) + " vs " +
                                   std::to_string(ref.values.size()) + ")");
        for (std::size_t i = 0; i < ref.points.size(); ++i) {
            const double d = std::hypot(cand.points[i].x1 - ref.points[i].x1, cand.points[i].x2 - ref.points[i].x2);
            if (d > 1e-9 * (1.0 + std::hypot(ref.points[i].x1, ref.points[i].x2)))
                throw mea::ConfigError("row " + std::to_string(i + 1) + " is sampled at a different point");
        }
        const auto m = mea::reference::compare_values(cand.values, ref.values);
        nlohmann::json j;
        j["count"] = m.count;
        j["rmse"] = m.rmse;
        j["rel_l2_percent"] = 100.0 * m.rel_l2;
        j["max_abs"] = m.max_abs;
        *json = dup(j.dump(2));
        return MEA_OK;
    });
}

mea_status mea_export(const mea_config* cfg, const char* model_path, const char* what, const char* format,
                      int resolution, const char* out_path) {
    return guarded([&] {
        require(cfg, "cfg");
        require(what, "what");
        require(out_path, "out_path");
        const std::string kind = what;
        const std::string fmt = format ? format : "csv";
        if (resolution < 2) throw mea::ConfigError("resolution must be at least 2");
        const auto& rc = cfg->value;
        auto ref_free = rc;
        if (ref_free.reference.kind == mea::config::ReferenceKind::fd)
            ref_free.reference.kind = mea::config::ReferenceKind::none;
        const auto built = mea::config::build_case(ref_free, false);
        const auto& pb = built.problem;

        std::ostringstream out;
        if (kind == "principal" || kind == "points") {
            if (fmt != "csv") throw mea::ConfigError("'" + kind + "' exports only support csv");
            if (kind == "principal") {
                mea::post::export_principal(out, *built.context, pb.domain, resolution);
            } else {
                mea::Rng rng(rc.train.sample_seed);
                const auto interior = mea::geometry::sample_interior(pb.domain, rc.train.n_pde, rng);
                const auto boundary = mea::geometry::sample_boundary_uniform(pb.domain, rc.train.n_bc, rng);
                out.precision(17);
                out << "x1,x2,tag,param\n";
                for (const auto& p : interior.points) out << p.x1 << ',' << p.x2 << ",interior,\n";
                for (std::size_t i = 0; i < boundary.size(); ++i)
                    out << boundary.points[i].x1 << ',' << boundary.points[i].x2 << ",boundary,"
                        << boundary.params[i].value << '\n';
            }
        } else if (kind == "surface" || kind == "residual") {
            if (!model_path) throw mea::ConfigError("'" + kind + "' exports need a model file");
            std::ifstream in(model_path, std::ios::binary);
            if (!in) throw IoError(std::string("cannot open model '") + model_path + "'");
            const mea::train::TrainedField field(mea::nn::Mlp::load(in), pb.domain, lift_for(rc, pb));
            if (kind == "surface") {
                mea::post::export_surface(out, [&](const mea::Point& p) { return field.value(p); }, pb.domain,
                                          resolution, mea::post::surface_format_from_string(fmt));
            } else {
                if (fmt != "csv") throw mea::ConfigError("residual exports only support csv");
                mea::geometry::PointCloud grid;
                for (const auto& p : mea::post::masked_grid(pb.domain, resolution)) grid.points.push_back(p);
                const auto samples = mea::residual_samples([&](const mea::Point& p) { return field.jet(p); },
                                                           *built.context, grid);
                mea::write_residual_csv(out, samples);
            }
        } else {
            throw mea::ConfigError("unknown export '" + kind + "' (expected surface, residual, principal or points)");
        }
        const fs::path path(out_path);
        if (path.has_parent_path()) ensure_directory(path.parent_path());
        write_file(path, out.str());
        return MEA_OK;
    });
}

mea_status mea_verify(const char* suite, int full_budget, mea_line_fn line, mea_line_fn progress, void* user,
                      char** json) {
    return guarded([&] {
        require(suite, "suite");
        mea::verify::Options o;
        o.full_budget = full_budget != 0;
        if (line)
            o.on_check = [&](const mea::verify::Check& c) { line(mea::verify::format_line(c).c_str(), user); };
        if (progress) o.on_progress = [&](const std::string& s) { progress(s.c_str(), user); };
        const auto checks = mea::verify::run_suite(suite, o);
        if (json) *json = dup(mea::verify::to_json(checks));
        if (!mea::verify::all_passed(checks)) return fail(MEA_ERR_ACCEPTANCE, "verification checks failed");
        return MEA_OK;
    });
}

}  // extern "C"
