// Command-line front end. Talks to the solver only through the C interface.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mea/mea.h"

namespace {

// Exit codes beyond the documented 0-3 for I/O and internal failures.
int exit_code(mea_status s) { return static_cast<int>(s); }

int report_error(mea_status s, const char* what) {
    std::cerr << "mea " << what << ": " << mea_last_error() << '\n';
    return exit_code(s);
}

struct ConfigDeleter {
    void operator()(mea_config* c) const { mea_config_free(c); }
};
using ConfigPtr = std::unique_ptr<mea_config, ConfigDeleter>;

struct CString {
    char* p = nullptr;
    ~CString() { mea_string_free(p); }
};

struct CaseArgs {
    std::string config_path;
    std::string preset;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        auto* c = cmd->add_option("-c,--config", config_path, "Config file (INI)");
        auto* p = cmd->add_option("-p,--preset", preset, "Built-in case: rectangle, three_leg or four_leg");
        c->excludes(p);
        cmd->add_option("-s,--set", overrides, "Override one key, as section.key=value (repeatable)");
    }

    // Returns 0 and fills `out`, or an exit code.
    int load(ConfigPtr& out) const {
        mea_config* raw = nullptr;
        mea_status s = MEA_OK;
        if (!config_path.empty()) {
            s = mea_config_load(config_path.c_str(), &raw);
        } else if (!preset.empty()) {
            s = mea_config_preset(preset.c_str(), &raw);
        } else {
            std::cerr << "mea: one of --config or --preset is required\n";
            return exit_code(MEA_ERR_CONFIG);
        }
        if (s != MEA_OK) return report_error(s, "config");
        out.reset(raw);
        for (const auto& o : overrides) {
            const auto dot = o.find('.');
            const auto eq = o.find('=');
            if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
                std::cerr << "mea: --set expects section.key=value, got '" << o << "'\n";
                return exit_code(MEA_ERR_CONFIG);
            }
            const std::string section = o.substr(0, dot);
            const std::string key = o.substr(dot + 1, eq - dot - 1);
            const std::string value = o.substr(eq + 1);
            s = mea_config_set(out.get(), section.c_str(), key.c_str(), value.c_str());
            if (s != MEA_OK) return report_error(s, "config");
        }
        return 0;
    }
};

struct ProgressState {
    int every = 500;
    bool quiet = false;
};

void on_progress(int epoch, const char* stage, double total, double val, void* user) {
    const auto* st = static_cast<const ProgressState*>(user);
    if (st->quiet || st->every <= 0 || epoch % st->every != 0) return;
    if (val == val)
        std::fprintf(stderr, "%7d %-5s loss %.4e  val pde-rmse %.4e\n", epoch, stage, total, val);
    else
        std::fprintf(stderr, "%7d %-5s loss %.4e\n", epoch, stage, total);
}

void print_line(const char* line, void*) {
    std::cout << line << std::endl;
}

void print_progress(const char* line, void*) { std::cerr << "  " << line << std::endl; }

bool env_flag(const char* name) {
    const char* v = std::getenv(name);
    return v && *v && std::string(v) != "0";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Membrane equilibrium solver with physics-informed neural networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mea_version()));

    CaseArgs solve_case;
    ProgressState progress;
    auto* solve = app.add_subcommand("solve", "Train a PINN for the configured case");
    solve_case.attach(solve);
    solve->add_option("--progress-every", progress.every, "Print progress every N epochs")->check(CLI::NonNegativeNumber);
    solve->add_flag("-q,--quiet", progress.quiet, "No progress output");

    CaseArgs ref_case;
    auto* ref = app.add_subcommand("reference", "Build the FD or manufactured reference");
    ref_case.attach(ref);

    CaseArgs check_case;
    std::size_t samples = 10000;
    std::uint64_t seed = 3;
    auto* check = app.add_subcommand("check", "Admissibility of the configured stress field");
    check_case.attach(check);
    check->add_option("-n,--samples", samples, "Interior samples (the same number on the boundary)");
    check->add_option("--seed", seed, "Sampling seed");

    std::string cand, refcsv;
    auto* compare = app.add_subcommand("compare", "Compare two x1,x2,f CSV fields");
    compare->add_option("candidate", cand, "Candidate CSV")->required();
    compare->add_option("reference", refcsv, "Reference CSV")->required();

    CaseArgs export_case;
    std::string model, what = "surface", format = "csv", out_path;
    int resolution = 101;
    auto* exp = app.add_subcommand("export", "Export surface, residual, principal-stress or point fields");
    export_case.attach(exp);
    exp->add_option("-m,--model", model, "Model file written by solve (model.bin)");
    exp->add_option("-w,--what", what, "surface, residual, principal or points")
        ->check(CLI::IsMember({"surface", "residual", "principal", "points"}));
    exp->add_option("-f,--format", format, "csv or obj")->check(CLI::IsMember({"csv", "obj"}));
    exp->add_option("-r,--resolution", resolution, "Grid nodes per axis");
    exp->add_option("-o,--out", out_path, "Output file")->required();

    std::string suite = "quick", json_path;
    bool full_budget = false;
    auto* verify = app.add_subcommand("verify", "Run the verification battery");
    verify->add_option("--suite", suite,
                       "quick, autodiff, optimizer, lifts, admissibility, reference, manufactured, rectangle or "
                       "acceptance");
    verify->add_flag("--full-budget", full_budget, "Include the full-budget training checks (days of CPU time)");
    verify->add_option("--json", json_path, "Also write the results as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(MEA_ERR_CONFIG);
    }

    if (*solve) {
        ConfigPtr cfg;
        if (int rc = solve_case.load(cfg)) return rc;
        mea_run* run = nullptr;
        const mea_status s = mea_solve(cfg.get(), on_progress, &progress, &run);
        if (run) {
            CString report;
            if (mea_run_report(run, &report.p) == MEA_OK) std::cout << report.p << '\n';
            std::cerr << "outputs in " << mea_run_output_directory(run) << '\n';
            mea_run_free(run);
        }
        if (s != MEA_OK) return report_error(s, "solve");
        return 0;
    }
    if (*ref) {
        ConfigPtr cfg;
        if (int rc = ref_case.load(cfg)) return rc;
        CString json;
        const mea_status s = mea_reference(cfg.get(), &json.p);
        if (s != MEA_OK) return report_error(s, "reference");
        std::cout << json.p << '\n';
        return 0;
    }
    if (*check) {
        ConfigPtr cfg;
        if (int rc = check_case.load(cfg)) return rc;
        CString json;
        int pass = 0;
        const mea_status s = mea_check(cfg.get(), samples, seed, &pass, &json.p);
        if (s != MEA_OK) return report_error(s, "check");
        std::cout << json.p << '\n';
        if (!pass) std::cerr << "stress field is not admissible\n";
        return 0;
    }
    if (*compare) {
        CString json;
        const mea_status s = mea_compare_csv(cand.c_str(), refcsv.c_str(), &json.p);
        if (s != MEA_OK) return report_error(s, "compare");
        std::cout << json.p << '\n';
        return 0;
    }
    if (*exp) {
        ConfigPtr cfg;
        if (int rc = export_case.load(cfg)) return rc;
        const mea_status s = mea_export(cfg.get(), model.empty() ? nullptr : model.c_str(), what.c_str(),
                                        format.c_str(), resolution, out_path.c_str());
        if (s != MEA_OK) return report_error(s, "export");
        return 0;
    }
    if (*verify) {
        CString json;
        const bool full = full_budget || env_flag("MEA_FULL_BUDGET");
        const mea_status s = mea_verify(suite.c_str(), full ? 1 : 0, print_line, print_progress, nullptr, &json.p);
        if (!json_path.empty() && json.p) {
            std::FILE* f = std::fopen(json_path.c_str(), "w");
            if (f) {
                std::fputs(json.p, f);
                std::fputc('\n', f);
                std::fclose(f);
            } else {
                std::cerr << "mea verify: cannot write '" << json_path << "'\n";
            }
        }
        if (s != MEA_OK) return report_error(s, "verify");
        return 0;
    }
    return 0;
}
