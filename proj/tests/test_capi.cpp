#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mea/mea.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    mea_string_free(s);
    return out;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mea_capi_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("configuration handles") {
    mea_config* cfg = nullptr;
    REQUIRE(mea_config_preset("rectangle", &cfg) == MEA_OK);
    CHECK(mea_config_set(cfg, "train", "width", "16") == MEA_OK);
    char* text = nullptr;
    REQUIRE(mea_config_serialize(cfg, &text) == MEA_OK);
    const std::string ini = take(text);
    CHECK(ini.find("width = 16") != std::string::npos);

    mea_config* copy = nullptr;
    CHECK(mea_config_parse(ini.c_str(), &copy) == MEA_OK);
    mea_config_free(copy);

    CHECK(mea_config_set(cfg, "train", "bogus", "1") == MEA_ERR_CONFIG);
    CHECK(std::strlen(mea_last_error()) > 0);
    mea_config_free(cfg);

    mea_config* none = nullptr;
    CHECK(mea_config_preset("unknown", &none) == MEA_ERR_CONFIG);
    CHECK(none == nullptr);
    CHECK(mea_config_load("/nonexistent/case.ini", &none) != MEA_OK);
    CHECK(mea_config_preset("rectangle", nullptr) == MEA_ERR_CONFIG);
    CHECK(std::string(mea_version()).size() > 0);
}

TEST_CASE("admissibility check through the C interface") {
    mea_config* cfg = nullptr;
    REQUIRE(mea_config_preset("three_leg", &cfg) == MEA_OK);
    int pass = -1;
    char* json = nullptr;
    REQUIRE(mea_check(cfg, 500, 3, &pass, &json) == MEA_OK);
    CHECK(pass == 1);
    CHECK(take(json).find("\"pass\"") != std::string::npos);
    mea_config_free(cfg);
}

TEST_CASE("solve, export and compare") {
    const auto dir = scratch("solve");
    mea_config* cfg = nullptr;
    REQUIRE(mea_config_preset("four_leg", &cfg) == MEA_OK);
    const std::pair<const char*, const char*> overrides[] = {
        {"hidden_layers", "1"}, {"width", "6"}, {"adam_epochs", "12"}, {"n_pde", "64"},
        {"n_bc", "32"},         {"n_bc_curv", "16"}, {"n_val", "64"}, {"validate_every", "4"}};
    for (const auto& [k, v] : overrides) REQUIRE(mea_config_set(cfg, "train", k, v) == MEA_OK);
    REQUIRE(mea_config_set(cfg, "outputs", "directory", dir.c_str()) == MEA_OK);
    REQUIRE(mea_config_set(cfg, "outputs", "formats", "csv, obj") == MEA_OK);
    REQUIRE(mea_config_set(cfg, "outputs", "grid", "11") == MEA_OK);

    int calls = 0;
    mea_run* run = nullptr;
    const auto progress = [](int, const char*, double, double, void* user) { ++*static_cast<int*>(user); };
    REQUIRE(mea_solve(cfg, progress, &calls, &run) == MEA_OK);
    CHECK(calls == 13);  // every epoch plus the final state
    char* report = nullptr;
    REQUIRE(mea_run_report(run, &report) == MEA_OK);
    CHECK(take(report).find("config_hash") != std::string::npos);
    CHECK(fs::path(mea_run_output_directory(run)) == dir);
    mea_run_free(run);
    for (const char* f : {"config.ini", "convergence.csv", "model.bin", "lift.json", "surface.csv", "surface.obj",
                          "principal.csv", "report.json", "manufactured.json"})
        CHECK_MESSAGE(fs::exists(dir / f), f);

    const auto a = (dir / "a.csv").string();
    const auto model = (dir / "model.bin").string();
    CHECK(mea_export(cfg, model.c_str(), "surface", "csv", 9, a.c_str()) == MEA_OK);
    char* cmp = nullptr;
    REQUIRE(mea_compare_csv(a.c_str(), a.c_str(), &cmp) == MEA_OK);
    CHECK(nlohmann::json::parse(take(cmp))["rmse"] == 0.0);

    const auto r = (dir / "r.csv").string();
    CHECK(mea_export(cfg, model.c_str(), "residual", "csv", 9, r.c_str()) == MEA_OK);
    CHECK(mea_export(cfg, nullptr, "principal", "csv", 9, r.c_str()) == MEA_OK);
    CHECK(mea_export(cfg, nullptr, "surface", "csv", 9, r.c_str()) != MEA_OK);
    CHECK(mea_export(cfg, model.c_str(), "surface", "vtk", 9, r.c_str()) == MEA_ERR_CONFIG);
    CHECK(mea_compare_csv(a.c_str(), "/nonexistent.csv", &cmp) != MEA_OK);
    mea_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("quick verification suite") {
    int lines = 0;
    char* json = nullptr;
    const auto on_line = [](const char* line, void* user) {
        ++*static_cast<int*>(user);
        CHECK(std::strncmp(line, "PASS", 4) == 0);
    };
    CHECK(mea_verify("lifts", 0, on_line, nullptr, &lines, &json) == MEA_OK);
    CHECK(lines == 1);
    CHECK(take(json).size() > 2);
    CHECK(mea_verify("nonsense", 0, nullptr, nullptr, nullptr, &json) == MEA_ERR_CONFIG);
}
