#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "json.hpp"
#include "mea/postproc.hpp"

using namespace mea;
using namespace mea::post;
using geometry::Domain;

namespace {

int count_prefix(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line))
        if (line.rfind(prefix, 0) == 0) ++n;
    return n;
}

}  // namespace

TEST_CASE("principal stresses of simple tensors") {
    const auto iso = principal_stresses({-4, -4, 0});
    CHECK(iso.sigma1 == -4.0);
    CHECK(iso.sigma2 == -4.0);
    CHECK(iso.degenerate);
    CHECK(iso.e1.x1 == 1.0);

    const auto d = principal_stresses({-4, -9, 0});
    CHECK(d.sigma1 == doctest::Approx(-4.0));
    CHECK(d.sigma2 == doctest::Approx(-9.0));
    CHECK(std::abs(d.e1.x1) == doctest::Approx(1.0));

    const auto shear = principal_stresses({0, 0, 1});
    CHECK(shear.sigma1 == doctest::Approx(1.0));
    CHECK(shear.sigma2 == doctest::Approx(-1.0));
    CHECK(std::abs(shear.e1.x1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(shear.e1.x1 * shear.e1.x2 > 0.0);
}

TEST_CASE("principal stresses agree with a symmetric eigensolver") {
    Rng rng(10);
    for (int i = 0; i < 10000; ++i) {
        const ProjectedStresses s{uniform(rng, -50, 50), uniform(rng, -50, 50), uniform(rng, -50, 50)};
        const auto ps = principal_stresses(s);
        Eigen::Matrix2d m;
        m << s.s11, s.s12, s.s12, s.s22;
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
        const double scale = 1.0 + std::abs(s.s11) + std::abs(s.s22) + std::abs(s.s12);
        REQUIRE(std::abs(ps.sigma1 - es.eigenvalues()(1)) <= 1e-12 * scale);
        REQUIRE(std::abs(ps.sigma2 - es.eigenvalues()(0)) <= 1e-12 * scale);
        REQUIRE(std::abs(ps.sigma1 + ps.sigma2 - (s.s11 + s.s22)) <= 1e-12 * scale);
        REQUIRE(std::abs(ps.sigma1 * ps.sigma2 - (s.s11 * s.s22 - s.s12 * s.s12)) <= 1e-12 * scale * scale);
        // S e1 = sigma1 e1 with unit, orthogonal axes.
        REQUIRE(std::abs(s.s11 * ps.e1.x1 + s.s12 * ps.e1.x2 - ps.sigma1 * ps.e1.x1) <= 1e-10 * scale);
        REQUIRE(std::abs(ps.e1.x1 * ps.e2.x1 + ps.e1.x2 * ps.e2.x2) <= 1e-12);
        REQUIRE(std::hypot(ps.e1.x1, ps.e1.x2) == doctest::Approx(1.0));
    }
}

TEST_CASE("admissible compression has non-positive principal stresses") {
    AiryField airy;
    airy.l1 = 3;
    airy.l3 = 3;
    LoadModel loads;
    loads.density = 18;
    loads.thickness = 0.1;
    loads.alpha_h = 0.3;
    loads.theta_h = kPi / 2;
    const auto ann = Domain::annulus(0.6, 6);
    loads.reference = resolve_reference(ann, loads, ReferenceMode::upstream);
    REQUIRE(check_admissibility(airy, loads, ann, 2000, 1).pass);
    const PdeContext ctx(airy, loads);
    for (const auto& p : masked_grid(ann, 41)) CHECK(principal_stresses(ctx.at(p).s).sigma1 <= 0.0);
}

TEST_CASE("masked grids and surface exports") {
    const auto rect = Domain::rectangle(13, 8);
    CHECK(masked_grid(rect, 3).size() == 9);
    std::ostringstream csv;
    export_surface(csv, [](const Point& p) { return p.x1; }, rect, 3, SurfaceFormat::csv);
    CHECK(count_prefix(csv.str(), "x1,x2,f") == 1);
    CHECK(count_prefix(csv.str(), "-6.5,-4,-6.5") == 1);
    std::istringstream rows(csv.str());
    std::string line;
    int n = 0;
    while (std::getline(rows, line)) ++n;
    CHECK(n == 10);

    const auto ann = Domain::annulus(0.6, 6);
    const auto grid = masked_grid(ann, 21);
    for (const auto& p : grid) CHECK(std::hypot(p.x1, p.x2) >= 0.6);
    for (const auto& p : grid) CHECK(std::hypot(p.x1, p.x2) <= 6.0 + 1e-12);
    std::ostringstream obj;
    export_surface(obj, [](const Point&) { return 1.0; }, ann, 21, SurfaceFormat::obj);
    CHECK(count_prefix(obj.str(), "v ") == static_cast<int>(grid.size()));
    CHECK(count_prefix(obj.str(), "f ") > 0);

    CHECK(surface_format_from_string("obj") == SurfaceFormat::obj);
    CHECK_THROWS_AS(surface_format_from_string("vtk"), ConfigError);
}

TEST_CASE("principal export columns") {
    AiryField airy;
    airy.l1 = 2;
    airy.l3 = 2;
    const PdeContext ctx(airy, LoadModel{});
    std::ostringstream out;
    export_principal(out, ctx, Domain::rectangle(13, 8), 3);
    CHECK(out.str().rfind("x1,x2,S11,S22,S12,sigma1,sigma2,e1x,e1y,e2x,e2y\n", 0) == 0);
    CHECK(count_prefix(out.str(), "0,0,-4,-4,0,-4,-4,1,0,0,1") == 1);
}

TEST_CASE("run report JSON") {
    RunReport r;
    r.final_train_rmse = 0.5;
    r.config_hash = fnv1a_hex("abc");
    r.formulation = "hard";
    auto j = nlohmann::json::parse(report_metrics(r));
    for (const char* key : {"rmse", "rel_l2_percent", "max_abs", "final_train_pde_rmse", "final_val_pde_rmse", "admissibility",
                            "seeds", "config_hash", "wallclock_s"})
        CHECK(j.contains(key));
    CHECK(j["rmse"].is_null());
    CHECK(j["final_train_pde_rmse"] == 0.5);

    r.comparison = reference::FieldMetrics{0.1, 0.002, 0.3, 10};
    j = nlohmann::json::parse(report_metrics(r));
    CHECK(j["rel_l2_percent"].get<double>() == doctest::Approx(0.2));

    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
