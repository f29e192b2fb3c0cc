#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mea/reference.hpp"

using namespace mea;
using namespace mea::reference;
using geometry::Domain;

namespace {

AiryField isotropic(double l) {
    AiryField a;
    a.l1 = l;
    a.l3 = l;
    return a;
}

LoadModel self_weight() {
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    return l;
}

LoadModel with_horizontal() {
    LoadModel l = self_weight();
    l.alpha_h = 0.3;
    l.theta_h = 0.4;
    l.reference = {-6.5, -4.0};
    return l;
}

}  // namespace

TEST_CASE("manufactured forcing for constant and quadratic surfaces") {
    const auto rect = Domain::rectangle(13, 8);
    const auto c = make_manufactured(rect, isotropic(2), LoadModel{}, ManufacturedId::constant);
    CHECK(c.context->at({1, 1}).q == 0.0);
    const auto q = make_manufactured(rect, isotropic(2), LoadModel{}, ManufacturedId::quadratic);
    CHECK(q.context->at({0.3, -2}).q == doctest::Approx(-16.0).epsilon(1e-15));
    CHECK(q.context->at({0.3, -2}).s.s11 == doctest::Approx(-4.0));
}

TEST_CASE("manufactured solutions satisfy their own PDE") {
    struct Case {
        Domain domain;
        ManufacturedId id;
    };
    const Case cases[] = {
        {Domain::rectangle(13, 8), ManufacturedId::rect_arch_bump},
        {Domain::rectangle(13, 8), ManufacturedId::rect_trig},
        {Domain::rectangle(13, 8), ManufacturedId::gaussian_bump},
        {Domain::disk(6), ManufacturedId::disk_quartic},
        {Domain::annulus(0.6, 6), ManufacturedId::annulus_poly},
    };
    for (const auto& c : cases) {
        const auto m = make_manufactured(c.domain, isotropic(3), with_horizontal(), c.id);
        Rng rng(5);
        const auto pts = geometry::sample_interior(c.domain, 2000, rng);
        CHECK(residual_rmse(m.solution, *m.context, pts) <= 1e-12);
        if (c.domain.circular()) CHECK(m.projection_error <= 1e-10);
        CHECK(m.to_json().find(to_string(c.id)) != std::string::npos);
    }
    CHECK_THROWS_AS(make_manufactured(Domain::disk(6), isotropic(1), self_weight(), ManufacturedId::rect_trig),
                    ConfigError);
    CHECK(manufactured_from_string("disk_quartic") == ManufacturedId::disk_quartic);
    CHECK_THROWS_AS(manufactured_from_string("nope"), ConfigError);
}

TEST_CASE("Fourier projection recovers a trigonometric polynomial") {
    const ScalarFunction f = [](const Point& p) {
        const double th = std::atan2(p.x2, p.x1);
        return 1.0 + 0.5 * std::cos(3 * th) - 0.25 * std::sin(th);
    };
    const auto s = project_fourier(f, 2.0, 8);
    CHECK(s.a0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.cos_coeff(3) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.sin_coeff(1) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(std::abs(s.cos_coeff(2)) <= 1e-15);
    CHECK_THROWS_AS(project_fourier(f, 2.0, 8, 16), ConfigError);
}

TEST_CASE("finite differences are exact on quadratics") {
    const auto rect = Domain::rectangle(13, 8);
    const auto q = make_manufactured(rect, isotropic(2), with_horizontal(), ManufacturedId::quadratic);
    const auto sol = fd_solve_rectangle(rect, *q.context, [&](const Point& p) { return q.solution(p).f; }, 27, 17);
    CHECK(sol.algebraic_residual <= 1e-10);
    double worst = 0.0;
    for (int j = 0; j < sol.ny; ++j)
        for (int i = 0; i < sol.nx; ++i) worst = std::max(worst, std::abs(sol.at(i, j) - q.solution(sol.node(i, j)).f));
    CHECK(worst <= 1e-9);
    CHECK(sol.interpolate({1.234, -0.77}) == doctest::Approx(1.234 * 1.234 + 0.77 * 0.77).epsilon(1e-9));
    CHECK(sol.interior_nodes().size() == 25u * 15u);
    std::ostringstream csv;
    sol.write_csv(csv);
    CHECK(csv.str().rfind("x1,x2,f\n", 0) == 0);
}

TEST_CASE("finite differences converge at second order") {
    const auto rect = Domain::rectangle(13, 8);
    const auto m = make_manufactured(rect, isotropic(2), with_horizontal(), ManufacturedId::rect_trig);
    const ScalarFunction exact = [&](const Point& p) { return m.solution(p).f; };
    std::vector<double> err;
    for (int n : {17, 33, 65}) {
        const auto sol = fd_solve_rectangle(rect, *m.context, exact, n, n);
        double e = 0.0;
        for (int j = 0; j < sol.ny; ++j)
            for (int i = 0; i < sol.nx; ++i) e = std::max(e, std::abs(sol.at(i, j) - exact(sol.node(i, j))));
        err.push_back(e);
    }
    for (std::size_t k = 1; k < err.size(); ++k) {
        const double order = std::log2(err[k - 1] / err[k]);
        CHECK(order > 1.8);
        CHECK(order < 2.2);
    }
}

TEST_CASE("Richardson estimate needs odd node counts") {
    const auto rect = Domain::rectangle(13, 8);
    const PdeContext ctx(isotropic(2), self_weight());
    geometry::BoundaryProfile prof;
    prof.arch_height = 2.0;
    const auto est = fd_solve_with_estimate(rect, ctx, prof, 33, 21);
    CHECK(est.coarse.nx == 17);
    CHECK(est.relative_error > 0.0);
    CHECK(est.relative_error < 0.05);
    CHECK_THROWS(fd_solve_with_estimate(rect, ctx, prof, 32, 21));
}

TEST_CASE("field comparison metrics") {
    std::vector<Point> pts;
    Rng rng(1);
    for (int i = 0; i < 500; ++i) pts.push_back({uniform(rng, -1, 1), uniform(rng, -1, 1)});
    const ScalarFunction one = [](const Point&) { return 1.0; };
    const ScalarFunction off = [](const Point&) { return 1.001; };
    const auto same = compare_fields(one, one, pts);
    CHECK(same.rmse == 0.0);
    CHECK(same.rel_l2 == 0.0);
    CHECK(same.max_abs == 0.0);
    CHECK(same.count == 500);
    const auto m = compare_fields(off, one, pts);
    CHECK(m.rel_l2 * 100 == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(m.max_abs == doctest::Approx(1e-3).epsilon(1e-9));

    const ScalarFunction a = [](const Point& p) { return std::sin(p.x1) + 2; };
    const ScalarFunction b = [](const Point& p) { return std::cos(p.x2) + 2; };
    CHECK(compare_fields(a, b, pts).rmse == doctest::Approx(compare_fields(b, a, pts).rmse).epsilon(1e-15));

    const ScalarFunction zero = [](const Point&) { return 0.0; };
    CHECK_THROWS_AS(compare_fields(one, zero, pts), Error);

    const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
    const auto v = compare_values(x, y);
    CHECK(v.max_abs == 1.0);
    CHECK(v.rmse == doctest::Approx(std::sqrt(1.0 / 3)));
    CHECK_THROWS(compare_values(x, std::vector<double>{1, 2}));
}
