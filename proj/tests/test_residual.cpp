#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mea/reference.hpp"
#include "mea/residual.hpp"

using namespace mea;

namespace {

PdeContext self_weight_context() {
    AiryField a;
    a.l1 = 2;
    a.l3 = 2;
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    return PdeContext(a, l);
}

}  // namespace

TEST_CASE("pde_residual plug-in values") {
    const Jet quad{0.0, 2.0, 4.0, 2.0, 0.0, 2.0};
    CHECK(pde_residual(quad, {-4, -4, 0}, {0, 0}, -16.0) == 0.0);
    CHECK(pde_residual(Jet{}, {-4, -4, 0}, {0, 0}, 1.8) == doctest::Approx(-1.8));
    // Every coefficient enters with the documented sign.
    const Jet j{0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0};
    CHECK(pde_residual(j, {1, 2, 3}, {4, 5}, 6) == doctest::Approx(1 * 10000 + 2 * 100 + 2 * 3 * 1000 - 4 - 5 * 10 - 6));
}

TEST_CASE("pde_residual is affine in the jet") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        auto rj = [&] {
            return Jet{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1),
                       uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
        };
        const Jet a = rj(), b = rj();
        const ProjectedStresses s{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5)};
        const HorizontalLoads p{uniform(rng, -1, 1), uniform(rng, -1, 1)};
        const double q = uniform(rng, -2, 2);
        const double al = uniform(rng, -2, 2), be = uniform(rng, -2, 2);
        const double lhs = pde_residual(al * a + be * b, s, p, q);
        const double rhs = al * pde_residual(a, s, p, q) + be * pde_residual(b, s, p, q) + (al + be - 1.0) * q;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(10.0));
    }
}

TEST_CASE("residual_rmse of constants and manufactured solutions") {
    const auto ctx = self_weight_context();
    Rng rng(3);
    const auto cloud = geometry::sample_interior(geometry::Domain::rectangle(13, 8), 500, rng);
    const JetFunction constant = [](const Point&) { return Jet{3.0, 0, 0, 0, 0, 0}; };
    CHECK(residual_rmse(constant, ctx, cloud) == doctest::Approx(1.8).epsilon(1e-14));

    const auto disk = geometry::Domain::disk(6.0);
    const auto mc = reference::make_manufactured(disk, ctx.airy(), ctx.loads(), reference::ManufacturedId::disk_quartic);
    const auto pts = geometry::sample_interior(disk, 1000, rng);
    CHECK(residual_rmse(mc.solution, *mc.context, pts) <= 1e-9);
    for (const auto& p : pts.points) CHECK(std::abs(pde_residual(mc.solution(p), mc.context->at(p))) <= 1e-10);
}

TEST_CASE("residual_rmse squared equals the mean squared residual") {
    const auto ctx = self_weight_context();
    Rng rng(8);
    const auto cloud = geometry::sample_interior(geometry::Domain::rectangle(13, 8), 777, rng);
    const JetFunction f = [](const Point& p) {
        return Jet{std::sin(p.x1), std::cos(p.x1), 0.0, -std::sin(p.x1), 0.0, 0.0};
    };
    const auto samples = residual_samples(f, ctx, cloud);
    double acc = 0.0;
    for (const auto& s : samples) acc += s.residual * s.residual;
    const double rmse = residual_rmse(f, ctx, cloud);
    CHECK(rmse * rmse == doctest::Approx(acc / samples.size()).epsilon(1e-14));

    std::ostringstream csv;
    write_residual_csv(csv, samples);
    CHECK(csv.str().rfind("x1,x2,r\n", 0) == 0);
}

TEST_CASE("pairwise_sum is accurate and order-fixed") {
    std::vector<double> v(100000, 0.1);
    CHECK(pairwise_sum(v) == doctest::Approx(10000.0).epsilon(1e-13));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
    CHECK(pairwise_sum(std::vector<double>{1.5}) == 1.5);
}
