#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

#include "doctest.h"
#include "mea/mea_core.hpp"

using namespace mea;

namespace {

AiryField airy(double l1, double l2, double l3, StressState s) {
    AiryField a;
    a.l1 = l1;
    a.l2 = l2;
    a.l3 = l3;
    a.state = s;
    return a;
}

double adaptive(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

}  // namespace

TEST_CASE("stress components of the case-study Airy fields") {
    auto n = stress_components(airy(2, 0, 2, StressState::compression));
    CHECK(n.n11 == -4.0);
    CHECK(n.n22 == -4.0);
    CHECK(n.n12 == 0.0);
    n = stress_components(airy(5, 0, 5, StressState::tension));
    CHECK(n.n11 == 25.0);
    CHECK(n.n22 == 25.0);
    n = stress_components(airy(3, 0, 3, StressState::compression));
    CHECK(n.n11 == -9.0);
    CHECK(n.n22 == -9.0);
}

TEST_CASE("airy_eval values and defining second derivatives") {
    auto a = airy(2, 0, 2, StressState::compression);
    a.centroid = {0.7, -0.3};
    CHECK(airy_eval(a, {1.7, -0.3}) == doctest::Approx(-2.0));
    CHECK(airy_eval(a, a.centroid) == 0.0);
    auto t = airy(5, 0, 5, StressState::tension);
    CHECK(airy_eval(t, {0.0, 2.0}) == doctest::Approx(50.0));

    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        auto f = airy(uniform(rng, 0.5, 3), uniform(rng, -2, 2), uniform(rng, 0.5, 3),
                      i % 2 ? StressState::tension : StressState::compression);
        f.c0 = uniform(rng, -1, 1);
        f.c1 = uniform(rng, -1, 1);
        const auto n = stress_components(f);
        const Point p{uniform(rng, -3, 3), uniform(rng, -3, 3)};
        const double h = 1e-3;
        auto phi = [&](double dx, double dy) { return airy_eval(f, {p.x1 + dx, p.x2 + dy}); };
        const double p11 = (phi(h, 0) - 2 * phi(0, 0) + phi(-h, 0)) / (h * h);
        const double p22 = (phi(0, h) - 2 * phi(0, 0) + phi(0, -h)) / (h * h);
        const double p12 = (phi(h, h) - phi(h, -h) - phi(-h, h) + phi(-h, -h)) / (4 * h * h);
        CHECK(p11 == doctest::Approx(n.n22).epsilon(1e-6));
        CHECK(p22 == doctest::Approx(n.n11).epsilon(1e-6));
        CHECK(p12 == doctest::Approx(-n.n12).epsilon(1e-6).scale(1.0));

        // Hessian [[N11, -N12], [-N12, N22]] is sign-definite for the state.
        Eigen::Matrix2d hess;
        hess << n.n11, -n.n12, -n.n12, n.n22;
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(hess).eigenvalues();
        if (f.state == StressState::compression)
            CHECK(ev.maxCoeff() <= 1e-12);
        else
            CHECK(ev.minCoeff() >= -1e-12);
    }
}

TEST_CASE("vertical load: self-weight and Gaussian point loads") {
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    CHECK(vertical_load(l, {1.0, 2.0}) == doctest::Approx(1.8));

    LoadModel p;
    p.point_loads = {PointLoad{5.0, {0.0, 0.0}, 0.5}};
    CHECK(vertical_load(p, {0.0, 0.0}) == doctest::Approx(3.18310).epsilon(1e-5));

    // Plan integral over a 6 sigma box.
    const double mass = adaptive(
        [&](double x) { return adaptive([&](double y) { return vertical_load(p, {x, y}); }, -3.0, 3.0); }, -3.0, 3.0);
    CHECK(mass == doctest::Approx(5.0).epsilon(1e-3));

    l.point_loads = p.point_loads;
    CHECK(std::abs(vertical_load(l, {5.0, 0.0}) - 1.8) <= 1e-9);
}

TEST_CASE("horizontal loads follow the direction and ratio") {
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    l.alpha_h = 0.3;
    l.theta_h = kPi / 2;
    const auto h = horizontal_loads(l, {1.0, 1.0});
    CHECK(std::abs(h.p1) < 1e-15);
    CHECK(h.p2 == doctest::Approx(0.54));
    l.alpha_h = 0.0;
    CHECK(horizontal_loads(l, {0.0, 0.0}).p2 == 0.0);

    LoadModel u;
    u.density = 10.0;
    u.thickness = 0.1;
    u.alpha_h = 0.5;
    u.theta_h = 0.0;
    const auto g = horizontal_loads(u, {0.3, 0.2});
    CHECK(g.p1 == doctest::Approx(0.5));
    CHECK(g.p2 == 0.0);
}

TEST_CASE("cumulative loads") {
    LoadModel l;
    l.density = 9.0;
    l.thickness = 0.1;
    l.alpha_h = 1.0;
    l.theta_h = 0.0;  // p1 = 0.9
    l.reference = {0.0, 0.0};
    CHECK(cumulative_loads(l, {2.0, 0.0}).h1 == doctest::Approx(1.8));
    CHECK(cumulative_loads(l, {2.0, 5.0}).h2 == 0.0);

    // Gaussian marginal: the jump across the whole line is lambda1 P / (sqrt(2 pi) sigma).
    LoadModel g;
    g.alpha_h = 0.5;
    g.theta_h = 0.3;
    g.point_loads = {PointLoad{5.0, {-1.5, 0.0}, 0.5}};
    g.reference = {-6.5, -4.0};
    const double jump = cumulative_loads(g, {30.0, 0.0}).h1 - cumulative_loads(g, {-30.0, 0.0}).h1;
    CHECK(jump == doctest::Approx(g.lambda1() * 5.0 / (std::sqrt(2 * kPi) * 0.5)).epsilon(1e-12));
}

TEST_CASE("cumulative loads match quadrature and differentiate back to p") {
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    l.alpha_h = 0.5;
    l.theta_h = std::atan2(8.0, 13.0);
    l.point_loads = {PointLoad{5.0, {-1.5, 0.0}, 0.5}, PointLoad{2.0, {2.0, 1.0}, 0.8}};
    l.reference = {-6.5, -4.0};
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const Point p{uniform(rng, -6.5, 6.5), uniform(rng, -4, 4)};
        const auto h = cumulative_loads(l, p);
        const double h1 = adaptive([&](double x) { return horizontal_loads(l, {x, p.x2}).p1; }, l.reference.x1, p.x1);
        const double h2 = adaptive([&](double y) { return horizontal_loads(l, {p.x1, y}).p2; }, l.reference.x2, p.x2);
        CHECK(h.h1 == doctest::Approx(h1).epsilon(1e-8));
        CHECK(h.h2 == doctest::Approx(h2).epsilon(1e-8));

        const double e = 1e-5;
        const auto hp = horizontal_loads(l, p);
        const double d1 = (cumulative_loads(l, {p.x1 + e, p.x2}).h1 - cumulative_loads(l, {p.x1 - e, p.x2}).h1) / (2 * e);
        const double d2 = (cumulative_loads(l, {p.x1, p.x2 + e}).h2 - cumulative_loads(l, {p.x1, p.x2 - e}).h2) / (2 * e);
        CHECK(d1 == doctest::Approx(hp.p1).epsilon(1e-6));
        CHECK(d2 == doctest::Approx(hp.p2).epsilon(1e-6));
    }
}

TEST_CASE("projected stresses") {
    auto s = projected_stresses(StressComponents{-4, -4, 0}, CumulativeLoads{0, 0});
    CHECK(s.s11 == -4.0);
    CHECK(s.s22 == -4.0);
    CHECK(s.s12 == 0.0);
    s = projected_stresses(StressComponents{25, 25, 0}, CumulativeLoads{3, 2});
    CHECK(s.s11 == 23.0);
    CHECK(s.s22 == 22.0);
    CHECK(s.s12 == 0.0);

    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    l.alpha_h = 0.3;
    l.theta_h = kPi / 2;
    l.reference = {0.0, -6.0};
    const auto far = projected_stresses(airy(3, 0, 3, StressState::compression), l, {0.0, 5.5});
    CHECK(far.s11 < -9.0);
}

TEST_CASE("upstream reference keeps h non-negative") {
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    l.alpha_h = 0.5;
    l.theta_h = std::atan2(8.0, 13.0);
    const auto rect = geometry::Domain::rectangle(13.0, 8.0);
    const auto r = resolve_reference(rect, l, ReferenceMode::upstream);
    CHECK(r.x1 == -6.5);
    CHECK(r.x2 == -4.0);
    l.theta_h = kPi;  // pointing towards -x1
    CHECK(resolve_reference(rect, l, ReferenceMode::upstream).x1 == 6.5);
    CHECK(resolve_reference(rect, l, ReferenceMode::centroid).x1 == 0.0);
    CHECK(resolve_reference(rect, l, ReferenceMode::explicit_point, {1.0, 2.0}).x2 == 2.0);
}

TEST_CASE("admissibility checks") {
    LoadModel none;
    none.thickness = 0.1;
    auto rep = check_admissibility(airy(5, 0, 5, StressState::tension), none, geometry::Domain::disk(6.0), 1000, 1);
    CHECK(rep.pass);
    CHECK(rep.worst_margin == doctest::Approx(25.0));
    CHECK(rep.sample_count == 2000);

    // Horizontal load pushing h2 past 25 somewhere in the domain.
    LoadModel push;
    push.density = 100.0;
    push.thickness = 1.0;
    push.alpha_h = 1.0;
    push.theta_h = kPi / 2;
    push.reference = {0.0, -6.0};
    rep = check_admissibility(airy(5, 0, 5, StressState::tension), push, geometry::Domain::disk(6.0), 2000, 1);
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_margin < 0.0);
    CHECK(projected_stresses(airy(5, 0, 5, StressState::tension), push, rep.worst_point).s11 < 0.0);
}

TEST_CASE("admissibility verdicts agree with eigenvalue signs") {
    Rng rng(12);
    int disagreements = 0;
    for (int i = 0; i < 10000; ++i) {
        const ProjectedStresses s{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -3, 3)};
        Eigen::Matrix2d m;
        m << s.s11, s.s12, s.s12, s.s22;
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
        if (tensor_admissible(s, StressState::compression) != (ev.maxCoeff() <= 0)) ++disagreements;
        if (tensor_admissible(s, StressState::tension) != (ev.minCoeff() >= 0)) ++disagreements;
    }
    CHECK(disagreements == 0);
}

TEST_CASE("PDE context coefficients") {
    LoadModel l;
    l.density = 18.0;
    l.thickness = 0.1;
    const PdeContext ctx(airy(2, 0, 2, StressState::compression), l);
    const auto c = ctx.at({1.0, 1.0});
    CHECK(c.s.s11 == -4.0);
    CHECK(c.q == doctest::Approx(1.8));
    CHECK(c.p.p1 == 0.0);
}
