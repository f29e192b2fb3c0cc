#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mea/geometry.hpp"

using namespace mea;
using namespace mea::geometry;

TEST_CASE("contains: center, hole and boundary") {
    CHECK(contains(Domain::rectangle(13.0, 8.0), {0.0, 0.0}));
    CHECK_FALSE(contains(Domain::annulus(0.6, 6.0), {0.0, 0.0}));
    CHECK_FALSE(contains(Domain::disk(6.0), {6.0, 0.0}));
    CHECK_FALSE(contains(Domain::rectangle(13.0, 8.0), {6.5, 0.0}));
}

TEST_CASE("domain validation rejects degenerate shapes") {
    CHECK_THROWS_AS(Domain::rectangle(0.0, 8.0).validate(), ConfigError);
    CHECK_THROWS_AS(Domain::annulus(6.0, 6.0).validate(), ConfigError);
    CHECK_THROWS_AS(Domain::annulus(-1.0, 6.0).validate(), ConfigError);
    CHECK_NOTHROW(Domain::disk(6.0).validate());
}

TEST_CASE("sample_interior size, containment and determinism") {
    for (const auto& d : {Domain::rectangle(13.0, 8.0), Domain::disk(6.0), Domain::annulus(0.6, 6.0)}) {
        Rng rng(5);
        const auto cloud = sample_interior(d, 16384, rng);
        CHECK(cloud.size() == 16384);
        CHECK(cloud.tag == PointTag::interior);
        CHECK(std::all_of(cloud.points.begin(), cloud.points.end(), [&](const Point& p) { return contains(d, p); }));
    }
    Rng a(42), b(42);
    const auto pa = sample_interior(Domain::annulus(0.6, 6.0), 1, a);
    const auto pb = sample_interior(Domain::annulus(0.6, 6.0), 1, b);
    CHECK(pa.points[0].x1 == pb.points[0].x1);
    CHECK(pa.points[0].x2 == pb.points[0].x2);
    Rng z(1);
    CHECK_THROWS_AS(sample_interior(Domain::disk(6.0), 0, z), ConfigError);
}

TEST_CASE("disk interior samples have E[r^2] = R^2/2") {
    Rng rng(11);
    const auto cloud = sample_interior(Domain::disk(6.0), 100000, rng);
    double s = 0.0;
    for (const auto& p : cloud.points) s += p.x1 * p.x1 + p.x2 * p.x2;
    CHECK(s / 100000.0 == doctest::Approx(18.0).epsilon(0.01));
}

TEST_CASE("boundary samples lie on the boundary") {
    Rng rng(3);
    const auto rect = Domain::rectangle(13.0, 8.0);
    const auto c = sample_boundary_uniform(rect, 1024, rng);
    CHECK(c.size() == 1024);
    for (const auto& p : c.points) {
        const bool on_x = std::abs(std::abs(p.x1) - 6.5) < 1e-12 && std::abs(p.x2) <= 4.0 + 1e-12;
        const bool on_y = std::abs(std::abs(p.x2) - 4.0) < 1e-12 && std::abs(p.x1) <= 6.5 + 1e-12;
        CHECK((on_x || on_y));
    }
    const auto disk = sample_boundary_uniform(Domain::disk(6.0), 4, rng);
    for (const auto& p : disk.points) CHECK(std::abs(p.x1 * p.x1 + p.x2 * p.x2 - 36.0) <= 1e-12 * 36.0);
}

TEST_CASE("annulus boundary split follows circumference (10 inner : 100 outer)") {
    Rng rng(8);
    const std::size_t n = 110000;
    const auto c = sample_boundary_uniform(Domain::annulus(0.6, 6.0), n, rng);
    const auto inner = std::count_if(c.params.begin(), c.params.end(), [](const BoundaryParam& b) { return b.inner_circle; });
    const double expected = n / 11.0;
    const double sigma = std::sqrt(n * (1.0 / 11.0) * (10.0 / 11.0));
    CHECK(std::abs(static_cast<double>(inner) - expected) < 4.0 * sigma);
}

TEST_CASE("rectangle perimeter parameter passes a KS test against uniform") {
    Rng rng(17);
    const auto rect = Domain::rectangle(13.0, 8.0);
    const std::size_t n = 20000;
    auto c = sample_boundary_uniform(rect, n, rng);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = c.params[i].value / rect.perimeter();
    std::sort(u.begin(), u.end());
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dmax = std::max({dmax, std::abs((i + 1.0) / n - u[i]), std::abs(u[i] - static_cast<double>(i) / n)});
    // Critical value at significance 0.01.
    CHECK(dmax < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("curvature sampling: constant profile is uniform, cos 3 theta has six maxima") {
    FourierSeries flat;
    flat.a0 = 2.0;
    const auto cdf = curvature_cdf(flat, 8192);
    CHECK(cdf.back() == 1.0);
    CHECK(cdf[4096] == doctest::Approx(0.5).epsilon(1e-12));

    BoundaryProfile prof;
    prof.outer.cos_coeffs = {0.0, 0.0, 1.5};
    const auto c2 = curvature_cdf(prof.outer, 8192);
    CHECK(std::abs(c2.back() - 1.0) <= 1e-12);

    // Empirical histogram against p(theta) ~ 1 + |cos 3 theta| on 36 bins.
    Rng rng(23);
    const std::size_t n = 200000;
    const auto cloud = sample_boundary_curvature(Domain::disk(6.0), prof, n, rng);
    CHECK(cloud.size() == n);
    constexpr int bins = 36;
    std::vector<double> counts(bins, 0.0);
    for (const auto& bp : cloud.params) counts[std::min(bins - 1, static_cast<int>(bp.value / (2 * kPi) * bins))] += 1;
    // Closed-form bin masses of 1 + |cos 3t|, normalized by 2 pi + 4.
    auto F = [](double t) {
        // antiderivative of |cos 3t| on [0, t]
        const double period = kPi / 3.0;
        const double full = std::floor(t / period);
        const double rem = t - full * period;
        auto part = [](double s) {  // int_0^s |cos 3x| dx, s in [0, pi/3)
            const double q = kPi / 6.0;
            return s <= q ? std::sin(3 * s) / 3.0 : 2.0 / 3.0 - std::sin(3 * s) / 3.0;
        };
        return t + full * (2.0 / 3.0) + part(rem);
    };
    const double total = 2 * kPi + 4.0;
    int maxima = 0;
    for (int b = 0; b < bins; ++b) {
        const double lo = 2 * kPi * b / bins;
        const double hi = 2 * kPi * (b + 1) / bins;
        const double p = (F(hi) - F(lo)) / total;
        const double sigma = std::sqrt(n * p * (1 - p));
        CHECK(std::abs(counts[b] - n * p) < 3.5 * sigma);
        const double prev = counts[(b + bins - 1) % bins];
        const double next = counts[(b + 1) % bins];
        if (counts[b] > prev && counts[b] > next) ++maxima;
    }
    CHECK(maxima == 6);

    Rng r2(1);
    CHECK(sample_boundary_curvature(Domain::disk(6.0), prof, 1024, r2).size() == 1024);
    CHECK_THROWS_AS(sample_boundary_curvature(Domain::rectangle(13, 8), prof, 10, r2), ConfigError);
}

TEST_CASE("curvature samples on the annulus lie on the outer circle") {
    BoundaryProfile prof;
    prof.outer.cos_coeffs = {0.0, 0.0, 1.5};
    Rng rng(2);
    const auto c = sample_boundary_curvature(Domain::annulus(0.6, 6.0), prof, 500, rng);
    for (const auto& p : c.points) CHECK(std::hypot(p.x1, p.x2) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("boundary heights") {
    const auto rect = Domain::rectangle(13.0, 8.0);
    BoundaryProfile prof;
    prof.arch_height = 2.0;
    // parameter 6.5 is the point (0, -4) on the bottom edge
    CHECK(boundary_height(rect, prof, {6.5, false}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(boundary_height(rect, prof, {13.0, false})) < 1e-15);

    BoundaryProfile disk;
    disk.outer.a0 = 1.0;
    disk.outer.cos_coeffs = {0.0, 0.0, 0.0, 0.5};
    CHECK(boundary_height(Domain::disk(6.0), disk, {kPi / 4, false}) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sampling is reproducible bit for bit") {
    BoundaryProfile prof;
    prof.outer.cos_coeffs = {0.0, 0.0, 0.0, 1.5};
    auto draw = [&] {
        Rng rng(99);
        auto a = sample_interior(Domain::annulus(0.6, 6.0), 300, rng);
        a.append(sample_boundary_uniform(Domain::annulus(0.6, 6.0), 300, rng));
        a.append(sample_boundary_curvature(Domain::annulus(0.6, 6.0), prof, 300, rng));
        return a;
    };
    const auto a = draw();
    const auto b = draw();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.points[i].x1 == b.points[i].x1);
        CHECK(a.points[i].x2 == b.points[i].x2);
    }
}
