#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mea/network.hpp"

using namespace mea;
using namespace mea::nn;

TEST_CASE("parameter counts") {
    const std::vector<int> a{2, 128, 128, 128, 128, 128, 1};
    // 2*128+128 + 4*(128^2+128) + 128+1
    CHECK(Mlp::parameter_count(a) == 66561);
    const std::vector<int> b{2, 256, 256, 256, 256, 1};
    CHECK(Mlp::parameter_count(b) == 198401);
    CHECK(Mlp::init(5, 128, {}, 1).size() == 66561);
}

TEST_CASE("initialization is deterministic, bounded, with zero biases") {
    const auto a = Mlp::init(3, 16, {}, 7);
    const auto b = Mlp::init(3, 16, {}, 7);
    const auto c = Mlp::init(3, 16, {}, 8);
    CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
    CHECK_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
    // first layer: 2x16 weights in +-1/sqrt(2), then 16 zero biases
    for (int i = 0; i < 32; ++i) CHECK(std::abs(a.params()[i]) <= 1.0 / std::sqrt(2.0));
    for (int i = 32; i < 48; ++i) CHECK(a.params()[i] == 0.0);
    CHECK_THROWS_AS(Mlp::init(0, 16, {}, 1), ConfigError);
}

TEST_CASE("GELU values and derivatives") {
    const auto g = gelu(0.0);
    CHECK(g.g0 == 0.0);
    CHECK(g.g1 == doctest::Approx(0.5));
    CHECK(g.g2 == doctest::Approx(0.797885).epsilon(1e-6));
    for (double u = -6.0; u <= 6.0; u += 0.25) {
        const double h = 1e-5;
        const auto p = gelu(u + h), m = gelu(u - h), c = gelu(u);
        CHECK((p.g0 - m.g0) / (2 * h) == doctest::Approx(c.g1).epsilon(1e-6).scale(1e-3));
        CHECK((p.g1 - m.g1) / (2 * h) == doctest::Approx(c.g2).epsilon(1e-6).scale(1e-3));
        CHECK((p.g2 - m.g2) / (2 * h) == doctest::Approx(c.g3).epsilon(1e-6).scale(1e-3));
    }
}

TEST_CASE("degenerate networks") {
    Mlp net({2, 4, 1}, {});
    std::vector<double> p(net.size(), 0.0);
    p.back() = 1.25;  // output bias
    net.set_params(p);
    const Jet j = net.forward_jet({0.3, -0.7});
    CHECK(j.f == 1.25);
    CHECK(j.f1 == 0.0);
    CHECK(j.f22 == 0.0);

    // One hidden unit computing g(x1) with unit output weight.
    Mlp one({2, 1, 1}, {});
    std::vector<double> q(one.size(), 0.0);
    q[0] = 1.0;  // w(0, x1)
    q[3] = 1.0;  // output weight
    one.set_params(q);
    const auto g = gelu(0.3);
    const Jet k = one.forward_jet({0.3, 5.0});
    CHECK(k.f == doctest::Approx(g.g0).epsilon(1e-15));
    CHECK(k.f1 == doctest::Approx(g.g1).epsilon(1e-15));
    CHECK(k.f11 == doctest::Approx(g.g2).epsilon(1e-15));
    CHECK(k.f2 == 0.0);
    CHECK(k.f12 == 0.0);
}

TEST_CASE("input normalization is folded into the jets") {
    InputNormalization norm{{1.0, -2.0}, {4.0, 0.5}};
    Mlp one({2, 1, 1}, norm);
    std::vector<double> q(one.size(), 0.0);
    q[0] = 1.0;
    q[3] = 1.0;
    one.set_params(q);
    const double u = (3.0 - 1.0) / 4.0;
    const Jet k = one.forward_jet({3.0, 0.0});
    CHECK(k.f == doctest::Approx(gelu(u).g0));
    CHECK(k.f1 == doctest::Approx(gelu(u).g1 / 4.0));
    CHECK(k.f11 == doctest::Approx(gelu(u).g2 / 16.0));
}

TEST_CASE("jets match finite differences") {
    Rng rng(31);
    for (int n = 0; n < 10; ++n) {
        auto net = Mlp::init(3, 12, {{0.0, 0.0}, {3.0, 2.0}}, 100 + n);
        for (double& p : net.params()) p += uniform(rng, -0.3, 0.3);
        for (int i = 0; i < 20; ++i) {
            const Point p{uniform(rng, -4, 4), uniform(rng, -3, 3)};
            const double h = 1e-3;
            const Jet j = net.forward_jet(p);
            auto f = [&](double dx, double dy) { return net.forward_jet({p.x1 + dx, p.x2 + dy}).f; };
            const double f1 = (f(h, 0) - f(-h, 0)) / (2 * h);
            const double f2 = (f(0, h) - f(0, -h)) / (2 * h);
            const double f11 = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / (h * h);
            const double f22 = (f(0, h) - 2 * f(0, 0) + f(0, -h)) / (h * h);
            const double f12 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
            const double s = std::abs(j.f) + std::abs(j.f1) + std::abs(j.f2) + 1e-3;
            CHECK(std::abs(j.f1 - f1) <= 1e-4 * std::max(std::abs(f1), s));
            CHECK(std::abs(j.f2 - f2) <= 1e-4 * std::max(std::abs(f2), s));
            CHECK(std::abs(j.f11 - f11) <= 1e-4 * std::max(std::abs(f11), s));
            CHECK(std::abs(j.f22 - f22) <= 1e-4 * std::max(std::abs(f22), s));
            CHECK(std::abs(j.f12 - f12) <= 1e-4 * std::max(std::abs(f12), s));
        }
    }
}

TEST_CASE("batched and single-point evaluation agree; order does not matter") {
    auto net = Mlp::init(2, 10, {{0.5, 0.5}, {2.0, 2.0}}, 3);
    Rng rng(2);
    std::vector<Point> pts(2500);
    for (auto& p : pts) p = {uniform(rng, -3, 3), uniform(rng, -3, 3)};
    const auto jets = net.forward_jets(pts);
    const auto vals = net.forward_values(pts);
    std::vector<Point> rev(pts.rbegin(), pts.rend());
    const auto rjets = net.forward_jets(rev);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Jet one = net.forward_jet(pts[i]);
        CHECK(one.f == doctest::Approx(jets[i].f).epsilon(1e-14));
        CHECK(one.f22 == doctest::Approx(jets[i].f22).epsilon(1e-12).scale(1e-6));
        CHECK(vals[i] == doctest::Approx(jets[i].f).epsilon(1e-13));
        CHECK(rjets[pts.size() - 1 - i].f == jets[i].f);
        CHECK(rjets[pts.size() - 1 - i].f12 == jets[i].f12);
    }
}

TEST_CASE("parameter gradients") {
    SUBCASE("f^2 at a point of a zero net with output bias c") {
        Mlp net({2, 3, 3, 1}, {});
        std::vector<double> p(net.size(), 0.0);
        p.back() = 0.7;
        net.set_params(p);
        std::vector<double> g(net.size());
        const std::vector<Point> one{{0.4, -0.2}};
        const double loss = net.loss_and_gradient(one, [](std::size_t, const Jet& j, Jet& d) {
            d = Jet{2 * j.f, 0, 0, 0, 0, 0};
            return j.f * j.f;
        }, g);
        CHECK(loss == doctest::Approx(0.49));
        CHECK(g.back() == doctest::Approx(1.4));
        // Hidden activations are GELU(0) = 0, so output weights get no gradient.
        for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(g[i] == 0.0);
    }
    SUBCASE("zero loss gives a zero gradient") {
        auto net = Mlp::init(2, 8, {}, 4);
        std::vector<double> g(net.size(), 1.0);
        const std::vector<Point> pts{{0.1, 0.2}, {0.3, -0.4}};
        net.loss_and_gradient(pts, [](std::size_t, const Jet&, Jet& d) { d = Jet{}; return 0.0; }, g);
        for (double v : g) CHECK(v == 0.0);
    }
    SUBCASE("random quadratic jet loss against finite differences") {
        auto net = Mlp::init(3, 10, {{0, 0}, {2, 2}}, 9);
        Rng rng(5);
        for (double& p : net.params()) p += uniform(rng, -0.2, 0.2);
        std::vector<Point> pts(64);
        for (auto& p : pts) p = {uniform(rng, -2, 2), uniform(rng, -2, 2)};
        std::array<double, 6> c{};
        for (double& v : c) v = uniform(rng, -1, 1);
        const PointLoss loss = [&](std::size_t, const Jet& j, Jet& d) {
            const double s = c[0] * j.f + c[1] * j.f1 + c[2] * j.f2 + c[3] * j.f11 + c[4] * j.f12 + c[5] * j.f22;
            d = Jet{s * c[0], s * c[1], s * c[2], s * c[3], s * c[4], s * c[5]};
            return 0.5 * s * s;
        };
        std::vector<double> g(net.size()), scratch(net.size());
        net.loss_and_gradient(pts, loss, g);
        const std::vector<double> theta(net.params().begin(), net.params().end());
        for (int t = 0; t < 25; ++t) {
            const std::size_t k = rng() % theta.size();
            const double h = 1e-6;
            auto at = [&](double d) {
                auto q = theta;
                q[k] += d;
                net.set_params(q);
                return net.loss_and_gradient(pts, loss, scratch);
            };
            const double fd = (at(h) - at(-h)) / (2 * h);
            CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
        }
    }
}

TEST_CASE("save and load round-trip exactly") {
    auto net = Mlp::init(2, 5, {{1.0, 2.0}, {3.0, 4.0}}, 12);
    std::stringstream buf;
    net.save(buf, 12);
    const auto back = Mlp::load(buf);
    CHECK(back.layer_sizes() == net.layer_sizes());
    CHECK(back.normalization().scale.x2 == 4.0);
    CHECK(std::equal(net.params().begin(), net.params().end(), back.params().begin()));
    std::stringstream bad("not a model");
    CHECK_THROWS(Mlp::load(bad));
}

TEST_CASE("non-finite outputs raise a divergence error") {
    auto net = Mlp::init(1, 2, {}, 1);
    std::vector<double> p(net.size(), std::nan(""));
    net.set_params(p);
    CHECK_THROWS_AS(net.forward_jet({0, 0}), DivergenceError);
}
