#include "mea/hard_bc.hpp"

#include <cmath>
#include <complex>

#include "json.hpp"

namespace mea::hard_bc {

namespace {

using Complex = std::complex<double>;

// Jet of a radial function given phi(r), phi'(r), phi''(r).
Jet radial_jet(const Point& p, double r, double phi, double dphi, double d2phi) {
    const double x1 = p.x1 / r;
    const double x2 = p.x2 / r;
    const double t = dphi / r;
    return {phi,
            dphi * x1,
            dphi * x2,
            d2phi * x1 * x1 + t * (1.0 - x1 * x1),
            d2phi * x1 * x2 - t * x1 * x2,
            d2phi * x2 * x2 + t * (1.0 - x2 * x2)};
}

// Holomorphic F(z) with derivatives: jets of Re F and Im F in (x1, x2).
void add_real_part(Jet& acc, double coeff, Complex f, Complex df, Complex d2f) {
    acc.f += coeff * f.real();
    acc.f1 += coeff * df.real();
    acc.f2 -= coeff * df.imag();
    acc.f11 += coeff * d2f.real();
    acc.f12 -= coeff * d2f.imag();
    acc.f22 -= coeff * d2f.real();
}

void add_imag_part(Jet& acc, double coeff, Complex f, Complex df, Complex d2f) {
    acc.f += coeff * f.imag();
    acc.f1 += coeff * df.imag();
    acc.f2 += coeff * df.real();
    acc.f11 += coeff * d2f.imag();
    acc.f12 += coeff * d2f.real();
    acc.f22 -= coeff * d2f.imag();
}

double at(const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; }

}  // namespace

Jet distance_jet(const geometry::Domain& domain, const Point& p) {
    using geometry::DomainKind;
    switch (domain.kind) {
        case DomainKind::rectangle: {
            const double l2 = domain.length * domain.length;
            const double b2 = domain.width * domain.width;
            const double a = 1.0 - 4.0 * p.x1 * p.x1 / l2;
            const double da = -8.0 * p.x1 / l2;
            const double d2a = -8.0 / l2;
            const double b = 1.0 - 4.0 * p.x2 * p.x2 / b2;
            const double db = -8.0 * p.x2 / b2;
            const double d2b = -8.0 / b2;
            return {a * b, da * b, a * db, d2a * b, da * db, a * d2b};
        }
        case DomainKind::disk: {
            const double r2 = domain.r_out * domain.r_out;
            return {1.0 - (p.x1 * p.x1 + p.x2 * p.x2) / r2, -2.0 * p.x1 / r2, -2.0 * p.x2 / r2, -2.0 / r2, 0.0,
                    -2.0 / r2};
        }
        case DomainKind::annulus: {
            const double ri = domain.r_in;
            const double ro = domain.r_out;
            const double dmax = 0.25 * (ro - ri) * (ro - ri);
            const double r = std::hypot(p.x1, p.x2);
            if (!(r > 0.0)) throw ConfigError("annulus distance undefined at the origin");
            const double phi = (r - ri) * (ro - r) / dmax;
            const double dphi = (ri + ro - 2.0 * r) / dmax;
            const double d2phi = -2.0 / dmax;
            return radial_jet(p, r, phi, dphi, d2phi);
        }
    }
    return {};
}

std::string to_string(LiftKind kind) {
    switch (kind) {
        case LiftKind::rect_arch: return "rect_arch";
        case LiftKind::disk_fourier: return "disk_fourier";
        case LiftKind::annulus_fourier: return "annulus_fourier";
    }
    return "unknown";
}

std::string LiftSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = hard_bc::to_string(kind);
    j["arch_height"] = arch_height;
    j["length"] = length;
    j["r_in"] = r_in;
    j["r_out"] = r_out;
    j["a0"] = a0;
    j["b0"] = b0;
    j["a"] = a;
    j["b"] = b;
    j["c"] = c;
    j["d"] = d;
    return j.dump(2);
}

LiftSpec LiftSpec::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    LiftSpec s;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rect_arch")
        s.kind = LiftKind::rect_arch;
    else if (kind == "disk_fourier")
        s.kind = LiftKind::disk_fourier;
    else if (kind == "annulus_fourier")
        s.kind = LiftKind::annulus_fourier;
    else
        throw ConfigError("unknown lift kind '" + kind + "'");
    s.arch_height = j.at("arch_height");
    s.length = j.at("length");
    s.r_in = j.at("r_in");
    s.r_out = j.at("r_out");
    s.a0 = j.at("a0");
    s.b0 = j.at("b0");
    s.a = j.at("a").get<std::vector<double>>();
    s.b = j.at("b").get<std::vector<double>>();
    s.c = j.at("c").get<std::vector<double>>();
    s.d = j.at("d").get<std::vector<double>>();
    return s;
}

LiftSpec fit_rect_lift(double arch_height, double length) {
    if (!(length > 0.0)) throw ConfigError("rectangle lift requires l > 0");
    LiftSpec s;
    s.kind = LiftKind::rect_arch;
    s.arch_height = arch_height;
    s.length = length;
    return s;
}

LiftSpec fit_disk_lift(const geometry::FourierSeries& profile, double radius) {
    if (!(radius > 0.0)) throw ConfigError("disk lift requires R > 0");
    if (profile.order() > kMaxHarmonicOrder) throw ConfigError("harmonic order above 32 is not supported");
    profile.validate();
    LiftSpec s;
    s.kind = LiftKind::disk_fourier;
    s.r_out = radius;
    s.a0 = profile.a0;
    for (std::size_t k = 1; k <= profile.order(); ++k) {
        s.a.push_back(profile.cos_coeff(k));
        s.b.push_back(profile.sin_coeff(k));
    }
    return s;
}

LiftSpec fit_annulus_lift(const geometry::FourierSeries& outer, const geometry::FourierSeries& inner, double r_in,
                          double r_out) {
    if (!(r_in > 0.0) || !(r_in < r_out)) throw ConfigError("annulus lift requires 0 < R_in < R_out");
    const std::size_t order = std::max(outer.order(), inner.order());
    if (order > kMaxHarmonicOrder) throw ConfigError("harmonic order above 32 is not supported");
    outer.validate();
    inner.validate();

    LiftSpec s;
    s.kind = LiftKind::annulus_fourier;
    s.r_in = r_in;
    s.r_out = r_out;
    const double log_ratio = std::log(r_out) - std::log(r_in);
    s.b0 = (outer.a0 - inner.a0) / log_ratio;
    s.a0 = outer.a0 - s.b0 * std::log(r_out);
    for (std::size_t k = 1; k <= order; ++k) {
        const double kd = static_cast<double>(k);
        const double po = std::pow(r_out, kd);
        const double pi = std::pow(r_in, kd);
        const double mo = 1.0 / po;
        const double mi = 1.0 / pi;
        const double det = po * mi - mo * pi;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw ConfigError("singular annulus lift system");
        auto solve = [&](double rhs_out, double rhs_in) {
            return std::pair{(rhs_out * mi - mo * rhs_in) / det, (po * rhs_in - pi * rhs_out) / det};
        };
        const auto [ak, bk] = solve(outer.cos_coeff(k), inner.cos_coeff(k));
        const auto [ck, dk] = solve(outer.sin_coeff(k), inner.sin_coeff(k));
        s.a.push_back(ak);
        s.b.push_back(bk);
        s.c.push_back(ck);
        s.d.push_back(dk);
    }
    return s;
}

LiftSpec fit_lift(const geometry::Domain& domain, const geometry::BoundaryProfile& profile) {
    switch (domain.kind) {
        case geometry::DomainKind::rectangle: return fit_rect_lift(profile.arch_height, domain.length);
        case geometry::DomainKind::disk: return fit_disk_lift(profile.outer, domain.r_out);
        case geometry::DomainKind::annulus:
            return fit_annulus_lift(profile.outer, profile.inner, domain.r_in, domain.r_out);
    }
    throw ConfigError("unknown domain kind");
}

Jet lift_jet(const LiftSpec& lift, const Point& p) {
    switch (lift.kind) {
        case LiftKind::rect_arch: {
            const double w = 2.0 * kPi / lift.length;
            const double h = 0.5 * lift.arch_height;
            return {h * (1.0 + std::cos(w * p.x1)), -h * w * std::sin(w * p.x1), 0.0,
                    -h * w * w * std::cos(w * p.x1), 0.0, 0.0};
        }
        case LiftKind::disk_fourier: {
            // (r/R)^k e^{ik theta} = (z/R)^k is holomorphic, so no polar singularity.
            Jet g{lift.a0, 0, 0, 0, 0, 0};
            const Complex z(p.x1 / lift.r_out, p.x2 / lift.r_out);
            const double inv_r = 1.0 / lift.r_out;
            Complex pow_km2(0.0), pow_km1(1.0);  // z^{k-2}, z^{k-1}
            for (std::size_t k = 1; k <= lift.a.size(); ++k) {
                const double kd = static_cast<double>(k);
                const Complex pow_k = pow_km1 * z;
                const Complex df = kd * pow_km1 * inv_r;
                const Complex d2f = kd * (kd - 1.0) * pow_km2 * inv_r * inv_r;
                add_real_part(g, lift.a[k - 1], pow_k, df, d2f);
                add_imag_part(g, at(lift.b, k - 1), pow_k, df, d2f);
                pow_km2 = pow_km1;
                pow_km1 = pow_k;
            }
            return g;
        }
        case LiftKind::annulus_fourier: {
            const double r = std::hypot(p.x1, p.x2);
            if (!(r >= lift.r_in * (1.0 - 1e-12)))
                throw ConfigError("annulus lift evaluated below the inner radius");
            const Complex z(p.x1, p.x2);
            const Complex inv_z = 1.0 / z;
            Jet g{lift.a0, 0, 0, 0, 0, 0};
            // ln r = Re log z
            add_real_part(g, lift.b0, Complex(std::log(r), 0.0), inv_z, -inv_z * inv_z);
            Complex pos_km1(1.0), pos_km2(0.0);  // z^{k-1}, z^{k-2}
            Complex neg_k(1.0);                  // z^{-k}
            for (std::size_t k = 1; k <= lift.a.size(); ++k) {
                const double kd = static_cast<double>(k);
                const Complex pos_k = pos_km1 * z;
                neg_k *= inv_z;
                // z^k
                const Complex dpos = kd * pos_km1;
                const Complex d2pos = kd * (kd - 1.0) * pos_km2;
                // z^{-k}: derivative -k z^{-k-1}, second k(k+1) z^{-k-2}
                const Complex dneg = -kd * neg_k * inv_z;
                const Complex d2neg = kd * (kd + 1.0) * neg_k * inv_z * inv_z;
                add_real_part(g, lift.a[k - 1], pos_k, dpos, d2pos);
                add_real_part(g, at(lift.b, k - 1), neg_k, dneg, d2neg);
                add_imag_part(g, at(lift.c, k - 1), pos_k, dpos, d2pos);
                // r^{-k} sin k theta = -Im z^{-k}
                add_imag_part(g, -at(lift.d, k - 1), neg_k, dneg, d2neg);
                pos_km2 = pos_km1;
                pos_km1 = pos_k;
            }
            return g;
        }
    }
    return {};
}

Jet compose(const Jet& distance, const Jet& network, const Jet& lift) {
    return product(distance, network) + lift;
}

Jet compose_adjoint(const Jet& d, const Jet& df) {
    return {df.f * d.f + df.f1 * d.f1 + df.f2 * d.f2 + df.f11 * d.f11 + df.f12 * d.f12 + df.f22 * d.f22,
            df.f1 * d.f + 2.0 * df.f11 * d.f1 + df.f12 * d.f2,
            df.f2 * d.f + df.f12 * d.f1 + 2.0 * df.f22 * d.f2,
            df.f11 * d.f,
            df.f12 * d.f,
            df.f22 * d.f};
}

HardField::HardField(nn::Mlp network, geometry::Domain domain, LiftSpec lift)
    : network_(std::move(network)), domain_(domain), lift_(std::move(lift)) {
    domain_.validate();
}

Jet HardField::jet(const Point& p) const {
    return compose(distance_jet(domain_, p), network_.forward_jet(p), lift_jet(lift_, p));
}

}  // namespace mea::hard_bc
