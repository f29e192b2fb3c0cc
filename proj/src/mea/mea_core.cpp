#include "mea/mea_core.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace mea {

std::string to_string(StressState state) {
    return state == StressState::compression ? "compression" : "tension";
}

StressState stress_state_from_string(const std::string& name) {
    if (name == "compression") return StressState::compression;
    if (name == "tension") return StressState::tension;
    throw ConfigError("unknown stress state '" + name + "'");
}

void AiryField::validate() const {
    for (double v : {l1, l2, l3, centroid.x1, centroid.x2, c0, c1, c2})
        if (!std::isfinite(v)) throw ConfigError("Airy parameters must be finite");
}

StressComponents stress_components(const AiryField& airy) {
    const double sign = airy.state == StressState::compression ? -1.0 : 1.0;
    return {sign * airy.l1 * airy.l1, sign * (airy.l2 * airy.l2 + airy.l3 * airy.l3), sign * airy.l1 * airy.l2};
}

double airy_eval(const AiryField& airy, const Point& p) {
    const auto n = stress_components(airy);
    const double dx1 = p.x1 - airy.centroid.x1;
    const double dx2 = p.x2 - airy.centroid.x2;
    return 0.5 * n.n22 * dx1 * dx1 + 0.5 * n.n11 * dx2 * dx2 - n.n12 * dx1 * dx2 + airy.c0 + airy.c1 * p.x1 +
           airy.c2 * p.x2;
}

double LoadModel::lambda1() const { return alpha_h * std::cos(theta_h); }
double LoadModel::lambda2() const { return alpha_h * std::sin(theta_h); }

void LoadModel::validate() const {
    if (!(density >= 0.0)) throw ConfigError("load density must be >= 0");
    if (!(thickness > 0.0)) throw ConfigError("membrane thickness must be > 0");
    if (!(alpha_h >= 0.0)) throw ConfigError("horizontal coefficient alpha_h must be >= 0");
    if (!std::isfinite(theta_h)) throw ConfigError("horizontal direction must be finite");
    for (const auto& pl : point_loads) {
        if (!(pl.spread > 0.0)) throw ConfigError("point-load spread must be > 0");
        if (!std::isfinite(pl.magnitude)) throw ConfigError("point-load magnitude must be finite");
    }
}

Point resolve_reference(const geometry::Domain& domain, const LoadModel& loads, ReferenceMode mode,
                        const Point& explicit_point) {
    switch (mode) {
        case ReferenceMode::centroid: return domain.centroid();
        case ReferenceMode::explicit_point: return explicit_point;
        case ReferenceMode::upstream: {
            const auto box = domain.bounding_box();
            return {loads.lambda1() >= 0.0 ? box[0] : box[1], loads.lambda2() >= 0.0 ? box[2] : box[3]};
        }
    }
    return domain.centroid();
}

namespace {

double gaussian_density(const PointLoad& pl, const Point& p) {
    const double s2 = pl.spread * pl.spread;
    const double d1 = p.x1 - pl.center.x1;
    const double d2 = p.x2 - pl.center.x2;
    return pl.magnitude / (2.0 * kPi * s2) * std::exp(-(d1 * d1 + d2 * d2) / (2.0 * s2));
}

// P(a < Z < b) for a standard normal Z, evaluated on the tail that keeps
// precision.
double normal_mass(double a, double b) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    if (a >= 0.0) return 0.5 * (std::erfc(a * inv_sqrt2) - std::erfc(b * inv_sqrt2));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * inv_sqrt2) - std::erfc(-a * inv_sqrt2));
    return 0.5 * (std::erf(b * inv_sqrt2) - std::erf(a * inv_sqrt2));
}

// int_{from}^{to} of the Gaussian load along one axis, at fixed transverse offset.
double gaussian_line_integral(const PointLoad& pl, double from, double to, double axis_center, double transverse) {
    const double s = pl.spread;
    const double marginal = pl.magnitude / (std::sqrt(2.0 * kPi) * s) * std::exp(-transverse * transverse / (2.0 * s * s));
    return marginal * normal_mass((from - axis_center) / s, (to - axis_center) / s);
}

}  // namespace

double vertical_load(const LoadModel& loads, const Point& p) {
    double q = loads.density * loads.thickness;
    for (const auto& pl : loads.point_loads) q += gaussian_density(pl, p);
    return q;
}

HorizontalLoads horizontal_loads(const LoadModel& loads, const Point& p) {
    if (loads.alpha_h == 0.0) return {0.0, 0.0};
    const double q = vertical_load(loads, p);
    return {loads.lambda1() * q, loads.lambda2() * q};
}

CumulativeLoads cumulative_loads(const LoadModel& loads, const Point& p) {
    const double lam1 = loads.lambda1();
    const double lam2 = loads.lambda2();
    const double sw = loads.density * loads.thickness;
    CumulativeLoads h;
    if (lam1 != 0.0) {
        double acc = sw * (p.x1 - loads.reference.x1);
        for (const auto& pl : loads.point_loads) {
            const double sgn = p.x1 >= loads.reference.x1 ? 1.0 : -1.0;
            const double lo = std::min(p.x1, loads.reference.x1);
            const double hi = std::max(p.x1, loads.reference.x1);
            acc += sgn * gaussian_line_integral(pl, lo, hi, pl.center.x1, p.x2 - pl.center.x2);
        }
        h.h1 = lam1 * acc;
    }
    if (lam2 != 0.0) {
        double acc = sw * (p.x2 - loads.reference.x2);
        for (const auto& pl : loads.point_loads) {
            const double sgn = p.x2 >= loads.reference.x2 ? 1.0 : -1.0;
            const double lo = std::min(p.x2, loads.reference.x2);
            const double hi = std::max(p.x2, loads.reference.x2);
            acc += sgn * gaussian_line_integral(pl, lo, hi, pl.center.x2, p.x1 - pl.center.x1);
        }
        h.h2 = lam2 * acc;
    }
    return h;
}

ProjectedStresses projected_stresses(const StressComponents& n, const CumulativeLoads& h) {
    return {n.n11 - h.h2, n.n22 - h.h1, n.n12};
}

ProjectedStresses projected_stresses(const AiryField& airy, const LoadModel& loads, const Point& p) {
    return projected_stresses(stress_components(airy), cumulative_loads(loads, p));
}

bool tensor_admissible(const ProjectedStresses& s, StressState state) {
    const double det = s.s11 * s.s22 - s.s12 * s.s12;
    if (state == StressState::tension) return s.s11 >= 0.0 && s.s22 >= 0.0 && det >= 0.0;
    return s.s11 <= 0.0 && s.s22 <= 0.0 && det >= 0.0;
}

double admissibility_margin(const ProjectedStresses& s, StressState state) {
    const double mean = 0.5 * (s.s11 + s.s22);
    const double radius = std::hypot(0.5 * (s.s11 - s.s22), s.s12);
    return state == StressState::tension ? mean - radius : -(mean + radius);
}

std::string AdmissibilityReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass;
    j["state"] = state;
    j["worst_margin"] = worst_margin;
    j["worst_point"] = {worst_point.x1, worst_point.x2};
    j["sample_count"] = sample_count;
    j["seed"] = seed;
    return j.dump(2);
}

AdmissibilityReport check_admissibility(const AiryField& airy, const LoadModel& loads,
                                        const geometry::Domain& domain, std::size_t n_samples,
                                        std::uint64_t seed) {
    if (n_samples == 0) throw ConfigError("check_admissibility requires n_samples > 0");
    Rng rng(seed);
    auto cloud = geometry::sample_interior(domain, n_samples, rng);
    cloud.append(geometry::sample_boundary_uniform(domain, n_samples, rng));

    const auto n = stress_components(airy);
    AdmissibilityReport report;
    report.seed = seed;
    report.state = to_string(airy.state);
    report.sample_count = cloud.size();
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud.points) {
        const auto s = projected_stresses(n, cumulative_loads(loads, p));
        if (!tensor_admissible(s, airy.state)) report.pass = false;
        const double margin = admissibility_margin(s, airy.state);
        if (margin < report.worst_margin) {
            report.worst_margin = margin;
            report.worst_point = p;
        }
    }
    return report;
}

PdeContext::PdeContext(AiryField airy, LoadModel loads)
    : airy_(std::move(airy)), loads_(std::move(loads)), n_(stress_components(airy_)) {}

PdeCoefficients PdeContext::at(const Point& p) const {
    PdeCoefficients c;
    c.q = vertical_load(loads_, p);
    const double lam1 = loads_.lambda1();
    const double lam2 = loads_.lambda2();
    c.p = {lam1 * c.q, lam2 * c.q};
    c.s = projected_stresses(n_, cumulative_loads(loads_, p));
    return c;
}

}  // namespace mea
