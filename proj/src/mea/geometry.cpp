#include "mea/geometry.hpp"

#include <cmath>
#include <ostream>

namespace mea::geometry {

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::rectangle: return "rectangle";
        case DomainKind::disk: return "disk";
        case DomainKind::annulus: return "annulus";
    }
    return "unknown";
}

DomainKind domain_kind_from_string(const std::string& name) {
    if (name == "rectangle") return DomainKind::rectangle;
    if (name == "disk") return DomainKind::disk;
    if (name == "annulus") return DomainKind::annulus;
    throw ConfigError("unknown domain kind '" + name + "'");
}

Domain Domain::rectangle(double length, double width) {
    Domain d{DomainKind::rectangle, length, width, 0.0, 0.0};
    d.validate();
    return d;
}

Domain Domain::disk(double radius) {
    Domain d{DomainKind::disk, 0.0, 0.0, 0.0, radius};
    d.validate();
    return d;
}

Domain Domain::annulus(double r_in, double r_out) {
    Domain d{DomainKind::annulus, 0.0, 0.0, r_in, r_out};
    d.validate();
    return d;
}

void Domain::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    switch (kind) {
        case DomainKind::rectangle:
            if (!positive(length) || !positive(width)) throw ConfigError("rectangle requires l > 0 and b > 0");
            break;
        case DomainKind::disk:
            if (!positive(r_out)) throw ConfigError("disk requires R > 0");
            break;
        case DomainKind::annulus:
            if (!positive(r_in) || !positive(r_out) || !(r_in < r_out))
                throw ConfigError("annulus requires 0 < R_in < R_out");
            break;
    }
}

double Domain::characteristic_size() const {
    return kind == DomainKind::rectangle ? std::max(length, width) : 2.0 * r_out;
}

double Domain::area() const {
    switch (kind) {
        case DomainKind::rectangle: return length * width;
        case DomainKind::disk: return kPi * r_out * r_out;
        case DomainKind::annulus: return kPi * (r_out * r_out - r_in * r_in);
    }
    return 0.0;
}

double Domain::perimeter() const {
    switch (kind) {
        case DomainKind::rectangle: return 2.0 * (length + width);
        case DomainKind::disk: return 2.0 * kPi * r_out;
        case DomainKind::annulus: return 2.0 * kPi * (r_out + r_in);
    }
    return 0.0;
}

std::array<double, 4> Domain::bounding_box() const {
    const Point h = half_extent();
    return {-h.x1, h.x1, -h.x2, h.x2};
}

Point Domain::half_extent() const {
    if (kind == DomainKind::rectangle) return {0.5 * length, 0.5 * width};
    return {r_out, r_out};
}

double FourierSeries::value(double theta) const {
    double g = a0;
    for (std::size_t k = 1; k <= order(); ++k) {
        const double kt = static_cast<double>(k) * theta;
        g += cos_coeff(k) * std::cos(kt) + sin_coeff(k) * std::sin(kt);
    }
    return g;
}

double FourierSeries::curvature(double theta) const {
    double kappa = 0.0;
    for (std::size_t k = 1; k <= order(); ++k) {
        const double kd = static_cast<double>(k);
        kappa -= kd * kd * (cos_coeff(k) * std::cos(kd * theta) + sin_coeff(k) * std::sin(kd * theta));
    }
    return kappa;
}

double FourierSeries::max_abs() const {
    // Dense sampling; for K <= 32 the grid resolves every harmonic.
    constexpr int samples = 4096;
    double m = std::abs(a0);
    for (int j = 0; j < samples; ++j) m = std::max(m, std::abs(value(2.0 * kPi * j / samples)));
    return m;
}

void FourierSeries::validate() const {
    if (!std::isfinite(a0)) throw ConfigError("Fourier coefficient a0 is not finite");
    for (double c : cos_coeffs)
        if (!std::isfinite(c)) throw ConfigError("Fourier cosine coefficient is not finite");
    for (double c : sin_coeffs)
        if (!std::isfinite(c)) throw ConfigError("Fourier sine coefficient is not finite");
}

void PointCloud::append(const PointCloud& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    params.insert(params.end(), other.params.begin(), other.params.end());
}

bool contains(const Domain& domain, const Point& p) {
    switch (domain.kind) {
        case DomainKind::rectangle:
            return std::abs(p.x1) < 0.5 * domain.length && std::abs(p.x2) < 0.5 * domain.width;
        case DomainKind::disk: return p.x1 * p.x1 + p.x2 * p.x2 < domain.r_out * domain.r_out;
        case DomainKind::annulus: {
            const double r2 = p.x1 * p.x1 + p.x2 * p.x2;
            return r2 > domain.r_in * domain.r_in && r2 < domain.r_out * domain.r_out;
        }
    }
    return false;
}

Point boundary_point(const Domain& domain, const BoundaryParam& param) {
    if (domain.circular()) {
        const double r = param.inner_circle ? domain.r_in : domain.r_out;
        return {r * std::cos(param.value), r * std::sin(param.value)};
    }
    const double l = domain.length;
    const double b = domain.width;
    double s = std::fmod(param.value, domain.perimeter());
    if (s < 0.0) s += domain.perimeter();
    if (s < l) return {-0.5 * l + s, -0.5 * b};
    s -= l;
    if (s < b) return {0.5 * l, -0.5 * b + s};
    s -= b;
    if (s < l) return {0.5 * l - s, 0.5 * b};
    s -= l;
    return {-0.5 * l, 0.5 * b - s};
}

PointCloud sample_interior(const Domain& domain, std::size_t n, Rng& rng) {
    if (n == 0) throw ConfigError("sample_interior requires n > 0");
    domain.validate();
    PointCloud cloud;
    cloud.tag = PointTag::interior;
    cloud.points.reserve(n);
    constexpr std::size_t max_rejections = 1000000;
    std::size_t rejected = 0;
    while (cloud.points.size() < n) {
        Point p;
        if (domain.kind == DomainKind::disk) {
            const double r = domain.r_out * std::sqrt(uniform01(rng));
            const double theta = 2.0 * kPi * uniform01(rng);
            p = {r * std::cos(theta), r * std::sin(theta)};
        } else {
            const auto box = domain.bounding_box();
            p = {uniform(rng, box[0], box[1]), uniform(rng, box[2], box[3])};
        }
        if (contains(domain, p)) {
            cloud.points.push_back(p);
            rejected = 0;
        } else if (++rejected > max_rejections) {
            throw ConfigError("interior sampling acceptance ratio is zero (degenerate domain)");
        }
    }
    return cloud;
}

PointCloud sample_boundary_uniform(const Domain& domain, std::size_t n, Rng& rng) {
    if (n == 0) throw ConfigError("sample_boundary_uniform requires n > 0");
    domain.validate();
    PointCloud cloud;
    cloud.tag = PointTag::boundary;
    cloud.points.reserve(n);
    cloud.params.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        BoundaryParam bp;
        switch (domain.kind) {
            case DomainKind::rectangle: bp.value = domain.perimeter() * uniform01(rng); break;
            case DomainKind::disk: bp.value = 2.0 * kPi * uniform01(rng); break;
            case DomainKind::annulus: {
                // Arc length splits proportionally to circumference, i.e. radius.
                bp.inner_circle = uniform01(rng) * (domain.r_in + domain.r_out) < domain.r_in;
                bp.value = 2.0 * kPi * uniform01(rng);
                break;
            }
        }
        cloud.params.push_back(bp);
        cloud.points.push_back(boundary_point(domain, bp));
    }
    return cloud;
}

namespace {

std::vector<double> curvature_cell_density(const FourierSeries& profile, std::size_t nodes) {
    std::vector<double> kappa(nodes);
    double kmax = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
        const double theta = 2.0 * kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(nodes);
        kappa[j] = std::abs(profile.curvature(theta));
        kmax = std::max(kmax, kappa[j]);
    }
    std::vector<double> density(nodes, 1.0);
    if (kmax > 0.0)
        for (std::size_t j = 0; j < nodes; ++j) density[j] = 1.0 + kappa[j] / kmax;
    return density;
}

}  // namespace

std::vector<double> curvature_cdf(const FourierSeries& profile, std::size_t nodes) {
    if (nodes == 0) throw ConfigError("curvature_cdf requires at least one node");
    const auto density = curvature_cell_density(profile, nodes);
    std::vector<double> cdf(nodes + 1, 0.0);
    for (std::size_t j = 0; j < nodes; ++j) cdf[j + 1] = cdf[j] + density[j];
    const double total = cdf.back();
    for (double& c : cdf) c /= total;
    cdf.back() = 1.0;
    return cdf;
}

PointCloud sample_boundary_curvature(const Domain& domain, const BoundaryProfile& profile, std::size_t n,
                                     Rng& rng, std::size_t nodes) {
    if (!domain.circular()) throw ConfigError("curvature-weighted sampling needs a disk or annulus");
    if (n == 0) throw ConfigError("sample_boundary_curvature requires n > 0");
    if (nodes < 4096) throw ConfigError("curvature-weighted sampling needs at least 4096 grid nodes");
    const auto cdf = curvature_cdf(profile.outer, nodes);
    const double cell = 2.0 * kPi / static_cast<double>(nodes);

    PointCloud cloud;
    cloud.tag = PointTag::boundary;
    cloud.points.reserve(n);
    cloud.params.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = uniform01(rng);
        // cdf is piecewise linear (piecewise-constant density), invert exactly
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t j = static_cast<std::size_t>(std::distance(cdf.begin(), it)) - 1;
        j = std::min(j, nodes - 1);
        const double mass = cdf[j + 1] - cdf[j];
        const double frac = mass > 0.0 ? (u - cdf[j]) / mass : 0.0;
        BoundaryParam bp{cell * (static_cast<double>(j) + frac), false};
        cloud.params.push_back(bp);
        cloud.points.push_back(boundary_point(domain, bp));
    }
    return cloud;
}

double rectangle_arch(double arch_height, double length, double x1) {
    return 0.5 * arch_height * (1.0 + std::cos(kPi * x1 / (0.5 * length)));
}

double boundary_height(const Domain& domain, const BoundaryProfile& profile, const BoundaryParam& param) {
    switch (domain.kind) {
        case DomainKind::rectangle:
            return rectangle_arch(profile.arch_height, domain.length, boundary_point(domain, param).x1);
        case DomainKind::disk: return profile.outer.value(param.value);
        case DomainKind::annulus:
            return param.inner_circle ? profile.inner.value(param.value) : profile.outer.value(param.value);
    }
    return 0.0;
}

std::vector<double> boundary_heights(const Domain& domain, const BoundaryProfile& profile, const PointCloud& cloud) {
    if (cloud.params.size() != cloud.points.size()) throw ConfigError("boundary cloud without boundary parameters");
    std::vector<double> h(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) h[i] = boundary_height(domain, profile, cloud.params[i]);
    return h;
}

void write_csv(std::ostream& out, const PointCloud& cloud) {
    out << "x1,x2,tag,param\n";
    out.precision(17);
    const bool boundary = cloud.tag == PointTag::boundary;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out << cloud.points[i].x1 << ',' << cloud.points[i].x2 << ',' << (boundary ? "boundary" : "interior") << ',';
        if (boundary && i < cloud.params.size()) out << cloud.params[i].value;
        out << '\n';
    }
}

}  // namespace mea::geometry
