#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mea/types.hpp"

namespace mea::geometry {

enum class DomainKind { rectangle, disk, annulus };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

/// Plan domain centered at the origin. Rectangle uses `length` (x1 extent)
/// and `width` (x2 extent); disk uses `r_out`; annulus uses both radii.
struct Domain {
    DomainKind kind = DomainKind::rectangle;
    double length = 0.0;
    double width = 0.0;
    double r_in = 0.0;
    double r_out = 0.0;

    static Domain rectangle(double length, double width);
    static Domain disk(double radius);
    static Domain annulus(double r_in, double r_out);

    /// Throws ConfigError if the dimensions violate the domain invariants.
    void validate() const;

    bool circular() const { return kind != DomainKind::rectangle; }
    double characteristic_size() const;
    double area() const;
    double perimeter() const;
    Point centroid() const { return {0.0, 0.0}; }
    /// Axis-aligned bounding box as (x1_min, x1_max, x2_min, x2_max).
    std::array<double, 4> bounding_box() const;
    /// Half-extents used to map the domain onto [-1, 1]^2.
    Point half_extent() const;
};

/// Truncated Fourier series g(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta).
struct FourierSeries {
    double a0 = 0.0;
    std::vector<double> cos_coeffs;  // a_1 .. a_K
    std::vector<double> sin_coeffs;  // b_1 .. b_K

    std::size_t order() const { return std::max(cos_coeffs.size(), sin_coeffs.size()); }
    double cos_coeff(std::size_t k) const { return k >= 1 && k <= cos_coeffs.size() ? cos_coeffs[k - 1] : 0.0; }
    double sin_coeff(std::size_t k) const { return k >= 1 && k <= sin_coeffs.size() ? sin_coeffs[k - 1] : 0.0; }

    double value(double theta) const;
    /// Second derivative in theta: -sum k^2 (a_k cos k theta + b_k sin k theta).
    double curvature(double theta) const;
    double max_abs() const;
    void validate() const;
};

/// Boundary heights. The rectangle uses the raised-cosine arch of height
/// `arch_height`; the disk uses `outer`; the annulus uses `outer` and `inner`.
struct BoundaryProfile {
    double arch_height = 0.0;
    FourierSeries outer;
    FourierSeries inner;
};

enum class PointTag : std::uint8_t { interior, boundary };

/// Location of a point on the boundary: arc-length parameter for the
/// rectangle (counter-clockwise from the corner (-l/2, -b/2)), polar angle for
/// circular kinds with `inner_circle` selecting the annulus hole.
struct BoundaryParam {
    double value = 0.0;
    bool inner_circle = false;
};

struct PointCloud {
    PointTag tag = PointTag::interior;
    std::vector<Point> points;
    std::vector<BoundaryParam> params;  // boundary clouds only

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    void append(const PointCloud& other);
};

bool contains(const Domain& domain, const Point& p);

/// Point on the boundary for the given boundary parameter.
Point boundary_point(const Domain& domain, const BoundaryParam& param);

PointCloud sample_interior(const Domain& domain, std::size_t n, Rng& rng);
PointCloud sample_boundary_uniform(const Domain& domain, std::size_t n, Rng& rng);

/// Normalized cumulative distribution of the curvature-weighted density
/// p(theta) ~ 1 + |kappa|/max|kappa| on `nodes` equal cells of [0, 2 pi).
/// Entry j is the probability mass of cells [0, j); the last entry is 1.
std::vector<double> curvature_cdf(const FourierSeries& profile, std::size_t nodes);

/// Curvature-enriched boundary samples. Only defined for circular domains;
/// on the annulus the outer profile drives the density and all points lie on
/// the outer circle.
PointCloud sample_boundary_curvature(const Domain& domain, const BoundaryProfile& profile, std::size_t n,
                                     Rng& rng, std::size_t nodes = 8192);

double rectangle_arch(double arch_height, double length, double x1);

double boundary_height(const Domain& domain, const BoundaryProfile& profile, const BoundaryParam& param);

/// Heights for every point of a boundary cloud.
std::vector<double> boundary_heights(const Domain& domain, const BoundaryProfile& profile, const PointCloud& cloud);

void write_csv(std::ostream& out, const PointCloud& cloud);

}  // namespace mea::geometry
