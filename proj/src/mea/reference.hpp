#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/mea_core.hpp"
#include "mea/residual.hpp"

namespace mea::reference {

/// Nodal solution on a uniform grid over the rectangle [-l/2, l/2] x [-b/2, b/2].
struct GridSolution {
    int nx = 0;
    int ny = 0;
    double hx = 0.0;
    double hy = 0.0;
    double x1_min = 0.0;
    double x2_min = 0.0;
    std::vector<double> values;  // index i + nx * j
    double algebraic_residual = 0.0;  // ||A f - rhs|| / ||rhs||

    Point node(int i, int j) const { return {x1_min + i * hx, x2_min + j * hy}; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i + nx * j)]; }
    /// Piecewise bicubic (4x4 Lagrange) interpolation.
    double interpolate(const Point& p) const;
    /// Nodes strictly inside the rectangle.
    geometry::PointCloud interior_nodes() const;

    void write_csv(std::ostream& out) const;
};

using ScalarFunction = std::function<double(const Point&)>;

/// Second-order central differences for the equilibrium PDE with Dirichlet
/// data `boundary` on every edge node, solved with sparse LU. Throws Error if
/// the factorization fails or the algebraic residual exceeds 1e-10.
GridSolution fd_solve_rectangle(const geometry::Domain& domain, const PdeContext& context,
                                const ScalarFunction& boundary, int nx, int ny);

/// FD solve with the raised-cosine arch of `profile` as boundary data.
GridSolution fd_solve_rectangle(const geometry::Domain& domain, const PdeContext& context,
                                const geometry::BoundaryProfile& profile, int nx, int ny);

struct RefinementEstimate {
    GridSolution fine;
    GridSolution coarse;
    /// Richardson estimate of the fine-grid error, relative L2 over common nodes.
    double relative_error = 0.0;
};

/// Solves on (nx, ny) and on the grid with half the resolution; nx-1 and ny-1
/// must be even.
RefinementEstimate fd_solve_with_estimate(const geometry::Domain& domain, const PdeContext& context,
                                          const geometry::BoundaryProfile& profile, int nx, int ny);

/// PDE context whose vertical load is replaced by the forcing that makes
/// `solution` exact.
class ManufacturedContext : public PdeContext {
  public:
    ManufacturedContext(AiryField airy, LoadModel loads, JetFunction solution);
    PdeCoefficients at(const Point& p) const override;

  private:
    JetFunction solution_;
};

/// Closed-form solutions with closed-form jets.
enum class ManufacturedId {
    constant,
    quadratic,
    rect_arch_bump,
    rect_trig,
    disk_quartic,
    annulus_poly,
    gaussian_bump,
};

std::string to_string(ManufacturedId id);
ManufacturedId manufactured_from_string(const std::string& name);

struct ManufacturedCase {
    ManufacturedId id = ManufacturedId::constant;
    geometry::Domain domain;
    JetFunction solution;
    std::shared_ptr<ManufacturedContext> context;
    geometry::BoundaryProfile profile;  // boundary data for lifts and BC losses
    std::size_t fourier_order = 16;
    double projection_error = 0.0;  // max boundary mismatch of the Fourier fit

    std::string to_json() const;
};

/// Builds f*, the induced forcing q*, and the boundary data. On circular
/// domains the trace is projected onto K = 16 harmonics and the projection
/// error is reported. `scale` sets the amplitude of the non-trivial part and
/// `arch_height` the rectangle boundary arch.
ManufacturedCase make_manufactured(const geometry::Domain& domain, const AiryField& airy, const LoadModel& loads,
                                   ManufacturedId id, double arch_height = 2.0);

/// Least-squares Fourier fit of boundary values on a circle of radius r.
geometry::FourierSeries project_fourier(const ScalarFunction& f, double radius, std::size_t order,
                                        std::size_t samples = 1024);

struct FieldMetrics {
    double rmse = 0.0;
    double rel_l2 = 0.0;  // fraction, not percent
    double max_abs = 0.0;
    std::size_t count = 0;
};

/// RMSE, RMSE / RMS(reference) and max |candidate - reference| over points.
/// Throws Error when the reference RMS is zero.
FieldMetrics compare_fields(const ScalarFunction& candidate, const ScalarFunction& reference,
                            std::span<const Point> points);

/// Same metrics for values already sampled on a common point set.
FieldMetrics compare_values(std::span<const double> candidate, std::span<const double> reference);

}  // namespace mea::reference
