#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/mea_core.hpp"
#include "mea/types.hpp"

namespace mea {

/// r = S11 f,22 + S22 f,11 + 2 S12 f,12 - p1 f,1 - p2 f,2 - q
double pde_residual(const Jet& jet, const ProjectedStresses& s, const HorizontalLoads& p, double q);

inline double pde_residual(const Jet& jet, const PdeCoefficients& c) { return pde_residual(jet, c.s, c.p, c.q); }

struct ResidualSample {
    Point point;
    double residual = 0.0;
    PdeCoefficients coefficients;
};

/// Anything that can report the jet of a surface at a point.
using JetFunction = std::function<Jet(const Point&)>;

std::vector<ResidualSample> residual_samples(const JetFunction& field, const PdeContext& context,
                                             const geometry::PointCloud& points);

/// Sum with pairwise (cascade) reduction; fixed order for a given length.
double pairwise_sum(std::span<const double> values);

/// Root-mean-square PDE residual over an interior cloud.
double residual_rmse(const JetFunction& field, const PdeContext& context, const geometry::PointCloud& points);

/// CSV with columns x1,x2,r.
void write_residual_csv(std::ostream& out, const std::vector<ResidualSample>& samples);

}  // namespace mea
