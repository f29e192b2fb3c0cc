#include "mea/residual.hpp"

#include <cmath>
#include <ostream>

namespace mea {

double pde_residual(const Jet& jet, const ProjectedStresses& s, const HorizontalLoads& p, double q) {
    return s.s11 * jet.f22 + s.s22 * jet.f11 + 2.0 * s.s12 * jet.f12 - p.p1 * jet.f1 - p.p2 * jet.f2 - q;
}

std::vector<ResidualSample> residual_samples(const JetFunction& field, const PdeContext& context,
                                             const geometry::PointCloud& points) {
    std::vector<ResidualSample> out;
    out.reserve(points.size());
    for (const auto& p : points.points) {
        ResidualSample s;
        s.point = p;
        s.coefficients = context.at(p);
        s.residual = pde_residual(field(p), s.coefficients);
        out.push_back(s);
    }
    return out;
}

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t block = 64;
    if (values.size() <= block) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double residual_rmse(const JetFunction& field, const PdeContext& context, const geometry::PointCloud& points) {
    if (points.empty()) throw ConfigError("residual_rmse needs a non-empty point cloud");
    std::vector<double> sq;
    sq.reserve(points.size());
    for (const auto& p : points.points) {
        const double r = pde_residual(field(p), context.at(p));
        sq.push_back(r * r);
    }
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

void write_residual_csv(std::ostream& out, const std::vector<ResidualSample>& samples) {
    out << "x1,x2,r\n";
    out.precision(17);
    for (const auto& s : samples) out << s.point.x1 << ',' << s.point.x2 << ',' << s.residual << '\n';
}

}  // namespace mea
