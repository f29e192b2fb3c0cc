#include "mea/postproc.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace mea::post {

PrincipalState principal_stresses(const ProjectedStresses& s) {
    PrincipalState out;
    const double mean = 0.5 * (s.s11 + s.s22);
    const double half_diff = 0.5 * (s.s11 - s.s22);
    const double radius = std::hypot(half_diff, s.s12);
    out.sigma1 = mean + radius;
    out.sigma2 = mean - radius;
    const double scale = std::max({std::abs(s.s11), std::abs(s.s22), std::abs(s.s12)});
    if (radius <= 1e-15 * scale || radius == 0.0) {
        out.degenerate = true;
        out.sigma1 = out.sigma2 = mean;
        return out;
    }
    const double angle = 0.5 * std::atan2(2.0 * s.s12, s.s11 - s.s22);
    out.e1 = {std::cos(angle), std::sin(angle)};
    out.e2 = {-std::sin(angle), std::cos(angle)};
    return out;
}

SurfaceFormat surface_format_from_string(const std::string& name) {
    if (name == "csv") return SurfaceFormat::csv;
    if (name == "obj") return SurfaceFormat::obj;
    throw ConfigError("unsupported surface format '" + name + "' (expected csv or obj)");
}

namespace {

bool in_closure(const geometry::Domain& d, const Point& p) {
    switch (d.kind) {
        case geometry::DomainKind::rectangle:
            return std::abs(p.x1) <= 0.5 * d.length && std::abs(p.x2) <= 0.5 * d.width;
        case geometry::DomainKind::disk:
            return std::hypot(p.x1, p.x2) <= d.r_out;
        case geometry::DomainKind::annulus: {
            const double r = std::hypot(p.x1, p.x2);
            return r >= d.r_in && r <= d.r_out;
        }
    }
    return false;
}

struct Grid {
    int n = 0;
    std::vector<Point> nodes;
    std::vector<long> index;  // -1 for masked nodes
};

Grid make_grid(const geometry::Domain& domain, int resolution) {
    if (resolution < 2) throw ConfigError("export resolution must be at least 2 per axis");
    domain.validate();
    const auto box = domain.bounding_box();
    Grid g;
    g.n = resolution;
    g.index.assign(static_cast<std::size_t>(resolution) * resolution, -1);
    for (int j = 0; j < resolution; ++j)
        for (int i = 0; i < resolution; ++i) {
            // exact end points so boundary nodes land on the boundary
            const double tx = static_cast<double>(i) / (resolution - 1);
            const double ty = static_cast<double>(j) / (resolution - 1);
            Point p{i == resolution - 1 ? box[1] : box[0] + tx * (box[1] - box[0]),
                    j == resolution - 1 ? box[3] : box[2] + ty * (box[3] - box[2])};
            if (!in_closure(domain, p)) continue;
            g.index[static_cast<std::size_t>(i + resolution * j)] = static_cast<long>(g.nodes.size());
            g.nodes.push_back(p);
        }
    return g;
}

}  // namespace

std::vector<Point> masked_grid(const geometry::Domain& domain, int resolution) {
    return make_grid(domain, resolution).nodes;
}

void export_surface(std::ostream& out, const reference::ScalarFunction& field, const geometry::Domain& domain,
                    int resolution, SurfaceFormat format) {
    const Grid g = make_grid(domain, resolution);
    const auto old = out.precision(17);
    if (format == SurfaceFormat::csv) {
        out << "x1,x2,f\n";
        for (const auto& p : g.nodes) out << p.x1 << ',' << p.x2 << ',' << field(p) << '\n';
        out.precision(old);
        return;
    }
    out << "# membrane surface, " << g.nodes.size() << " vertices\n";
    for (const auto& p : g.nodes) out << "v " << p.x1 << ' ' << p.x2 << ' ' << field(p) << '\n';
    auto id = [&](int i, int j) { return g.index[static_cast<std::size_t>(i + g.n * j)]; };
    for (int j = 0; j + 1 < g.n; ++j)
        for (int i = 0; i + 1 < g.n; ++i) {
            const long a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if (a >= 0 && b >= 0 && c >= 0) out << "f " << a + 1 << ' ' << b + 1 << ' ' << c + 1 << '\n';
            if (a >= 0 && c >= 0 && d >= 0) out << "f " << a + 1 << ' ' << c + 1 << ' ' << d + 1 << '\n';
        }
    out.precision(old);
}

void export_principal(std::ostream& out, const PdeContext& context, const geometry::Domain& domain, int resolution) {
    const Grid g = make_grid(domain, resolution);
    const auto old = out.precision(17);
    out << "x1,x2,S11,S22,S12,sigma1,sigma2,e1x,e1y,e2x,e2y\n";
    for (const auto& p : g.nodes) {
        const auto s = context.at(p).s;
        const auto ps = principal_stresses(s);
        // adding +0.0 turns -0 into 0
        out << p.x1 << ',' << p.x2 << ',' << s.s11 + 0.0 << ',' << s.s22 + 0.0 << ',' << s.s12 + 0.0 << ','
            << ps.sigma1 + 0.0 << ',' << ps.sigma2 + 0.0 << ',' << ps.e1.x1 + 0.0 << ',' << ps.e1.x2 + 0.0 << ','
            << ps.e2.x1 + 0.0 << ',' << ps.e2.x2 + 0.0 << '\n';
    }
    out.precision(old);
}

std::string report_metrics(const RunReport& r) {
    using nlohmann::json;
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["formulation"] = r.formulation;
    if (r.comparison) {
        j["rmse"] = r.comparison->rmse;
        j["rel_l2_percent"] = 100.0 * r.comparison->rel_l2;
        j["max_abs"] = r.comparison->max_abs;
        j["comparison_points"] = r.comparison->count;
    } else {
        j["rmse"] = nullptr;
        j["rel_l2_percent"] = nullptr;
        j["max_abs"] = nullptr;
        j["comparison_points"] = nullptr;
    }
    j["final_train_pde_rmse"] = num(r.final_train_rmse);
    j["final_val_pde_rmse"] = num(r.final_val_rmse);
    j["selected_epoch"] = r.selected_epoch;
    j["diverged"] = r.diverged;
    j["admissibility"] = json::parse(r.admissibility.to_json());
    j["seeds"] = {{"init", r.init_seed}, {"sample", r.sample_seed}, {"validation", r.validation_seed}};
    j["config_hash"] = r.config_hash;
    j["wallclock_s"] = num(r.wallclock_s);
    return j.dump(2);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mea::post
