#include "mea/reference.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "json.hpp"

namespace mea::reference {

namespace {

void lagrange4(double t, double w[4]) {
    // nodes at -1, 0, 1, 2
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
}

}  // namespace

double GridSolution::interpolate(const Point& p) const {
    const double u = (p.x1 - x1_min) / hx;
    const double v = (p.x2 - x2_min) / hy;
    const int i = std::clamp(static_cast<int>(std::floor(u)), 1, nx - 3);
    const int j = std::clamp(static_cast<int>(std::floor(v)), 1, ny - 3);
    double wu[4];
    double wv[4];
    lagrange4(u - i, wu);
    lagrange4(v - j, wv);
    double acc = 0.0;
    for (int b = 0; b < 4; ++b)
        for (int a = 0; a < 4; ++a) acc += wu[a] * wv[b] * at(i - 1 + a, j - 1 + b);
    return acc;
}

geometry::PointCloud GridSolution::interior_nodes() const {
    geometry::PointCloud cloud;
    for (int j = 1; j + 1 < ny; ++j)
        for (int i = 1; i + 1 < nx; ++i) cloud.points.push_back(node(i, j));
    return cloud;
}

void GridSolution::write_csv(std::ostream& out) const {
    out << "x1,x2,f\n";
    out.precision(17);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Point p = node(i, j);
            out << p.x1 << ',' << p.x2 << ',' << at(i, j) << '\n';
        }
}

GridSolution fd_solve_rectangle(const geometry::Domain& domain, const PdeContext& context,
                                const ScalarFunction& boundary, int nx, int ny) {
    if (domain.kind != geometry::DomainKind::rectangle) throw ConfigError("FD reference needs a rectangle");
    if (nx < 5 || ny < 5) throw ConfigError("FD grid needs at least 5 nodes per axis");

    GridSolution g;
    g.nx = nx;
    g.ny = ny;
    g.x1_min = -0.5 * domain.length;
    g.x2_min = -0.5 * domain.width;
    g.hx = domain.length / (nx - 1);
    g.hy = domain.width / (ny - 1);
    const double hx = g.hx;
    const double hy = g.hy;

    const Eigen::Index n = static_cast<Eigen::Index>(nx) * ny;
    auto idx = [nx](int i, int j) { return static_cast<Eigen::Index>(i + nx * j); };
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n) * 9);
    Eigen::VectorXd rhs(n);

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Eigen::Index row = idx(i, j);
            // Corners and edges sit exactly on the boundary.
            Point p = g.node(i, j);
            if (i == nx - 1) p.x1 = 0.5 * domain.length;
            if (j == ny - 1) p.x2 = 0.5 * domain.width;
            if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) {
                triplets.emplace_back(row, row, 1.0);
                rhs(row) = boundary(p);
                continue;
            }
            const auto c = context.at(p);
            const double cxx = c.s.s22 / (hx * hx);
            const double cyy = c.s.s11 / (hy * hy);
            const double cxy = 2.0 * c.s.s12 / (4.0 * hx * hy);
            const double cx = -c.p.p1 / (2.0 * hx);
            const double cy = -c.p.p2 / (2.0 * hy);
            triplets.emplace_back(row, idx(i, j), -2.0 * cxx - 2.0 * cyy);
            triplets.emplace_back(row, idx(i + 1, j), cxx + cx);
            triplets.emplace_back(row, idx(i - 1, j), cxx - cx);
            triplets.emplace_back(row, idx(i, j + 1), cyy + cy);
            triplets.emplace_back(row, idx(i, j - 1), cyy - cy);
            if (cxy != 0.0) {
                triplets.emplace_back(row, idx(i + 1, j + 1), cxy);
                triplets.emplace_back(row, idx(i - 1, j - 1), cxy);
                triplets.emplace_back(row, idx(i + 1, j - 1), -cxy);
                triplets.emplace_back(row, idx(i - 1, j + 1), -cxy);
            }
            rhs(row) = c.q;
        }
    }

    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> solver;
    solver.analyzePattern(a);
    solver.factorize(a);
    if (solver.info() != Eigen::Success)
        throw Error("FD factorization failed (coefficients may have lost ellipticity): " + solver.lastErrorMessage());
    Eigen::VectorXd f = solver.solve(rhs);
    if (solver.info() != Eigen::Success) throw Error("FD solve failed");
    // One step of iterative refinement keeps the residual at roundoff level.
    Eigen::VectorXd res = rhs - a * f;
    f += solver.solve(res);
    res = rhs - a * f;
    const double denom = std::max(rhs.norm(), 1e-300);
    g.algebraic_residual = res.norm() / denom;
    if (!(g.algebraic_residual <= 1e-10))
        throw Error("FD linear solve did not reach relative residual 1e-10 (got " +
                    std::to_string(g.algebraic_residual) + ")");
    g.values.assign(f.data(), f.data() + n);
    return g;
}

GridSolution fd_solve_rectangle(const geometry::Domain& domain, const PdeContext& context,
                                const geometry::BoundaryProfile& profile, int nx, int ny) {
    const double h = profile.arch_height;
    const double l = domain.length;
    return fd_solve_rectangle(
        domain, context, [h, l](const Point& p) { return geometry::rectangle_arch(h, l, p.x1); }, nx, ny);
}

RefinementEstimate fd_solve_with_estimate(const geometry::Domain& domain, const PdeContext& context,
                                          const geometry::BoundaryProfile& profile, int nx, int ny) {
    if ((nx - 1) % 2 != 0 || (ny - 1) % 2 != 0) throw ConfigError("refinement estimate needs even cell counts");
    RefinementEstimate est;
    est.fine = fd_solve_rectangle(domain, context, profile, nx, ny);
    est.coarse = fd_solve_rectangle(domain, context, profile, (nx - 1) / 2 + 1, (ny - 1) / 2 + 1);
    double diff2 = 0.0;
    double ref2 = 0.0;
    for (int j = 0; j < est.coarse.ny; ++j)
        for (int i = 0; i < est.coarse.nx; ++i) {
            const double fine = est.fine.at(2 * i, 2 * j);
            const double d = (fine - est.coarse.at(i, j)) / 3.0;
            diff2 += d * d;
            ref2 += fine * fine;
        }
    est.relative_error = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : 0.0;
    return est;
}

ManufacturedContext::ManufacturedContext(AiryField airy, LoadModel loads, JetFunction solution)
    : PdeContext(std::move(airy), std::move(loads)), solution_(std::move(solution)) {}

PdeCoefficients ManufacturedContext::at(const Point& p) const {
    auto c = PdeContext::at(p);
    c.q = 0.0;
    c.q = pde_residual(solution_(p), c);
    return c;
}

std::string to_string(ManufacturedId id) {
    switch (id) {
        case ManufacturedId::constant: return "constant";
        case ManufacturedId::quadratic: return "quadratic";
        case ManufacturedId::rect_arch_bump: return "rect_arch_bump";
        case ManufacturedId::rect_trig: return "rect_trig";
        case ManufacturedId::disk_quartic: return "disk_quartic";
        case ManufacturedId::annulus_poly: return "annulus_poly";
        case ManufacturedId::gaussian_bump: return "gaussian_bump";
    }
    return "unknown";
}

ManufacturedId manufactured_from_string(const std::string& name) {
    for (auto id : {ManufacturedId::constant, ManufacturedId::quadratic, ManufacturedId::rect_arch_bump,
                    ManufacturedId::rect_trig, ManufacturedId::disk_quartic, ManufacturedId::annulus_poly,
                    ManufacturedId::gaussian_bump})
        if (to_string(id) == name) return id;
    throw ConfigError("unknown manufactured solution '" + name + "'");
}

geometry::FourierSeries project_fourier(const ScalarFunction& f, double radius, std::size_t order,
                                        std::size_t samples) {
    if (samples <= 2 * order) throw ConfigError("Fourier projection needs more than 2K samples");
    geometry::FourierSeries s;
    s.cos_coeffs.assign(order, 0.0);
    s.sin_coeffs.assign(order, 0.0);
    std::vector<double> values(samples);
    for (std::size_t m = 0; m < samples; ++m) {
        const double theta = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(samples);
        values[m] = f({radius * std::cos(theta), radius * std::sin(theta)});
    }
    const double inv = 1.0 / static_cast<double>(samples);
    for (double v : values) s.a0 += v * inv;
    for (std::size_t k = 1; k <= order; ++k) {
        double ca = 0.0;
        double sa = 0.0;
        for (std::size_t m = 0; m < samples; ++m) {
            const double theta = 2.0 * kPi * static_cast<double>(m * k % samples) / static_cast<double>(samples);
            ca += values[m] * std::cos(theta);
            sa += values[m] * std::sin(theta);
        }
        s.cos_coeffs[k - 1] = 2.0 * inv * ca;
        s.sin_coeffs[k - 1] = 2.0 * inv * sa;
    }
    return s;
}

namespace {

Jet arch_jet(double h, double l, const Point& p) {
    const double w = 2.0 * kPi / l;
    return {0.5 * h * (1.0 + std::cos(w * p.x1)), -0.5 * h * w * std::sin(w * p.x1), 0.0,
            -0.5 * h * w * w * std::cos(w * p.x1), 0.0, 0.0};
}

double max_trace_error(const ScalarFunction& f, const geometry::FourierSeries& s, double radius) {
    constexpr int checks = 4096;
    double err = 0.0;
    for (int m = 0; m < checks; ++m) {
        const double theta = 2.0 * kPi * (m + 0.37) / checks;
        err = std::max(err, std::abs(f({radius * std::cos(theta), radius * std::sin(theta)}) - s.value(theta)));
    }
    return err;
}

}  // namespace

ManufacturedCase make_manufactured(const geometry::Domain& domain, const AiryField& airy, const LoadModel& loads,
                                   ManufacturedId id, double arch_height) {
    domain.validate();
    ManufacturedCase mc;
    mc.id = id;
    mc.domain = domain;
    const double l = domain.length;
    const double b = domain.width;
    const double rr = domain.r_out;

    switch (id) {
        case ManufacturedId::constant:
            mc.solution = [](const Point&) { return Jet{1.0, 0, 0, 0, 0, 0}; };
            break;
        case ManufacturedId::quadratic:
            mc.solution = [](const Point& p) {
                return Jet{p.x1 * p.x1 + p.x2 * p.x2, 2.0 * p.x1, 2.0 * p.x2, 2.0, 0.0, 2.0};
            };
            break;
        case ManufacturedId::rect_arch_bump:
            if (domain.kind != geometry::DomainKind::rectangle) throw ConfigError("rect_arch_bump needs a rectangle");
            // vanishes on every edge except for the arch itself
            mc.solution = [=](const Point& p) {
                const double wx = kPi / l;
                const double wy = kPi / b;
                const double cx = std::cos(wx * p.x1), sx = std::sin(wx * p.x1);
                const double cy = std::cos(wy * p.x2), sy = std::sin(wy * p.x2);
                const double amp = 3.0;
                Jet bump{amp * cx * cy,           -amp * wx * sx * cy,     -amp * wy * cx * sy,
                         -amp * wx * wx * cx * cy, amp * wx * wy * sx * sy, -amp * wy * wy * cx * cy};
                return arch_jet(arch_height, l, p) + bump;
            };
            break;
        case ManufacturedId::rect_trig:
            if (domain.kind != geometry::DomainKind::rectangle) throw ConfigError("rect_trig needs a rectangle");
            mc.solution = [=](const Point& p) {
                const double wx = kPi / l;
                const double wy = kPi / b;
                const double cx = std::cos(wx * p.x1), sx = std::sin(wx * p.x1);
                const double cy = std::cos(wy * p.x2), sy = std::sin(wy * p.x2);
                Jet t{sx * cy, wx * cx * cy, -wy * sx * sy, -wx * wx * sx * cy, -wx * wy * cx * sy, -wy * wy * sx * cy};
                return arch_jet(arch_height, l, p) + t;
            };
            break;
        case ManufacturedId::disk_quartic:
            // 1 - r^2/R^2 + 0.1 Re(z^4)/R^4
            mc.solution = [=](const Point& p) {
                const double x = p.x1, y = p.x2;
                const double r2 = rr * rr, r4 = r2 * r2;
                const double q = 0.1 / r4;
                return Jet{1.0 - (x * x + y * y) / r2 + q * (x * x * x * x - 6.0 * x * x * y * y + y * y * y * y),
                           -2.0 * x / r2 + q * (4.0 * x * x * x - 12.0 * x * y * y),
                           -2.0 * y / r2 + q * (4.0 * y * y * y - 12.0 * x * x * y),
                           -2.0 / r2 + q * (12.0 * x * x - 12.0 * y * y),
                           q * (-24.0 * x * y),
                           -2.0 / r2 + q * (12.0 * y * y - 12.0 * x * x)};
            };
            break;
        case ManufacturedId::annulus_poly:
            // 1 - r^2/R^2 + 0.1 Re(z^3)/R^3 + 0.05 x1 x2 / R^2
            mc.solution = [=](const Point& p) {
                const double x = p.x1, y = p.x2;
                const double r2 = rr * rr, r3 = r2 * rr;
                const double c3 = 0.1 / r3, c2 = 0.05 / r2;
                return Jet{1.0 - (x * x + y * y) / r2 + c3 * (x * x * x - 3.0 * x * y * y) + c2 * x * y,
                           -2.0 * x / r2 + c3 * (3.0 * x * x - 3.0 * y * y) + c2 * y,
                           -2.0 * y / r2 + c3 * (-6.0 * x * y) + c2 * x,
                           -2.0 / r2 + c3 * 6.0 * x,
                           c3 * (-6.0 * y) + c2,
                           -2.0 / r2 - c3 * 6.0 * x};
            };
            break;
        case ManufacturedId::gaussian_bump:
            mc.solution = [=](const Point& p) {
                const double s2 = 0.25 * domain.characteristic_size() * 0.25 * domain.characteristic_size();
                const double x = p.x1, y = p.x2;
                const double e = std::exp(-(x * x + y * y) / (2.0 * s2));
                return Jet{e,
                           -x / s2 * e,
                           -y / s2 * e,
                           (x * x / (s2 * s2) - 1.0 / s2) * e,
                           x * y / (s2 * s2) * e,
                           (y * y / (s2 * s2) - 1.0 / s2) * e};
            };
            break;
    }

    mc.context = std::make_shared<ManufacturedContext>(airy, loads, mc.solution);
    const auto value = [f = mc.solution](const Point& p) { return f(p).f; };
    if (domain.circular()) {
        mc.profile.outer = project_fourier(value, domain.r_out, mc.fourier_order);
        mc.projection_error = max_trace_error(value, mc.profile.outer, domain.r_out);
        if (domain.kind == geometry::DomainKind::annulus) {
            mc.profile.inner = project_fourier(value, domain.r_in, mc.fourier_order);
            mc.projection_error =
                std::max(mc.projection_error, max_trace_error(value, mc.profile.inner, domain.r_in));
        }
    } else {
        mc.profile.arch_height = arch_height;
        // the FD/hard lift only represent the arch; report how far f* is from it
        constexpr int checks = 4096;
        geometry::Domain d = domain;
        double err = 0.0;
        for (int m = 0; m < checks; ++m) {
            geometry::BoundaryParam bp{d.perimeter() * (m + 0.5) / checks, false};
            const Point p = geometry::boundary_point(d, bp);
            err = std::max(err, std::abs(value(p) - geometry::rectangle_arch(arch_height, l, p.x1)));
        }
        mc.projection_error = err;
    }
    return mc;
}

std::string ManufacturedCase::to_json() const {
    nlohmann::json j;
    j["choice"] = to_string(id);
    j["domain"] = geometry::to_string(domain.kind);
    j["parameters"] = {{"length", domain.length}, {"width", domain.width}, {"r_in", domain.r_in},
                       {"r_out", domain.r_out}, {"arch_height", profile.arch_height}};
    j["fourier_order"] = fourier_order;
    j["projection_error"] = projection_error;
    return j.dump(2);
}

FieldMetrics compare_values(std::span<const double> candidate, std::span<const double> reference) {
    if (reference.empty()) throw ConfigError("field comparison needs a non-empty point set");
    if (candidate.size() != reference.size()) throw ConfigError("field comparison needs equally sized samples");
    std::vector<double> diff2(reference.size());
    std::vector<double> ref2(reference.size());
    FieldMetrics m;
    m.count = reference.size();
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = candidate[i] - reference[i];
        diff2[i] = d * d;
        ref2[i] = reference[i] * reference[i];
        m.max_abs = std::max(m.max_abs, std::abs(d));
    }
    const double n = static_cast<double>(reference.size());
    m.rmse = std::sqrt(pairwise_sum(diff2) / n);
    const double rms = std::sqrt(pairwise_sum(ref2) / n);
    if (!(rms > 0.0)) throw Error("reference RMS is zero; relative L2 is undefined");
    m.rel_l2 = m.rmse / rms;
    return m;
}

FieldMetrics compare_fields(const ScalarFunction& candidate, const ScalarFunction& reference,
                            std::span<const Point> points) {
    std::vector<double> c(points.size());
    std::vector<double> r(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        r[i] = reference(points[i]);
        c[i] = candidate(points[i]);
    }
    return compare_values(c, r);
}

}  // namespace mea::reference
