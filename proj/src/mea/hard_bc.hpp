#pragma once

#include <string>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/network.hpp"
#include "mea/types.hpp"

namespace mea::hard_bc {

/// Distance-like function vanishing on the boundary, with its jet.
Jet distance_jet(const geometry::Domain& domain, const Point& p);

enum class LiftKind { rect_arch, disk_fourier, annulus_fourier };

std::string to_string(LiftKind kind);

inline constexpr std::size_t kMaxHarmonicOrder = 32;

/// Closed-form lift G of the boundary data.
///
/// rect_arch: G(x1) = h/2 (1 + cos(2 pi x1 / l)).
/// disk_fourier: G = a0 + sum (r/R)^k (a_k cos k theta + b_k sin k theta).
/// annulus_fourier: G = A0 + B0 ln r + sum (A_k r^k + B_k r^-k) cos k theta
///                                        + (C_k r^k + D_k r^-k) sin k theta.
struct LiftSpec {
    LiftKind kind = LiftKind::rect_arch;
    double arch_height = 0.0;
    double length = 0.0;
    double r_in = 0.0;
    double r_out = 0.0;
    // disk: a0, a_k, b_k; annulus: A0, B0 and per-order A_k, B_k, C_k, D_k
    double a0 = 0.0;
    double b0 = 0.0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> d;

    std::string to_json() const;
    static LiftSpec from_json(const std::string& text);
};

LiftSpec fit_rect_lift(double arch_height, double length);
LiftSpec fit_disk_lift(const geometry::FourierSeries& profile, double radius);
/// Solves the two-circle matching conditions order by order. Throws
/// ConfigError if R_in == R_out or the order exceeds kMaxHarmonicOrder.
LiftSpec fit_annulus_lift(const geometry::FourierSeries& outer, const geometry::FourierSeries& inner, double r_in,
                          double r_out);

/// Lift matching the boundary profile of a domain.
LiftSpec fit_lift(const geometry::Domain& domain, const geometry::BoundaryProfile& profile);

/// Throws ConfigError for annulus points below the inner radius.
Jet lift_jet(const LiftSpec& lift, const Point& p);

/// f = D N + G, product rule on the three jets.
Jet compose(const Jet& distance, const Jet& network, const Jet& lift);

/// Transpose of `compose` in the network jet: given dl/df, returns dl/dN.
Jet compose_adjoint(const Jet& distance, const Jet& df);

/// Trial field D N_theta + G satisfying the Dirichlet data exactly.
class HardField {
  public:
    HardField(nn::Mlp network, geometry::Domain domain, LiftSpec lift);

    Jet jet(const Point& p) const;
    double value(const Point& p) const { return jet(p).f; }

    const nn::Mlp& network() const { return network_; }
    nn::Mlp& network() { return network_; }
    const geometry::Domain& domain() const { return domain_; }
    const LiftSpec& lift() const { return lift_; }

  private:
    nn::Mlp network_;
    geometry::Domain domain_;
    LiftSpec lift_;
};

}  // namespace mea::hard_bc
