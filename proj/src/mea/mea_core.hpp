#pragma once

#include <string>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/types.hpp"

namespace mea {

enum class StressState { compression, tension };

std::string to_string(StressState state);
StressState stress_state_from_string(const std::string& name);

/// Constant Hessian components of the Airy stress function.
struct StressComponents {
    double n11 = 0.0;
    double n22 = 0.0;
    double n12 = 0.0;
};

/// Quadratic Airy stress function parameterized by (l1, l2, l3) and the sign
/// of the stress state, centered at `centroid`.
struct AiryField {
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    StressState state = StressState::compression;
    Point centroid;
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;

    void validate() const;
};

StressComponents stress_components(const AiryField& airy);

double airy_eval(const AiryField& airy, const Point& p);

struct PointLoad {
    double magnitude = 0.0;  // kN
    Point center;
    double spread = 0.5;  // Gaussian standard deviation, m
};

/// Where the cumulative horizontal resultants h1, h2 vanish.
enum class ReferenceMode { upstream, centroid, explicit_point };

/// Vertical and pseudo-static horizontal loads.
struct LoadModel {
    double density = 0.0;    // kN/m^3
    double thickness = 0.1;  // m
    std::vector<PointLoad> point_loads;
    double alpha_h = 0.0;
    double theta_h = 0.0;  // rad
    Point reference;       // lower limit of the h1/h2 integrals

    double lambda1() const;
    double lambda2() const;
    void validate() const;
};

/// Reference point for the h1/h2 integrals. `upstream` picks the bounding-box
/// edge the horizontal action enters from, which keeps h >= 0 for
/// non-negative loads.
Point resolve_reference(const geometry::Domain& domain, const LoadModel& loads, ReferenceMode mode,
                        const Point& explicit_point = {});

double vertical_load(const LoadModel& loads, const Point& p);

struct HorizontalLoads {
    double p1 = 0.0;
    double p2 = 0.0;
};

HorizontalLoads horizontal_loads(const LoadModel& loads, const Point& p);

struct CumulativeLoads {
    double h1 = 0.0;
    double h2 = 0.0;
};

/// Closed-form h1 = int p1 dx1 and h2 = int p2 dx2 from the reference point.
CumulativeLoads cumulative_loads(const LoadModel& loads, const Point& p);

struct ProjectedStresses {
    double s11 = 0.0;
    double s22 = 0.0;
    double s12 = 0.0;
};

ProjectedStresses projected_stresses(const AiryField& airy, const LoadModel& loads, const Point& p);
ProjectedStresses projected_stresses(const StressComponents& n, const CumulativeLoads& h);

/// Sign-definiteness of the projected tensor via the three scalar
/// inequalities (S11, S22 and the determinant).
bool tensor_admissible(const ProjectedStresses& s, StressState state);

/// Signed distance to inadmissibility: smallest eigenvalue for tension,
/// minus the largest eigenvalue for compression. Non-negative iff admissible.
double admissibility_margin(const ProjectedStresses& s, StressState state);

struct AdmissibilityReport {
    bool pass = true;
    double worst_margin = 0.0;
    Point worst_point;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    std::string state;

    std::string to_json() const;
};

/// Checks the unilateral condition on `n_samples` interior samples and the
/// same number of boundary samples.
AdmissibilityReport check_admissibility(const AiryField& airy, const LoadModel& loads,
                                        const geometry::Domain& domain, std::size_t n_samples,
                                        std::uint64_t seed);

/// Everything the PDE needs at a point.
struct PdeCoefficients {
    ProjectedStresses s;
    HorizontalLoads p;
    double q = 0.0;
};

/// Coefficient field of the equilibrium PDE: stresses and horizontal loads
/// from the Airy field and load model; the vertical load either from the
/// load model or replaced by a manufactured forcing.
class PdeContext {
  public:
    PdeContext(AiryField airy, LoadModel loads);
    virtual ~PdeContext() = default;

    const AiryField& airy() const { return airy_; }
    const LoadModel& loads() const { return loads_; }

    virtual PdeCoefficients at(const Point& p) const;

  private:
    AiryField airy_;
    LoadModel loads_;
    StressComponents n_;
};

}  // namespace mea
