#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/mea_core.hpp"
#include "mea/reference.hpp"
#include "mea/trainer.hpp"

namespace mea::post {

/// Eigen-decomposition of the projected stress tensor, sigma1 >= sigma2.
struct PrincipalState {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    Point e1{1.0, 0.0};
    Point e2{0.0, 1.0};
    bool degenerate = false;  // sigma1 == sigma2; axes are the canonical ones
};

PrincipalState principal_stresses(const ProjectedStresses& s);

enum class SurfaceFormat { csv, obj };

SurfaceFormat surface_format_from_string(const std::string& name);

/// Regular grid over the bounding box with `resolution` nodes per axis.
/// Nodes outside the closed domain are dropped; boundary nodes are kept.
std::vector<Point> masked_grid(const geometry::Domain& domain, int resolution);

/// CSV rows "x1,x2,f" or an OBJ mesh of the masked grid: every kept node is a
/// vertex (row-major order), and each grid cell contributes the triangles
/// whose three corners survived the mask.
void export_surface(std::ostream& out, const reference::ScalarFunction& field, const geometry::Domain& domain,
                    int resolution, SurfaceFormat format);

/// Principal stresses on the masked grid: x1,x2,S11,S22,S12,sigma1,sigma2,e1x,e1y,e2x,e2y.
void export_principal(std::ostream& out, const PdeContext& context, const geometry::Domain& domain, int resolution);

struct RunReport {
    std::optional<reference::FieldMetrics> comparison;
    double final_train_rmse = 0.0;
    double final_val_rmse = 0.0;
    AdmissibilityReport admissibility;
    std::uint64_t init_seed = 0;
    std::uint64_t sample_seed = 0;
    std::uint64_t validation_seed = 0;
    std::string config_hash;
    double wallclock_s = 0.0;
    std::string formulation;
    int selected_epoch = 0;
    bool diverged = false;
};

/// JSON with a fixed key set; comparison fields are null without a reference.
std::string report_metrics(const RunReport& report);

/// Stable 64-bit FNV-1a hash of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace mea::post
