#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mea/geometry.hpp"
#include "mea/mea_core.hpp"
#include "mea/reference.hpp"
#include "mea/trainer.hpp"

namespace mea::config {

/// Physical problem: plan domain, boundary heights, stresses and loads.
struct CaseConfig {
    geometry::Domain domain = geometry::Domain::rectangle(13.0, 8.0);
    geometry::BoundaryProfile profile;
    AiryField airy;
    LoadModel loads;
    bool theta_diagonal = false;  // theta_h = atan2(width, length)
    double theta_deg = 0.0;
    ReferenceMode h_reference = ReferenceMode::upstream;
    Point h_point;  // explicit_point mode only
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv"};
    int grid = 101;
    bool wallclock = true;
};

enum class ReferenceKind { none, fd, manufactured };

struct ReferenceConfig {
    ReferenceKind kind = ReferenceKind::none;
    int fd_nx = 129;
    int fd_ny = 81;
    reference::ManufacturedId manufactured = reference::ManufacturedId::rect_arch_bump;
    std::size_t compare_points = 10000;
    std::uint64_t compare_seed = 7;
};

struct RunConfig {
    CaseConfig case_;
    train::TrainConfig train;
    OutputConfig outputs;
    ReferenceConfig reference;
};

/// INI text with sections [case], [airy], [loads], [train], [outputs] and
/// [reference]. Unknown sections or keys raise ConfigError.
RunConfig parse(std::istream& in);
RunConfig parse_string(const std::string& text);
RunConfig load(const std::string& path);

/// Canonical INI text; parse(serialize(c)) reproduces c.
std::string serialize(const RunConfig& config);

/// Copy of `config` with one key replaced, re-validated as a whole.
RunConfig with_value(const RunConfig& config, const std::string& section, const std::string& key,
                     const std::string& value);

/// Built-in cases: "rectangle", "three_leg", "four_leg". Boundary profiles of
/// the legged cases are illustrative.
RunConfig preset(const std::string& name);

/// Output directory after applying the MEA_OUTPUT_ROOT override to relative
/// paths.
std::string resolve_output_directory(const OutputConfig& outputs);

/// Everything needed to train and compare one case.
struct BuiltCase {
    train::Problem problem;
    std::shared_ptr<const PdeContext> context;
    std::optional<reference::ManufacturedCase> manufactured;
    std::shared_ptr<const reference::GridSolution> fd;
    double fd_refinement_error = -1.0;  // Richardson estimate, -1 if not computed
};

/// Resolves loads (direction, h reference), builds the PDE context and the
/// requested reference. FD references are only available on rectangles.
BuiltCase build_case(const RunConfig& config, bool with_refinement_estimate = false);

}  // namespace mea::config
