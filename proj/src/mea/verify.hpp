#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mea/trainer.hpp"

namespace mea::verify {

enum class Status { pass, fail, not_run };

std::string to_string(Status s);

/// Outcome of one verification check. `detail` carries the measured values
/// next to their gates.
struct Check {
    std::string id;
    std::string title;
    Status status = Status::not_run;
    std::string detail;
};

/// "PASS [id] title: detail"
std::string format_line(const Check& check);

struct Options {
    /// Also run the parts that need the full training budget (days of CPU time).
    bool full_budget = false;
    /// Network and schedule for the desk-scale training checks.
    int desk_layers = 3;
    int desk_width = 32;
    int desk_epochs = 5000;
    std::size_t desk_points = 4096;
    std::function<void(const Check&)> on_check;
    std::function<void(const std::string&)> on_progress;
};

// Self-contained checks. Each returns one line's worth of verdict.
Check autodiff_suite();
Check optimizer_suite();
Check lift_suite();
Check admissibility_suite();
Check fd_reference_suite();

/// Suites: "autodiff", "optimizer", "lifts", "admissibility", "reference",
/// "quick" (all of the above), "manufactured", "rectangle", "acceptance".
std::vector<Check> run_suite(const std::string& suite, const Options& options);

/// True when no check failed (not-run checks do not count as failures).
bool all_passed(const std::vector<Check>& checks);

std::string to_json(const std::vector<Check>& checks);

}  // namespace mea::verify
