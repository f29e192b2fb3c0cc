// Acceptance battery: one line per criterion. NOT RUN lines do not fail the
// test; any FAIL line does.
#include <cstdlib>
#include <iostream>
#include <string>

#include "mea/verify.hpp"

int main() {
    mea::verify::Options opts;
    const char* full = std::getenv("MEA_FULL_BUDGET");
    opts.full_budget = full && *full && std::string(full) != "0";
    opts.on_check = [](const mea::verify::Check& c) { std::cout << mea::verify::format_line(c) << std::endl; };
    opts.on_progress = [](const std::string& line) { std::cerr << "  " << line << std::endl; };
    const auto checks = mea::verify::run_suite("acceptance", opts);
    return mea::verify::all_passed(checks) ? 0 : 1;
}
