#pragma once

#include <string>
#include <vector>

namespace evt {

struct GradCheckCase {
    std::string name;
    int seeds = 0;
    double max_rel_err = 0.0;
    double tolerance = 1e-4;
    bool pass = false;
};

// Runs the seeded finite-difference checks for one module:
//   tensor | encoder | gate | refine | calibrate | losses | pipeline | all.
// Every case probes >= 20 seeded random inputs at eps = 1e-5.
std::vector<GradCheckCase> run_gradcheck(const std::string& module);

bool gradcheck_all_passed(const std::vector<GradCheckCase>& cases);

}  // namespace evt
