#pragma once

// Finite-difference verification of every backward pass in the framework,
// run in double precision over many randomized instances per primitive.
// The CLI `gradcheck` command prints one line per report; tests assert on
// the aggregate. `negate_conv_weight_grad` deliberately corrupts the conv
// weight gradient so the harness can prove the check has teeth.

#include <vector>

#include "twopath/gradcheck.hpp"

namespace twopath {

struct GradSuiteOptions {
    int instances = 20;      // randomized instances per primitive
    int probes = 6;          // sampled entries checked per instance
    double tol = 1e-4;       // max relative error accepted
    uint64_t seed = 2024;
    bool negate_conv_weight_grad = false;  // fault injection for self-test
};

// One aggregated report per primitive (max error over all instances).
std::vector<GradCheckReport> run_gradient_suite(const GradSuiteOptions& opt);

bool gradient_suite_passes(const std::vector<GradCheckReport>& reports, double tol);

}  // namespace twopath
