#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "addaforge/gradcheck.hpp"

namespace addaforge {

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    // Test hook: perturb the analytic gradient of the loss at this index in
    // the gradient-check list so the harness's failure path can be exercised.
    int sabotage_loss = -1;
};

struct LossGradCase {
    std::string name;
    GradCheckReport report;
};

// End-to-end finite-difference checks for every loss in the taxonomy,
// through a 4 -> 8 -> K MLP encoder and FC(16) -> FC(K+1) discriminator,
// K = 3, batch 8, frozen dropout masks.
std::vector<LossGradCase> run_loss_gradient_checks(double h, double tolerance, int sabotage_loss = -1);

// The full invariant battery behind the `verify` subcommand: MMD oracle
// equivalence, gradient checks, the JOINT->ADDA marginalization identity,
// softmax and zero-concat properties, checkpoint round-trip.
std::vector<VerifyCheck> run_verify_battery(const VerifyOptions& options = {});

// Prints one PASS/FAIL line per check; returns the number of failures.
int report_checks(std::ostream& out, const std::vector<VerifyCheck>& checks);

}  // namespace addaforge
