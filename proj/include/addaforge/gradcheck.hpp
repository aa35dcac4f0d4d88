#pragma once

#include <functional>
#include <string>
#include <vector>

#include "addaforge/tensor.hpp"

namespace addaforge {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_element = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    double tolerance = 0.0;

    bool passed() const { return max_rel_error < tolerance; }
    std::string summary() const;
};

// Central-difference check of analytic gradients. `loss` must be a
// deterministic closure over the current parameter values (dropout masks
// frozen via a fixed seed inside the closure); the check evaluates it twice
// at the base point and throws if the two values differ. Relative error per
// element is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport finite_diff_check(const std::vector<Tensor*>& params,
                                  const std::vector<Tensor>& analytic_grads,
                                  const std::function<double()>& loss, double h, double tolerance);

}  // namespace addaforge
