#include "addaforge/gradcheck.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace addaforge {

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << "max rel error " << max_rel_error << " (param " << worst_param << ", element " << worst_element
       << ": analytic " << worst_analytic << ", numeric " << worst_numeric << "), tolerance " << tolerance;
    return os.str();
}

GradCheckReport finite_diff_check(const std::vector<Tensor*>& params,
                                  const std::vector<Tensor>& analytic_grads,
                                  const std::function<double()>& loss, double h, double tolerance) {
    if (params.size() != analytic_grads.size()) {
        throw std::invalid_argument("finite_diff_check: parameter/gradient count mismatch");
    }
    const double base = loss();
    const double base_again = loss();
    if (base != base_again) {
        throw std::runtime_error("finite_diff_check: non-deterministic loss closure (" +
                                 std::to_string(base) + " vs " + std::to_string(base_again) + ")");
    }

    GradCheckReport report;
    report.tolerance = tolerance;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        const Tensor& g = analytic_grads[pi];
        if (!p.same_shape(g)) {
            throw std::invalid_argument("finite_diff_check: gradient shape mismatch at parameter " +
                                        std::to_string(pi));
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double saved = p.values[j];
            p.values[j] = saved + h;
            const double up = loss();
            p.values[j] = saved - h;
            const double down = loss();
            p.values[j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = g.values[j];
            const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
            const double rel = std::fabs(analytic - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = pi;
                report.worst_element = j;
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace addaforge
