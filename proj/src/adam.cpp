#include "addaforge/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace addaforge {

AdamState make_adam(const std::vector<const Tensor*>& params, const AdamConfig& config) {
    AdamState state;
    state.config = config;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Tensor* p : params) {
        state.m.emplace_back(p->shape);
        state.v.emplace_back(p->shape);
    }
    return state;
}

AdamState make_adam(const std::vector<Tensor*>& params, const AdamConfig& config) {
    std::vector<const Tensor*> view(params.begin(), params.end());
    return make_adam(view, config);
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    }
    state.step_count += 1;
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (!p.same_shape(g) || !p.same_shape(state.m[i])) {
            throw std::invalid_argument("adam_step: shape mismatch at parameter " + std::to_string(i) +
                                        " (" + shape_str(p.shape) + " vs " + shape_str(g.shape) + ")");
        }
        double* m = state.m[i].values.data();
        double* v = state.v[i].values.data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g.values[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g.values[j] * g.values[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p.values[j] -= state.config.lr * m_hat / (std::sqrt(v_hat) + state.config.epsilon);
        }
    }
}

}  // namespace addaforge
