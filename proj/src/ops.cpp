#include "addaforge/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace addaforge {

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 2) {
        throw std::invalid_argument("softmax expects a rank-2 tensor, got shape " + shape_str(logits.shape));
    }
    const std::size_t n = logits.rows();
    const std::size_t m = logits.cols();
    Tensor out(logits.shape);
    for (std::size_t r = 0; r < n; ++r) {
        const double* in = logits.values.data() + r * m;
        double* o = out.values.data() + r * m;
        double mx = in[0];
        for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < m; ++j) o[j] /= sum;
    }
    return out;
}

void softmax_backward_row(std::span<const double> q, std::span<const double> grad_q,
                          std::span<double> grad_h) {
    double dot = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) dot += grad_q[j] * q[j];
    for (std::size_t j = 0; j < q.size(); ++j) grad_h[j] = q[j] * (grad_q[j] - dot);
}

Tensor softmax_backward(const Tensor& q, const Tensor& grad_q) {
    if (!q.same_shape(grad_q)) {
        throw std::invalid_argument("softmax_backward: shape mismatch " + shape_str(q.shape) + " vs " +
                                    shape_str(grad_q.shape));
    }
    const std::size_t n = q.rows();
    const std::size_t m = q.cols();
    Tensor grad_h(q.shape);
    for (std::size_t r = 0; r < n; ++r) {
        softmax_backward_row({q.values.data() + r * m, m}, {grad_q.values.data() + r * m, m},
                             {grad_h.values.data() + r * m, m});
    }
    return grad_h;
}

Tensor dropout_mask(const std::vector<std::size_t>& shape, double keep_prob, Rng& rng, bool scaled) {
    if (!(keep_prob > 0.0) || keep_prob > 1.0) {
        throw std::invalid_argument("dropout keep probability must lie in (0, 1], got " +
                                    std::to_string(keep_prob));
    }
    Tensor mask(shape);
    const double kept = scaled ? 1.0 / keep_prob : 1.0;
    for (double& v : mask.values) {
        v = uniform01(rng) < keep_prob ? kept : 0.0;
    }
    return mask;
}

std::vector<int> argmax_rows(const Tensor& m, std::size_t limit) {
    if (m.rank() != 2) throw std::invalid_argument("argmax_rows expects a rank-2 tensor");
    const std::size_t cols = m.cols();
    const std::size_t k = (limit == 0 || limit > cols) ? cols : limit;
    std::vector<int> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.values.data() + r * cols;
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (row[j] > row[best]) best = j;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

}  // namespace addaforge
