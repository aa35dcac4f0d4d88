#pragma once

#include <cstdint>
#include <span>

#include "addaforge/rng.hpp"
#include "addaforge/tensor.hpp"

namespace addaforge {

// Floor applied to probabilities before any log; shared by all cross-entropy
// style losses so log(0) never occurs.
inline constexpr double kLogFloor = 1e-12;

inline double log_clamped(double p) { return std::log(p < kLogFloor ? kLogFloor : p); }

// Derivative of log_clamped w.r.t. p (zero inside the clamped region).
inline double dlog_clamped(double p) { return p < kLogFloor ? 0.0 : 1.0 / p; }

// Row-wise softmax of an [n x m] matrix, overflow-safe via per-row max
// subtraction. Rows sum to 1 within 1e-12.
Tensor softmax(const Tensor& logits);

// Given one softmax output row q and dL/dq, returns dL/dlogits into grad_h:
// grad_h[i] = q[i] * (g[i] - sum_j g[j] q[j]).
void softmax_backward_row(std::span<const double> q, std::span<const double> grad_q,
                          std::span<double> grad_h);

// Matrix form of the above, rows independent.
Tensor softmax_backward(const Tensor& q, const Tensor& grad_q);

// Inverted-dropout mask: each element is 1/keep_prob with probability
// keep_prob, else 0, so E[h * mask] == h. With scaled=false kept elements
// stay 1 (the unscaled ablation variant).
Tensor dropout_mask(const std::vector<std::size_t>& shape, double keep_prob, Rng& rng,
                    bool scaled = true);

// Per-row argmax over the first `limit` columns (limit 0 means all columns);
// ties break toward the lowest index.
std::vector<int> argmax_rows(const Tensor& m, std::size_t limit = 0);

}  // namespace addaforge
