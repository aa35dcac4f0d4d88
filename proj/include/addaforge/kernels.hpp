#pragma once

#include <span>
#include <string>
#include <vector>

#include "addaforge/tensor.hpp"

namespace addaforge {

enum class KernelFamily { SqEuclidean, ChiSquared, SqHellinger, L1 };

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

// Mixture of generalized RBF kernels: k(x, y) = sum_r exp(-D2(x, y) / (2 sigma_r)).
// epsilon stabilizes the chi-squared / Hellinger distances near zero.
struct KernelSpec {
    KernelFamily family = KernelFamily::SqEuclidean;
    std::vector<double> sigmas = {1.0, 0.1, 0.01, 0.001, 0.0001};
    double epsilon = 1e-8;
};

// The five-bandwidth squared-Euclidean mixture used throughout: sigma_r = 10^-r.
KernelSpec default_kernel_spec();

void validate(const KernelSpec& spec);

// Squared base distance D2 per family; symmetric, D2(x, x) == 0 exactly.
// Chi-squared and Hellinger require elementwise nonnegative inputs.
double dist2(KernelFamily family, std::span<const double> x, std::span<const double> y, double epsilon);

// k(x, x) equals sigmas.size() exactly.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

// Biased V-statistic MMD^2 between the rows of A [n x d] and B [m x d],
// diagonals included:
//   (1/n^2) sum k(a_i, a_j) - (2/nm) sum k(a_i, b_j) + (1/m^2) sum k(b_i, b_j).
double mmd2_biased(const KernelSpec& spec, const Tensor& a, const Tensor& b);

// Same contract as mmd2_biased, computed as the plain definitional double
// loops with no symmetry exploitation or reordering; the independent
// reference implementation the fast path is checked against.
double mmd2_oracle(const KernelSpec& spec, const Tensor& a, const Tensor& b);

// Analytic d(mmd2_biased)/dB with A held constant; [m x d].
Tensor mmd2_grad_b(const KernelSpec& spec, const Tensor& a, const Tensor& b);

}  // namespace addaforge
