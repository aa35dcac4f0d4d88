#include "addaforge/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace addaforge {

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "sq-euclidean") return KernelFamily::SqEuclidean;
    if (name == "chi-squared") return KernelFamily::ChiSquared;
    if (name == "sq-hellinger") return KernelFamily::SqHellinger;
    if (name == "l1") return KernelFamily::L1;
    throw std::invalid_argument("unknown kernel family '" + name +
                                "' (expected sq-euclidean, chi-squared, sq-hellinger or l1)");
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SqEuclidean: return "sq-euclidean";
        case KernelFamily::ChiSquared: return "chi-squared";
        case KernelFamily::SqHellinger: return "sq-hellinger";
        case KernelFamily::L1: return "l1";
    }
    return "?";
}

KernelSpec default_kernel_spec() { return KernelSpec{}; }

void validate(const KernelSpec& spec) {
    if (spec.sigmas.empty()) throw std::invalid_argument("kernel spec needs at least one bandwidth");
    for (double s : spec.sigmas) {
        if (!(s > 0.0)) throw std::invalid_argument("kernel bandwidths must be positive");
    }
    if (spec.family == KernelFamily::ChiSquared || spec.family == KernelFamily::SqHellinger) {
        if (!(spec.epsilon > 0.0)) {
            throw std::invalid_argument("chi-squared and Hellinger kernels require epsilon > 0");
        }
    }
    if (spec.epsilon < 0.0) throw std::invalid_argument("kernel epsilon must be nonnegative");
}

namespace {

void require_nonnegative(std::span<const double> x, std::span<const double> y, KernelFamily family) {
    for (double v : x) {
        if (v < 0.0) throw std::domain_error(to_string(family) + " distance requires nonnegative inputs");
    }
    for (double v : y) {
        if (v < 0.0) throw std::domain_error(to_string(family) + " distance requires nonnegative inputs");
    }
}

}  // namespace

double dist2(KernelFamily family, std::span<const double> x, std::span<const double> y, double epsilon) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("dist2: vector dimensions differ (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    }
    double acc = 0.0;
    switch (family) {
        case KernelFamily::SqEuclidean:
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - y[i];
                acc += d * d;
            }
            break;
        case KernelFamily::ChiSquared:
            require_nonnegative(x, y, family);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - y[i];
                acc += d * d / (x[i] + y[i] + epsilon);
            }
            break;
        case KernelFamily::SqHellinger:
            require_nonnegative(x, y, family);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = std::sqrt(x[i] + epsilon) - std::sqrt(y[i] + epsilon);
                acc += d * d;
            }
            break;
        case KernelFamily::L1:
            for (std::size_t i = 0; i < x.size(); ++i) acc += std::fabs(x[i] - y[i]);
            break;
    }
    return acc;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    const double d2 = dist2(spec.family, x, y, spec.epsilon);
    double acc = 0.0;
    for (double sigma : spec.sigmas) acc += std::exp(-d2 / (2.0 * sigma));
    return acc;
}

namespace {

std::span<const double> row(const Tensor& t, std::size_t r) {
    const std::size_t d = t.cols();
    return {t.values.data() + r * d, d};
}

void check_sets(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("mmd2: sample sets must be rank-2 tensors");
    if (a.dim(0) == 0 || b.dim(0) == 0) throw std::invalid_argument("mmd2: empty sample set");
    if (a.dim(1) != b.dim(1)) {
        throw std::invalid_argument("mmd2: sample dimensions differ (" + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape) + ")");
    }
}

}  // namespace

double mmd2_biased(const KernelSpec& spec, const Tensor& a, const Tensor& b) {
    validate(spec);
    check_sets(a, b);
    const std::size_t n = a.dim(0);
    const std::size_t m = b.dim(0);

    // Within-set sums use pair symmetry: off-diagonal kernels counted twice.
    double aa = static_cast<double>(n) * static_cast<double>(spec.sigmas.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) aa += 2.0 * kernel_eval(spec, row(a, i), row(a, j));
    }
    double bb = static_cast<double>(m) * static_cast<double>(spec.sigmas.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) bb += 2.0 * kernel_eval(spec, row(b, i), row(b, j));
    }
    double ab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) ab += kernel_eval(spec, row(a, i), row(b, j));
    }
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return aa / (nn * nn) - 2.0 * ab / (nn * mm) + bb / (mm * mm);
}

double mmd2_oracle(const KernelSpec& spec, const Tensor& a, const Tensor& b) {
    validate(spec);
    check_sets(a, b);
    const std::size_t n = a.dim(0);
    const std::size_t m = b.dim(0);
    double term_aa = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) term_aa += kernel_eval(spec, row(a, i), row(a, j));
    }
    double term_ab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) term_ab += kernel_eval(spec, row(a, i), row(b, j));
    }
    double term_bb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) term_bb += kernel_eval(spec, row(b, i), row(b, j));
    }
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return term_aa / (nn * nn) - 2.0 * term_ab / (nn * mm) + term_bb / (mm * mm);
}

namespace {

// d k(x, y) / d y accumulated into grad with the given scale.
void kernel_grad_wrt_y(const KernelSpec& spec, std::span<const double> x, std::span<const double> y,
                       double scale, double* grad) {
    const double d2 = dist2(spec.family, x, y, spec.epsilon);
    double slope = 0.0;  // sum_r -exp(-d2 / 2 sigma_r) / (2 sigma_r)
    for (double sigma : spec.sigmas) slope -= std::exp(-d2 / (2.0 * sigma)) / (2.0 * sigma);
    switch (spec.family) {
        case KernelFamily::SqEuclidean:
            for (std::size_t i = 0; i < y.size(); ++i) {
                grad[i] += scale * slope * 2.0 * (y[i] - x[i]);
            }
            break;
        case KernelFamily::ChiSquared:
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double s = x[i] + y[i] + spec.epsilon;
                const double d = x[i] - y[i];
                grad[i] += scale * slope * (-2.0 * d / s - d * d / (s * s));
            }
            break;
        case KernelFamily::SqHellinger:
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double sy = std::sqrt(y[i] + spec.epsilon);
                grad[i] += scale * slope * (-(std::sqrt(x[i] + spec.epsilon) - sy) / sy);
            }
            break;
        case KernelFamily::L1:
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double d = y[i] - x[i];
                const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                grad[i] += scale * slope * sign;
            }
            break;
    }
}

}  // namespace

Tensor mmd2_grad_b(const KernelSpec& spec, const Tensor& a, const Tensor& b) {
    validate(spec);
    check_sets(a, b);
    const std::size_t n = a.dim(0);
    const std::size_t m = b.dim(0);
    const std::size_t d = b.dim(1);
    Tensor grad(b.shape);
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    for (std::size_t l = 0; l < m; ++l) {
        double* g = grad.values.data() + l * d;
        // BB term: row l appears as both arguments; by symmetry each
        // unordered pair contributes twice. The diagonal has zero gradient.
        for (std::size_t j = 0; j < m; ++j) {
            if (j == l) continue;
            kernel_grad_wrt_y(spec, row(b, j), row(b, l), 2.0 / (mm * mm), g);
        }
        // Cross term.
        for (std::size_t i = 0; i < n; ++i) {
            kernel_grad_wrt_y(spec, row(a, i), row(b, l), -2.0 / (nn * mm), g);
        }
    }
    return grad;
}

}  // namespace addaforge
