#include "addaforge/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace addaforge {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape_in, double fill)
    : shape(std::move(shape_in)), values(shape_numel(shape), fill) {
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("tensor shape has a zero dimension: " + shape_str(shape));
    }
}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> values_in)
    : shape(std::move(shape_in)), values(std::move(values_in)) {
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("tensor shape " + shape_str(shape) + " does not match " +
                                    std::to_string(values.size()) + " values");
    }
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape.size()) {
        throw std::out_of_range("tensor axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape));
    }
    return shape[axis];
}

std::size_t Tensor::cols() const {
    std::size_t c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
}

double& Tensor::at(std::size_t row, std::size_t col) {
    return values[row * cols() + col];
}

double Tensor::at(std::size_t row, std::size_t col) const {
    return values[row * cols() + col];
}

bool all_finite(const Tensor& t) {
    for (double v : t.values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_finite(const Tensor& t, const char* what) {
    if (!all_finite(t)) {
        throw std::runtime_error(std::string("non-finite values in ") + what);
    }
}

Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& indices) {
    if (t.rank() == 0) throw std::invalid_argument("take_rows: rank-0 tensor");
    const std::size_t row_size = t.cols();
    std::vector<std::size_t> out_shape = t.shape;
    out_shape[0] = indices.size();
    Tensor out(out_shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t r = indices[i];
        if (r >= t.dim(0)) throw std::out_of_range("take_rows: row index out of range");
        std::copy(t.values.begin() + static_cast<std::ptrdiff_t>(r * row_size),
                  t.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * row_size),
                  out.values.begin() + static_cast<std::ptrdiff_t>(i * row_size));
    }
    return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.rank() != b.rank() || a.rank() == 0) {
        throw std::invalid_argument("concat_rows: rank mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    }
    for (std::size_t i = 1; i < a.rank(); ++i) {
        if (a.shape[i] != b.shape[i]) {
            throw std::invalid_argument("concat_rows: trailing dims differ " + shape_str(a.shape) + " vs " +
                                        shape_str(b.shape));
        }
    }
    std::vector<std::size_t> out_shape = a.shape;
    out_shape[0] = a.dim(0) + b.dim(0);
    Tensor out(out_shape);
    std::copy(a.values.begin(), a.values.end(), out.values.begin());
    std::copy(b.values.begin(), b.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

}  // namespace addaforge
