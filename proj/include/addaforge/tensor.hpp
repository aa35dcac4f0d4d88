#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace addaforge {

// Dense row-major tensor of 64-bit floats. The shape product always equals
// values.size().
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape_in, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape_in, std::vector<double> values_in);

    std::size_t size() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t axis) const;

    // 2-d accessors; the tensor must be rank 2.
    double& at(std::size_t row, std::size_t col);
    double at(std::size_t row, std::size_t col) const;

    std::size_t rows() const { return dim(0); }
    std::size_t cols() const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

// Throws std::runtime_error naming `what` if any value is NaN or infinite.
void check_finite(const Tensor& t, const char* what);

bool all_finite(const Tensor& t);

// Rows `indices[i]` of `t` gathered along axis 0 (copies).
Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& indices);

// Concatenation along axis 0; trailing dims must match.
Tensor concat_rows(const Tensor& a, const Tensor& b);

}  // namespace addaforge
