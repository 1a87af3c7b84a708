#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fitkd {

// Dense row-major tensor of 64-bit reals. The unit of all numeric
// computation: model parameters, activations, probabilities and gradients.
// Tensors placed on a tape are treated as immutable values; mutation is
// reserved for parameter storage and optimizer state.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_in, std::vector<double> data_in);

    static Tensor zeros(std::vector<int> shape_in);
    static Tensor full(std::vector<int> shape_in, double value);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);

    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t numel() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }

    // Rank-2 helpers; rank-1 tensors count as a single row.
    int rows() const;
    int cols() const;

    double& at(int i) { return data[static_cast<std::size_t>(i)]; }
    double at(int i) const { return data[static_cast<std::size_t>(i)]; }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

bool bitwise_equal(const Tensor& a, const Tensor& b);

// c = op(a) x op(b) for rank-2 operands, op = optional transpose.
Tensor matmul_vals(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b);
Tensor transpose2d(const Tensor& a);

}  // namespace fitkd
