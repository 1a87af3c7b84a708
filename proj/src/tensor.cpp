#include "fitkd/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace fitkd {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: nonpositive dimension in " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<int> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                    std::to_string(data.size()) + " elements");
    }
}

Tensor Tensor::zeros(std::vector<int> shape_in) {
    std::size_t n = shape_numel(shape_in);
    return Tensor(std::move(shape_in), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<int> shape_in, double value) {
    std::size_t n = shape_numel(shape_in);
    return Tensor(std::move(shape_in), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
    int n = static_cast<int>(values.size());
    return Tensor({n}, std::move(values));
}

int Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape[0];
    throw std::invalid_argument("tensor: rows() on rank-" + std::to_string(rank()) + " tensor");
}

int Tensor::cols() const {
    if (rank() == 1) return shape[0];
    if (rank() == 2) return shape[1];
    throw std::invalid_argument("tensor: cols() on rank-" + std::to_string(rank()) + " tensor");
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) return false;
    if (a.data.size() != b.data.size()) return false;
    if (a.data.empty()) return true;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose2d: expected rank-2, got " + shape_str(a.shape));
    Tensor out = Tensor::zeros({a.shape[1], a.shape[0]});
    for (int i = 0; i < a.shape[0]; ++i)
        for (int j = 0; j < a.shape[1]; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor matmul_vals(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw std::invalid_argument("matmul: expected rank-2 operands, got " + shape_str(a.shape) + " and " +
                                    shape_str(b.shape));
    }
    // Materialize plain orientations so one cache-friendly kernel serves all
    // four transpose combinations.
    Tensor lhs_store, rhs_store;
    if (trans_a) lhs_store = transpose2d(a);
    if (trans_b) rhs_store = transpose2d(b);
    const Tensor& A = trans_a ? lhs_store : a;
    const Tensor& B = trans_b ? rhs_store : b;

    const int m = A.shape[0], k = A.shape[1];
    if (B.shape[0] != k) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape) +
                                    (trans_a ? "^T" : "") + " x " + shape_str(b.shape) + (trans_b ? "^T" : ""));
    }
    const int n = B.shape[1];
    Tensor out = Tensor::zeros({m, n});
    const double* ap = A.data.data();
    const double* bp = B.data.data();
    double* cp = out.data.data();
    for (int i = 0; i < m; ++i) {
        const double* arow = ap + static_cast<std::size_t>(i) * k;
        double* crow = cp + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = bp + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return out;
}

}  // namespace fitkd
