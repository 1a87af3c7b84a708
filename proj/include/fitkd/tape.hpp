#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fitkd/tensor.hpp"

namespace fitkd {

class ComputationTape;

// Accumulates this node's contribution into the gradients of its inputs.
// Closures read values through the tape (never by cached reference) and must
// not mutate it: running backward twice yields identical results.
using BackwardFn = std::function<void(const ComputationTape& tape,
                                      const Tensor& grad_out,
                                      std::vector<Tensor>& grads)>;

enum class Op {
    Constant,
    Leaf,
    Add,
    Multiply,
    Matmul,
    Embedding,
    LayerNorm,
    Gelu,
    Softmax,
    LogSoftmax,
    Reshape,
    Slice,
    Concat,
    Mean,
    Sum,
    Custom,
};

const char* op_name(Op op);

struct Node {
    Op op;
    std::vector<int> inputs;
    Tensor value;
    BackwardFn backward;  // empty for Constant/Leaf
    std::string label;    // set for Custom nodes only
};

// Eager record of a forward computation. Every operation evaluates
// immediately and appends one node; inputs always precede their consumers,
// so a single reverse sweep over node ids is a valid topological order for
// backpropagation.
class ComputationTape {
public:
    // Value that never receives a gradient (masks, teacher outputs, targets).
    int constant(Tensor value);

    // Differentiable entry point (parameters, occasionally inputs).
    int leaf(Tensor value);

    // Elementwise sum. Shapes must match, except that a rank-1 [c] right
    // operand broadcasts across the rows of a rank-2 [r,c] left operand.
    int add(int a, int b);

    // Elementwise product of same-shape tensors, or scaling by a [1] operand
    // on either side.
    int multiply(int a, int b);

    // Rank-2 only; the flags fold transposition into the product so no
    // separate transpose node is needed.
    int matmul(int a, int b, bool trans_a = false, bool trans_b = false);

    // Gathers rows of a [V,D] table; ids are data, not nodes. Gradient
    // scatter-adds back into the table rows.
    int embedding(int table, const std::vector<int>& ids);

    // Normalizes each row to zero mean / unit variance, then applies the
    // rank-1 gain and bias.
    int layer_norm(int x, int gain, int bias, double eps = 1e-5);

    // Exact-erf form, x * Phi(x).
    int gelu(int x);

    // Row-wise; rank-1 input is treated as a single row.
    int softmax(int x);
    int log_softmax(int x);

    int reshape(int x, const std::vector<int>& shape);

    // Contiguous range [start, start+len) along axis; rank <= 2.
    int slice(int x, int axis, int start, int len);

    // All operands share rank and the non-concatenated extent.
    int concat(const std::vector<int>& xs, int axis);

    // Full reductions to a [1] tensor.
    int mean(int x);
    int sum(int x);

    // Escape hatch for composite nodes (losses) that supply their own
    // analytic backward.
    int custom(const std::string& label, std::vector<int> inputs, Tensor value,
               BackwardFn backward);

    const Tensor& value(int id) const;
    const Node& node(int id) const;
    int size() const { return static_cast<int>(nodes_.size()); }

    // Gradients of the scalar node `loss` with respect to every node.
    // Nodes that do not feed into the loss get zero gradients of their own
    // shape, and constants are gradient sinks: their entry is always zero,
    // so frozen parameters bound as constants report no gradient. Does not
    // modify the tape.
    std::vector<Tensor> backward(int loss) const;

private:
    int push(Node node);
    const Tensor& in(int id) const;  // bounds-checked input fetch at record time

    std::vector<Node> nodes_;
};

}  // namespace fitkd
