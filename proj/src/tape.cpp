#include "fitkd/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace fitkd {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void check_rank2(const Tensor& t, const char* prim) {
    if (t.rank() > 2) {
        throw std::invalid_argument(std::string(prim) + ": expected rank <= 2, got " +
                                    shape_str(t.shape));
    }
}

// Row extent when a rank-1 tensor is viewed as a single row.
int view_rows(const Tensor& t) { return t.rank() == 2 ? t.shape[0] : 1; }
int view_cols(const Tensor& t) { return t.rank() == 2 ? t.shape[1] : t.shape[0]; }

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Multiply: return "multiply";
        case Op::Matmul: return "matmul";
        case Op::Embedding: return "embedding";
        case Op::LayerNorm: return "layer_norm";
        case Op::Gelu: return "gelu";
        case Op::Softmax: return "softmax";
        case Op::LogSoftmax: return "log_softmax";
        case Op::Reshape: return "reshape";
        case Op::Slice: return "slice";
        case Op::Concat: return "concat";
        case Op::Mean: return "mean";
        case Op::Sum: return "sum";
        case Op::Custom: return "custom";
    }
    return "?";
}

int ComputationTape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& ComputationTape::in(int id) const {
    if (id < 0 || id >= size()) {
        throw std::out_of_range("tape: node id " + std::to_string(id) + " out of range");
    }
    return nodes_[static_cast<std::size_t>(id)].value;
}

const Tensor& ComputationTape::value(int id) const { return in(id); }

const Node& ComputationTape::node(int id) const {
    in(id);  // bounds check
    return nodes_[static_cast<std::size_t>(id)];
}

int ComputationTape::constant(Tensor value) {
    return push({Op::Constant, {}, std::move(value), {}, {}});
}

int ComputationTape::leaf(Tensor value) {
    return push({Op::Leaf, {}, std::move(value), {}, {}});
}

int ComputationTape::add(int a, int b) {
    const Tensor& ta = in(a);
    const Tensor& tb = in(b);
    Tensor out;
    bool row_broadcast = false;
    if (ta.same_shape(tb)) {
        out = ta;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
    } else if (ta.rank() == 2 && tb.rank() == 1 && ta.shape[1] == tb.shape[0]) {
        row_broadcast = true;
        out = ta;
        const int rows = ta.shape[0];
        const int cols = ta.shape[1];
        for (int i = 0; i < rows; ++i) {
            double* row = out.data.data() + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) row[j] += tb.data[static_cast<std::size_t>(j)];
        }
    } else {
        throw std::invalid_argument("add: shapes " + shape_str(ta.shape) + " and " +
                                    shape_str(tb.shape) + " are not addable");
    }
    BackwardFn bw = [a, b, row_broadcast](const ComputationTape& t, const Tensor& g,
                                          std::vector<Tensor>& grads) {
        Tensor& ga = grads[static_cast<std::size_t>(a)];
        Tensor& gb = grads[static_cast<std::size_t>(b)];
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
        if (!row_broadcast) {
            for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
        } else {
            const Tensor& va = t.value(a);
            const int rows = va.shape[0];
            const int cols = va.shape[1];
            for (int i = 0; i < rows; ++i) {
                const double* row = g.data.data() + static_cast<std::size_t>(i) * cols;
                for (int j = 0; j < cols; ++j) gb.data[static_cast<std::size_t>(j)] += row[j];
            }
        }
    };
    return push({Op::Add, {a, b}, std::move(out), std::move(bw), {}});
}

int ComputationTape::multiply(int a, int b) {
    const Tensor& ta = in(a);
    const Tensor& tb = in(b);
    Tensor out;
    // 0: elementwise, 1: b is scalar, 2: a is scalar
    int mode;
    if (ta.same_shape(tb)) {
        mode = 0;
        out = ta;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
    } else if (tb.is_scalar()) {
        mode = 1;
        out = ta;
        const double s = tb.data[0];
        for (double& v : out.data) v *= s;
    } else if (ta.is_scalar()) {
        mode = 2;
        out = tb;
        const double s = ta.data[0];
        for (double& v : out.data) v *= s;
    } else {
        throw std::invalid_argument("multiply: shapes " + shape_str(ta.shape) + " and " +
                                    shape_str(tb.shape) + " are not multiplicable");
    }
    BackwardFn bw = [a, b, mode](const ComputationTape& t, const Tensor& g,
                                 std::vector<Tensor>& grads) {
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        Tensor& ga = grads[static_cast<std::size_t>(a)];
        Tensor& gb = grads[static_cast<std::size_t>(b)];
        if (mode == 0) {
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i] * vb.data[i];
                gb.data[i] += g.data[i] * va.data[i];
            }
        } else if (mode == 1) {
            const double s = vb.data[0];
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                ga.data[i] += g.data[i] * s;
                gb.data[0] += g.data[i] * va.data[i];
            }
        } else {
            const double s = va.data[0];
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                gb.data[i] += g.data[i] * s;
                ga.data[0] += g.data[i] * vb.data[i];
            }
        }
    };
    return push({Op::Multiply, {a, b}, std::move(out), std::move(bw), {}});
}

int ComputationTape::matmul(int a, int b, bool trans_a, bool trans_b) {
    const Tensor& ta = in(a);
    const Tensor& tb = in(b);
    if (ta.rank() != 2 || tb.rank() != 2) {
        throw std::invalid_argument("matmul: expected rank-2 operands, got " +
                                    shape_str(ta.shape) + " and " + shape_str(tb.shape));
    }
    Tensor out = matmul_vals(ta, trans_a, tb, trans_b);
    BackwardFn bw = [a, b, trans_a, trans_b](const ComputationTape& t, const Tensor& g,
                                             std::vector<Tensor>& grads) {
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        // With A_eff = op_a(A), B_eff = op_b(B) and G the output gradient,
        // d(A_eff) = G * B_eff^T and d(B_eff) = A_eff^T * G; the flags below
        // express those products (and the un-transposition) directly.
        Tensor da = trans_a ? matmul_vals(vb, trans_b, g, true)
                            : matmul_vals(g, false, vb, !trans_b);
        Tensor db = trans_b ? matmul_vals(g, true, va, trans_a)
                            : matmul_vals(va, !trans_a, g, false);
        Tensor& ga = grads[static_cast<std::size_t>(a)];
        Tensor& gb = grads[static_cast<std::size_t>(b)];
        for (std::size_t i = 0; i < da.data.size(); ++i) ga.data[i] += da.data[i];
        for (std::size_t i = 0; i < db.data.size(); ++i) gb.data[i] += db.data[i];
    };
    return push({Op::Matmul, {a, b}, std::move(out), std::move(bw), {}});
}

int ComputationTape::embedding(int table, const std::vector<int>& ids) {
    const Tensor& tt = in(table);
    if (tt.rank() != 2) {
        throw std::invalid_argument("embedding: table must be rank-2, got " +
                                    shape_str(tt.shape));
    }
    const int vocab = tt.shape[0];
    const int dim = tt.shape[1];
    for (int id : ids) {
        if (id < 0 || id >= vocab) {
            throw std::invalid_argument("embedding: id " + std::to_string(id) +
                                        " outside table " + shape_str(tt.shape));
        }
    }
    Tensor out = Tensor::zeros({static_cast<int>(ids.size()), dim});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double* src = tt.data.data() + static_cast<std::size_t>(ids[i]) * dim;
        double* dst = out.data.data() + i * dim;
        for (int j = 0; j < dim; ++j) dst[j] = src[j];
    }
    BackwardFn bw = [table, ids, dim](const ComputationTape&, const Tensor& g,
                                      std::vector<Tensor>& grads) {
        Tensor& gt = grads[static_cast<std::size_t>(table)];
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const double* src = g.data.data() + i * dim;
            double* dst = gt.data.data() + static_cast<std::size_t>(ids[i]) * dim;
            for (int j = 0; j < dim; ++j) dst[j] += src[j];
        }
    };
    return push({Op::Embedding, {table}, std::move(out), std::move(bw), {}});
}

int ComputationTape::layer_norm(int x, int gain, int bias, double eps) {
    const Tensor& tx = in(x);
    const Tensor& tg = in(gain);
    const Tensor& tb = in(bias);
    check_rank2(tx, "layer_norm");
    const int rows = view_rows(tx);
    const int cols = view_cols(tx);
    if (tg.rank() != 1 || tg.shape[0] != cols || !tg.same_shape(tb)) {
        throw std::invalid_argument("layer_norm: gain/bias " + shape_str(tg.shape) + "/" +
                                    shape_str(tb.shape) + " do not match input " +
                                    shape_str(tx.shape));
    }
    Tensor out = tx;
    // Cached for backward: per-row normalized values and 1/sqrt(var+eps).
    Tensor xhat = tx;
    std::vector<double> inv_std(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
        double* orow = out.data.data() + static_cast<std::size_t>(i) * cols;
        double* hrow = xhat.data.data() + static_cast<std::size_t>(i) * cols;
        const double* xrow = tx.data.data() + static_cast<std::size_t>(i) * cols;
        double mean = 0.0;
        for (int j = 0; j < cols; ++j) mean += xrow[j];
        mean /= cols;
        double var = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double d = xrow[j] - mean;
            var += d * d;
        }
        var /= cols;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(i)] = is;
        for (int j = 0; j < cols; ++j) {
            hrow[j] = (xrow[j] - mean) * is;
            orow[j] = tg.data[static_cast<std::size_t>(j)] * hrow[j] +
                      tb.data[static_cast<std::size_t>(j)];
        }
    }
    BackwardFn bw = [x, gain, bias, rows, cols, xhat, inv_std](
                        const ComputationTape& t, const Tensor& g, std::vector<Tensor>& grads) {
        const Tensor& vg = t.value(gain);
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        Tensor& gg = grads[static_cast<std::size_t>(gain)];
        Tensor& gb = grads[static_cast<std::size_t>(bias)];
        for (int i = 0; i < rows; ++i) {
            const double* grow = g.data.data() + static_cast<std::size_t>(i) * cols;
            const double* hrow = xhat.data.data() + static_cast<std::size_t>(i) * cols;
            double* xrow = gx.data.data() + static_cast<std::size_t>(i) * cols;
            double sum_gh = 0.0;   // mean of ghat
            double sum_ghh = 0.0;  // mean of ghat * xhat
            for (int j = 0; j < cols; ++j) {
                const double gh = grow[j] * vg.data[static_cast<std::size_t>(j)];
                sum_gh += gh;
                sum_ghh += gh * hrow[j];
                gg.data[static_cast<std::size_t>(j)] += grow[j] * hrow[j];
                gb.data[static_cast<std::size_t>(j)] += grow[j];
            }
            const double mean_gh = sum_gh / cols;
            const double mean_ghh = sum_ghh / cols;
            const double is = inv_std[static_cast<std::size_t>(i)];
            for (int j = 0; j < cols; ++j) {
                const double gh = grow[j] * vg.data[static_cast<std::size_t>(j)];
                xrow[j] += is * (gh - mean_gh - hrow[j] * mean_ghh);
            }
        }
    };
    return push({Op::LayerNorm, {x, gain, bias}, std::move(out), std::move(bw), {}});
}

int ComputationTape::gelu(int x) {
    const Tensor& tx = in(x);
    Tensor out = tx;
    for (double& v : out.data) v = v * 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    BackwardFn bw = [x](const ComputationTape& t, const Tensor& g, std::vector<Tensor>& grads) {
        const Tensor& vx = t.value(x);
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double v = vx.data[i];
            const double phi = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double dens = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            gx.data[i] += g.data[i] * (phi + v * dens);
        }
    };
    return push({Op::Gelu, {x}, std::move(out), std::move(bw), {}});
}

namespace {

// Shared row-wise kernel: writes softmax rows (and optionally log-softmax).
void softmax_rows(const Tensor& x, Tensor& soft, Tensor* logsoft) {
    const int rows = view_rows(x);
    const int cols = view_cols(x);
    for (int i = 0; i < rows; ++i) {
        const double* xrow = x.data.data() + static_cast<std::size_t>(i) * cols;
        double* srow = soft.data.data() + static_cast<std::size_t>(i) * cols;
        double mx = xrow[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, xrow[j]);
        double z = 0.0;
        for (int j = 0; j < cols; ++j) {
            srow[j] = std::exp(xrow[j] - mx);
            z += srow[j];
        }
        const double logz = std::log(z);
        for (int j = 0; j < cols; ++j) {
            if (logsoft != nullptr) {
                logsoft->data[static_cast<std::size_t>(i) * cols + j] = xrow[j] - mx - logz;
            }
            srow[j] /= z;
        }
    }
}

}  // namespace

int ComputationTape::softmax(int x) {
    const Tensor& tx = in(x);
    check_rank2(tx, "softmax");
    Tensor out = tx;
    softmax_rows(tx, out, nullptr);
    const int rows = view_rows(tx);
    const int cols = view_cols(tx);
    BackwardFn bw = [x, self = size(), rows, cols](const ComputationTape& t, const Tensor& g,
                                                   std::vector<Tensor>& grads) {
        const Tensor& s = t.value(self);
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        for (int i = 0; i < rows; ++i) {
            const double* srow = s.data.data() + static_cast<std::size_t>(i) * cols;
            const double* grow = g.data.data() + static_cast<std::size_t>(i) * cols;
            double* xrow = gx.data.data() + static_cast<std::size_t>(i) * cols;
            double dot = 0.0;
            for (int j = 0; j < cols; ++j) dot += grow[j] * srow[j];
            for (int j = 0; j < cols; ++j) xrow[j] += srow[j] * (grow[j] - dot);
        }
    };
    return push({Op::Softmax, {x}, std::move(out), std::move(bw), {}});
}

int ComputationTape::log_softmax(int x) {
    const Tensor& tx = in(x);
    check_rank2(tx, "log_softmax");
    Tensor soft = tx;
    Tensor out = tx;
    softmax_rows(tx, soft, &out);
    const int rows = view_rows(tx);
    const int cols = view_cols(tx);
    BackwardFn bw = [x, rows, cols, soft](const ComputationTape&, const Tensor& g,
                                          std::vector<Tensor>& grads) {
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        for (int i = 0; i < rows; ++i) {
            const double* srow = soft.data.data() + static_cast<std::size_t>(i) * cols;
            const double* grow = g.data.data() + static_cast<std::size_t>(i) * cols;
            double* xrow = gx.data.data() + static_cast<std::size_t>(i) * cols;
            double gsum = 0.0;
            for (int j = 0; j < cols; ++j) gsum += grow[j];
            for (int j = 0; j < cols; ++j) xrow[j] += grow[j] - srow[j] * gsum;
        }
    };
    return push({Op::LogSoftmax, {x}, std::move(out), std::move(bw), {}});
}

int ComputationTape::reshape(int x, const std::vector<int>& shape) {
    const Tensor& tx = in(x);
    if (shape_numel(shape) != tx.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(tx.shape) + " as " +
                                    shape_str(shape));
    }
    Tensor out;
    out.shape = shape;
    out.data = tx.data;
    BackwardFn bw = [x](const ComputationTape&, const Tensor& g, std::vector<Tensor>& grads) {
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    };
    return push({Op::Reshape, {x}, std::move(out), std::move(bw), {}});
}

int ComputationTape::slice(int x, int axis, int start, int len) {
    const Tensor& tx = in(x);
    check_rank2(tx, "slice");
    if (axis < 0 || axis >= tx.rank()) {
        throw std::invalid_argument("slice: axis " + std::to_string(axis) + " invalid for " +
                                    shape_str(tx.shape));
    }
    const int extent = tx.shape[static_cast<std::size_t>(axis)];
    if (start < 0 || len <= 0 || start + len > extent) {
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") outside " +
                                    shape_str(tx.shape) + " axis " + std::to_string(axis));
    }
    Tensor out;
    if (tx.rank() == 1) {
        out = Tensor::zeros({len});
        for (int j = 0; j < len; ++j) out.data[static_cast<std::size_t>(j)] =
            tx.data[static_cast<std::size_t>(start + j)];
    } else if (axis == 0) {
        const int cols = tx.shape[1];
        out = Tensor::zeros({len, cols});
        std::copy(tx.data.begin() + static_cast<std::ptrdiff_t>(start) * cols,
                  tx.data.begin() + static_cast<std::ptrdiff_t>(start + len) * cols,
                  out.data.begin());
    } else {
        const int rows = tx.shape[0];
        const int cols = tx.shape[1];
        out = Tensor::zeros({rows, len});
        for (int i = 0; i < rows; ++i) {
            const double* src = tx.data.data() + static_cast<std::size_t>(i) * cols + start;
            double* dst = out.data.data() + static_cast<std::size_t>(i) * len;
            for (int j = 0; j < len; ++j) dst[j] = src[j];
        }
    }
    const int rank = tx.rank();
    const int in_cols = rank == 2 ? tx.shape[1] : 0;
    BackwardFn bw = [x, axis, start, len, rank, in_cols](const ComputationTape&, const Tensor& g,
                                                         std::vector<Tensor>& grads) {
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        if (rank == 1) {
            for (int j = 0; j < len; ++j) gx.data[static_cast<std::size_t>(start + j)] +=
                g.data[static_cast<std::size_t>(j)];
        } else if (axis == 0) {
            double* dst = gx.data.data() + static_cast<std::size_t>(start) * in_cols;
            for (std::size_t i = 0; i < g.data.size(); ++i) dst[i] += g.data[i];
        } else {
            const int rows = gx.shape[0];
            for (int i = 0; i < rows; ++i) {
                const double* src = g.data.data() + static_cast<std::size_t>(i) * len;
                double* dst = gx.data.data() + static_cast<std::size_t>(i) * in_cols + start;
                for (int j = 0; j < len; ++j) dst[j] += src[j];
            }
        }
    };
    return push({Op::Slice, {x}, std::move(out), std::move(bw), {}});
}

int ComputationTape::concat(const std::vector<int>& xs, int axis) {
    if (xs.empty()) throw std::invalid_argument("concat: no operands");
    const Tensor& first = in(xs[0]);
    check_rank2(first, "concat");
    const int rank = first.rank();
    if (axis < 0 || axis >= rank) {
        throw std::invalid_argument("concat: axis " + std::to_string(axis) + " invalid for " +
                                    shape_str(first.shape));
    }
    const int other = 1 - axis;
    int total = 0;
    for (int id : xs) {
        const Tensor& t = in(id);
        if (t.rank() != rank ||
            (rank == 2 && t.shape[static_cast<std::size_t>(other)] !=
                              first.shape[static_cast<std::size_t>(other)])) {
            throw std::invalid_argument("concat: shape " + shape_str(t.shape) +
                                        " incompatible with " + shape_str(first.shape) +
                                        " on axis " + std::to_string(axis));
        }
        total += t.shape[static_cast<std::size_t>(axis)];
    }
    Tensor out;
    if (rank == 1) {
        out = Tensor::zeros({total});
        std::size_t off = 0;
        for (int id : xs) {
            const Tensor& t = in(id);
            std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
            off += t.data.size();
        }
    } else if (axis == 0) {
        out = Tensor::zeros({total, first.shape[1]});
        std::size_t off = 0;
        for (int id : xs) {
            const Tensor& t = in(id);
            std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
            off += t.data.size();
        }
    } else {
        const int rows = first.shape[0];
        out = Tensor::zeros({rows, total});
        int col_off = 0;
        for (int id : xs) {
            const Tensor& t = in(id);
            const int cols = t.shape[1];
            for (int i = 0; i < rows; ++i) {
                const double* src = t.data.data() + static_cast<std::size_t>(i) * cols;
                double* dst = out.data.data() + static_cast<std::size_t>(i) * total + col_off;
                for (int j = 0; j < cols; ++j) dst[j] = src[j];
            }
            col_off += cols;
        }
    }
    std::vector<int> ids = xs;
    BackwardFn bw = [ids, axis, rank, total](const ComputationTape&, const Tensor& g,
                                             std::vector<Tensor>& grads) {
        if (rank == 1 || axis == 0) {
            std::size_t off = 0;
            for (int id : ids) {
                Tensor& gx = grads[static_cast<std::size_t>(id)];
                for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g.data[off + i];
                off += gx.data.size();
            }
        } else {
            int col_off = 0;
            for (int id : ids) {
                Tensor& gx = grads[static_cast<std::size_t>(id)];
                const int rows = gx.shape[0];
                const int cols = gx.shape[1];
                for (int i = 0; i < rows; ++i) {
                    const double* src = g.data.data() + static_cast<std::size_t>(i) * total + col_off;
                    double* dst = gx.data.data() + static_cast<std::size_t>(i) * cols;
                    for (int j = 0; j < cols; ++j) dst[j] += src[j];
                }
                col_off += cols;
            }
        }
    };
    return push({Op::Concat, ids, std::move(out), std::move(bw), {}});
}

int ComputationTape::mean(int x) {
    const Tensor& tx = in(x);
    if (tx.numel() == 0) throw std::invalid_argument("mean: empty tensor");
    double acc = 0.0;
    for (double v : tx.data) acc += v;
    const double inv_n = 1.0 / static_cast<double>(tx.numel());
    BackwardFn bw = [x, inv_n](const ComputationTape&, const Tensor& g, std::vector<Tensor>& grads) {
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        const double gv = g.data[0] * inv_n;
        for (double& v : gx.data) v += gv;
    };
    return push({Op::Mean, {x}, Tensor::scalar(acc * inv_n), std::move(bw), {}});
}

int ComputationTape::sum(int x) {
    const Tensor& tx = in(x);
    double acc = 0.0;
    for (double v : tx.data) acc += v;
    BackwardFn bw = [x](const ComputationTape&, const Tensor& g, std::vector<Tensor>& grads) {
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        const double gv = g.data[0];
        for (double& v : gx.data) v += gv;
    };
    return push({Op::Sum, {x}, Tensor::scalar(acc), std::move(bw), {}});
}

int ComputationTape::custom(const std::string& label, std::vector<int> inputs, Tensor value,
                            BackwardFn backward) {
    for (int id : inputs) in(id);  // validate now, not at backward time
    return push({Op::Custom, std::move(inputs), std::move(value), std::move(backward), label});
}

std::vector<Tensor> ComputationTape::backward(int loss) const {
    const Tensor& lv = in(loss);
    if (lv.numel() != 1) {
        throw std::invalid_argument("backward: loss node must be scalar, got " +
                                    shape_str(lv.shape));
    }
    const std::size_t n = nodes_.size();
    std::vector<Tensor> grads(n);
    for (std::size_t i = 0; i < n; ++i) grads[i] = Tensor::zeros(nodes_[i].value.shape);

    // Only ancestors of the loss contribute; everything else keeps its zeros.
    std::vector<char> reach(n, 0);
    reach[static_cast<std::size_t>(loss)] = 1;
    for (int id = loss; id >= 0; --id) {
        if (!reach[static_cast<std::size_t>(id)]) continue;
        for (int input : nodes_[static_cast<std::size_t>(id)].inputs) {
            reach[static_cast<std::size_t>(input)] = 1;
        }
    }

    grads[static_cast<std::size_t>(loss)] = Tensor::full(lv.shape, 1.0);
    for (int id = loss; id >= 0; --id) {
        const Node& nd = nodes_[static_cast<std::size_t>(id)];
        if (!reach[static_cast<std::size_t>(id)] || !nd.backward) continue;
        nd.backward(*this, grads[static_cast<std::size_t>(id)], grads);
    }

    // Constants are gradient sinks; whatever their consumers scattered in
    // is discarded so frozen parameters always report zero.
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].op == Op::Constant) {
            std::fill(grads[i].data.begin(), grads[i].data.end(), 0.0);
        }
    }
    return grads;
}

}  // namespace fitkd
