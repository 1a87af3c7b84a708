#include "fitkd/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace fitkd {

namespace {

constexpr double kProbFloor = 1e-12;

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

void validate_distribution(const char* what, const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) {
            throw std::invalid_argument(std::string("divergence: ") + what +
                                        " has negative mass");
        }
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string("divergence: ") + what + " sums to " +
                                    std::to_string(sum) + ", not 1");
    }
}

// Unvalidated kernel; callers either validated or built p/q by softmax.
double divergence_raw(DivergenceKind kind, const double* p, const double* q, int n) {
    double acc = 0.0;
    switch (kind) {
        case DivergenceKind::FKL:
            for (int i = 0; i < n; ++i) {
                if (p[i] > 0.0) acc += p[i] * (floored_log(p[i]) - floored_log(q[i]));
            }
            break;
        case DivergenceKind::JS:
            for (int i = 0; i < n; ++i) {
                const double m = 0.5 * (p[i] + q[i]);
                if (p[i] > 0.0) acc += 0.5 * p[i] * (floored_log(p[i]) - floored_log(m));
                if (q[i] > 0.0) acc += 0.5 * q[i] * (floored_log(q[i]) - floored_log(m));
            }
            break;
        case DivergenceKind::TVD:
            for (int i = 0; i < n; ++i) acc += 0.5 * std::fabs(p[i] - q[i]);
            break;
        case DivergenceKind::SKL:
            acc = divergence_raw(DivergenceKind::FKL, p, q, n) +
                  divergence_raw(DivergenceKind::FKL, q, p, n);
            break;
    }
    // Tiny negative values can appear from cancellation when p ~ q.
    return std::max(acc, 0.0);
}

// ∂ d(p, q) / ∂ q, evaluated elementwise into g.
void divergence_grad_q(DivergenceKind kind, const double* p, const double* q, int n,
                       double* g) {
    switch (kind) {
        case DivergenceKind::FKL:
            for (int i = 0; i < n; ++i) g[i] = -p[i] / std::max(q[i], kProbFloor);
            break;
        case DivergenceKind::JS:
            for (int i = 0; i < n; ++i) {
                const double m = 0.5 * (p[i] + q[i]);
                g[i] = 0.5 * (floored_log(q[i]) - floored_log(m));
            }
            break;
        case DivergenceKind::TVD:
            for (int i = 0; i < n; ++i) {
                g[i] = q[i] > p[i] ? 0.5 : q[i] < p[i] ? -0.5 : 0.0;
            }
            break;
        case DivergenceKind::SKL:
            for (int i = 0; i < n; ++i) {
                g[i] = -p[i] / std::max(q[i], kProbFloor) + floored_log(q[i]) -
                       floored_log(p[i]) + 1.0;
            }
            break;
    }
}

void softmax_row(const double* x, double* out, int n) {
    double mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(x[i] - mx);
        z += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= z;
}

int masked_count(const std::vector<int>& mask) {
    int count = 0;
    for (int m : mask) count += m != 0 ? 1 : 0;
    return count;
}

}  // namespace

const char* divergence_name(DivergenceKind kind) {
    switch (kind) {
        case DivergenceKind::FKL: return "fkl";
        case DivergenceKind::JS: return "js";
        case DivergenceKind::TVD: return "tvd";
        case DivergenceKind::SKL: return "skl";
    }
    return "?";
}

DivergenceKind divergence_from_name(const std::string& name) {
    for (DivergenceKind kind : kAllDivergences) {
        if (name == divergence_name(kind)) return kind;
    }
    throw std::invalid_argument("divergence: unknown kind \"" + name +
                                "\" (expected fkl, js, tvd, or skl)");
}

double divergence(DivergenceKind kind, const std::vector<double>& p,
                  const std::vector<double>& q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("divergence: length mismatch, " + std::to_string(p.size()) +
                                    " vs " + std::to_string(q.size()));
    }
    validate_distribution("p", p);
    validate_distribution("q", q);
    return divergence_raw(kind, p.data(), q.data(), static_cast<int>(p.size()));
}

int sft_loss_node(ComputationTape& tape, int logits, const std::vector<int>& targets,
                  const std::vector<int>& mask) {
    const Tensor& lv = tape.value(logits);
    if (lv.rank() != 2 || lv.shape[0] != static_cast<int>(targets.size()) ||
        targets.size() != mask.size()) {
        throw std::invalid_argument("sft_loss: logits " + shape_str(lv.shape) + " vs " +
                                    std::to_string(targets.size()) + " targets, " +
                                    std::to_string(mask.size()) + " mask flags");
    }
    const int vocab = lv.shape[1];
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (mask[i] != 0 && (targets[i] < 0 || targets[i] >= vocab)) {
            throw std::invalid_argument("sft_loss: target " + std::to_string(targets[i]) +
                                        " outside vocabulary of " + std::to_string(vocab));
        }
    }
    const int count = masked_count(mask);
    if (count == 0) throw std::invalid_argument("sft_loss: every position is masked");

    const int rows = lv.shape[0];
    std::vector<double> probs(static_cast<std::size_t>(vocab));
    double total = 0.0;
    for (int i = 0; i < rows; ++i) {
        if (mask[static_cast<std::size_t>(i)] == 0) continue;
        softmax_row(lv.data.data() + static_cast<std::size_t>(i) * vocab, probs.data(), vocab);
        total -= floored_log(probs[static_cast<std::size_t>(targets[static_cast<std::size_t>(i)])]);
    }
    const double inv_count = 1.0 / count;

    BackwardFn bw = [logits, targets, mask, vocab, rows, inv_count](
                        const ComputationTape& t, const Tensor& g, std::vector<Tensor>& grads) {
        const Tensor& lvv = t.value(logits);
        Tensor& gl = grads[static_cast<std::size_t>(logits)];
        std::vector<double> row(static_cast<std::size_t>(vocab));
        const double scale = g.data[0] * inv_count;
        for (int i = 0; i < rows; ++i) {
            if (mask[static_cast<std::size_t>(i)] == 0) continue;
            softmax_row(lvv.data.data() + static_cast<std::size_t>(i) * vocab, row.data(), vocab);
            double* dst = gl.data.data() + static_cast<std::size_t>(i) * vocab;
            for (int j = 0; j < vocab; ++j) dst[j] += scale * row[static_cast<std::size_t>(j)];
            dst[targets[static_cast<std::size_t>(i)]] -= scale;
        }
    };
    return tape.custom("sft_loss", {logits}, Tensor::scalar(total * inv_count), std::move(bw));
}

int kd_loss_node(ComputationTape& tape, DivergenceKind kind, int teacher_logits,
                 int student_logits, const std::vector<int>& mask) {
    const Tensor& tv = tape.value(teacher_logits);
    const Tensor& sv = tape.value(student_logits);
    if (!tv.same_shape(sv) || sv.rank() != 2 ||
        sv.shape[0] != static_cast<int>(mask.size())) {
        throw std::invalid_argument("kd_loss: teacher " + shape_str(tv.shape) + " vs student " +
                                    shape_str(sv.shape) + " with " +
                                    std::to_string(mask.size()) + " mask flags");
    }
    const int count = masked_count(mask);
    if (count == 0) throw std::invalid_argument("kd_loss: every position is masked");

    const int rows = sv.shape[0];
    const int vocab = sv.shape[1];
    std::vector<double> p(static_cast<std::size_t>(vocab));
    std::vector<double> q(static_cast<std::size_t>(vocab));
    double total = 0.0;
    for (int i = 0; i < rows; ++i) {
        if (mask[static_cast<std::size_t>(i)] == 0) continue;
        softmax_row(tv.data.data() + static_cast<std::size_t>(i) * vocab, p.data(), vocab);
        softmax_row(sv.data.data() + static_cast<std::size_t>(i) * vocab, q.data(), vocab);
        total += divergence_raw(kind, p.data(), q.data(), vocab);
    }
    const double inv_count = 1.0 / count;

    // Gradient per unmasked row: with g = ∂d/∂q and q = softmax(s), the
    // softmax Jacobian gives ∂d/∂s = q ⊙ (g − ⟨g, q⟩).
    BackwardFn bw = [kind, teacher_logits, student_logits, mask, rows, vocab, inv_count](
                        const ComputationTape& t, const Tensor& g, std::vector<Tensor>& grads) {
        const Tensor& tvv = t.value(teacher_logits);
        const Tensor& svv = t.value(student_logits);
        Tensor& gs = grads[static_cast<std::size_t>(student_logits)];
        std::vector<double> p(static_cast<std::size_t>(vocab));
        std::vector<double> q(static_cast<std::size_t>(vocab));
        std::vector<double> gq(static_cast<std::size_t>(vocab));
        const double scale = g.data[0] * inv_count;
        for (int i = 0; i < rows; ++i) {
            if (mask[static_cast<std::size_t>(i)] == 0) continue;
            softmax_row(tvv.data.data() + static_cast<std::size_t>(i) * vocab, p.data(), vocab);
            softmax_row(svv.data.data() + static_cast<std::size_t>(i) * vocab, q.data(), vocab);
            divergence_grad_q(kind, p.data(), q.data(), vocab, gq.data());
            double dot = 0.0;
            for (int j = 0; j < vocab; ++j) dot += gq[static_cast<std::size_t>(j)] *
                q[static_cast<std::size_t>(j)];
            double* dst = gs.data.data() + static_cast<std::size_t>(i) * vocab;
            for (int j = 0; j < vocab; ++j) {
                dst[j] += scale * q[static_cast<std::size_t>(j)] *
                          (gq[static_cast<std::size_t>(j)] - dot);
            }
        }
    };
    // The teacher is intentionally absent from the input list: it is a
    // constant of the objective, so reachability (and gradient) stop here.
    return tape.custom(std::string("kd_loss_") + divergence_name(kind), {student_logits},
                       Tensor::scalar(total * inv_count), std::move(bw));
}

int explanation_loss_node(ComputationTape& tape, DivergenceKind kind, int teacher_logits,
                          int student_logits, const std::vector<int>& targets,
                          const std::vector<int>& mask, const LossWeights& weights,
                          LossReport* report) {
    if (weights.lambda_sft < 0.0 || weights.lambda_kd < 0.0 ||
        weights.lambda_sft + weights.lambda_kd <= 0.0) {
        throw std::invalid_argument("explanation_loss: weights must be nonnegative with a "
                                    "positive sum");
    }
    int sft = -1;
    int kd = -1;
    if (weights.lambda_sft > 0.0) sft = sft_loss_node(tape, student_logits, targets, mask);
    if (weights.lambda_kd > 0.0) kd = kd_loss_node(tape, kind, teacher_logits, student_logits, mask);

    int combined;
    if (kd < 0) {
        combined = tape.multiply(sft, tape.constant(Tensor::scalar(weights.lambda_sft)));
    } else if (sft < 0) {
        combined = tape.multiply(kd, tape.constant(Tensor::scalar(weights.lambda_kd)));
    } else {
        combined = tape.add(
            tape.multiply(sft, tape.constant(Tensor::scalar(weights.lambda_sft))),
            tape.multiply(kd, tape.constant(Tensor::scalar(weights.lambda_kd))));
    }
    if (report != nullptr) {
        report->sft = sft >= 0 ? tape.value(sft).data[0] : 0.0;
        report->kd = kd >= 0 ? tape.value(kd).data[0] : 0.0;
        report->combined = tape.value(combined).data[0];
        report->token_count = masked_count(mask);
    }
    return combined;
}

double classification_loss(const std::vector<double>& zhat, int label) {
    if (zhat.size() != 3) {
        throw std::invalid_argument("classification_loss: expected a probability triple, got " +
                                    std::to_string(zhat.size()) + " entries");
    }
    validate_distribution("zhat", zhat);
    if (label < 0 || label > 2) {
        throw std::invalid_argument("classification_loss: label " + std::to_string(label) +
                                    " outside {0,1,2}");
    }
    return -floored_log(zhat[static_cast<std::size_t>(label)]);
}

int classification_loss_node(ComputationTape& tape, int zhat, int label) {
    const Tensor& zv = tape.value(zhat);
    const double value = classification_loss(zv.data, label);
    BackwardFn bw = [zhat, label](const ComputationTape& t, const Tensor& g,
                                  std::vector<Tensor>& grads) {
        const Tensor& zvv = t.value(zhat);
        const double p = std::max(zvv.data[static_cast<std::size_t>(label)], kProbFloor);
        grads[static_cast<std::size_t>(zhat)].data[static_cast<std::size_t>(label)] -=
            g.data[0] / p;
    };
    return tape.custom("classification_loss", {zhat}, Tensor::scalar(value), std::move(bw));
}

}  // namespace fitkd
