#pragma once

#include <string>
#include <vector>

#include "fitkd/tape.hpp"
#include "fitkd/tensor.hpp"

namespace fitkd {

enum class DivergenceKind { FKL, JS, TVD, SKL };

constexpr DivergenceKind kAllDivergences[] = {DivergenceKind::FKL, DivergenceKind::JS,
                                              DivergenceKind::TVD, DivergenceKind::SKL};

const char* divergence_name(DivergenceKind kind);
DivergenceKind divergence_from_name(const std::string& name);

struct LossWeights {
    double lambda_sft = 0.1;
    double lambda_kd = 0.9;
};

struct LossReport {
    double sft = 0.0;
    double kd = 0.0;
    double combined = 0.0;
    long token_count = 0;
};

// Distance between two distributions over the same support. Inputs are
// validated (same length, nonnegative, sums within 1e-9 of 1); probabilities
// are floored at 1e-12 inside every logarithm, which is part of each loss's
// definition here. Natural log throughout.
//
//   FKL(p‖q) = Σ p ln(p/q)
//   JS(p‖q)  = ½ KL(p‖m) + ½ KL(q‖m),  m = (p+q)/2
//   TVD(p,q) = ½ Σ |p − q|
//   SKL(p‖q) = FKL(p‖q) + FKL(q‖p)
double divergence(DivergenceKind kind, const std::vector<double>& p,
                  const std::vector<double>& q);

// Mean over unmasked positions of −ln softmax(logits_row)[target]. Records a
// node whose gradient w.r.t. the logits is (softmax − one-hot)/count on
// unmasked rows. mask entries are 0/1; at least one must be set.
int sft_loss_node(ComputationTape& tape, int logits, const std::vector<int>& targets,
                  const std::vector<int>& mask);

// Mean over unmasked positions of divergence(kind, softmax(teacher_row),
// softmax(student_row)). The teacher operand is treated as a constant: no
// gradient flows to it even if it is differentiable.
int kd_loss_node(ComputationTape& tape, DivergenceKind kind, int teacher_logits,
                 int student_logits, const std::vector<int>& mask);

// combined = lambda_sft·sft + lambda_kd·kd, assembled from the two loss
// nodes with tape primitives. A component with zero weight is not recorded
// or evaluated at all (its report field stays 0), so training with
// lambda_kd = 0 never touches the teacher operand. Pass teacher_logits = -1
// only in that case.
int explanation_loss_node(ComputationTape& tape, DivergenceKind kind, int teacher_logits,
                          int student_logits, const std::vector<int>& targets,
                          const std::vector<int>& mask, const LossWeights& weights,
                          LossReport* report = nullptr);

// −ln zhat[label] with the 1e-12 floor; zhat must be a valid probability
// triple (Low/Medium/High order).
double classification_loss(const std::vector<double>& zhat, int label);

// Same, recorded on the tape against a [3] distribution node (typically a
// softmax output, whose own backward completes the chain to the logits).
int classification_loss_node(ComputationTape& tape, int zhat, int label);

}  // namespace fitkd
