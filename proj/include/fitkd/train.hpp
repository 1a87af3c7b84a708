#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fitkd/checkpoint.hpp"
#include "fitkd/classifier.hpp"
#include "fitkd/dataset.hpp"
#include "fitkd/metrics.hpp"
#include "fitkd/model.hpp"
#include "fitkd/objectives.hpp"
#include "fitkd/report.hpp"

namespace fitkd {

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 1;
    int batch_size = 16;
    double weight_decay = 0.01;
    int max_seq_len = 256;
    std::uint64_t seed = 0;
    LossWeights weights;  // combined-loss mix for distillation
    DivergenceKind divergence = DivergenceKind::FKL;
};

// learning_rate and epochs may be zero (null update / metrics-from-init are
// meaningful runs); everything else must be positive.
void validate_train_config(const TrainConfig& config);

// Fingerprint over the flattened model + train settings, recorded in
// checkpoint provenance.
std::string train_config_digest(const ModelConfig& model, const TrainConfig& train);

std::string model_size_label(const ModelConfig& config);  // e.g. "4L64"

// AdamW with decoupled weight decay: β₁=0.9, β₂=0.999, ε=1e-8, constant
// learning rate. Parameter groups update in their concatenated tensor
// order; step() takes gradients aligned with that order.
class AdamW {
public:
    AdamW(std::vector<ParamSet*> groups, double learning_rate, double weight_decay);
    void step(const std::vector<Tensor>& grads);
    std::size_t tensor_count() const { return index_.size(); }

private:
    std::vector<ParamSet*> groups_;
    std::vector<std::pair<std::size_t, std::size_t>> index_;  // (group, tensor)
    double lr_;
    double wd_;
    long t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

// Next-token supervision minimizing the reference cross-entropy. Per epoch:
// seeded shuffle, batches of batch_size examples, per-example backward with
// gradients accumulated into a batch mean, one AdamW step per batch.
// Deterministic given (config, data, train). Returns the trained checkpoint
// and per-epoch mean losses (the corpus loss is the mean of per-example
// losses). A non-finite loss aborts, naming the epoch, batch, and record.
std::pair<Checkpoint, std::vector<LossReport>> train_sft(const ModelConfig& config,
                                                         const std::vector<ExampleRecord>& data,
                                                         const TrainConfig& train,
                                                         const std::string& path_name = "sft",
                                                         int stage_index = 0);

// Distills a frozen teacher into a fresh student by minimizing
// λ_sft·ℓ_sft + λ_kd·ℓ_kd, with teacher distributions computed once per
// example under teacher forcing on the reference targets. λ_kd = 0 skips
// the teacher entirely, making the trajectory identical to train_sft with
// the same settings (bit-for-bit when λ_sft = 1). The teacher parameter
// digest is checked before and after.
std::pair<Checkpoint, std::vector<LossReport>> distill_explanation(
    const Checkpoint& teacher, const ModelConfig& student_config,
    const std::vector<ExampleRecord>& data, const TrainConfig& train,
    const std::string& path_name = "distill-exp", int stage_index = 0);

// Held-out distillation gap: mean over records of the masked-position
// divergence between teacher and student next-token distributions (teacher
// forcing on reference targets). Shares the training-loss kernel, so a
// parameter-identical student measures exactly zero.
double eval_kd(const LanguageModel& teacher, const LanguageModel& student,
               const std::vector<ExampleRecord>& records, DivergenceKind kind);

enum class LabelMode { Explanation, Classification };

struct GeneratedRecords {
    std::vector<ExampleRecord> records;
    std::vector<RejectedRecord> rejected;  // unparseable teacher outputs, with reasons
};

// Greedy-decodes the teacher on each (job, profile) prompt. Explanation
// mode keeps the full decoded target; classification mode reduces it to the
// final "fit <label>" line. Outputs that lack a parseable fit line are
// returned as rejections, never silently dropped. Deterministic.
GeneratedRecords generate_labels(const Checkpoint& teacher,
                                 const std::vector<std::pair<JobPosting, MemberProfile>>& inputs,
                                 LabelMode mode, const Vocab& vocab,
                                 const TemplateSet& templates);

// One classifier training example; sequences carry no <bos>/<sep> framing
// (the encoder adds it).
struct ClsExample {
    std::string id;
    std::vector<int> job_tokens;
    std::vector<int> profile_tokens;
    FitLabel label = FitLabel::Low;
};

// SeqCls joint encoder input: <bos> job <sep> profile.
std::vector<int> cls_joint_tokens(const std::vector<int>& job_tokens,
                                  const std::vector<int>& profile_tokens);
// Tower input: <bos> + text.
std::vector<int> cls_tower_tokens(const std::vector<int>& text_tokens);

struct ClsEpochReport {
    int epoch = 0;  // 0 = initialization, before any update
    double train_loss = 0.0;
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
};

// Cross-entropy training of an encoder classifier over ẑ. A deterministic
// holdout split (seeded shuffle, last ceil(fraction·N) examples) is scored
// for accuracy and weighted F1 at initialization and after every epoch.
// Zero epochs returns the initialized model with its init metrics. A
// single-class dataset warns (weighted F1 is degenerate) and proceeds.
std::pair<Checkpoint, std::vector<ClsEpochReport>> distill_classifier(
    const ModelConfig& trunk_config, const std::vector<ClsExample>& data,
    const TrainConfig& train, ClsStructure structure, Pooling pooling, Interaction interaction,
    double holdout_fraction = 0.1);

FitLabel predict_fit(const EncoderClassifier& encoder, const ClsExample& example);

struct PathStage {
    std::string kind;  // "sft" | "distill"
    ModelConfig model;
    TrainConfig train;
};

struct DistillPath {
    std::string name;
    std::string initial_teacher;  // checkpoint path; required iff the first stage distills
    std::vector<PathStage> stages;
};

void validate_path(const DistillPath& path);

struct PathResult {
    std::vector<Checkpoint> checkpoints;  // one per stage, in order
    std::vector<ReportRow> rows;          // one per distill stage:
                                          // path, teacher, student, divergence,
                                          // nll, rouge1, rouge2, rougeL
};

// Executes the stages in order, each feeding the next as teacher. Students
// are scored with eval_explanations against the initial teacher's greedy
// decodes on the eval prompts, so report numbers equal the evaluation
// module's by construction. When artifact_dir is nonempty each stage's
// checkpoint is saved there as it completes (partial results survive a
// failed later stage).
PathResult run_path(const DistillPath& path, const std::vector<ExampleRecord>& train_data,
                    const std::vector<ExampleRecord>& eval_records,
                    const std::string& artifact_dir = "");

}  // namespace fitkd
