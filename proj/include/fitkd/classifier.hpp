#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fitkd/model.hpp"
#include "fitkd/tape.hpp"

namespace fitkd {

enum class Pooling { LastToken, Mean };
enum class ClsStructure { SeqCls, TwoTower };
enum class Interaction { Concat, DotProduct };

const char* pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);
const char* structure_name(ClsStructure s);
ClsStructure structure_from_name(const std::string& name);
const char* interaction_name(Interaction i);
Interaction interaction_from_name(const std::string& name);

// Causal trunk reused as the encoder, a pooling rule, and a small MLP head
// over three fit categories. SeqCls encodes the joint job+profile sequence
// with one trunk; TwoTower encodes job and profile separately and combines
// the pooled embeddings (concat doubles the head input, dot-product keeps
// it at model_dim).
struct EncoderClassifier {
    ClsStructure structure = ClsStructure::SeqCls;
    Pooling pooling = Pooling::LastToken;
    Interaction interaction = Interaction::Concat;
    bool finetune_trunk = true;
    int head_hidden = 32;
    LanguageModel trunk;          // SeqCls encoder; job tower for TwoTower
    LanguageModel profile_trunk;  // TwoTower only
    ParamSet head;                // fc1 (in → hidden), fc2 (hidden → 3)
};

EncoderClassifier init_classifier(const ModelConfig& trunk_config, ClsStructure structure,
                                  Pooling pooling, Interaction interaction, int head_hidden,
                                  std::uint64_t seed);

int classifier_head_input_dim(const EncoderClassifier& encoder);

struct BoundClassifier {
    BoundParams trunk;
    BoundParams profile_trunk;
    BoundParams head;
};

BoundClassifier bind_classifier(ComputationTape& tape, const EncoderClassifier& encoder);

// Pooled embedding node [model_dim] for already-bound trunk parameters.
int pooled_node(ComputationTape& tape, const LanguageModel& trunk, const BoundParams& bound,
                Pooling pooling, const std::vector<int>& tokens);

// Probability-triple node [3]. SeqCls ignores profile_tokens (pass empty);
// TwoTower requires both sequences.
int classifier_zhat_node(ComputationTape& tape, const EncoderClassifier& encoder,
                         const BoundClassifier& bound, const std::vector<int>& tokens,
                         const std::vector<int>& profile_tokens);

// Value-only conveniences.
Tensor encode_pooled(const EncoderClassifier& encoder, const std::vector<int>& tokens);
std::vector<double> classify(const EncoderClassifier& encoder, const Tensor& h);
std::vector<double> two_tower_score(const EncoderClassifier& encoder,
                                    const std::vector<int>& job_tokens,
                                    const std::vector<int>& profile_tokens);
// Dispatches on structure: SeqCls takes the joint sequence via `tokens`.
std::vector<double> classify_pair(const EncoderClassifier& encoder,
                                  const std::vector<int>& tokens,
                                  const std::vector<int>& profile_tokens);

}  // namespace fitkd
