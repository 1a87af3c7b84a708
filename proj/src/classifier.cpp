#include "fitkd/classifier.hpp"

#include <stdexcept>

#include "fitkd/rng.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

const char* pooling_name(Pooling p) {
    return p == Pooling::LastToken ? "last-token" : "mean";
}

Pooling pooling_from_name(const std::string& name) {
    if (name == "last-token") return Pooling::LastToken;
    if (name == "mean") return Pooling::Mean;
    throw std::invalid_argument("pooling: unknown name \"" + name + "\"");
}

const char* structure_name(ClsStructure s) {
    return s == ClsStructure::SeqCls ? "seqcls" : "two-tower";
}

ClsStructure structure_from_name(const std::string& name) {
    if (name == "seqcls") return ClsStructure::SeqCls;
    if (name == "two-tower") return ClsStructure::TwoTower;
    throw std::invalid_argument("classifier structure: unknown name \"" + name + "\"");
}

const char* interaction_name(Interaction i) {
    return i == Interaction::Concat ? "concat" : "dot-product";
}

Interaction interaction_from_name(const std::string& name) {
    if (name == "concat") return Interaction::Concat;
    if (name == "dot-product") return Interaction::DotProduct;
    throw std::invalid_argument("interaction: unknown name \"" + name + "\"");
}

int classifier_head_input_dim(const EncoderClassifier& encoder) {
    const int d = encoder.trunk.config.model_dim;
    if (encoder.structure == ClsStructure::TwoTower &&
        encoder.interaction == Interaction::Concat) {
        return 2 * d;
    }
    return d;
}

EncoderClassifier init_classifier(const ModelConfig& trunk_config, ClsStructure structure,
                                  Pooling pooling, Interaction interaction, int head_hidden,
                                  std::uint64_t seed) {
    if (head_hidden < 1) {
        throw std::invalid_argument("classifier: head_hidden must be positive, got " +
                                    std::to_string(head_hidden));
    }
    EncoderClassifier encoder;
    encoder.structure = structure;
    encoder.pooling = pooling;
    encoder.interaction = interaction;
    encoder.head_hidden = head_hidden;

    ModelConfig cfg = trunk_config;
    cfg.seed = seed;
    encoder.trunk = init_model(cfg, "student");
    if (structure == ClsStructure::TwoTower) {
        ModelConfig profile_cfg = trunk_config;
        profile_cfg.seed = seed + 1;
        encoder.profile_trunk = init_model(profile_cfg, "student");
    }

    Rng rng(seed + 2);
    const int in = classifier_head_input_dim(encoder);
    auto normal = [&rng](std::vector<int> shape) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (double& v : t.data) v = rng.normal(0.0, 0.02);
        return t;
    };
    encoder.head.add("head.fc1.w", normal({in, head_hidden}));
    encoder.head.add("head.fc1.b", Tensor::zeros({head_hidden}));
    encoder.head.add("head.fc2.w", normal({head_hidden, 3}));
    encoder.head.add("head.fc2.b", Tensor::zeros({3}));
    return encoder;
}

BoundClassifier bind_classifier(ComputationTape& tape, const EncoderClassifier& encoder) {
    BoundClassifier bound;
    bound.trunk = bind_params(tape, encoder.trunk.params, encoder.finetune_trunk);
    if (encoder.structure == ClsStructure::TwoTower) {
        bound.profile_trunk =
            bind_params(tape, encoder.profile_trunk.params, encoder.finetune_trunk);
    }
    bound.head = bind_params(tape, encoder.head, true);
    return bound;
}

int pooled_node(ComputationTape& tape, const LanguageModel& trunk, const BoundParams& bound,
                Pooling pooling, const std::vector<int>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("encode_pooled: empty sequence");
    LmNodes nodes = lm_apply(tape, trunk, bound, tokens);
    const int d = trunk.config.model_dim;

    if (pooling == Pooling::LastToken) {
        int last = static_cast<int>(tokens.size()) - 1;
        while (last > 0 && tokens[static_cast<std::size_t>(last)] == Vocab::kPad) --last;
        return tape.reshape(tape.slice(nodes.final_hidden, 0, last, 1), {d});
    }

    // Mean over non-pad positions. Sequences never carry interior pads, so
    // the non-pad span is a prefix; averaging it via a constant row vector
    // keeps everything inside the primitive set.
    int non_pad = 0;
    for (int tok : tokens) non_pad += tok != Vocab::kPad ? 1 : 0;
    if (non_pad == 0) throw std::invalid_argument("encode_pooled: all positions are pad");
    for (int i = 0; i < non_pad; ++i) {
        if (tokens[static_cast<std::size_t>(i)] == Vocab::kPad) {
            throw std::invalid_argument("encode_pooled: interior pad token at position " +
                                        std::to_string(i));
        }
    }
    int prefix = tape.slice(nodes.final_hidden, 0, 0, non_pad);
    Tensor averager = Tensor::full({1, non_pad}, 1.0 / non_pad);
    int pooled = tape.matmul(tape.constant(std::move(averager)), prefix);
    return tape.reshape(pooled, {d});
}

namespace {

int head_apply(ComputationTape& tape, const EncoderClassifier& encoder,
               const BoundClassifier& bound, int features) {
    const int in = classifier_head_input_dim(encoder);
    const Tensor& fv = tape.value(features);
    if (fv.rank() != 1 || fv.shape[0] != in) {
        throw std::invalid_argument("classify: embedding of shape " + shape_str(fv.shape) +
                                    ", head expects [" + std::to_string(in) + "]");
    }
    auto head_node = [&](const std::string& name) {
        return bound.head.node_for(encoder.head, name);
    };
    int x = tape.reshape(features, {1, in});
    x = tape.add(tape.matmul(x, head_node("head.fc1.w")), head_node("head.fc1.b"));
    x = tape.gelu(x);
    x = tape.add(tape.matmul(x, head_node("head.fc2.w")), head_node("head.fc2.b"));
    return tape.reshape(tape.softmax(x), {3});
}

}  // namespace

int classifier_zhat_node(ComputationTape& tape, const EncoderClassifier& encoder,
                         const BoundClassifier& bound, const std::vector<int>& tokens,
                         const std::vector<int>& profile_tokens) {
    if (encoder.structure == ClsStructure::SeqCls) {
        int h = pooled_node(tape, encoder.trunk, bound.trunk, encoder.pooling, tokens);
        return head_apply(tape, encoder, bound, h);
    }
    if (profile_tokens.empty()) {
        throw std::invalid_argument("two_tower_score: profile sequence is empty");
    }
    int h_job = pooled_node(tape, encoder.trunk, bound.trunk, encoder.pooling, tokens);
    int h_profile = pooled_node(tape, encoder.profile_trunk, bound.profile_trunk,
                                encoder.pooling, profile_tokens);
    int features = encoder.interaction == Interaction::Concat
                       ? tape.concat({h_job, h_profile}, 0)
                       : tape.multiply(h_job, h_profile);
    return head_apply(tape, encoder, bound, features);
}

Tensor encode_pooled(const EncoderClassifier& encoder, const std::vector<int>& tokens) {
    ComputationTape tape;
    BoundParams bound = bind_params(tape, encoder.trunk.params, false);
    return tape.value(pooled_node(tape, encoder.trunk, bound, encoder.pooling, tokens));
}

std::vector<double> classify(const EncoderClassifier& encoder, const Tensor& h) {
    ComputationTape tape;
    BoundClassifier bound;
    bound.head = bind_params(tape, encoder.head, false);
    int zhat = head_apply(tape, encoder, bound, tape.constant(h));
    return tape.value(zhat).data;
}

std::vector<double> two_tower_score(const EncoderClassifier& encoder,
                                    const std::vector<int>& job_tokens,
                                    const std::vector<int>& profile_tokens) {
    if (encoder.structure != ClsStructure::TwoTower) {
        throw std::invalid_argument("two_tower_score: classifier is not a two-tower structure");
    }
    ComputationTape tape;
    BoundClassifier bound;
    bound.trunk = bind_params(tape, encoder.trunk.params, false);
    bound.profile_trunk = bind_params(tape, encoder.profile_trunk.params, false);
    bound.head = bind_params(tape, encoder.head, false);
    int zhat = classifier_zhat_node(tape, encoder, bound, job_tokens, profile_tokens);
    return tape.value(zhat).data;
}

std::vector<double> classify_pair(const EncoderClassifier& encoder,
                                  const std::vector<int>& tokens,
                                  const std::vector<int>& profile_tokens) {
    if (encoder.structure == ClsStructure::TwoTower) {
        return two_tower_score(encoder, tokens, profile_tokens);
    }
    ComputationTape tape;
    BoundClassifier bound;
    bound.trunk = bind_params(tape, encoder.trunk.params, false);
    bound.head = bind_params(tape, encoder.head, false);
    int zhat = classifier_zhat_node(tape, encoder, bound, tokens, {});
    return tape.value(zhat).data;
}

}  // namespace fitkd
