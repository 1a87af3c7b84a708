#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fitkd/tape.hpp"
#include "fitkd/tensor.hpp"

namespace fitkd {

// Ordered, named parameter collection. Insertion order is the canonical
// iteration order everywhere (initialization, optimizer state, checkpoint
// layout), which keeps all of those trivially aligned.
class ParamSet {
public:
    Tensor& add(const std::string& name, Tensor value);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return entries_.size(); }
    std::size_t scalar_count() const;
    const std::string& name(std::size_t i) const { return entries_[i].first; }
    Tensor& tensor(std::size_t i) { return entries_[i].second; }
    const Tensor& tensor(std::size_t i) const { return entries_[i].second; }

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct ModelConfig {
    int vocab_size = 0;
    int max_seq_len = 0;
    int num_layers = 0;
    int model_dim = 0;
    int num_heads = 0;
    int mlp_dim = 0;
    std::uint64_t seed = 0;
};

// Throws naming the offending field.
void validate_config(const ModelConfig& config);

// Closed form: vocab·dim (token table) + max_seq_len·dim (positions)
//            + layers·(4·dim² + 2·dim·mlp + mlp + 9·dim)
//            + 2·dim (final norm) + dim·vocab (output projection).
std::size_t parameter_count(const ModelConfig& config);

// Pre-norm causal transformer over the closed vocabulary. Hidden states are
// [T, dim]; logits are [T, vocab].
struct LanguageModel {
    ModelConfig config;
    ParamSet params;
    std::string role = "student";  // "teacher" | "student"
};

// Seeded N(0, 0.02²) weights, zero biases, unit layer-norm gains.
LanguageModel init_model(const ModelConfig& config, std::string role = "student");

// Parameter node ids aligned with model.params order.
struct BoundParams {
    std::vector<int> nodes;
    int node_for(const ParamSet& params, const std::string& name) const;
};

// Puts every parameter on the tape, as leaves when trainable (gradients
// wanted) or constants when frozen.
BoundParams bind_params(ComputationTape& tape, const ParamSet& params, bool trainable);

struct LmNodes {
    int logits = -1;        // [T, vocab]
    int final_hidden = -1;  // [T, dim], after the final layer norm
};

// Records the full forward for `tokens` against previously bound parameters.
// Attention is causal and never attends to pad keys.
LmNodes lm_apply(ComputationTape& tape, const LanguageModel& model, const BoundParams& bound,
                 const std::vector<int>& tokens);

// Value-only convenience: fresh tape, parameters bound as constants. The
// recorded graph is identical to the training path, so both produce
// bit-identical numbers for the same inputs.
Tensor lm_forward(const LanguageModel& model, const std::vector<int>& tokens);

// Temperature-0 decode: append argmax (ties → lowest token id) until <eos>,
// max_new tokens, or the context limit. Returns prompt + generated tokens,
// including the <eos> if one was emitted.
std::vector<int> lm_greedy_decode(const LanguageModel& model, const std::vector<int>& prompt,
                                  int max_new);

}  // namespace fitkd
