#include "fitkd/model.hpp"

#include <cmath>
#include <stdexcept>

#include "fitkd/rng.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

Tensor& ParamSet::add(const std::string& name, Tensor value) {
    if (!index_.emplace(name, entries_.size()).second) {
        throw std::logic_error("params: duplicate name " + name);
    }
    entries_.emplace_back(name, std::move(value));
    return entries_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("params: no tensor named " + name);
    return entries_[it->second].second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("params: no tensor named " + name);
    return entries_[it->second].second;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t total = 0;
    for (const auto& [name, tensor] : entries_) total += tensor.numel();
    return total;
}

void validate_config(const ModelConfig& config) {
    const auto bad = [](const std::string& field, long long value) {
        throw std::invalid_argument("model config: invalid " + field + " = " +
                                    std::to_string(value));
    };
    if (config.vocab_size < 1) bad("vocab_size", config.vocab_size);
    if (config.max_seq_len < 2) bad("max_seq_len", config.max_seq_len);
    if (config.num_layers < 1) bad("num_layers", config.num_layers);
    if (config.model_dim < 1) bad("model_dim", config.model_dim);
    if (config.num_heads < 1) bad("num_heads", config.num_heads);
    if (config.mlp_dim < 1) bad("mlp_dim", config.mlp_dim);
    if (config.model_dim % config.num_heads != 0) {
        throw std::invalid_argument("model config: model_dim " +
                                    std::to_string(config.model_dim) +
                                    " not divisible by num_heads " +
                                    std::to_string(config.num_heads));
    }
}

std::size_t parameter_count(const ModelConfig& c) {
    validate_config(c);
    const std::size_t d = static_cast<std::size_t>(c.model_dim);
    const std::size_t v = static_cast<std::size_t>(c.vocab_size);
    const std::size_t m = static_cast<std::size_t>(c.mlp_dim);
    const std::size_t per_layer = 4 * d * d + 2 * d * m + m + 9 * d;
    return v * d + static_cast<std::size_t>(c.max_seq_len) * d +
           static_cast<std::size_t>(c.num_layers) * per_layer + 2 * d + d * v;
}

namespace {

Tensor normal_init(Rng& rng, std::vector<int> shape, double stddev) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.normal(0.0, stddev);
    return t;
}

std::string layer_name(int layer, const char* suffix) {
    return "layer" + std::to_string(layer) + "." + suffix;
}

}  // namespace

LanguageModel init_model(const ModelConfig& config, std::string role) {
    validate_config(config);
    if (role != "teacher" && role != "student") {
        throw std::invalid_argument("model: role must be teacher or student, got " + role);
    }
    LanguageModel model;
    model.config = config;
    model.role = std::move(role);

    Rng rng(config.seed);
    const int d = config.model_dim;
    const int v = config.vocab_size;
    const int m = config.mlp_dim;
    constexpr double kStd = 0.02;

    ParamSet& p = model.params;
    p.add("tok_emb", normal_init(rng, {v, d}, kStd));
    p.add("pos_emb", normal_init(rng, {config.max_seq_len, d}, kStd));
    for (int layer = 0; layer < config.num_layers; ++layer) {
        p.add(layer_name(layer, "ln1.gain"), Tensor::full({d}, 1.0));
        p.add(layer_name(layer, "ln1.bias"), Tensor::zeros({d}));
        p.add(layer_name(layer, "attn.qkv.w"), normal_init(rng, {d, 3 * d}, kStd));
        p.add(layer_name(layer, "attn.qkv.b"), Tensor::zeros({3 * d}));
        p.add(layer_name(layer, "attn.out.w"), normal_init(rng, {d, d}, kStd));
        p.add(layer_name(layer, "attn.out.b"), Tensor::zeros({d}));
        p.add(layer_name(layer, "ln2.gain"), Tensor::full({d}, 1.0));
        p.add(layer_name(layer, "ln2.bias"), Tensor::zeros({d}));
        p.add(layer_name(layer, "mlp.fc1.w"), normal_init(rng, {d, m}, kStd));
        p.add(layer_name(layer, "mlp.fc1.b"), Tensor::zeros({m}));
        p.add(layer_name(layer, "mlp.fc2.w"), normal_init(rng, {m, d}, kStd));
        p.add(layer_name(layer, "mlp.fc2.b"), Tensor::zeros({d}));
    }
    p.add("final_ln.gain", Tensor::full({d}, 1.0));
    p.add("final_ln.bias", Tensor::zeros({d}));
    p.add("out_proj.w", normal_init(rng, {d, v}, kStd));

    if (p.scalar_count() != parameter_count(config)) {
        throw std::logic_error("model: parameter count drifted from the closed form");
    }
    return model;
}

int BoundParams::node_for(const ParamSet& params, const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params.name(i) == name) return nodes[i];
    }
    throw std::out_of_range("bound params: no tensor named " + name);
}

BoundParams bind_params(ComputationTape& tape, const ParamSet& params, bool trainable) {
    BoundParams bound;
    bound.nodes.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        bound.nodes.push_back(trainable ? tape.leaf(params.tensor(i))
                                        : tape.constant(params.tensor(i)));
    }
    return bound;
}

LmNodes lm_apply(ComputationTape& tape, const LanguageModel& model, const BoundParams& bound,
                 const std::vector<int>& tokens) {
    const ModelConfig& c = model.config;
    const int t_len = static_cast<int>(tokens.size());
    if (t_len < 1 || t_len > c.max_seq_len) {
        throw std::invalid_argument("lm_apply: sequence length " + std::to_string(t_len) +
                                    " outside 1.." + std::to_string(c.max_seq_len));
    }
    for (int id : tokens) {
        if (id < 0 || id >= c.vocab_size) {
            throw std::invalid_argument("lm_apply: token id " + std::to_string(id) +
                                        " outside vocabulary of " +
                                        std::to_string(c.vocab_size));
        }
    }
    if (bound.nodes.size() != model.params.size()) {
        throw std::invalid_argument("lm_apply: bound parameter list does not match the model");
    }

    const ParamSet& p = model.params;
    auto node = [&](const std::string& name) { return bound.node_for(p, name); };

    std::vector<int> positions(static_cast<std::size_t>(t_len));
    for (int i = 0; i < t_len; ++i) positions[static_cast<std::size_t>(i)] = i;

    int x = tape.add(tape.embedding(node("tok_emb"), tokens),
                     tape.embedding(node("pos_emb"), positions));

    // Additive attention mask: 0 where key j is visible from query i
    // (j <= i and tokens[j] is not pad), -1e9 otherwise. Large-negative
    // instead of -inf keeps every intermediate finite.
    Tensor mask = Tensor::zeros({t_len, t_len});
    for (int i = 0; i < t_len; ++i) {
        for (int j = 0; j < t_len; ++j) {
            const bool visible = j <= i && tokens[static_cast<std::size_t>(j)] != Vocab::kPad;
            mask.at(i, j) = visible ? 0.0 : -1e9;
        }
    }
    const int mask_node = tape.constant(std::move(mask));

    const int heads = c.num_heads;
    const int dh = c.model_dim / heads;
    const int inv_sqrt_dh = tape.constant(Tensor::scalar(1.0 / std::sqrt(static_cast<double>(dh))));

    for (int layer = 0; layer < c.num_layers; ++layer) {
        auto ln = [&](const char* suffix) { return node(layer_name(layer, suffix)); };

        int normed = tape.layer_norm(x, ln("ln1.gain"), ln("ln1.bias"));
        int qkv = tape.add(tape.matmul(normed, ln("attn.qkv.w")), ln("attn.qkv.b"));
        std::vector<int> head_outputs;
        for (int h = 0; h < heads; ++h) {
            int q = tape.slice(qkv, 1, h * dh, dh);
            int k = tape.slice(qkv, 1, c.model_dim + h * dh, dh);
            int v = tape.slice(qkv, 1, 2 * c.model_dim + h * dh, dh);
            int scores = tape.multiply(tape.matmul(q, k, false, true), inv_sqrt_dh);
            int attn = tape.softmax(tape.add(scores, mask_node));
            head_outputs.push_back(tape.matmul(attn, v));
        }
        int merged = heads == 1 ? head_outputs[0] : tape.concat(head_outputs, 1);
        int attn_out = tape.add(tape.matmul(merged, ln("attn.out.w")), ln("attn.out.b"));
        x = tape.add(x, attn_out);

        int normed2 = tape.layer_norm(x, ln("ln2.gain"), ln("ln2.bias"));
        int up = tape.gelu(tape.add(tape.matmul(normed2, ln("mlp.fc1.w")), ln("mlp.fc1.b")));
        int down = tape.add(tape.matmul(up, ln("mlp.fc2.w")), ln("mlp.fc2.b"));
        x = tape.add(x, down);
    }

    LmNodes out;
    out.final_hidden = tape.layer_norm(x, node("final_ln.gain"), node("final_ln.bias"));
    out.logits = tape.matmul(out.final_hidden, node("out_proj.w"));
    return out;
}

Tensor lm_forward(const LanguageModel& model, const std::vector<int>& tokens) {
    ComputationTape tape;
    BoundParams bound = bind_params(tape, model.params, false);
    LmNodes nodes = lm_apply(tape, model, bound, tokens);
    return tape.value(nodes.logits);
}

std::vector<int> lm_greedy_decode(const LanguageModel& model, const std::vector<int>& prompt,
                                  int max_new) {
    if (max_new < 0) throw std::invalid_argument("lm_greedy_decode: negative max_new");
    std::vector<int> tokens = prompt;
    if (max_new == 0) return tokens;
    if (static_cast<int>(prompt.size()) >= model.config.max_seq_len) {
        throw std::invalid_argument("lm_greedy_decode: prompt of " +
                                    std::to_string(prompt.size()) + " leaves no room within " +
                                    std::to_string(model.config.max_seq_len));
    }
    for (int step = 0; step < max_new; ++step) {
        if (static_cast<int>(tokens.size()) >= model.config.max_seq_len) break;
        const Tensor logits = lm_forward(model, tokens);
        const int vocab = logits.shape[1];
        const double* row =
            logits.data.data() + (static_cast<std::size_t>(logits.shape[0]) - 1) * vocab;
        int best = 0;
        for (int j = 1; j < vocab; ++j) {
            if (row[j] > row[best]) best = j;  // strict: ties keep the lowest id
        }
        tokens.push_back(best);
        if (best == Vocab::kEos) break;
    }
    return tokens;
}

}  // namespace fitkd
