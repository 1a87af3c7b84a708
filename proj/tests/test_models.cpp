#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fitkd/classifier.hpp"
#include "fitkd/gradcheck.hpp"
#include "fitkd/model.hpp"
#include "fitkd/objectives.hpp"
#include "fitkd/rng.hpp"
#include "fitkd/tape.hpp"
#include "fitkd/vocab.hpp"
#include "helpers.hpp"

using namespace fitkd;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.vocab_size = 10;
    c.max_seq_len = 8;
    c.num_layers = 1;
    c.model_dim = 8;
    c.num_heads = 2;
    c.mlp_dim = 16;
    c.seed = 11;
    return c;
}

ModelConfig small_config() {
    ModelConfig c;
    c.vocab_size = 64;
    c.max_seq_len = 32;
    c.num_layers = 2;
    c.model_dim = 32;
    c.num_heads = 4;
    c.mlp_dim = 128;
    c.seed = 7;
    return c;
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

double max_row_diff(const Tensor& a, const Tensor& b, int row) {
    REQUIRE(a.shape[1] == b.shape[1]);
    double worst = 0.0;
    for (int j = 0; j < a.shape[1]; ++j) {
        worst = std::max(worst, std::abs(a.at(row, j) - b.at(row, j)));
    }
    return worst;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
    ModelConfig c = tiny_config();
    c.vocab_size = 0;
    CHECK_THROWS_WITH_AS(validate_config(c), doctest::Contains("vocab_size"),
                         std::invalid_argument);
    c = tiny_config();
    c.max_seq_len = 1;
    CHECK_THROWS_WITH_AS(validate_config(c), doctest::Contains("max_seq_len"),
                         std::invalid_argument);
    c = tiny_config();
    c.num_layers = 0;
    CHECK_THROWS_WITH_AS(validate_config(c), doctest::Contains("num_layers"),
                         std::invalid_argument);
    c = tiny_config();
    c.num_heads = 3;  // 8 % 3 != 0
    CHECK_THROWS_WITH_AS(validate_config(c), doctest::Contains("not divisible"),
                         std::invalid_argument);
    CHECK_NOTHROW(validate_config(tiny_config()));
}

TEST_CASE("parameter count matches the closed form on a worked example") {
    // 64·32 + 32·32 + 2·(4·32² + 2·32·128 + 128 + 9·32) + 2·32 + 32·64
    //   = 2048 + 1024 + 2·12704 + 64 + 2048 = 30592
    CHECK(parameter_count(small_config()) == 30592);

    ModelConfig c = tiny_config();
    LanguageModel m = init_model(c);
    CHECK(m.params.scalar_count() == parameter_count(c));
}

TEST_CASE("initialization is deterministic in the seed") {
    ModelConfig c = tiny_config();
    LanguageModel a = init_model(c);
    LanguageModel b = init_model(c);
    REQUIRE(a.params.size() == b.params.size());
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        CHECK(a.params.name(i) == b.params.name(i));
        CHECK(tensors_equal(a.params.tensor(i), b.params.tensor(i)));
    }

    c.seed = 12;
    LanguageModel other = init_model(c);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.params.size() && !any_diff; ++i) {
        any_diff = !tensors_equal(a.params.tensor(i), other.params.tensor(i));
    }
    CHECK(any_diff);

    CHECK_THROWS_WITH_AS(init_model(tiny_config(), "oracle"), doctest::Contains("role"),
                         std::invalid_argument);
    CHECK(init_model(tiny_config(), "teacher").role == "teacher");
}

TEST_CASE("parameter layout uses the canonical names") {
    LanguageModel m = init_model(small_config());
    for (const char* name : {"tok_emb", "pos_emb", "layer0.ln1.gain", "layer0.attn.qkv.w",
                             "layer1.mlp.fc2.b", "final_ln.gain", "final_ln.bias",
                             "out_proj.w"}) {
        CHECK(m.params.has(name));
    }
    CHECK(m.params.at("tok_emb").shape == std::vector<int>{64, 32});
    CHECK(m.params.at("layer0.attn.qkv.w").shape == std::vector<int>{32, 96});
    CHECK(m.params.at("out_proj.w").shape == std::vector<int>{32, 64});
    CHECK(m.params.at("layer0.ln1.gain").data[0] == 1.0);
    CHECK(m.params.at("layer0.attn.qkv.b").data[0] == 0.0);
}

TEST_CASE("forward validates inputs") {
    LanguageModel m = init_model(tiny_config());
    CHECK_THROWS_WITH_AS(lm_forward(m, {}), doctest::Contains("length"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(lm_forward(m, std::vector<int>(9, 4)), doctest::Contains("length"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(lm_forward(m, {4, 99}), doctest::Contains("token id"),
                         std::invalid_argument);

    Tensor logits = lm_forward(m, {Vocab::kBos});
    CHECK(logits.shape == std::vector<int>{1, 10});
    for (double v : logits.data) CHECK(std::isfinite(v));
}

TEST_CASE("attention is causal: futures do not leak backward") {
    LanguageModel m = init_model(tiny_config());
    std::vector<int> base = {1, 4, 5, 6};

    Tensor full = lm_forward(m, base);
    Tensor prefix = lm_forward(m, {1, 4});
    for (int row = 0; row < 2; ++row) {
        CHECK(max_row_diff(full, prefix, row) < 1e-10);
    }

    // Permuting strictly-future tokens leaves earlier rows untouched.
    Tensor permuted = lm_forward(m, {1, 4, 6, 5});
    for (int row = 0; row < 2; ++row) {
        CHECK(max_row_diff(full, permuted, row) < 1e-10);
    }
    // ...but the rows that can see the permutation do change.
    CHECK(max_row_diff(full, permuted, 2) > 1e-8);
}

TEST_CASE("pad keys are invisible to attention") {
    LanguageModel m = init_model(tiny_config());
    Tensor bare = lm_forward(m, {1, 4, 5});
    Tensor padded = lm_forward(m, {1, 4, 5, Vocab::kPad, Vocab::kPad});
    for (int row = 0; row < 3; ++row) {
        CHECK(max_row_diff(bare, padded, row) < 1e-12);
    }
}

TEST_CASE("training and inference paths agree bitwise") {
    LanguageModel m = init_model(tiny_config());
    std::vector<int> tokens = {1, 4, 5, 6, 7};

    ComputationTape tape;
    BoundParams bound = bind_params(tape, m.params, true);
    LmNodes nodes = lm_apply(tape, m, bound, tokens);
    Tensor train_logits = tape.value(nodes.logits);

    Tensor infer_logits = lm_forward(m, tokens);
    CHECK(tensors_equal(train_logits, infer_logits));

    Tensor again = lm_forward(m, tokens);
    CHECK(tensors_equal(infer_logits, again));
}

TEST_CASE("greedy decode: ties, stopping, and limits") {
    ModelConfig c = tiny_config();
    LanguageModel m = init_model(c);

    SUBCASE("max_new = 0 returns the prompt unchanged, even at capacity") {
        std::vector<int> at_cap(static_cast<std::size_t>(c.max_seq_len), 4);
        CHECK(lm_greedy_decode(m, at_cap, 0) == at_cap);
        CHECK_THROWS_WITH_AS(lm_greedy_decode(m, at_cap, 1), doctest::Contains("room"),
                             std::invalid_argument);
        CHECK_THROWS_AS(lm_greedy_decode(m, {1}, -1), std::invalid_argument);
    }

    SUBCASE("all-zero logits tie toward the lowest token id") {
        LanguageModel flat = init_model(c);
        flat.params.at("out_proj.w") = Tensor::zeros({c.model_dim, c.vocab_size});
        std::vector<int> out = lm_greedy_decode(flat, {1, 4}, 3);
        CHECK(out == std::vector<int>{1, 4, 0, 0, 0});
    }

    SUBCASE("an emitted <eos> stops the decode and is kept") {
        // Zero final-norm gain pins the hidden rows to final_ln.bias, so the
        // next-token logits are input-independent; a single weight then
        // makes <eos> the unique argmax.
        LanguageModel stop = init_model(c);
        stop.params.at("final_ln.gain") = Tensor::zeros({c.model_dim});
        stop.params.at("final_ln.bias") = Tensor::full({c.model_dim}, 1.0);
        Tensor w = Tensor::zeros({c.model_dim, c.vocab_size});
        w.at(0, Vocab::kEos) = 1.0;
        stop.params.at("out_proj.w") = w;
        std::vector<int> out = lm_greedy_decode(stop, {1, 4}, 5);
        CHECK(out == std::vector<int>{1, 4, Vocab::kEos});
    }

    SUBCASE("decode never exceeds the context limit") {
        LanguageModel flat = init_model(c);
        flat.params.at("out_proj.w") = Tensor::zeros({c.model_dim, c.vocab_size});
        std::vector<int> prompt(static_cast<std::size_t>(c.max_seq_len - 2), 4);
        std::vector<int> out = lm_greedy_decode(flat, prompt, 10);
        CHECK(static_cast<int>(out.size()) == c.max_seq_len);
    }

    SUBCASE("decoding is deterministic") {
        CHECK(lm_greedy_decode(m, {1, 4, 5}, 4) == lm_greedy_decode(m, {1, 4, 5}, 4));
    }
}

TEST_CASE("full-model gradients agree with finite differences") {
    ModelConfig c = tiny_config();
    LanguageModel m = init_model(c);
    // The 0.02-scale init makes most gradients tiny; re-randomize at a
    // scale where every parameter visibly moves the loss.
    Rng rng(99);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        for (double& v : m.params.tensor(i).data) v = rng.normal(0.0, 0.5);
    }

    const std::vector<int> tokens = {1, 4, 5, 6, 7, 2};
    const std::vector<int> targets = {4, 5, 6, 7, 2, 0};
    const std::vector<int> mask = {1, 1, 1, 1, 1, 0};

    ComputationTape tape;
    BoundParams bound = bind_params(tape, m.params, true);
    LmNodes nodes = lm_apply(tape, m, bound, tokens);
    int loss = sft_loss_node(tape, nodes.logits, targets, mask);
    auto grads = tape.backward(loss);

    auto loss_at = [&](const LanguageModel& probe_model) {
        ComputationTape probe;
        BoundParams b = bind_params(probe, probe_model.params, false);
        LmNodes n = lm_apply(probe, probe_model, b, tokens);
        return probe.value(sft_loss_node(probe, n.logits, targets, mask)).data[0];
    };

    const double step = 1e-4;
    double worst = 0.0;
    std::string worst_param;
    for (std::size_t p = 0; p < m.params.size(); ++p) {
        const Tensor& analytic = grads[static_cast<std::size_t>(bound.nodes[p])];
        REQUIRE(analytic.shape == m.params.tensor(p).shape);
        auto eval = [&](const std::vector<double>& v) {
            LanguageModel probe_model = m;
            probe_model.params.tensor(p).data = v;
            return loss_at(probe_model);
        };
        GradCheckResult r =
            finite_difference_check(eval, m.params.tensor(p).data, analytic.data, step);
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            worst_param = m.params.name(p);
        }
    }
    INFO("worst parameter: ", worst_param);
    CHECK(worst < 1e-3);
}

TEST_CASE("enum names round-trip") {
    for (Pooling p : {Pooling::LastToken, Pooling::Mean}) {
        CHECK(pooling_from_name(pooling_name(p)) == p);
    }
    for (ClsStructure s : {ClsStructure::SeqCls, ClsStructure::TwoTower}) {
        CHECK(structure_from_name(structure_name(s)) == s);
    }
    for (Interaction i : {Interaction::Concat, Interaction::DotProduct}) {
        CHECK(interaction_from_name(interaction_name(i)) == i);
    }
    CHECK_THROWS_AS(pooling_from_name("max"), std::invalid_argument);
    CHECK_THROWS_AS(structure_from_name("cross"), std::invalid_argument);
    CHECK_THROWS_AS(interaction_from_name("sum"), std::invalid_argument);
}

TEST_CASE("classifier head sizes follow structure and interaction") {
    ModelConfig c = tiny_config();
    EncoderClassifier seq = init_classifier(c, ClsStructure::SeqCls, Pooling::LastToken,
                                            Interaction::Concat, 12, 3);
    CHECK(classifier_head_input_dim(seq) == c.model_dim);
    CHECK(seq.head.at("head.fc1.w").shape == std::vector<int>{8, 12});
    CHECK(seq.head.at("head.fc2.w").shape == std::vector<int>{12, 3});
    CHECK(seq.profile_trunk.params.size() == 0);

    EncoderClassifier cat = init_classifier(c, ClsStructure::TwoTower, Pooling::Mean,
                                            Interaction::Concat, 12, 3);
    CHECK(classifier_head_input_dim(cat) == 2 * c.model_dim);
    CHECK(cat.head.at("head.fc1.w").shape == std::vector<int>{16, 12});
    CHECK(cat.profile_trunk.params.size() == cat.trunk.params.size());

    EncoderClassifier dot = init_classifier(c, ClsStructure::TwoTower, Pooling::Mean,
                                            Interaction::DotProduct, 12, 3);
    CHECK(classifier_head_input_dim(dot) == c.model_dim);

    CHECK_THROWS_WITH_AS(init_classifier(c, ClsStructure::SeqCls, Pooling::LastToken,
                                         Interaction::Concat, 0, 3),
                         doctest::Contains("head_hidden"), std::invalid_argument);

    // Towers are seeded apart; a shared seed would make them identical.
    bool towers_differ = false;
    for (std::size_t i = 0; i < cat.trunk.params.size() && !towers_differ; ++i) {
        towers_differ = !tensors_equal(cat.trunk.params.tensor(i),
                                       cat.profile_trunk.params.tensor(i));
    }
    CHECK(towers_differ);
}

TEST_CASE("pooling rules") {
    ModelConfig c = tiny_config();
    EncoderClassifier last = init_classifier(c, ClsStructure::SeqCls, Pooling::LastToken,
                                             Interaction::Concat, 12, 3);
    EncoderClassifier mean = last;
    mean.pooling = Pooling::Mean;

    SUBCASE("length-1 sequences pool identically under both rules") {
        Tensor a = encode_pooled(last, {4});
        Tensor b = encode_pooled(mean, {4});
        CHECK(a.shape == std::vector<int>{c.model_dim});
        CHECK(tensors_equal(a, b));
    }

    SUBCASE("trailing pads do not move either pooled embedding") {
        Tensor a = encode_pooled(last, {1, 4, 5});
        Tensor a_pad = encode_pooled(last, {1, 4, 5, Vocab::kPad});
        for (int i = 0; i < c.model_dim; ++i) {
            CHECK(std::abs(a.data[static_cast<std::size_t>(i)] -
                           a_pad.data[static_cast<std::size_t>(i)]) < 1e-12);
        }
        Tensor b = encode_pooled(mean, {1, 4, 5});
        Tensor b_pad = encode_pooled(mean, {1, 4, 5, Vocab::kPad});
        for (int i = 0; i < c.model_dim; ++i) {
            CHECK(std::abs(b.data[static_cast<std::size_t>(i)] -
                           b_pad.data[static_cast<std::size_t>(i)]) < 1e-12);
        }
    }

    SUBCASE("mean pooling averages the hidden rows") {
        std::vector<int> tokens = {1, 4, 5};
        ComputationTape tape;
        BoundParams bound = bind_params(tape, mean.trunk.params, false);
        LmNodes nodes = lm_apply(tape, mean.trunk, bound, tokens);
        const Tensor& hidden = tape.value(nodes.final_hidden);
        Tensor pooled = encode_pooled(mean, tokens);
        for (int j = 0; j < c.model_dim; ++j) {
            double want = (hidden.at(0, j) + hidden.at(1, j) + hidden.at(2, j)) / 3.0;
            CHECK(std::abs(pooled.data[static_cast<std::size_t>(j)] - want) < 1e-12);
        }
    }

    SUBCASE("degenerate sequences are rejected") {
        CHECK_THROWS_WITH_AS(encode_pooled(last, {}), doctest::Contains("empty"),
                             std::invalid_argument);
        CHECK_THROWS_WITH_AS(encode_pooled(mean, {1, Vocab::kPad, 4}),
                             doctest::Contains("interior pad"), std::invalid_argument);
    }
}

TEST_CASE("classification head produces calibrated distributions") {
    ModelConfig c = tiny_config();
    EncoderClassifier cls = init_classifier(c, ClsStructure::SeqCls, Pooling::LastToken,
                                            Interaction::Concat, 12, 3);

    SUBCASE("a zeroed output layer yields the uniform triple") {
        EncoderClassifier flat = cls;
        flat.head.at("head.fc2.w") = Tensor::zeros({12, 3});
        Tensor h = encode_pooled(flat, {1, 4, 5});
        std::vector<double> z = classify(flat, h);
        REQUIRE(z.size() == 3);
        for (double v : z) CHECK(std::abs(v - 1.0 / 3.0) < 1e-12);
    }

    SUBCASE("outputs are probability triples") {
        std::vector<double> z = classify_pair(cls, {1, 4, 5, 6}, {});
        REQUIRE(z.size() == 3);
        double sum = 0.0;
        for (double v : z) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }

    SUBCASE("embedding length is validated") {
        CHECK_THROWS_WITH_AS(classify(cls, Tensor::zeros({5})), doctest::Contains("head"),
                             std::invalid_argument);
    }

    SUBCASE("same seed reproduces the classifier bitwise") {
        EncoderClassifier again = init_classifier(c, ClsStructure::SeqCls, Pooling::LastToken,
                                                  Interaction::Concat, 12, 3);
        CHECK(tensors_equal(cls.head.at("head.fc1.w"), again.head.at("head.fc1.w")));
        std::vector<double> a = classify_pair(cls, {1, 4, 5}, {});
        std::vector<double> b = classify_pair(again, {1, 4, 5}, {});
        CHECK(a == b);
    }
}

TEST_CASE("two-tower scoring") {
    ModelConfig c = tiny_config();
    std::vector<int> job = {1, 4, 5, 6};
    std::vector<int> profile = {1, 7, 8};

    for (Interaction inter : {Interaction::Concat, Interaction::DotProduct}) {
        CAPTURE(interaction_name(inter));
        EncoderClassifier tt = init_classifier(c, ClsStructure::TwoTower, Pooling::Mean,
                                               inter, 12, 3);
        std::vector<double> z = two_tower_score(tt, job, profile);
        REQUIRE(z.size() == 3);
        double sum = 0.0;
        for (double v : z) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);

        // The towers are distinct networks, so the pair is ordered.
        std::vector<double> swapped = two_tower_score(tt, profile, job);
        bool differs = false;
        for (std::size_t i = 0; i < 3; ++i) differs = differs || z[i] != swapped[i];
        CHECK(differs);

        CHECK(classify_pair(tt, job, profile) == z);
    }

    EncoderClassifier seq = init_classifier(c, ClsStructure::SeqCls, Pooling::Mean,
                                            Interaction::Concat, 12, 3);
    CHECK_THROWS_WITH_AS(two_tower_score(seq, job, profile), doctest::Contains("two-tower"),
                         std::invalid_argument);

    EncoderClassifier tt = init_classifier(c, ClsStructure::TwoTower, Pooling::Mean,
                                           Interaction::Concat, 12, 3);
    CHECK_THROWS_WITH_AS(two_tower_score(tt, job, {}), doctest::Contains("profile"),
                         std::invalid_argument);
}

TEST_CASE("classifier gradients reach head and trunk") {
    ModelConfig c = tiny_config();
    EncoderClassifier cls = init_classifier(c, ClsStructure::SeqCls, Pooling::Mean,
                                            Interaction::Concat, 4, 3);
    // Larger weights keep the loss surface well away from flat regions.
    Rng rng(42);
    for (std::size_t i = 0; i < cls.head.size(); ++i) {
        for (double& v : cls.head.tensor(i).data) v = rng.normal(0.0, 0.5);
    }

    std::vector<int> tokens = {1, 4, 5, 6};

    ComputationTape tape;
    BoundClassifier bound = bind_classifier(tape, cls);
    int zhat = classifier_zhat_node(tape, cls, bound, tokens, {});
    int loss = classification_loss_node(tape, zhat, 2);
    auto grads = tape.backward(loss);

    auto grad_norm = [&](int nid) {
        double s = 0.0;
        for (double g : grads[static_cast<std::size_t>(nid)].data) s += g * g;
        return std::sqrt(s);
    };
    CHECK(grad_norm(bound.head.node_for(cls.head, "head.fc1.w")) > 0.0);
    CHECK(grad_norm(bound.trunk.node_for(cls.trunk.params, "tok_emb")) > 0.0);

    // Finite differences over the head parameters.
    auto loss_at = [&](const EncoderClassifier& probe_cls) {
        ComputationTape probe;
        BoundClassifier b = bind_classifier(probe, probe_cls);
        int z = classifier_zhat_node(probe, probe_cls, b, tokens, {});
        return probe.value(classification_loss_node(probe, z, 2)).data[0];
    };
    double worst = 0.0;
    for (std::size_t p = 0; p < cls.head.size(); ++p) {
        const Tensor& analytic =
            grads[static_cast<std::size_t>(bound.head.node_for(cls.head, cls.head.name(p)))];
        auto eval = [&](const std::vector<double>& v) {
            EncoderClassifier probe_cls = cls;
            probe_cls.head.tensor(p).data = v;
            return loss_at(probe_cls);
        };
        GradCheckResult r =
            finite_difference_check(eval, cls.head.tensor(p).data, analytic.data, 1e-4);
        worst = std::max(worst, r.max_rel_err);
    }
    CHECK(worst < 1e-3);

    SUBCASE("a frozen trunk stays off the gradient path") {
        EncoderClassifier frozen = cls;
        frozen.finetune_trunk = false;
        ComputationTape ft;
        BoundClassifier fb = bind_classifier(ft, frozen);
        int z = classifier_zhat_node(ft, frozen, fb, tokens, {});
        auto fg = ft.backward(classification_loss_node(ft, z, 1));
        double trunk_norm = 0.0;
        for (double g :
             fg[static_cast<std::size_t>(fb.trunk.node_for(frozen.trunk.params, "tok_emb"))]
                 .data) {
            trunk_norm += g * g;
        }
        CHECK(trunk_norm == 0.0);
        double head_norm = 0.0;
        for (double g :
             fg[static_cast<std::size_t>(fb.head.node_for(frozen.head, "head.fc1.w"))].data) {
            head_norm += g * g;
        }
        CHECK(head_norm > 0.0);
    }
}
