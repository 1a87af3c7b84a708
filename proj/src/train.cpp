#include "fitkd/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fitkd/rng.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

namespace {

// Next-token view of a record: feed prompt+target, predict each following
// token, supervise only the target span.
struct LmExample {
    std::vector<int> tokens;
    std::vector<int> targets;
    std::vector<int> mask;
    int masked = 0;
};

LmExample tokenize_lm(const ExampleRecord& rec, int max_seq_len) {
    if (rec.prompt_tokens.empty() || rec.target_tokens.empty()) {
        throw std::invalid_argument("training: record " + rec.id +
                                    " has an empty prompt or target");
    }
    LmExample ex;
    ex.tokens = rec.prompt_tokens;
    ex.tokens.insert(ex.tokens.end(), rec.target_tokens.begin(), rec.target_tokens.end());
    const std::size_t total = ex.tokens.size();
    if (total > static_cast<std::size_t>(max_seq_len)) {
        throw std::invalid_argument("training: record " + rec.id + " needs " +
                                    std::to_string(total) + " positions, limit is " +
                                    std::to_string(max_seq_len));
    }
    ex.targets.assign(total, 0);
    ex.mask.assign(total, 0);
    for (std::size_t t = 0; t + 1 < total; ++t) {
        ex.targets[t] = ex.tokens[t + 1];
        if (t + 1 >= rec.prompt_tokens.size()) {
            ex.mask[t] = 1;
            ex.masked += 1;
        }
    }
    return ex;
}

// Teacher logits at supervised rows only (other rows are never read by the
// distillation loss, so they are stored as zeros on reconstruction).
struct TeacherRows {
    std::vector<int> rows;
    Tensor logits{{1}, {0.0}};  // [masked, vocab]
};

TeacherRows cache_teacher_rows(const LanguageModel& teacher, const LmExample& ex) {
    Tensor full = lm_forward(teacher, ex.tokens);
    TeacherRows cache;
    for (std::size_t t = 0; t < ex.mask.size(); ++t) {
        if (ex.mask[t]) cache.rows.push_back(static_cast<int>(t));
    }
    const int vocab = full.shape[1];
    cache.logits = Tensor::zeros({static_cast<int>(cache.rows.size()), vocab});
    for (std::size_t r = 0; r < cache.rows.size(); ++r) {
        const double* src = full.data.data() +
                            static_cast<std::size_t>(cache.rows[r]) * static_cast<std::size_t>(vocab);
        std::copy(src, src + vocab, cache.logits.data.begin() +
                                        static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(vocab)));
    }
    return cache;
}

Tensor expand_teacher_rows(const TeacherRows& cache, int seq_len, int vocab) {
    Tensor out = Tensor::zeros({seq_len, vocab});
    for (std::size_t r = 0; r < cache.rows.size(); ++r) {
        const double* src =
            cache.logits.data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(vocab);
        std::copy(src, src + vocab,
                  out.data.begin() + static_cast<std::ptrdiff_t>(
                                         static_cast<std::size_t>(cache.rows[r]) *
                                         static_cast<std::size_t>(vocab)));
    }
    return out;
}

std::pair<Checkpoint, std::vector<LossReport>> run_lm_training(
    const LanguageModel* teacher, LanguageModel student, const std::vector<ExampleRecord>& data,
    const TrainConfig& tc, const LossWeights& weights, const std::string& path_name,
    int stage_index) {
    validate_train_config(tc);
    if (data.empty()) throw std::invalid_argument("training: empty dataset");
    const int seq_limit = std::min(tc.max_seq_len, student.config.max_seq_len);

    std::vector<LmExample> examples;
    examples.reserve(data.size());
    for (const ExampleRecord& rec : data) examples.push_back(tokenize_lm(rec, seq_limit));

    const bool use_kd = teacher != nullptr && weights.lambda_kd != 0.0;
    std::vector<TeacherRows> teacher_cache;
    if (use_kd) {
        teacher_cache.reserve(examples.size());
        for (const LmExample& ex : examples) {
            teacher_cache.push_back(cache_teacher_rows(*teacher, ex));
        }
    }

    AdamW optimizer({&student.params}, tc.learning_rate, tc.weight_decay);
    const std::size_t n_params = student.params.size();

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(tc.seed);

    std::vector<LossReport> epochs;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        rng.shuffle(order);
        LossReport epoch_report;
        for (std::size_t start = 0, batch_no = 0; start < order.size();
             start += static_cast<std::size_t>(tc.batch_size), ++batch_no) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);

            std::vector<Tensor> acc(n_params);
            for (std::size_t p = 0; p < n_params; ++p) {
                acc[p] = Tensor::zeros(student.params.tensor(p).shape);
            }

            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                const LmExample& ex = examples[idx];

                ComputationTape tape;
                BoundParams bound = bind_params(tape, student.params, true);
                LmNodes nodes = lm_apply(tape, student, bound, ex.tokens);
                int teacher_node = -1;
                if (use_kd) {
                    teacher_node = tape.constant(
                        expand_teacher_rows(teacher_cache[idx],
                                            static_cast<int>(ex.tokens.size()),
                                            student.config.vocab_size));
                }
                LossReport report;
                const int loss = explanation_loss_node(tape, tc.divergence, teacher_node,
                                                       nodes.logits, ex.targets, ex.mask,
                                                       weights, &report);
                const double loss_value = tape.value(loss).data[0];
                if (!std::isfinite(loss_value)) {
                    throw std::runtime_error("training: non-finite loss at epoch " +
                                             std::to_string(epoch + 1) + " batch " +
                                             std::to_string(batch_no + 1) + " (record " +
                                             data[idx].id + ")");
                }
                epoch_report.sft += report.sft / static_cast<double>(examples.size());
                epoch_report.kd += report.kd / static_cast<double>(examples.size());
                epoch_report.combined +=
                    report.combined / static_cast<double>(examples.size());
                epoch_report.token_count += report.token_count;

                std::vector<Tensor> grads = tape.backward(loss);
                for (std::size_t p = 0; p < n_params; ++p) {
                    const Tensor& g = grads[static_cast<std::size_t>(bound.nodes[p])];
                    double* dst = acc[p].data.data();
                    const double* src = g.data.data();
                    for (std::size_t i = 0; i < g.data.size(); ++i) dst[i] += src[i];
                }
            }

            for (Tensor& t : acc) {
                for (double& v : t.data) v *= inv_batch;
            }
            optimizer.step(acc);
        }
        epochs.push_back(epoch_report);
    }

    Provenance prov;
    prov.path_name = path_name;
    prov.stage_index = stage_index;
    prov.config_digest = train_config_digest(student.config, tc);
    if (!epochs.empty()) prov.final_loss = epochs.back();
    return {make_checkpoint(student, std::move(prov)), std::move(epochs)};
}

FitLabel argmax_label(const std::vector<double>& zhat) {
    int best = 0;
    for (int c = 1; c < 3; ++c) {
        if (zhat[static_cast<std::size_t>(c)] > zhat[static_cast<std::size_t>(best)]) best = c;
    }
    return static_cast<FitLabel>(best);
}

}  // namespace

void validate_train_config(const TrainConfig& config) {
    const auto bad = [](const std::string& field, const std::string& value) {
        throw std::invalid_argument("train config: invalid " + field + " = " + value);
    };
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
        bad("learning_rate", std::to_string(config.learning_rate));
    }
    if (config.epochs < 0) bad("epochs", std::to_string(config.epochs));
    if (config.batch_size < 1) bad("batch_size", std::to_string(config.batch_size));
    if (!(config.weight_decay >= 0.0) || !std::isfinite(config.weight_decay)) {
        bad("weight_decay", std::to_string(config.weight_decay));
    }
    if (config.max_seq_len < 2) bad("max_seq_len", std::to_string(config.max_seq_len));
    if (config.weights.lambda_sft < 0.0 || config.weights.lambda_kd < 0.0) {
        bad("weights", std::to_string(config.weights.lambda_sft) + "/" +
                           std::to_string(config.weights.lambda_kd));
    }
}

std::string train_config_digest(const ModelConfig& model, const TrainConfig& train) {
    // Sorted key=value lines, hashed; stable across field reordering.
    std::map<std::string, std::string> kv;
    kv["model.vocab_size"] = std::to_string(model.vocab_size);
    kv["model.max_seq_len"] = std::to_string(model.max_seq_len);
    kv["model.num_layers"] = std::to_string(model.num_layers);
    kv["model.model_dim"] = std::to_string(model.model_dim);
    kv["model.num_heads"] = std::to_string(model.num_heads);
    kv["model.mlp_dim"] = std::to_string(model.mlp_dim);
    kv["model.seed"] = std::to_string(model.seed);
    kv["train.learning_rate"] = std::to_string(train.learning_rate);
    kv["train.epochs"] = std::to_string(train.epochs);
    kv["train.batch_size"] = std::to_string(train.batch_size);
    kv["train.weight_decay"] = std::to_string(train.weight_decay);
    kv["train.max_seq_len"] = std::to_string(train.max_seq_len);
    kv["train.seed"] = std::to_string(train.seed);
    kv["train.lambda_sft"] = std::to_string(train.weights.lambda_sft);
    kv["train.lambda_kd"] = std::to_string(train.weights.lambda_kd);
    kv["train.divergence"] = divergence_name(train.divergence);
    std::uint64_t hash = 14695981039346656037ULL;
    for (const auto& [key, value] : kv) {
        const std::string line = key + "=" + value + "\n";
        hash = fnv1a(line.data(), line.size(), hash);
    }
    return hex64(hash);
}

std::string model_size_label(const ModelConfig& config) {
    return std::to_string(config.num_layers) + "L" + std::to_string(config.model_dim);
}

AdamW::AdamW(std::vector<ParamSet*> groups, double learning_rate, double weight_decay)
    : groups_(std::move(groups)), lr_(learning_rate), wd_(weight_decay) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        for (std::size_t i = 0; i < groups_[g]->size(); ++i) {
            index_.emplace_back(g, i);
            m_.push_back(Tensor::zeros(groups_[g]->tensor(i).shape));
            v_.push_back(Tensor::zeros(groups_[g]->tensor(i).shape));
        }
    }
}

void AdamW::step(const std::vector<Tensor>& grads) {
    if (grads.size() != index_.size()) {
        throw std::invalid_argument("optimizer: got " + std::to_string(grads.size()) +
                                    " gradients for " + std::to_string(index_.size()) +
                                    " tensors");
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    t_ += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t j = 0; j < index_.size(); ++j) {
        Tensor& p = groups_[index_[j].first]->tensor(index_[j].second);
        const Tensor& g = grads[j];
        if (g.shape != p.shape) {
            throw std::invalid_argument("optimizer: gradient shape " + shape_str(g.shape) +
                                        " does not match parameter " + shape_str(p.shape));
        }
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double& m = m_[j].data[i];
            double& v = v_[j].data[i];
            m = kBeta1 * m + (1.0 - kBeta1) * g.data[i];
            v = kBeta2 * v + (1.0 - kBeta2) * g.data[i] * g.data[i];
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.data[i] -= lr_ * (mhat / (std::sqrt(vhat) + kEps) + wd_ * p.data[i]);
        }
    }
}

std::pair<Checkpoint, std::vector<LossReport>> train_sft(const ModelConfig& config,
                                                         const std::vector<ExampleRecord>& data,
                                                         const TrainConfig& train,
                                                         const std::string& path_name,
                                                         int stage_index) {
    LanguageModel model = init_model(config, "teacher");
    // Reference supervision only: λ_sft = 1, no distillation term.
    return run_lm_training(nullptr, std::move(model), data, train, LossWeights{1.0, 0.0},
                           path_name, stage_index);
}

std::pair<Checkpoint, std::vector<LossReport>> distill_explanation(
    const Checkpoint& teacher, const ModelConfig& student_config,
    const std::vector<ExampleRecord>& data, const TrainConfig& train,
    const std::string& path_name, int stage_index) {
    LanguageModel teacher_model = lm_from_checkpoint(teacher);
    if (teacher_model.config.vocab_size != student_config.vocab_size) {
        throw std::invalid_argument(
            "distill: teacher vocabulary " + std::to_string(teacher_model.config.vocab_size) +
            " does not match student " + std::to_string(student_config.vocab_size));
    }
    const std::uint64_t digest_before = params_digest(teacher_model.params);

    LanguageModel student = init_model(student_config, "student");
    auto result = run_lm_training(&teacher_model, std::move(student), data, train,
                                  train.weights, path_name, stage_index);

    if (params_digest(teacher_model.params) != digest_before) {
        throw std::logic_error("distill: teacher parameters changed during distillation");
    }
    return result;
}

double eval_kd(const LanguageModel& teacher, const LanguageModel& student,
               const std::vector<ExampleRecord>& records, DivergenceKind kind) {
    if (records.empty()) throw std::invalid_argument("eval_kd: empty record set");
    if (teacher.config.vocab_size != student.config.vocab_size) {
        throw std::invalid_argument("eval_kd: teacher and student vocabularies differ");
    }
    const int seq_limit = std::min(teacher.config.max_seq_len, student.config.max_seq_len);
    double total = 0.0;
    for (const ExampleRecord& rec : records) {
        LmExample ex = tokenize_lm(rec, seq_limit);
        Tensor teacher_logits = lm_forward(teacher, ex.tokens);
        Tensor student_logits = lm_forward(student, ex.tokens);
        // Same node as training so the two definitions cannot drift.
        ComputationTape tape;
        int t_node = tape.constant(std::move(teacher_logits));
        int s_node = tape.constant(std::move(student_logits));
        total += tape.value(kd_loss_node(tape, kind, t_node, s_node, ex.mask)).data[0];
    }
    return total / static_cast<double>(records.size());
}

GeneratedRecords generate_labels(const Checkpoint& teacher,
                                 const std::vector<std::pair<JobPosting, MemberProfile>>& inputs,
                                 LabelMode mode, const Vocab& vocab,
                                 const TemplateSet& templates) {
    LanguageModel model = lm_from_checkpoint(teacher);
    GeneratedRecords out;
    for (const auto& [job, profile] : inputs) {
        PromptOptions options;
        options.max_seq_len = model.config.max_seq_len;
        const std::vector<int> prompt = render_prompt(job, profile, vocab, templates, options);

        const int budget = model.config.max_seq_len - static_cast<int>(prompt.size());
        const std::vector<int> decoded = lm_greedy_decode(model, prompt, budget);
        const std::vector<int> target(decoded.begin() +
                                          static_cast<std::ptrdiff_t>(prompt.size()),
                                      decoded.end());

        const std::string id = record_id(job.id, profile.id) +
                               (mode == LabelMode::Classification ? "-cls" : "");
        const ParsedTarget parsed = parse_target(target, vocab);
        if (!parsed.has_fit) {
            out.rejected.push_back({id, "missing-fit-line"});
            continue;
        }

        ExampleRecord rec;
        rec.id = id;
        rec.source = "teacher-model";
        rec.label = parsed.fit;
        rec.coverage = oracle_assess(job, profile).first.coverage;
        rec.prompt_tokens = prompt;
        if (mode == LabelMode::Explanation) {
            rec.target_tokens = target;
        } else {
            rec.target_tokens = {vocab.id("fit"), vocab.id(fit_label_name(parsed.fit)),
                                 Vocab::kEos};
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::vector<int> cls_joint_tokens(const std::vector<int>& job_tokens,
                                  const std::vector<int>& profile_tokens) {
    std::vector<int> tokens;
    tokens.reserve(job_tokens.size() + profile_tokens.size() + 2);
    tokens.push_back(Vocab::kBos);
    tokens.insert(tokens.end(), job_tokens.begin(), job_tokens.end());
    tokens.push_back(Vocab::kSep);
    tokens.insert(tokens.end(), profile_tokens.begin(), profile_tokens.end());
    return tokens;
}

std::vector<int> cls_tower_tokens(const std::vector<int>& text_tokens) {
    std::vector<int> tokens;
    tokens.reserve(text_tokens.size() + 1);
    tokens.push_back(Vocab::kBos);
    tokens.insert(tokens.end(), text_tokens.begin(), text_tokens.end());
    return tokens;
}

FitLabel predict_fit(const EncoderClassifier& encoder, const ClsExample& example) {
    if (encoder.structure == ClsStructure::SeqCls) {
        return argmax_label(classify_pair(
            encoder, cls_joint_tokens(example.job_tokens, example.profile_tokens), {}));
    }
    return argmax_label(two_tower_score(encoder, cls_tower_tokens(example.job_tokens),
                                        cls_tower_tokens(example.profile_tokens)));
}

std::pair<Checkpoint, std::vector<ClsEpochReport>> distill_classifier(
    const ModelConfig& trunk_config, const std::vector<ClsExample>& data,
    const TrainConfig& train, ClsStructure structure, Pooling pooling, Interaction interaction,
    double holdout_fraction) {
    validate_train_config(train);
    if (data.size() < 2) {
        throw std::invalid_argument("classifier training: need at least 2 examples, got " +
                                    std::to_string(data.size()));
    }
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw std::invalid_argument("classifier training: holdout fraction must be in (0,1)");
    }

    bool single_class = true;
    for (const ClsExample& ex : data) {
        if (ex.label != data[0].label) {
            single_class = false;
            break;
        }
    }
    if (single_class) {
        std::cerr << "classifier training: all " << data.size() << " examples share label "
                  << fit_label_name(data[0].label) << "; weighted F1 is degenerate\n";
    }

    // Deterministic split: seeded shuffle, tail becomes the holdout.
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(train.seed);
    rng.shuffle(order);
    std::size_t holdout =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::ceil(holdout_fraction * static_cast<double>(data.size()))));
    if (holdout >= data.size()) holdout = data.size() - 1;
    std::vector<std::size_t> train_idx(order.begin(),
                                       order.end() - static_cast<std::ptrdiff_t>(holdout));
    std::vector<std::size_t> hold_idx(order.end() - static_cast<std::ptrdiff_t>(holdout),
                                      order.end());

    EncoderClassifier encoder = init_classifier(trunk_config, structure, pooling, interaction,
                                                32, trunk_config.seed);

    struct Encoded {
        std::vector<int> joint, job, profile;
        int label;
    };
    std::vector<Encoded> encoded(data.size());
    const int limit = std::min(train.max_seq_len, trunk_config.max_seq_len);
    for (std::size_t i = 0; i < data.size(); ++i) {
        encoded[i].label = static_cast<int>(data[i].label);
        if (structure == ClsStructure::SeqCls) {
            encoded[i].joint = cls_joint_tokens(data[i].job_tokens, data[i].profile_tokens);
            if (static_cast<int>(encoded[i].joint.size()) > limit) {
                throw std::invalid_argument("classifier training: example " + data[i].id +
                                            " needs " + std::to_string(encoded[i].joint.size()) +
                                            " positions, limit is " + std::to_string(limit));
            }
        } else {
            encoded[i].job = cls_tower_tokens(data[i].job_tokens);
            encoded[i].profile = cls_tower_tokens(data[i].profile_tokens);
            const std::size_t longest = std::max(encoded[i].job.size(), encoded[i].profile.size());
            if (static_cast<int>(longest) > limit) {
                throw std::invalid_argument("classifier training: example " + data[i].id +
                                            " needs " + std::to_string(longest) +
                                            " positions, limit is " + std::to_string(limit));
            }
        }
    }

    std::vector<ParamSet*> groups{&encoder.trunk.params};
    if (structure == ClsStructure::TwoTower) groups.push_back(&encoder.profile_trunk.params);
    groups.push_back(&encoder.head);
    AdamW optimizer(groups, train.learning_rate, train.weight_decay);

    auto holdout_report = [&](int epoch, double train_loss) {
        std::vector<FitLabel> preds, labels;
        preds.reserve(hold_idx.size());
        labels.reserve(hold_idx.size());
        for (std::size_t i : hold_idx) {
            preds.push_back(predict_fit(encoder, data[i]));
            labels.push_back(data[i].label);
        }
        ClassificationReport rep = classification_report(preds, labels);
        return ClsEpochReport{epoch, train_loss, rep.accuracy, rep.weighted_f1};
    };

    std::vector<ClsEpochReport> reports;
    reports.push_back(holdout_report(0, 0.0));

    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        for (std::size_t start = 0, batch_no = 0; start < train_idx.size();
             start += static_cast<std::size_t>(train.batch_size), ++batch_no) {
            const std::size_t end =
                std::min(train_idx.size(), start + static_cast<std::size_t>(train.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);

            std::vector<Tensor> acc;
            for (ParamSet* group : groups) {
                for (std::size_t i = 0; i < group->size(); ++i) {
                    acc.push_back(Tensor::zeros(group->tensor(i).shape));
                }
            }

            for (std::size_t k = start; k < end; ++k) {
                const Encoded& ex = encoded[train_idx[k]];
                ComputationTape tape;
                BoundClassifier bound = bind_classifier(tape, encoder);
                const int zhat = structure == ClsStructure::SeqCls
                                     ? classifier_zhat_node(tape, encoder, bound, ex.joint, {})
                                     : classifier_zhat_node(tape, encoder, bound, ex.job,
                                                            ex.profile);
                const int loss = classification_loss_node(tape, zhat, ex.label);
                const double loss_value = tape.value(loss).data[0];
                if (!std::isfinite(loss_value)) {
                    throw std::runtime_error("classifier training: non-finite loss at epoch " +
                                             std::to_string(epoch + 1) + " batch " +
                                             std::to_string(batch_no + 1) + " (example " +
                                             data[train_idx[k]].id + ")");
                }
                epoch_loss += loss_value / static_cast<double>(train_idx.size());

                std::vector<Tensor> grads = tape.backward(loss);
                std::size_t slot = 0;
                auto accumulate = [&](const BoundParams& bp, const ParamSet& set) {
                    for (std::size_t i = 0; i < set.size(); ++i, ++slot) {
                        const Tensor& g = grads[static_cast<std::size_t>(bp.nodes[i])];
                        for (std::size_t d = 0; d < g.data.size(); ++d) {
                            acc[slot].data[d] += g.data[d];
                        }
                    }
                };
                accumulate(bound.trunk, encoder.trunk.params);
                if (structure == ClsStructure::TwoTower) {
                    accumulate(bound.profile_trunk, encoder.profile_trunk.params);
                }
                accumulate(bound.head, encoder.head);
            }

            for (Tensor& t : acc) {
                for (double& v : t.data) v *= inv_batch;
            }
            optimizer.step(acc);
        }
        reports.push_back(holdout_report(epoch + 1, epoch_loss));
    }

    Provenance prov;
    prov.path_name = "distill-cls";
    prov.config_digest = train_config_digest(trunk_config, train);
    prov.final_loss.combined = reports.back().train_loss;
    prov.final_loss.sft = reports.back().train_loss;
    return {make_checkpoint(encoder, std::move(prov)), std::move(reports)};
}

void validate_path(const DistillPath& path) {
    if (path.name.empty()) throw std::invalid_argument("path: missing name");
    if (path.stages.empty()) throw std::invalid_argument("path: no stages");
    for (std::size_t i = 0; i < path.stages.size(); ++i) {
        const PathStage& stage = path.stages[i];
        if (stage.kind != "sft" && stage.kind != "distill") {
            throw std::invalid_argument("path: stage " + std::to_string(i) +
                                        " has unknown kind " + stage.kind);
        }
        if (stage.kind == "sft" && i != 0) {
            throw std::invalid_argument("path: only the first stage may be sft");
        }
        validate_config(stage.model);
        validate_train_config(stage.train);
    }
    if (path.stages[0].kind == "distill" && path.initial_teacher.empty()) {
        throw std::invalid_argument("path: first stage distills but no initial teacher is set");
    }
}

PathResult run_path(const DistillPath& path, const std::vector<ExampleRecord>& train_data,
                    const std::vector<ExampleRecord>& eval_records,
                    const std::string& artifact_dir) {
    validate_path(path);
    if (eval_records.empty()) throw std::invalid_argument("path: empty eval set");

    PathResult result;
    Checkpoint teacher_ckpt;
    bool have_teacher = false;
    if (path.stages[0].kind == "distill") {
        teacher_ckpt = load_checkpoint(path.initial_teacher);
        have_teacher = true;
    }

    Checkpoint reference_teacher;  // scores are taken against this model's decodes
    bool have_reference = have_teacher;
    if (have_teacher) reference_teacher = teacher_ckpt;

    struct StageScore {
        std::size_t stage;
        std::string teacher_label;
    };
    std::vector<StageScore> scored;

    for (std::size_t i = 0; i < path.stages.size(); ++i) {
        const PathStage& stage = path.stages[i];
        if (stage.kind == "sft") {
            auto [ckpt, reports] =
                train_sft(stage.model, train_data, stage.train, path.name, static_cast<int>(i));
            (void)reports;
            result.checkpoints.push_back(std::move(ckpt));
        } else {
            if (!have_teacher) throw std::logic_error("path: distill stage without a teacher");
            auto [ckpt, reports] = distill_explanation(teacher_ckpt, stage.model, train_data,
                                                       stage.train, path.name,
                                                       static_cast<int>(i));
            (void)reports;
            scored.push_back({i, model_size_label(teacher_ckpt.config)});
            result.checkpoints.push_back(std::move(ckpt));
        }
        teacher_ckpt = result.checkpoints.back();
        have_teacher = true;
        if (!have_reference) {
            reference_teacher = result.checkpoints.back();
            have_reference = true;
        }
        if (!artifact_dir.empty()) {
            save_checkpoint(result.checkpoints.back(),
                            artifact_dir + "/stage" + std::to_string(i) + ".ckpt");
        }
    }

    // References: the initial teacher's greedy decodes on the eval prompts.
    LanguageModel reference_model = lm_from_checkpoint(reference_teacher);
    std::vector<std::vector<int>> prompts, references;
    prompts.reserve(eval_records.size());
    references.reserve(eval_records.size());
    for (const ExampleRecord& rec : eval_records) {
        const int budget =
            reference_model.config.max_seq_len - static_cast<int>(rec.prompt_tokens.size());
        std::vector<int> decoded = lm_greedy_decode(reference_model, rec.prompt_tokens, budget);
        references.emplace_back(decoded.begin() +
                                    static_cast<std::ptrdiff_t>(rec.prompt_tokens.size()),
                                decoded.end());
        prompts.push_back(rec.prompt_tokens);
    }

    for (const StageScore& s : scored) {
        const Checkpoint& ckpt = result.checkpoints[s.stage];
        LanguageModel student = lm_from_checkpoint(ckpt);
        RougeScores scores = eval_explanations(student, prompts, references);
        ReportRow row;
        row["path"] = path.name;
        row["teacher"] = s.teacher_label;
        row["student"] = model_size_label(ckpt.config);
        row["divergence"] = divergence_name(path.stages[s.stage].train.divergence);
        row["nll"] = scores.mean_nll;
        row["rouge1"] = scores.rouge1.f1;
        row["rouge2"] = scores.rouge2.f1;
        row["rougeL"] = scores.rougeL.f1;
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace fitkd
