#include "fitkd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>

#include "fitkd/objectives.hpp"
#include "fitkd/tape.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

namespace {

RougeTriple triple_from_counts(double overlap, double candidate_total, double reference_total) {
    RougeTriple t;
    if (candidate_total > 0) t.precision = overlap / candidate_total;
    if (reference_total > 0) t.recall = overlap / reference_total;
    if (t.precision + t.recall > 0) {
        t.f1 = 2.0 * t.precision * t.recall / (t.precision + t.recall);
    }
    return t;
}

std::map<std::vector<int>, int> ngram_counts(const std::vector<int>& tokens, int n) {
    std::map<std::vector<int>, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        counts[std::vector<int>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)] += 1;
    }
    return counts;
}

std::vector<int> strip_trailing_eos(std::vector<int> tokens) {
    if (!tokens.empty() && tokens.back() == Vocab::kEos) tokens.pop_back();
    return tokens;
}

}  // namespace

RougeTriple rouge_n(const std::vector<int>& candidate, const std::vector<int>& reference,
                    int n) {
    if (n != 1 && n != 2) {
        throw std::invalid_argument("rouge_n: n must be 1 or 2, got " + std::to_string(n));
    }
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    long long overlap = 0, cand_total = 0, ref_total = 0;
    for (const auto& [gram, count] : cand) {
        cand_total += count;
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    for (const auto& [gram, count] : ref) ref_total += count;
    return triple_from_counts(static_cast<double>(overlap), static_cast<double>(cand_total),
                              static_cast<double>(ref_total));
}

RougeTriple rouge_l(const std::vector<int>& candidate, const std::vector<int>& reference) {
    const std::size_t m = candidate.size();
    const std::size_t n = reference.size();
    if (m == 0 || n == 0) return {};
    // Rolling single-row LCS table.
    std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                          : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return triple_from_counts(static_cast<double>(prev[n]), static_cast<double>(m),
                              static_cast<double>(n));
}

RougeScores eval_explanations(const LanguageModel& model,
                              const std::vector<std::vector<int>>& prompts,
                              const std::vector<std::vector<int>>& references) {
    if (prompts.empty()) throw std::invalid_argument("eval_explanations: empty eval set");
    if (prompts.size() != references.size()) {
        throw std::invalid_argument("eval_explanations: " + std::to_string(prompts.size()) +
                                    " prompts vs " + std::to_string(references.size()) +
                                    " references");
    }

    RougeScores scores;
    const double count = static_cast<double>(prompts.size());
    for (std::size_t e = 0; e < prompts.size(); ++e) {
        RougeTriple r1, r2, rl;
        double nll = 0.0;
        try {
            const std::vector<int>& prompt = prompts[e];
            const std::vector<int> reference = strip_trailing_eos(references[e]);

            const int budget = model.config.max_seq_len - static_cast<int>(prompt.size());
            std::vector<int> decoded = lm_greedy_decode(model, prompt, budget);
            std::vector<int> candidate = strip_trailing_eos(
                std::vector<int>(decoded.begin() + static_cast<std::ptrdiff_t>(prompt.size()),
                                 decoded.end()));
            r1 = rouge_n(candidate, reference, 1);
            r2 = rouge_n(candidate, reference, 2);
            rl = rouge_l(candidate, reference);

            // Per-token-mean NLL of the reference continuation under the
            // model, teacher-forced on prompt + reference.
            std::vector<int> full = prompt;
            full.insert(full.end(), references[e].begin(), references[e].end());
            std::vector<int> targets(full.size(), 0);
            std::vector<int> mask(full.size(), 0);
            for (std::size_t t = 0; t + 1 < full.size(); ++t) {
                targets[t] = full[t + 1];
                mask[t] = t + 1 >= prompt.size() ? 1 : 0;
            }
            ComputationTape tape;
            BoundParams bound = bind_params(tape, model.params, false);
            LmNodes nodes = lm_apply(tape, model, bound, full);
            nll = tape.value(sft_loss_node(tape, nodes.logits, targets, mask)).data[0];
        } catch (const std::exception& ex) {
            std::cerr << "eval_explanations: example " << e << " scored 0 (" << ex.what()
                      << ")\n";
            scores.decode_failures += 1;
            r1 = r2 = rl = RougeTriple{};
            nll = 0.0;
        }
        scores.rouge1.precision += r1.precision / count;
        scores.rouge1.recall += r1.recall / count;
        scores.rouge1.f1 += r1.f1 / count;
        scores.rouge2.precision += r2.precision / count;
        scores.rouge2.recall += r2.recall / count;
        scores.rouge2.f1 += r2.f1 / count;
        scores.rougeL.precision += rl.precision / count;
        scores.rougeL.recall += rl.recall / count;
        scores.rougeL.f1 += rl.f1 / count;
        scores.mean_nll += nll / count;
    }
    return scores;
}

RougeScores eval_explanations(const LanguageModel& model,
                              const std::vector<ExampleRecord>& records) {
    std::vector<std::vector<int>> prompts, references;
    prompts.reserve(records.size());
    references.reserve(records.size());
    for (const ExampleRecord& rec : records) {
        prompts.push_back(rec.prompt_tokens);
        references.push_back(rec.target_tokens);
    }
    return eval_explanations(model, prompts, references);
}

ClassificationReport classification_report(const std::vector<FitLabel>& predictions,
                                           const std::vector<FitLabel>& labels) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("classification_report: " +
                                    std::to_string(predictions.size()) + " predictions vs " +
                                    std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw std::invalid_argument("classification_report: empty input");

    ClassificationReport report;
    report.total = static_cast<int>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        report.confusion[static_cast<std::size_t>(labels[i])]
                        [static_cast<std::size_t>(predictions[i])] += 1;
    }

    int correct = 0;
    double weighted_sum = 0.0;
    int supported = 0;
    for (int c = 0; c < 3; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        int tp = report.confusion[cu][cu];
        int actual = 0, predicted = 0;
        for (int o = 0; o < 3; ++o) {
            actual += report.confusion[cu][static_cast<std::size_t>(o)];
            predicted += report.confusion[static_cast<std::size_t>(o)][cu];
        }
        correct += tp;
        CategoryScores& cs = report.per_category[cu];
        cs.support = actual;
        if (predicted > 0) cs.precision = static_cast<double>(tp) / predicted;
        if (actual > 0) cs.recall = static_cast<double>(tp) / actual;
        if (cs.precision + cs.recall > 0) {
            cs.f1 = 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall);
        }
        if (actual > 0) {
            weighted_sum += actual * cs.f1;
            supported += actual;
        }
    }
    report.accuracy = static_cast<double>(correct) / report.total;
    report.weighted_f1 = supported > 0 ? weighted_sum / supported : 0.0;
    return report;
}

}  // namespace fitkd
