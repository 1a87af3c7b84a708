#pragma once

#include <array>
#include <string>
#include <vector>

#include "fitkd/dataset.hpp"
#include "fitkd/model.hpp"

namespace fitkd {

struct RougeTriple {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct RougeScores {
    RougeTriple rouge1;
    RougeTriple rouge2;
    RougeTriple rougeL;
    double mean_nll = 0.0;
    int decode_failures = 0;
};

// Clipped n-gram overlap on raw token ids (no normalization): precision =
// overlap / candidate n-grams, recall = overlap / reference n-grams, F1 the
// harmonic mean (0 when P + R = 0). Degenerate inputs score zero.
RougeTriple rouge_n(const std::vector<int>& candidate, const std::vector<int>& reference, int n);

// Longest-common-subsequence variant: P = LCS/|candidate|, R = LCS/|reference|.
RougeTriple rouge_l(const std::vector<int>& candidate, const std::vector<int>& reference);

// Greedy-decodes every prompt and averages per-example ROUGE F1/P/R against
// the aligned references (one trailing <eos> stripped from each side before
// scoring). mean_nll is the mean over examples of the per-token-mean
// negative log-likelihood of the reference continuation. A decode or
// scoring failure on one example is reported on stderr, scores zero, and
// the run continues.
RougeScores eval_explanations(const LanguageModel& model,
                              const std::vector<std::vector<int>>& prompts,
                              const std::vector<std::vector<int>>& references);

// Convenience over records: prompts/references taken from each record.
RougeScores eval_explanations(const LanguageModel& model,
                              const std::vector<ExampleRecord>& records);

struct CategoryScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

struct ClassificationReport {
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::array<CategoryScores, 3> per_category;      // Low, Medium, High
    std::array<std::array<int, 3>, 3> confusion{};   // [actual][predicted]
    int total = 0;
};

// Accuracy, per-category precision/recall/F1, and support-weighted F1
// (categories with zero support are excluded from the weighted mean).
ClassificationReport classification_report(const std::vector<FitLabel>& predictions,
                                           const std::vector<FitLabel>& labels);

}  // namespace fitkd
