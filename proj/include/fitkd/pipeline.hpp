#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fitkd/classifier.hpp"
#include "fitkd/domain.hpp"
#include "fitkd/model.hpp"
#include "fitkd/train.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

enum class CompressionMode { Rule, Model };

const char* compression_mode_name(CompressionMode mode);
CompressionMode compression_mode_from_name(const std::string& name);

struct SummaryResult {
    std::vector<int> tokens;  // compressed job text
    double ratio = 1.0;       // compressed tokens / original tokens (1.0 when empty)
};

// Job-text compression. Rule mode copies the five-token requirement spans
// verbatim and drops everything else, so it preserves every requirement
// skill by construction and is a fixed point on its own output. Model mode
// greedy-decodes the extraction prompt with the summarizer model. Applies
// to job text only — profile text is never compressed.
SummaryResult summarize_job(const std::vector<int>& job_tokens, CompressionMode mode,
                            const Vocab& vocab, const TemplateSet& templates,
                            const LanguageModel* summarizer = nullptr);

struct PipelineConfig {
    std::string classifier_checkpoint;  // required by serve_fit / bench
    std::string explainer_checkpoint;   // required by serve_explanation / bench
    std::string summarizer_checkpoint;  // required only in model compression mode
    CompressionMode mode = CompressionMode::Rule;
    int skill_catalog = 24;
    int bench_classification = 30;  // 30:4:1 request mix
    int bench_summarization = 4;
    int bench_explanation = 1;
    std::uint64_t bench_seed = 0;
};

// Loaded, immutable serving state. Checkpoints referenced by the config are
// opened eagerly so a bad path fails at load, not mid-request.
struct ServeBundle {
    CompressionMode mode = CompressionMode::Rule;
    bool has_summarizer = false;
    bool has_classifier = false;
    bool has_explainer = false;
    LanguageModel summarizer;
    EncoderClassifier classifier;
    LanguageModel explainer;
    Vocab vocab;
    TemplateSet templates;
};

ServeBundle load_bundle(const PipelineConfig& config);

struct ServeResult {
    FitAssessment fit;              // predicted label + its midpoint rating
    double compressed_ratio = 1.0;  // compressed tokens / original tokens
    double summarize_seconds = 0.0;
    double classify_seconds = 0.0;
};

// Compress the job text, encode the (job, profile) pair, return the argmax
// category with its midpoint rating. Deterministic in (bundle, inputs).
ServeResult serve_fit(const ServeBundle& bundle, const std::string& job_text,
                      const std::string& profile_text);

struct ExplanationResult {
    std::vector<int> tokens;  // decoded continuation, trailing <eos> removed
    std::string text;
    bool well_formed = false;  // parses as line-per-requirement plus a fit line
    bool truncated = false;    // decode budget ran out before <eos>
    double decode_seconds = 0.0;
};

// Greedy-decodes the full explanation prompt on the uncompressed inputs.
ExplanationResult serve_explanation(const ServeBundle& bundle, const std::string& job_text,
                                    const std::string& profile_text);

struct BenchRow {
    std::string module;  // "classification" | "summarization" | "explanation"
    int requests = 0;
    double mean_ms = 0.0;
    double p95_ms = 0.0;  // order statistic at index ceil(0.95·n) − 1
    double rps = 0.0;
    double normalized = 0.0;  // throughput relative to explanation (== 1.0 there)
};

// Replays the request mix round-robin over the supplied pairs and reports
// per-module latency and throughput, normalized to the explanation module.
// Rows come back in classification, summarization, explanation order.
std::vector<BenchRow> bench(const ServeBundle& bundle,
                            const std::vector<std::pair<JobPosting, MemberProfile>>& pairs,
                            int classification_requests, int summarization_requests,
                            int explanation_requests);

// Balanced oracle-labeled classifier examples: per_label of each fit class,
// ids "j<n>-p<n>" (suffix "-c" when the job text is rule-compressed). A
// compressed_fraction of the examples carry compressed job text; the rest
// keep the full text, so the classifier sees both forms.
std::vector<ClsExample> make_classification_dataset(int per_label, const Vocab& vocab,
                                                    std::uint64_t seed,
                                                    double compressed_fraction = 0.7);

}  // namespace fitkd
