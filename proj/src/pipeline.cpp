#include "fitkd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fitkd/checkpoint.hpp"

namespace fitkd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> decode_continuation(const LanguageModel& model, const std::vector<int>& prompt,
                                     bool* truncated = nullptr) {
    const int budget = model.config.max_seq_len - static_cast<int>(prompt.size());
    std::vector<int> decoded = lm_greedy_decode(model, prompt, budget);
    std::vector<int> out(decoded.begin() + static_cast<std::ptrdiff_t>(prompt.size()),
                         decoded.end());
    const bool ended = !out.empty() && out.back() == Vocab::kEos;
    if (truncated != nullptr) *truncated = !ended;
    if (ended) out.pop_back();
    return out;
}

}  // namespace

const char* compression_mode_name(CompressionMode mode) {
    switch (mode) {
        case CompressionMode::Rule: return "rule";
        case CompressionMode::Model: return "model";
    }
    return "?";
}

CompressionMode compression_mode_from_name(const std::string& name) {
    if (name == "rule") return CompressionMode::Rule;
    if (name == "model") return CompressionMode::Model;
    throw std::invalid_argument("compression mode: unknown name \"" + name +
                                "\" (expected rule or model)");
}

SummaryResult summarize_job(const std::vector<int>& job_tokens, CompressionMode mode,
                            const Vocab& vocab, const TemplateSet& templates,
                            const LanguageModel* summarizer) {
    SummaryResult result;
    if (job_tokens.empty()) return result;  // nothing to compress, ratio 1

    if (mode == CompressionMode::Rule) {
        const int req = vocab.id("req");
        std::size_t i = 0;
        while (i < job_tokens.size()) {
            if (job_tokens[i] == req) {
                const std::size_t span = std::min<std::size_t>(5, job_tokens.size() - i);
                for (std::size_t k = 0; k < span; ++k) result.tokens.push_back(job_tokens[i + k]);
                i += span;
            } else {
                ++i;  // noise word
            }
        }
    } else {
        if (summarizer == nullptr) {
            throw std::invalid_argument(
                "summarize_job: model compression mode needs a summarizer model");
        }
        JobPosting job;
        job.raw_text = vocab.decode(job_tokens);
        MemberProfile unused;
        PromptOptions options;
        options.variant = PromptVariant::ExtractionOnly;
        options.max_seq_len = summarizer->config.max_seq_len;
        const std::vector<int> prompt =
            render_prompt(job, unused, vocab, templates, options);
        result.tokens = decode_continuation(*summarizer, prompt);
    }
    result.ratio =
        static_cast<double>(result.tokens.size()) / static_cast<double>(job_tokens.size());
    return result;
}

ServeBundle load_bundle(const PipelineConfig& config) {
    if (config.mode == CompressionMode::Model && config.summarizer_checkpoint.empty()) {
        throw std::invalid_argument(
            "pipeline: model compression mode needs a summarizer checkpoint");
    }
    ServeBundle bundle;
    bundle.mode = config.mode;
    bundle.vocab = Vocab::build(config.skill_catalog);
    if (!config.summarizer_checkpoint.empty()) {
        bundle.summarizer = lm_from_checkpoint(load_checkpoint(config.summarizer_checkpoint));
        bundle.has_summarizer = true;
    }
    if (!config.classifier_checkpoint.empty()) {
        bundle.classifier =
            classifier_from_checkpoint(load_checkpoint(config.classifier_checkpoint));
        bundle.has_classifier = true;
    }
    if (!config.explainer_checkpoint.empty()) {
        bundle.explainer = lm_from_checkpoint(load_checkpoint(config.explainer_checkpoint));
        bundle.has_explainer = true;
    }
    // A checkpoint trained against a different skill catalog would silently
    // misread every token; refuse the mix at load.
    const auto check_vocab = [&](const ModelConfig& loaded, const char* which) {
        if (loaded.vocab_size != bundle.vocab.size()) {
            throw std::invalid_argument(
                "pipeline: " + std::string(which) + " checkpoint was trained over " +
                std::to_string(loaded.vocab_size) + " tokens but the catalog builds " +
                std::to_string(bundle.vocab.size()));
        }
    };
    if (bundle.has_summarizer) check_vocab(bundle.summarizer.config, "summarizer");
    if (bundle.has_classifier) check_vocab(bundle.classifier.trunk.config, "classifier");
    if (bundle.has_explainer) check_vocab(bundle.explainer.config, "explainer");
    return bundle;
}

ServeResult serve_fit(const ServeBundle& bundle, const std::string& job_text,
                      const std::string& profile_text) {
    if (!bundle.has_classifier) {
        throw std::invalid_argument("serve_fit: no classifier checkpoint is loaded");
    }
    ServeResult result;

    const Clock::time_point t0 = Clock::now();
    const std::vector<int> job_tokens = bundle.vocab.encode(job_text);
    const SummaryResult summary =
        summarize_job(job_tokens, bundle.mode, bundle.vocab, bundle.templates,
                      bundle.has_summarizer ? &bundle.summarizer : nullptr);
    result.compressed_ratio = summary.ratio;
    result.summarize_seconds = seconds_since(t0);

    const Clock::time_point t1 = Clock::now();
    ClsExample example;
    example.job_tokens = summary.tokens;
    example.profile_tokens = bundle.vocab.encode(profile_text);
    const int limit = bundle.classifier.trunk.config.max_seq_len;
    const std::size_t joint =
        cls_joint_tokens(example.job_tokens, example.profile_tokens).size();
    const std::size_t tower = 1 + std::max(example.job_tokens.size(),
                                           example.profile_tokens.size());
    const std::size_t needed =
        bundle.classifier.structure == ClsStructure::SeqCls ? joint : tower;
    if (needed > static_cast<std::size_t>(limit)) {
        throw std::invalid_argument("serve_fit: pair needs " + std::to_string(needed) +
                                    " positions after compression, encoder limit is " +
                                    std::to_string(limit));
    }
    const FitLabel label = predict_fit(bundle.classifier, example);
    result.fit.label = label;
    result.fit.rating = rating_for_label(label);
    result.classify_seconds = seconds_since(t1);
    return result;
}

ExplanationResult serve_explanation(const ServeBundle& bundle, const std::string& job_text,
                                    const std::string& profile_text) {
    if (!bundle.has_explainer) {
        throw std::invalid_argument("serve_explanation: no explainer checkpoint is loaded");
    }
    ExplanationResult result;
    const Clock::time_point t0 = Clock::now();
    JobPosting job;
    job.raw_text = job_text;
    MemberProfile profile;
    profile.raw_text = profile_text;
    PromptOptions options;
    options.max_seq_len = bundle.explainer.config.max_seq_len;
    const std::vector<int> prompt =
        render_prompt(job, profile, bundle.vocab, bundle.templates, options);
    result.tokens = decode_continuation(bundle.explainer, prompt, &result.truncated);

    std::vector<int> parse_view = result.tokens;
    if (!result.truncated) parse_view.push_back(Vocab::kEos);
    const ParsedTarget parsed = parse_target(parse_view, bundle.vocab);
    result.well_formed = parsed.well_formed && parsed.has_fit && !result.truncated;
    result.text = bundle.vocab.decode(result.tokens);
    result.decode_seconds = seconds_since(t0);
    return result;
}

std::vector<BenchRow> bench(const ServeBundle& bundle,
                            const std::vector<std::pair<JobPosting, MemberProfile>>& pairs,
                            int classification_requests, int summarization_requests,
                            int explanation_requests) {
    if (pairs.empty()) throw std::invalid_argument("bench: no request pairs");
    if (classification_requests < 1 || summarization_requests < 1 || explanation_requests < 1) {
        throw std::invalid_argument("bench: every module needs at least one request");
    }

    auto run_module = [&](const std::string& module, int count,
                          auto&& request) -> BenchRow {
        std::vector<double> latencies_ms;
        latencies_ms.reserve(static_cast<std::size_t>(count));
        const Clock::time_point start = Clock::now();
        for (int i = 0; i < count; ++i) {
            const auto& [job, profile] = pairs[static_cast<std::size_t>(i) % pairs.size()];
            const Clock::time_point t0 = Clock::now();
            request(job, profile);
            latencies_ms.push_back(seconds_since(t0) * 1e3);
        }
        const double total_s = seconds_since(start);
        BenchRow row;
        row.module = module;
        row.requests = count;
        double sum = 0.0;
        for (double v : latencies_ms) sum += v;
        row.mean_ms = sum / static_cast<double>(count);
        std::sort(latencies_ms.begin(), latencies_ms.end());
        const std::size_t at = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(count))) - 1;
        row.p95_ms = latencies_ms[at];
        row.rps = static_cast<double>(count) / total_s;
        return row;
    };

    std::vector<BenchRow> rows;
    rows.push_back(run_module("classification", classification_requests,
                              [&](const JobPosting& job, const MemberProfile& profile) {
                                  serve_fit(bundle, job.raw_text, profile.raw_text);
                              }));
    rows.push_back(run_module("summarization", summarization_requests,
                              [&](const JobPosting& job, const MemberProfile&) {
                                  summarize_job(bundle.vocab.encode(job.raw_text), bundle.mode,
                                                bundle.vocab, bundle.templates,
                                                bundle.has_summarizer ? &bundle.summarizer
                                                                      : nullptr);
                              }));
    rows.push_back(run_module("explanation", explanation_requests,
                              [&](const JobPosting& job, const MemberProfile& profile) {
                                  serve_explanation(bundle, job.raw_text, profile.raw_text);
                              }));
    const double base = rows.back().rps;
    for (BenchRow& row : rows) row.normalized = row.rps / base;
    return rows;
}

std::vector<ClsExample> make_classification_dataset(int per_label, const Vocab& vocab,
                                                    std::uint64_t seed,
                                                    double compressed_fraction) {
    if (per_label < 1) throw std::invalid_argument("classification dataset: per_label < 1");
    if (compressed_fraction < 0.0 || compressed_fraction > 1.0) {
        throw std::invalid_argument("classification dataset: compressed fraction outside [0,1]");
    }
    static const double kAffinityGrid[7] = {0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.95};
    const TemplateSet templates;
    Rng rng(seed);
    std::vector<ClsExample> out;
    out.reserve(static_cast<std::size_t>(per_label) * 3);
    int counts[3] = {0, 0, 0};
    const long cap = 200L * 3L * per_label;
    for (long attempt = 0; attempt < cap; ++attempt) {
        if (counts[0] == per_label && counts[1] == per_label && counts[2] == per_label) break;
        const int id = static_cast<int>(attempt);
        JobPosting job = gen_job(rng, id, vocab, {1, 4}, {4, 7});
        MemberProfile profile =
            (id % 8 == 7) ? gen_disjoint_profile(rng, id, vocab, job, {1, 3})
                          : gen_profile_for_job(rng, id, vocab, job, kAffinityGrid[id % 8]);
        const bool compress = rng.uniform() < compressed_fraction;
        const auto [assessment, explanation] = oracle_assess(job, profile);
        const int bucket = static_cast<int>(assessment.label);
        if (counts[bucket] == per_label) continue;
        counts[bucket] += 1;
        ClsExample example;
        example.id = record_id(job.id, profile.id) + (compress ? "-c" : "");
        const std::vector<int> job_tokens = vocab.encode(job.raw_text);
        example.job_tokens =
            compress ? summarize_job(job_tokens, CompressionMode::Rule, vocab, templates).tokens
                     : job_tokens;
        example.profile_tokens = vocab.encode(profile.raw_text);
        example.label = assessment.label;
        out.push_back(std::move(example));
    }
    for (int c = 0; c < 3; ++c) {
        if (counts[c] != per_label) {
            throw std::runtime_error(std::string("classification dataset: could not fill the ") +
                                     fit_label_name(static_cast<FitLabel>(c)) + " category (" +
                                     std::to_string(counts[c]) + "/" +
                                     std::to_string(per_label) + ")");
        }
    }
    return out;
}

}  // namespace fitkd
