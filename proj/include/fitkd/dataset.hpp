#pragma once

#include <map>
#include <string>
#include <vector>

#include "fitkd/domain.hpp"
#include "fitkd/rng.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

// One training/evaluation example. Token fields hold vocabulary ids in
// memory; on disk they are written as word strings so the files read back
// without the vocabulary at hand.
struct ExampleRecord {
    std::string id;       // "j<job>-p<profile>" with an optional suffix
    std::string source;   // "oracle", "teacher-model", or "filtered"
    FitLabel label = FitLabel::Low;
    double coverage = 0.0;
    std::vector<int> prompt_tokens;
    std::vector<int> target_tokens;
};

std::string record_id(int job_id, int profile_id);
// Extracts the job/profile ids back out of a record id; suffixes after the
// "j<n>-p<n>" stem are ignored. Malformed ids → error.
std::pair<int, int> parse_record_id(const std::string& id);

struct RejectedRecord {
    std::string id;
    std::string reason;  // "hallucinated-skill", "label-mismatch", "truncated"
};

struct FilterResult {
    std::vector<ExampleRecord> kept;
    std::vector<RejectedRecord> rejected;
};

// Drops records whose target is truncated (no trailing <eos>), whose
// explanation mentions a skill the job never asked about, or whose label
// disagrees with oracle_assess on the referenced pair. Kept teacher-model
// records are relabeled source="filtered"; re-running the filter on its own
// output is a no-op.
FilterResult quality_filter(const std::vector<ExampleRecord>& records,
                            const std::map<int, JobPosting>& jobs,
                            const std::map<int, MemberProfile>& profiles, const Vocab& vocab);

// Exactly per_category records of each label, chosen and ordered
// deterministically from the seed. Errors name the deficient category.
std::vector<ExampleRecord> stratified_sample(const std::vector<ExampleRecord>& pool,
                                             int per_category, Rng& rng);

// Line-delimited records with fields {id, source, label, coverage,
// prompt_tokens, target_tokens} in that order.
void write_records(const std::string& path, const std::vector<ExampleRecord>& records,
                   const Vocab& vocab);
std::vector<ExampleRecord> read_records(const std::string& path, const Vocab& vocab);

struct OracleDataset {
    std::vector<ExampleRecord> records;
    std::map<int, JobPosting> jobs;
    std::map<int, MemberProfile> profiles;
};

// `count` oracle-labeled records over fresh job/profile pairs. The profile
// affinity cycles a fixed grid so coverage spreads across all three labels,
// and every eighth profile is skill-disjoint to reinforce the Low class.
OracleDataset make_oracle_dataset(int count, const Vocab& vocab, const TemplateSet& templates,
                                  std::uint64_t seed, const PromptOptions& options = {},
                                  IntRange req_count = {1, 4}, IntRange noise_count = {4, 7});

}  // namespace fitkd
