#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fitkd/rng.hpp"
#include "fitkd/vocab.hpp"

namespace fitkd {

struct Requirement {
    int skill = 0;
    int min_years = 1;
    bool required = true;  // false = preferred
};

struct JobPosting {
    int id = 0;
    std::vector<Requirement> requirements;  // distinct skills, at least one
    int noise_lines = 0;
    std::string raw_text;  // requirement and noise lines interleaved
};

struct SkillClaim {
    int skill = 0;
    int years = 0;
};

struct MemberProfile {
    int id = 0;
    std::vector<SkillClaim> skills;  // distinct
    std::string raw_text;
};

enum class FitLabel { Low = 0, Medium = 1, High = 2 };

const char* fit_label_name(FitLabel label);
FitLabel fit_label_from_name(const std::string& name);

struct FitAssessment {
    FitLabel label = FitLabel::Low;
    double rating = 1.0 / 6.0;  // tertile midpoints {1/6, 1/2, 5/6}
    double coverage = 0.0;
};

enum class Verdict { Met, Partial, Missing };

const char* verdict_name(Verdict v);

struct ExplanationLine {
    int skill = 0;
    int min_years = 0;
    int have_years = 0;
    Verdict verdict = Verdict::Missing;
};

struct Explanation {
    std::vector<ExplanationLine> lines;  // one per job requirement, job order
};

struct IntRange {
    int lo = 0;
    int hi = 0;
};

// Deterministic toy job posting: distinct requirement skills with minimum
// years 1..10, plus perk-word noise lines. Lines are shuffled into raw_text;
// each one starts with its marker word ("req" / "perk") so requirements stay
// recoverable.
JobPosting gen_job(Rng& rng, int id, const Vocab& vocab, IntRange req_count,
                   IntRange noise_count);

// Deterministic toy profile with distinct skills and 0..15 years each.
MemberProfile gen_profile(Rng& rng, int id, const Vocab& vocab, IntRange skill_count);

// Profile biased toward a specific job: affinity in [0,1] is roughly the
// chance each requirement ends up met, so sweeping it spreads coverage over
// the whole label range. Distractor skills are added on top.
MemberProfile gen_profile_for_job(Rng& rng, int id, const Vocab& vocab, const JobPosting& job,
                                  double affinity);

// Profile whose skills are disjoint from the job's requirements (used to
// augment the Low class).
MemberProfile gen_disjoint_profile(Rng& rng, int id, const Vocab& vocab, const JobPosting& job,
                                   IntRange skill_count);

// Rule-based fit verdict standing in for the opaque rating model. Per
// requirement: met iff years >= minimum, partial iff 0 < years < minimum,
// missing otherwise; coverage is the importance-weighted mean score with
// required=2, preferred=1 and scores met=1, partial=0.5, missing=0. Labels:
// High iff coverage >= 0.75, Medium iff coverage >= 0.4, else Low.
std::pair<FitAssessment, Explanation> oracle_assess(const JobPosting& job,
                                                    const MemberProfile& profile);

FitLabel label_from_coverage(double coverage);
double rating_for_label(FitLabel label);

struct TemplateSet {
    std::string task = "assess the candidate profile against the job requirements and produce verdict lines";
    std::string extract = "extract each req line with skill years and importance ignore perk lines";
    std::string evaluate = "compare profile years against the minimum years for every skill";
    std::string reason = "judge met when years reach the minimum partial when below missing when absent";
    std::string output = "write one verdict line per req then a final fit line";
};

enum class PromptVariant { Full, ExtractionOnly };

struct PromptOptions {
    PromptVariant variant = PromptVariant::Full;
    bool include_rating = false;  // condition the prompt on the oracle label
    FitLabel rating = FitLabel::Low;
    int max_seq_len = 256;
    int reserve = 48;  // room that must remain for the target
};

// Renders the instruction sections (task, extract, evaluate, reason, output)
// followed by the job text and, in the full variant, the profile text;
// terminated by <sep>. Starts with <bos>. Overlength → error naming the
// measured length.
std::vector<int> render_prompt(const JobPosting& job, const MemberProfile& profile,
                               const Vocab& vocab, const TemplateSet& templates,
                               const PromptOptions& options);

// Target token rendering: one "req <skill> need <n> have <n> verdict <v>"
// line per requirement, then "fit <label>", then <eos>.
std::vector<int> render_target(const Explanation& explanation, FitLabel label,
                               const Vocab& vocab);

struct ParsedTarget {
    std::vector<ExplanationLine> lines;
    bool has_fit = false;
    FitLabel fit = FitLabel::Low;
    bool ends_with_eos = false;
    bool well_formed = false;  // all lines matched the grammar exactly
};

// Lenient inverse of render_target; used by filtering and evaluation.
ParsedTarget parse_target(const std::vector<int>& tokens, const Vocab& vocab);

}  // namespace fitkd
