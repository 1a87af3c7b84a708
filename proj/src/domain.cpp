#include "fitkd/domain.hpp"

#include <algorithm>
#include <stdexcept>

namespace fitkd {

namespace {

void check_range(const char* what, IntRange r, int lo_floor, int hi_ceil) {
    if (r.lo < lo_floor || r.hi < r.lo || r.hi > hi_ceil) {
        throw std::invalid_argument(std::string(what) + ": infeasible range [" +
                                    std::to_string(r.lo) + "," + std::to_string(r.hi) +
                                    "] (allowed " + std::to_string(lo_floor) + ".." +
                                    std::to_string(hi_ceil) + ")");
    }
}

std::vector<int> sample_distinct(Rng& rng, int universe, int count) {
    std::vector<int> pool(static_cast<std::size_t>(universe));
    for (int i = 0; i < universe; ++i) pool[static_cast<std::size_t>(i)] = i;
    rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(count));
    return pool;
}

std::string join_lines(Rng& rng, std::vector<std::string> lines) {
    rng.shuffle(lines);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out += ' ';
        out += lines[i];
    }
    return out;
}

std::string requirement_line(const Vocab& vocab, const Requirement& r) {
    return "req " + vocab.word(vocab.skill_token(r.skill)) + " years " +
           std::to_string(r.min_years) + (r.required ? " required" : " preferred");
}

std::string profile_text(const Vocab& vocab, const std::vector<SkillClaim>& skills) {
    std::string out;
    for (std::size_t i = 0; i < skills.size(); ++i) {
        if (i > 0) out += ' ';
        out += "has " + vocab.word(vocab.skill_token(skills[i].skill)) + " years " +
               std::to_string(skills[i].years);
    }
    return out;
}

}  // namespace

const char* fit_label_name(FitLabel label) {
    switch (label) {
        case FitLabel::Low: return "low";
        case FitLabel::Medium: return "medium";
        case FitLabel::High: return "high";
    }
    return "?";
}

FitLabel fit_label_from_name(const std::string& name) {
    if (name == "low") return FitLabel::Low;
    if (name == "medium") return FitLabel::Medium;
    if (name == "high") return FitLabel::High;
    throw std::invalid_argument("fit label: unknown name \"" + name + "\"");
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Met: return "met";
        case Verdict::Partial: return "partial";
        case Verdict::Missing: return "missing";
    }
    return "?";
}

JobPosting gen_job(Rng& rng, int id, const Vocab& vocab, IntRange req_count,
                   IntRange noise_count) {
    check_range("gen_job requirements", req_count, 1, vocab.catalog_size());
    check_range("gen_job noise", noise_count, 0, 64);

    JobPosting job;
    job.id = id;
    const int reqs = rng.uniform_int(req_count.lo, req_count.hi);
    for (int skill : sample_distinct(rng, vocab.catalog_size(), reqs)) {
        Requirement r;
        r.skill = skill;
        r.min_years = rng.uniform_int(1, 10);
        r.required = rng.uniform_int(0, 1) == 1;
        job.requirements.push_back(r);
    }
    job.noise_lines = rng.uniform_int(noise_count.lo, noise_count.hi);

    std::vector<std::string> lines;
    for (const Requirement& r : job.requirements) lines.push_back(requirement_line(vocab, r));
    for (int i = 0; i < job.noise_lines; ++i) {
        std::string line = "perk";
        const int words = rng.uniform_int(6, 9);
        for (int w = 0; w < words; ++w) {
            line += ' ';
            line += vocab.word(vocab.perk_token(rng.uniform_int(0, vocab.perk_count() - 1)));
        }
        lines.push_back(std::move(line));
    }
    job.raw_text = join_lines(rng, std::move(lines));
    return job;
}

MemberProfile gen_profile(Rng& rng, int id, const Vocab& vocab, IntRange skill_count) {
    check_range("gen_profile skills", skill_count, 0, vocab.catalog_size());
    MemberProfile profile;
    profile.id = id;
    const int count = rng.uniform_int(skill_count.lo, skill_count.hi);
    for (int skill : sample_distinct(rng, vocab.catalog_size(), count)) {
        profile.skills.push_back({skill, rng.uniform_int(0, 15)});
    }
    profile.raw_text = profile_text(vocab, profile.skills);
    return profile;
}

MemberProfile gen_profile_for_job(Rng& rng, int id, const Vocab& vocab, const JobPosting& job,
                                  double affinity) {
    if (affinity < 0.0 || affinity > 1.0) {
        throw std::invalid_argument("gen_profile_for_job: affinity " + std::to_string(affinity) +
                                    " outside [0,1]");
    }
    MemberProfile profile;
    profile.id = id;
    for (const Requirement& r : job.requirements) {
        const double u = rng.uniform();
        if (u < affinity) {
            profile.skills.push_back({r.skill, rng.uniform_int(r.min_years, 15)});
        } else if (u < affinity + (1.0 - affinity) * 0.5 && r.min_years >= 2) {
            profile.skills.push_back({r.skill, rng.uniform_int(1, r.min_years - 1)});
        }
        // otherwise the skill is absent entirely
    }
    // A couple of distractors that never touch the job's requirements.
    std::vector<int> outside;
    for (int s = 0; s < vocab.catalog_size(); ++s) {
        bool used = false;
        for (const Requirement& r : job.requirements) used = used || r.skill == s;
        if (!used) outside.push_back(s);
    }
    rng.shuffle(outside);
    const int distractors = std::min<int>(rng.uniform_int(0, 2), static_cast<int>(outside.size()));
    for (int i = 0; i < distractors; ++i) {
        profile.skills.push_back({outside[static_cast<std::size_t>(i)], rng.uniform_int(0, 15)});
    }
    rng.shuffle(profile.skills);
    profile.raw_text = profile_text(vocab, profile.skills);
    return profile;
}

MemberProfile gen_disjoint_profile(Rng& rng, int id, const Vocab& vocab, const JobPosting& job,
                                   IntRange skill_count) {
    std::vector<int> outside;
    for (int s = 0; s < vocab.catalog_size(); ++s) {
        bool used = false;
        for (const Requirement& r : job.requirements) used = used || r.skill == s;
        if (!used) outside.push_back(s);
    }
    check_range("gen_disjoint_profile skills", skill_count, 0, static_cast<int>(outside.size()));
    MemberProfile profile;
    profile.id = id;
    rng.shuffle(outside);
    const int count = rng.uniform_int(skill_count.lo, skill_count.hi);
    for (int i = 0; i < count; ++i) {
        profile.skills.push_back({outside[static_cast<std::size_t>(i)], rng.uniform_int(0, 15)});
    }
    profile.raw_text = profile_text(vocab, profile.skills);
    return profile;
}

FitLabel label_from_coverage(double coverage) {
    if (coverage >= 0.75) return FitLabel::High;
    if (coverage >= 0.4) return FitLabel::Medium;
    return FitLabel::Low;
}

double rating_for_label(FitLabel label) {
    switch (label) {
        case FitLabel::Low: return 1.0 / 6.0;
        case FitLabel::Medium: return 0.5;
        case FitLabel::High: return 5.0 / 6.0;
    }
    return 0.0;
}

std::pair<FitAssessment, Explanation> oracle_assess(const JobPosting& job,
                                                    const MemberProfile& profile) {
    if (job.requirements.empty()) {
        throw std::invalid_argument("oracle_assess: job has no requirements");
    }
    Explanation explanation;
    double weighted = 0.0;
    double weight_total = 0.0;
    for (const Requirement& r : job.requirements) {
        int years = 0;
        for (const SkillClaim& c : profile.skills) {
            if (c.skill == r.skill) {
                years = c.years;
                break;
            }
        }
        ExplanationLine line;
        line.skill = r.skill;
        line.min_years = r.min_years;
        line.have_years = years;
        double score;
        if (years >= r.min_years) {
            line.verdict = Verdict::Met;
            score = 1.0;
        } else if (years > 0) {
            line.verdict = Verdict::Partial;
            score = 0.5;
        } else {
            line.verdict = Verdict::Missing;
            score = 0.0;
        }
        const double w = r.required ? 2.0 : 1.0;
        weighted += score * w;
        weight_total += w;
        explanation.lines.push_back(line);
    }
    FitAssessment assessment;
    assessment.coverage = weighted / weight_total;
    assessment.label = label_from_coverage(assessment.coverage);
    assessment.rating = rating_for_label(assessment.label);
    return {assessment, explanation};
}

std::vector<int> render_prompt(const JobPosting& job, const MemberProfile& profile,
                               const Vocab& vocab, const TemplateSet& templates,
                               const PromptOptions& options) {
    std::string text;
    if (options.variant == PromptVariant::Full) {
        text = "section task " + templates.task + " section extract " + templates.extract +
               " section evaluate " + templates.evaluate + " section reason " + templates.reason +
               " section output " + templates.output + " begin job " + job.raw_text +
               " begin profile";
        if (!profile.raw_text.empty()) text += ' ' + profile.raw_text;
        if (options.include_rating) {
            text += " rating ";
            text += fit_label_name(options.rating);
        }
    } else {
        text = "section extract " + templates.extract + " begin job " + job.raw_text;
    }
    std::vector<int> tokens;
    tokens.push_back(Vocab::kBos);
    for (int id : vocab.encode(text)) tokens.push_back(id);
    tokens.push_back(Vocab::kSep);

    const int budget = options.max_seq_len - options.reserve;
    if (static_cast<int>(tokens.size()) > budget) {
        throw std::invalid_argument("render_prompt: " + std::to_string(tokens.size()) +
                                    " tokens exceed budget " + std::to_string(budget) + " (" +
                                    std::to_string(options.max_seq_len) + " minus reserve " +
                                    std::to_string(options.reserve) + ")");
    }
    return tokens;
}

std::vector<int> render_target(const Explanation& explanation, FitLabel label,
                               const Vocab& vocab) {
    std::string text;
    for (const ExplanationLine& line : explanation.lines) {
        text += "req " + vocab.word(vocab.skill_token(line.skill)) + " need " +
                std::to_string(line.min_years) + " have " + std::to_string(line.have_years) +
                " verdict " + verdict_name(line.verdict) + " ";
    }
    text += "fit ";
    text += fit_label_name(label);
    std::vector<int> tokens = vocab.encode(text);
    tokens.push_back(Vocab::kEos);
    return tokens;
}

ParsedTarget parse_target(const std::vector<int>& tokens, const Vocab& vocab) {
    ParsedTarget parsed;
    parsed.well_formed = !tokens.empty();
    const int kReq = vocab.id("req");
    const int kNeed = vocab.id("need");
    const int kHave = vocab.id("have");
    const int kVerdict = vocab.id("verdict");
    const int kFit = vocab.id("fit");
    const int kMet = vocab.id("met");
    const int kPartial = vocab.id("partial");
    const int kMissing = vocab.id("missing");

    // One rendered line is "req <skill> need <n> have <n> verdict <word>",
    // eight tokens.
    std::size_t i = 0;
    while (i < tokens.size()) {
        const int tok = tokens[i];
        if (tok == kReq && i + 7 < tokens.size()) {
            const int skill = vocab.skill_of_token(tokens[i + 1]);
            const int need = vocab.number_of_token(tokens[i + 3]);
            const int have = vocab.number_of_token(tokens[i + 5]);
            const int verdict_tok = tokens[i + 7];
            const bool shape_ok = skill >= 0 && tokens[i + 2] == kNeed && need >= 0 &&
                                  tokens[i + 4] == kHave && have >= 0 &&
                                  tokens[i + 6] == kVerdict &&
                                  (verdict_tok == kMet || verdict_tok == kPartial ||
                                   verdict_tok == kMissing);
            if (skill >= 0) {
                ExplanationLine line;
                line.skill = skill;
                line.min_years = std::max(need, 0);
                line.have_years = std::max(have, 0);
                line.verdict = verdict_tok == kMet       ? Verdict::Met
                               : verdict_tok == kPartial ? Verdict::Partial
                                                         : Verdict::Missing;
                parsed.lines.push_back(line);
            }
            if (!shape_ok) parsed.well_formed = false;
            i += 8;
            continue;
        }
        if (tok == kFit && i + 1 < tokens.size()) {
            const std::string& w = vocab.word(tokens[i + 1]);
            if (w == "low" || w == "medium" || w == "high") {
                parsed.has_fit = true;
                parsed.fit = fit_label_from_name(w);
            } else {
                parsed.well_formed = false;
            }
            i += 2;
            continue;
        }
        if (tok == Vocab::kEos) {
            parsed.ends_with_eos = i == tokens.size() - 1;
            if (!parsed.ends_with_eos) parsed.well_formed = false;
            ++i;
            continue;
        }
        parsed.well_formed = false;
        ++i;
    }
    if (!parsed.has_fit || !parsed.ends_with_eos) parsed.well_formed = false;
    return parsed;
}

}  // namespace fitkd
