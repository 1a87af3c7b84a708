#include "fitkd/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace fitkd {

std::string record_id(int job_id, int profile_id) {
    return "j" + std::to_string(job_id) + "-p" + std::to_string(profile_id);
}

std::pair<int, int> parse_record_id(const std::string& id) {
    const auto fail = [&id]() -> std::pair<int, int> {
        throw std::invalid_argument("record id \"" + id + "\" is not j<n>-p<n>[...]");
    };
    if (id.size() < 4 || id[0] != 'j') return fail();
    std::size_t pos = 1;
    std::size_t digits = 0;
    int job = 0;
    while (pos < id.size() && id[pos] >= '0' && id[pos] <= '9') {
        job = job * 10 + (id[pos] - '0');
        ++pos;
        ++digits;
    }
    if (digits == 0 || pos + 1 >= id.size() || id[pos] != '-' || id[pos + 1] != 'p') return fail();
    pos += 2;
    digits = 0;
    int profile = 0;
    while (pos < id.size() && id[pos] >= '0' && id[pos] <= '9') {
        profile = profile * 10 + (id[pos] - '0');
        ++pos;
        ++digits;
    }
    if (digits == 0) return fail();
    if (pos < id.size() && id[pos] != '-') return fail();
    return {job, profile};
}

FilterResult quality_filter(const std::vector<ExampleRecord>& records,
                            const std::map<int, JobPosting>& jobs,
                            const std::map<int, MemberProfile>& profiles, const Vocab& vocab) {
    FilterResult result;
    for (const ExampleRecord& record : records) {
        const auto [job_id, profile_id] = parse_record_id(record.id);
        const auto job_it = jobs.find(job_id);
        if (job_it == jobs.end()) {
            throw std::runtime_error("quality_filter: record " + record.id +
                                     " references unknown job " + std::to_string(job_id));
        }
        const auto profile_it = profiles.find(profile_id);
        if (profile_it == profiles.end()) {
            throw std::runtime_error("quality_filter: record " + record.id +
                                     " references unknown profile " + std::to_string(profile_id));
        }

        if (record.target_tokens.empty() || record.target_tokens.back() != Vocab::kEos) {
            result.rejected.push_back({record.id, "truncated"});
            continue;
        }

        const ParsedTarget parsed = parse_target(record.target_tokens, vocab);
        bool hallucinated = false;
        for (const ExplanationLine& line : parsed.lines) {
            bool known = false;
            for (const Requirement& r : job_it->second.requirements) {
                known = known || r.skill == line.skill;
            }
            if (!known) hallucinated = true;
        }
        if (hallucinated) {
            result.rejected.push_back({record.id, "hallucinated-skill"});
            continue;
        }

        const auto [assessment, explanation] = oracle_assess(job_it->second, profile_it->second);
        (void)explanation;
        const FitLabel claimed = parsed.has_fit ? parsed.fit : record.label;
        if (claimed != assessment.label || record.label != assessment.label) {
            result.rejected.push_back({record.id, "label-mismatch"});
            continue;
        }

        ExampleRecord kept = record;
        if (kept.source == "teacher-model") kept.source = "filtered";
        result.kept.push_back(std::move(kept));
    }
    return result;
}

std::vector<ExampleRecord> stratified_sample(const std::vector<ExampleRecord>& pool,
                                             int per_category, Rng& rng) {
    if (per_category < 0) throw std::invalid_argument("stratified_sample: negative count");
    std::vector<std::size_t> buckets[3];
    for (std::size_t i = 0; i < pool.size(); ++i) {
        buckets[static_cast<int>(pool[i].label)].push_back(i);
    }
    std::vector<ExampleRecord> out;
    for (int label = 0; label < 3; ++label) {
        auto& bucket = buckets[label];
        if (static_cast<int>(bucket.size()) < per_category) {
            throw std::runtime_error(
                std::string("stratified_sample: only ") + std::to_string(bucket.size()) + " " +
                fit_label_name(static_cast<FitLabel>(label)) + " records for a quota of " +
                std::to_string(per_category));
        }
        rng.shuffle(bucket);
        for (int k = 0; k < per_category; ++k) out.push_back(pool[bucket[static_cast<std::size_t>(k)]]);
    }
    rng.shuffle(out);
    return out;
}

namespace {

nlohmann::ordered_json tokens_to_words(const std::vector<int>& tokens, const Vocab& vocab) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (int id : tokens) arr.push_back(vocab.word(id));
    return arr;
}

std::vector<int> words_to_tokens(const nlohmann::ordered_json& arr, const Vocab& vocab) {
    std::vector<int> out;
    for (const auto& w : arr) out.push_back(vocab.id(w.get<std::string>()));
    return out;
}

}  // namespace

void write_records(const std::string& path, const std::vector<ExampleRecord>& records,
                   const Vocab& vocab) {
    std::ofstream file(path, std::ios::binary);  // no platform newline translation
    if (!file) throw std::runtime_error("write_records: cannot open " + path);
    for (const ExampleRecord& record : records) {
        nlohmann::ordered_json line;
        line["id"] = record.id;
        line["source"] = record.source;
        line["label"] = fit_label_name(record.label);
        line["coverage"] = record.coverage;
        line["prompt_tokens"] = tokens_to_words(record.prompt_tokens, vocab);
        line["target_tokens"] = tokens_to_words(record.target_tokens, vocab);
        file << line.dump() << '\n';
    }
    if (!file) throw std::runtime_error("write_records: short write to " + path);
}

std::vector<ExampleRecord> read_records(const std::string& path, const Vocab& vocab) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("read_records: cannot open " + path);
    std::vector<ExampleRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json parsed;
        try {
            parsed = nlohmann::ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("read_records: " + path + ":" + std::to_string(line_no) +
                                     ": " + e.what());
        }
        ExampleRecord record;
        record.id = parsed.at("id").get<std::string>();
        record.source = parsed.at("source").get<std::string>();
        record.label = fit_label_from_name(parsed.at("label").get<std::string>());
        record.coverage = parsed.at("coverage").get<double>();
        record.prompt_tokens = words_to_tokens(parsed.at("prompt_tokens"), vocab);
        record.target_tokens = words_to_tokens(parsed.at("target_tokens"), vocab);
        records.push_back(std::move(record));
    }
    return records;
}

OracleDataset make_oracle_dataset(int count, const Vocab& vocab, const TemplateSet& templates,
                                  std::uint64_t seed, const PromptOptions& options,
                                  IntRange req_count, IntRange noise_count) {
    if (count < 0) throw std::invalid_argument("make_oracle_dataset: negative count");
    // Seven grid points plus a disjoint slot give an eight-pair cycle that
    // touches every label band.
    static const double kAffinityGrid[7] = {0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.95};
    Rng rng(seed);
    OracleDataset out;
    out.records.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        JobPosting job = gen_job(rng, i, vocab, req_count, noise_count);
        MemberProfile profile =
            (i % 8 == 7) ? gen_disjoint_profile(rng, i, vocab, job, {1, 3})
                         : gen_profile_for_job(rng, i, vocab, job, kAffinityGrid[i % 8]);
        const auto [assessment, explanation] = oracle_assess(job, profile);
        ExampleRecord record;
        record.id = record_id(job.id, profile.id);
        record.source = "oracle";
        record.label = assessment.label;
        record.coverage = assessment.coverage;
        record.prompt_tokens = render_prompt(job, profile, vocab, templates, options);
        record.target_tokens = render_target(explanation, assessment.label, vocab);
        out.records.push_back(std::move(record));
        out.jobs.emplace(job.id, std::move(job));
        out.profiles.emplace(profile.id, std::move(profile));
    }
    return out;
}

}  // namespace fitkd
