#include "fitkd/vocab.hpp"

#include <sstream>
#include <stdexcept>

namespace fitkd {

namespace {

const char* kMarkerWords[] = {
    "req", "years", "required", "preferred", "perk", "has", "need", "have",
    "verdict", "met", "partial", "missing", "fit", "low", "medium", "high",
    "section", "task", "extract", "evaluate", "reason", "output", "begin",
    "job", "profile", "rating",
};

// Words used by the shipped instruction templates.
const char* kInstructionWords[] = {
    "assess", "the", "candidate", "against", "requirements", "and", "produce",
    "lines", "each", "line", "with", "skill", "importance", "ignore",
    "compare", "minimum", "for", "every", "judge", "when", "reach", "below",
    "absent", "write", "one", "per", "then", "a", "final",
};

const char* kPerkWords[] = {
    "office",  "coffee",   "gym",      "remote",   "bonus",    "insurance",
    "snacks",  "lunch",    "travel",   "training", "budget",   "stipend",
    "parking", "wellness", "retreat",  "events",   "team",     "culture",
    "flexible","hours",    "vacation", "equity",   "dental",   "vision",
    "catered", "library",  "game",     "massage",  "bike",     "shuttle",
    "daycare", "laundry",  "sauna",    "rooftop",  "garden",   "mentorship",
    "allowance","phone",   "laptop",   "upgrade",  "discount", "membership",
    "classes", "yoga",     "pantry",   "espresso", "standing", "desk",
    "dog",     "music",
};

}  // namespace

Vocab Vocab::build(int skill_catalog) {
    if (skill_catalog < 1 || skill_catalog > 99) {
        throw std::invalid_argument("vocab: skill catalog must be 1..99, got " +
                                    std::to_string(skill_catalog));
    }
    Vocab v;
    v.catalog_ = skill_catalog;
    auto push = [&v](const std::string& w) {
        if (!v.index_.emplace(w, static_cast<int>(v.words_.size())).second) {
            throw std::logic_error("vocab: duplicate word " + w);
        }
        v.words_.push_back(w);
    };
    push("<pad>");
    push("<bos>");
    push("<eos>");
    push("<sep>");
    v.number_base_ = static_cast<int>(v.words_.size());
    for (int n = 0; n <= 15; ++n) push(std::to_string(n));
    for (const char* w : kMarkerWords) push(w);
    for (const char* w : kInstructionWords) push(w);
    v.perk_base_ = static_cast<int>(v.words_.size());
    for (const char* w : kPerkWords) push(w);
    v.perk_count_ = static_cast<int>(v.words_.size()) - v.perk_base_;
    v.skill_base_ = static_cast<int>(v.words_.size());
    for (int k = 0; k < skill_catalog; ++k) {
        push("skill" + std::string(k < 10 ? "0" : "") + std::to_string(k));
    }
    if (v.size() > 512) {
        throw std::logic_error("vocab: " + std::to_string(v.size()) + " words exceeds 512");
    }
    return v;
}

int Vocab::id(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw std::invalid_argument("vocab: unknown word \"" + word + "\"");
    return it->second;
}

const std::string& Vocab::word(int id) const {
    if (id < 0 || id >= size()) {
        throw std::out_of_range("vocab: token id " + std::to_string(id) + " out of range");
    }
    return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> out;
    std::istringstream stream(text);
    std::string w;
    while (stream >> w) out.push_back(id(w));
    return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) out += ' ';
        out += word(ids[i]);
    }
    return out;
}

int Vocab::skill_token(int skill) const {
    if (skill < 0 || skill >= catalog_) {
        throw std::out_of_range("vocab: skill " + std::to_string(skill) + " outside catalog of " +
                                std::to_string(catalog_));
    }
    return skill_base_ + skill;
}

int Vocab::skill_of_token(int id) const {
    if (id < skill_base_ || id >= skill_base_ + catalog_) return -1;
    return id - skill_base_;
}

int Vocab::number_token(int value) const {
    if (value < 0 || value > 15) {
        throw std::out_of_range("vocab: number " + std::to_string(value) + " outside 0..15");
    }
    return number_base_ + value;
}

int Vocab::number_of_token(int id) const {
    if (id < number_base_ || id > number_base_ + 15) return -1;
    return id - number_base_;
}

int Vocab::perk_token(int k) const {
    if (k < 0 || k >= perk_count_) {
        throw std::out_of_range("vocab: perk index " + std::to_string(k) + " outside 0..." +
                                std::to_string(perk_count_ - 1));
    }
    return perk_base_ + k;
}

}  // namespace fitkd
