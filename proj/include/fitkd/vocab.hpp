#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace fitkd {

// Closed lowercase word vocabulary. The word list is generated
// deterministically from the skill catalog size, so two builds with the same
// catalog agree on every id. Specials occupy the first four slots.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kSep = 3;

    static Vocab build(int skill_catalog);

    int size() const { return static_cast<int>(words_.size()); }
    int catalog_size() const { return catalog_; }

    int id(const std::string& word) const;           // unknown word → error
    const std::string& word(int id) const;           // out of range → error
    bool contains(const std::string& word) const { return index_.count(word) != 0; }

    // Whitespace-delimited encode; every word must be in the vocabulary.
    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& ids) const;

    int skill_token(int skill) const;                // catalog index → token id
    int skill_of_token(int id) const;                // token id → catalog index, -1 if not a skill
    int number_token(int value) const;               // 0..15 → token id
    int number_of_token(int id) const;               // token id → value, -1 if not a number
    int perk_token(int k) const;                     // perk index → token id
    int perk_count() const { return perk_count_; }

private:
    int catalog_ = 0;
    int skill_base_ = 0;
    int number_base_ = 0;
    int perk_base_ = 0;
    int perk_count_ = 0;
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace fitkd
