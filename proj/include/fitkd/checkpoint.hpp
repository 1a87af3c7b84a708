#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fitkd/classifier.hpp"
#include "fitkd/model.hpp"
#include "fitkd/objectives.hpp"

namespace fitkd {

// 64-bit FNV-1a, used for payload integrity and config fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);

struct Provenance {
    std::string path_name;     // training entry point or distillation path label
    int stage_index = 0;
    std::string config_digest; // hex fingerprint of the flattened config
    LossReport final_loss;
};

// Serializable snapshot of a trained model: either a bare language model
// (kind "lm") or an encoder classifier (kind "classifier", tensors prefixed
// trunk./profile_trunk./head.).
//
// On-disk layout: magic "FKD1", little-endian u16 major/minor, u32 manifest
// length, a JSON manifest (kind, config, extras, provenance, tensor
// directory with name/shape/offset/count), the tensor payload as raw
// little-endian 64-bit floats in directory order, and a trailing u64 FNV-1a
// digest of the payload bytes.
struct Checkpoint {
    static constexpr std::uint16_t kMajor = 1;
    static constexpr std::uint16_t kMinor = 0;

    std::string kind = "lm";  // "lm" | "classifier"
    ModelConfig config;        // trunk config for classifiers
    std::string role = "student";

    // Classifier extras; ignored for kind "lm".
    std::string structure;
    std::string pooling;
    std::string interaction;
    int head_hidden = 0;
    bool finetune_trunk = true;

    ParamSet tensors;
    Provenance provenance;
};

Checkpoint make_checkpoint(const LanguageModel& model, Provenance provenance);
Checkpoint make_checkpoint(const EncoderClassifier& encoder, Provenance provenance);
LanguageModel lm_from_checkpoint(const Checkpoint& ckpt);
EncoderClassifier classifier_from_checkpoint(const Checkpoint& ckpt);

// Bitwise round-trip. Loading verifies magic, version (major mismatch is an
// error, a newer minor warns on stderr and proceeds), manifest consistency,
// and the payload digest.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Fingerprint of all parameter bytes in directory order; the frozen-teacher
// guarantee is checked by comparing this before and after distillation.
std::uint64_t params_digest(const ParamSet& params);

}  // namespace fitkd
