#include "fitkd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

namespace fitkd {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'F', 'K', 'D', '1'};

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
    std::uint64_t u64() { return u(8); }

    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    std::string take(std::size_t n) {
        need(n);
        std::string out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::uint64_t u(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw std::runtime_error("checkpoint: " + path_ + " is truncated at byte " +
                                     std::to_string(pos_));
        }
    }

    const std::string& bytes_;
    const std::string& path_;
    std::size_t pos_ = 0;
};

ordered_json config_json(const ModelConfig& c) {
    return ordered_json{{"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
                        {"num_layers", c.num_layers}, {"model_dim", c.model_dim},
                        {"num_heads", c.num_heads},   {"mlp_dim", c.mlp_dim},
                        {"seed", c.seed}};
}

ModelConfig config_from_json(const ordered_json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_seq_len = j.at("max_seq_len").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.model_dim = j.at("model_dim").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.mlp_dim = j.at("mlp_dim").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = seed;
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::uint64_t params_digest(const ParamSet& params) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.name(i);
        hash = fnv1a(name.data(), name.size(), hash);
        const Tensor& t = params.tensor(i);
        hash = fnv1a(t.data.data(), t.data.size() * sizeof(double), hash);
    }
    return hash;
}

Checkpoint make_checkpoint(const LanguageModel& model, Provenance provenance) {
    Checkpoint ckpt;
    ckpt.kind = "lm";
    ckpt.config = model.config;
    ckpt.role = model.role;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        ckpt.tensors.add(model.params.name(i), model.params.tensor(i));
    }
    ckpt.provenance = std::move(provenance);
    return ckpt;
}

Checkpoint make_checkpoint(const EncoderClassifier& encoder, Provenance provenance) {
    Checkpoint ckpt;
    ckpt.kind = "classifier";
    ckpt.config = encoder.trunk.config;
    ckpt.role = encoder.trunk.role;
    ckpt.structure = structure_name(encoder.structure);
    ckpt.pooling = pooling_name(encoder.pooling);
    ckpt.interaction = interaction_name(encoder.interaction);
    ckpt.head_hidden = encoder.head_hidden;
    ckpt.finetune_trunk = encoder.finetune_trunk;
    for (std::size_t i = 0; i < encoder.trunk.params.size(); ++i) {
        ckpt.tensors.add("trunk." + encoder.trunk.params.name(i), encoder.trunk.params.tensor(i));
    }
    for (std::size_t i = 0; i < encoder.profile_trunk.params.size(); ++i) {
        ckpt.tensors.add("profile_trunk." + encoder.profile_trunk.params.name(i),
                         encoder.profile_trunk.params.tensor(i));
    }
    for (std::size_t i = 0; i < encoder.head.size(); ++i) {
        // head tensor names already carry their "head." prefix
        ckpt.tensors.add(encoder.head.name(i), encoder.head.tensor(i));
    }
    ckpt.provenance = std::move(provenance);
    return ckpt;
}

LanguageModel lm_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "lm") {
        throw std::invalid_argument("checkpoint: expected kind lm, found " + ckpt.kind);
    }
    validate_config(ckpt.config);
    LanguageModel model;
    model.config = ckpt.config;
    model.role = ckpt.role;
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        model.params.add(ckpt.tensors.name(i), ckpt.tensors.tensor(i));
    }
    if (model.params.scalar_count() != parameter_count(model.config)) {
        throw std::runtime_error("checkpoint: tensor directory does not match the config");
    }
    return model;
}

EncoderClassifier classifier_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "classifier") {
        throw std::invalid_argument("checkpoint: expected kind classifier, found " + ckpt.kind);
    }
    validate_config(ckpt.config);
    EncoderClassifier encoder;
    encoder.structure = structure_from_name(ckpt.structure);
    encoder.pooling = pooling_from_name(ckpt.pooling);
    encoder.interaction = interaction_from_name(ckpt.interaction);
    encoder.head_hidden = ckpt.head_hidden;
    encoder.finetune_trunk = ckpt.finetune_trunk;
    encoder.trunk.config = ckpt.config;
    encoder.trunk.role = ckpt.role;
    encoder.profile_trunk.config = ckpt.config;
    encoder.profile_trunk.role = ckpt.role;
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        const std::string& name = ckpt.tensors.name(i);
        const Tensor& value = ckpt.tensors.tensor(i);
        if (name.rfind("trunk.", 0) == 0) {
            encoder.trunk.params.add(name.substr(6), value);
        } else if (name.rfind("profile_trunk.", 0) == 0) {
            encoder.profile_trunk.params.add(name.substr(14), value);
        } else if (name.rfind("head.", 0) == 0) {
            encoder.head.add(name, value);  // head tensors keep their prefix
        } else {
            throw std::runtime_error("checkpoint: unexpected tensor " + name);
        }
    }
    if (encoder.trunk.params.scalar_count() != parameter_count(ckpt.config)) {
        throw std::runtime_error("checkpoint: trunk tensors do not match the config");
    }
    if (encoder.structure == ClsStructure::TwoTower &&
        encoder.profile_trunk.params.scalar_count() != parameter_count(ckpt.config)) {
        throw std::runtime_error("checkpoint: profile trunk tensors do not match the config");
    }
    return encoder;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    ordered_json manifest;
    manifest["kind"] = ckpt.kind;
    manifest["role"] = ckpt.role;
    manifest["config"] = config_json(ckpt.config);
    if (ckpt.kind == "classifier") {
        manifest["classifier"] = ordered_json{{"structure", ckpt.structure},
                                              {"pooling", ckpt.pooling},
                                              {"interaction", ckpt.interaction},
                                              {"head_hidden", ckpt.head_hidden},
                                              {"finetune_trunk", ckpt.finetune_trunk}};
    }
    manifest["provenance"] = ordered_json{
        {"path_name", ckpt.provenance.path_name},
        {"stage_index", ckpt.provenance.stage_index},
        {"config_digest", ckpt.provenance.config_digest},
        {"final_loss", ordered_json{{"sft", ckpt.provenance.final_loss.sft},
                                    {"kd", ckpt.provenance.final_loss.kd},
                                    {"combined", ckpt.provenance.final_loss.combined},
                                    {"token_count", ckpt.provenance.final_loss.token_count}}}};

    ordered_json directory = ordered_json::array();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        const Tensor& t = ckpt.tensors.tensor(i);
        directory.push_back(ordered_json{{"name", ckpt.tensors.name(i)},
                                         {"shape", t.shape},
                                         {"offset", offset},
                                         {"count", t.numel()}});
        offset += t.numel() * sizeof(double);
    }
    manifest["tensors"] = std::move(directory);
    const std::string manifest_text = manifest.dump();

    std::string payload;
    payload.reserve(offset);
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        for (double v : ckpt.tensors.tensor(i).data) put_f64(payload, v);
    }

    std::string bytes;
    bytes.reserve(16 + manifest_text.size() + payload.size());
    bytes.append(kMagic, sizeof(kMagic));
    put_u16(bytes, Checkpoint::kMajor);
    put_u16(bytes, Checkpoint::kMinor);
    put_u32(bytes, static_cast<std::uint32_t>(manifest_text.size()));
    bytes += manifest_text;
    bytes += payload;
    put_u64(bytes, fnv1a(payload.data(), payload.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r(bytes, path);
    if (r.take(4) != std::string(kMagic, sizeof(kMagic))) {
        throw std::runtime_error("checkpoint: " + path + " has the wrong magic bytes");
    }
    const std::uint16_t major = r.u16();
    const std::uint16_t minor = r.u16();
    if (major != Checkpoint::kMajor) {
        throw std::runtime_error("checkpoint: " + path + " has format major version " +
                                 std::to_string(major) + ", expected " +
                                 std::to_string(Checkpoint::kMajor));
    }
    if (minor > Checkpoint::kMinor) {
        std::cerr << "checkpoint: " << path << " was written by a newer minor format ("
                  << major << "." << minor << " > " << Checkpoint::kMajor << "."
                  << Checkpoint::kMinor << "); loading anyway\n";
    }

    const std::uint32_t manifest_len = r.u32();
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(r.take(manifest_len));
    } catch (const ordered_json::parse_error& e) {
        throw std::runtime_error("checkpoint: " + path + " has a corrupt manifest: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.kind = manifest.at("kind").get<std::string>();
    if (ckpt.kind != "lm" && ckpt.kind != "classifier") {
        throw std::runtime_error("checkpoint: " + path + " has unknown kind " + ckpt.kind);
    }
    ckpt.role = manifest.at("role").get<std::string>();
    ckpt.config = config_from_json(manifest.at("config"));
    if (ckpt.kind == "classifier") {
        const auto& extra = manifest.at("classifier");
        ckpt.structure = extra.at("structure").get<std::string>();
        ckpt.pooling = extra.at("pooling").get<std::string>();
        ckpt.interaction = extra.at("interaction").get<std::string>();
        ckpt.head_hidden = extra.at("head_hidden").get<int>();
        ckpt.finetune_trunk = extra.at("finetune_trunk").get<bool>();
    }
    const auto& prov = manifest.at("provenance");
    ckpt.provenance.path_name = prov.at("path_name").get<std::string>();
    ckpt.provenance.stage_index = prov.at("stage_index").get<int>();
    ckpt.provenance.config_digest = prov.at("config_digest").get<std::string>();
    const auto& loss = prov.at("final_loss");
    ckpt.provenance.final_loss.sft = loss.at("sft").get<double>();
    ckpt.provenance.final_loss.kd = loss.at("kd").get<double>();
    ckpt.provenance.final_loss.combined = loss.at("combined").get<double>();
    ckpt.provenance.final_loss.token_count = loss.at("token_count").get<long>();

    // Size the payload from the directory before touching the digest so a
    // short file reads as truncation, not as corruption.
    std::size_t expected_payload = 0;
    for (const auto& entry : manifest.at("tensors")) {
        expected_payload += entry.at("count").get<std::size_t>() * sizeof(double);
    }
    if (r.remaining() < expected_payload + 8) {
        throw std::runtime_error("checkpoint: " + path + " is truncated at byte " +
                                 std::to_string(r.pos() + r.remaining()));
    }
    const std::size_t payload_len = r.remaining() - 8;
    const std::string payload = r.take(payload_len);
    const std::uint64_t want_digest = r.u64();
    const std::uint64_t got_digest = fnv1a(payload.data(), payload.size());
    if (want_digest != got_digest) {
        throw std::runtime_error("checkpoint: " + path + " failed the payload digest check (" +
                                 hex64(got_digest) + " != " + hex64(want_digest) + ")");
    }

    Reader pr(payload, path);
    std::size_t expected_offset = 0;
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        const std::size_t offset = entry.at("offset").get<std::size_t>();
        const std::size_t count = entry.at("count").get<std::size_t>();
        if (offset != expected_offset) {
            throw std::runtime_error("checkpoint: " + path + " tensor " + name +
                                     " has a non-contiguous offset");
        }
        Tensor t = Tensor::zeros(shape);
        if (t.numel() != count) {
            throw std::runtime_error("checkpoint: " + path + " tensor " + name +
                                     " count disagrees with its shape");
        }
        for (std::size_t i = 0; i < count; ++i) t.data[i] = pr.f64();
        ckpt.tensors.add(name, std::move(t));
        expected_offset = offset + count * sizeof(double);
    }
    if (expected_offset != payload.size()) {
        throw std::runtime_error("checkpoint: " + path + " payload has " +
                                 std::to_string(payload.size() - expected_offset) +
                                 " trailing bytes");
    }
    return ckpt;
}

}  // namespace fitkd
