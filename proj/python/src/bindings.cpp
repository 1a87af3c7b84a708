// fitkd._core: thin python surface over the library. Operations that return
// structured results hand back plain dicts so callers need no C++ types.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitkd/checkpoint.hpp"
#include "fitkd/dataset.hpp"
#include "fitkd/domain.hpp"
#include "fitkd/metrics.hpp"
#include "fitkd/model.hpp"
#include "fitkd/objectives.hpp"
#include "fitkd/pipeline.hpp"
#include "fitkd/train.hpp"
#include "fitkd/vocab.hpp"

namespace py = pybind11;
using namespace fitkd;

namespace {

py::dict triple_dict(const RougeTriple& t) {
    py::dict d;
    d["precision"] = t.precision;
    d["recall"] = t.recall;
    d["f1"] = t.f1;
    return d;
}

// Loaded checkpoint exposed as an inference handle. The vocabulary is
// rebuilt from the catalog size, which must match the one the model was
// trained against (the token table length is checked).
class Model {
public:
    Model(const std::string& path, int skill_catalog)
        : vocab_(Vocab::build(skill_catalog)), ckpt_(load_checkpoint(path)) {
        if (ckpt_.config.vocab_size != vocab_.size()) {
            throw std::invalid_argument(
                "checkpoint expects a vocabulary of " + std::to_string(ckpt_.config.vocab_size) +
                " tokens but skill_catalog=" + std::to_string(skill_catalog) + " builds " +
                std::to_string(vocab_.size()));
        }
        if (ckpt_.kind == "lm") {
            lm_ = std::make_unique<LanguageModel>(lm_from_checkpoint(ckpt_));
        } else {
            cls_ = std::make_unique<EncoderClassifier>(classifier_from_checkpoint(ckpt_));
        }
    }

    std::string kind() const { return ckpt_.kind; }
    std::string size_label() const { return model_size_label(ckpt_.config); }
    std::size_t parameters() const { return parameter_count(ckpt_.config); }

    py::dict config() const {
        py::dict d;
        d["vocab_size"] = ckpt_.config.vocab_size;
        d["max_seq_len"] = ckpt_.config.max_seq_len;
        d["num_layers"] = ckpt_.config.num_layers;
        d["model_dim"] = ckpt_.config.model_dim;
        d["num_heads"] = ckpt_.config.num_heads;
        d["mlp_dim"] = ckpt_.config.mlp_dim;
        return d;
    }

    std::vector<int> decode_tokens(const std::vector<int>& prompt, int max_new) const {
        return lm().lm_decode(prompt, max_new);
    }

    // Greedy continuation of whitespace-tokenized text, returned as text
    // (prompt echo and any trailing <eos> dropped).
    std::string generate(const std::string& prompt_text, int max_new) const {
        const std::vector<int> prompt = vocab_.encode(prompt_text);
        std::vector<int> out = lm().lm_decode(prompt, max_new);
        out.erase(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(prompt.size()));
        if (!out.empty() && out.back() == Vocab::kEos) out.pop_back();
        return vocab_.decode(out);
    }

    std::string predict_fit_label(const std::string& job_text,
                                  const std::string& profile_text) const {
        if (!cls_) throw std::invalid_argument("predict_fit needs a classifier checkpoint");
        ClsExample example;
        example.job_tokens = vocab_.encode(job_text);
        example.profile_tokens = vocab_.encode(profile_text);
        return fit_label_name(predict_fit(*cls_, example));
    }

private:
    struct LmView {
        const LanguageModel* model;
        std::vector<int> lm_decode(const std::vector<int>& prompt, int max_new) const {
            return lm_greedy_decode(*model, prompt, max_new);
        }
    };
    LmView lm() const {
        if (!lm_) throw std::invalid_argument("this checkpoint is a classifier, not a language model");
        return LmView{lm_.get()};
    }

    Vocab vocab_;
    Checkpoint ckpt_;
    std::unique_ptr<LanguageModel> lm_;
    std::unique_ptr<EncoderClassifier> cls_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "job-fit knowledge distillation core";

    m.def(
        "divergence",
        [](const std::string& kind, const std::vector<double>& p, const std::vector<double>& q) {
            return divergence(divergence_from_name(kind), p, q);
        },
        py::arg("kind"), py::arg("p"), py::arg("q"),
        "Distribution distance; kind is one of fkl/js/tvd/skl.");

    m.def(
        "rouge_n",
        [](const std::vector<int>& candidate, const std::vector<int>& reference, int n) {
            return triple_dict(rouge_n(candidate, reference, n));
        },
        py::arg("candidate"), py::arg("reference"), py::arg("n") = 1);
    m.def(
        "rouge_l",
        [](const std::vector<int>& candidate, const std::vector<int>& reference) {
            return triple_dict(rouge_l(candidate, reference));
        },
        py::arg("candidate"), py::arg("reference"));

    py::class_<Vocab>(m, "Vocab")
        .def_static("build", &Vocab::build, py::arg("skill_catalog"))
        .def("__len__", &Vocab::size)
        .def("encode", &Vocab::encode, py::arg("text"))
        .def("decode", &Vocab::decode, py::arg("ids"))
        .def("word", &Vocab::word, py::arg("id"))
        .def("id", &Vocab::id, py::arg("word"))
        .def_property_readonly("catalog_size", &Vocab::catalog_size)
        .def_readonly_static("PAD", &Vocab::kPad)
        .def_readonly_static("BOS", &Vocab::kBos)
        .def_readonly_static("EOS", &Vocab::kEos)
        .def_readonly_static("SEP", &Vocab::kSep);

    m.def(
        "make_dataset",
        [](int count, int skill_catalog, std::uint64_t seed) {
            const Vocab vocab = Vocab::build(skill_catalog);
            const TemplateSet templates;
            const OracleDataset ds = make_oracle_dataset(count, vocab, templates, seed);
            py::list records;
            for (const ExampleRecord& rec : ds.records) {
                const auto [job_id, profile_id] = parse_record_id(rec.id);
                py::dict d;
                d["id"] = rec.id;
                d["source"] = rec.source;
                d["label"] = fit_label_name(rec.label);
                d["coverage"] = rec.coverage;
                d["prompt_tokens"] = rec.prompt_tokens;
                d["target_tokens"] = rec.target_tokens;
                d["prompt"] = vocab.decode(rec.prompt_tokens);
                d["target"] = vocab.decode(rec.target_tokens);
                d["job_text"] = ds.jobs.at(job_id).raw_text;
                d["profile_text"] = ds.profiles.at(profile_id).raw_text;
                records.append(std::move(d));
            }
            return records;
        },
        py::arg("count"), py::arg("skill_catalog") = 24, py::arg("seed") = 0,
        "Oracle-labeled (prompt, explanation target) records.");

    m.def(
        "summarize",
        [](const std::string& job_text, int skill_catalog) {
            const Vocab vocab = Vocab::build(skill_catalog);
            const TemplateSet templates;
            const SummaryResult r =
                summarize_job(vocab.encode(job_text), CompressionMode::Rule, vocab, templates);
            py::dict d;
            d["text"] = vocab.decode(r.tokens);
            d["tokens"] = r.tokens;
            d["ratio"] = r.ratio;
            return d;
        },
        py::arg("job_text"), py::arg("skill_catalog") = 24,
        "Rule compression of a job posting; keeps every requirement span.");

    py::class_<Model>(m, "Model")
        .def(py::init<const std::string&, int>(), py::arg("path"), py::arg("skill_catalog") = 24)
        .def_property_readonly("kind", &Model::kind)
        .def_property_readonly("size_label", &Model::size_label)
        .def_property_readonly("parameters", &Model::parameters)
        .def_property_readonly("config", &Model::config)
        .def("decode_tokens", &Model::decode_tokens, py::arg("prompt_tokens"), py::arg("max_new"))
        .def("generate", &Model::generate, py::arg("prompt_text"), py::arg("max_new") = 64)
        .def("predict_fit", &Model::predict_fit_label, py::arg("job_text"),
             py::arg("profile_text"));
}
