#include "fitkd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fitkd/checkpoint.hpp"
#include "fitkd/config.hpp"
#include "fitkd/dataset.hpp"
#include "fitkd/metrics.hpp"
#include "fitkd/pipeline.hpp"
#include "fitkd/report.hpp"
#include "fitkd/train.hpp"

namespace fitkd {
namespace {

using Clock = std::chrono::steady_clock;

// Flags shared by every config-driven subcommand. --seed/--out override the
// config's values; --format picks the report file flavor.
struct CommonOpts {
    std::string config_path;
    long long seed_override = -1;
    std::string out_override;
    std::string format = "table";
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "flat key=value settings file")
        ->required();
    sub->add_option("--seed", opts.seed_override, "override the config seed (>= 0)");
    sub->add_option("--out", opts.out_override, "override the config out_dir");
    sub->add_option("--format", opts.format, "report file format")
        ->check(CLI::IsMember({"table", "machine"}));
}

// ---------------------------------------------------------------------------
// Config key table. One global table keeps every subcommand's settings in a
// single shared file; stage<i>.* keys are admitted up to the declared stage
// count.

const char* const kModelFields[] = {"layers", "dim", "heads", "mlp", "max_seq_len", "seed"};
const char* const kTrainFields[] = {"lr",          "epochs",     "batch",
                                    "weight_decay", "max_seq_len", "lambda_sft",
                                    "lambda_kd",    "divergence"};

void add_model_keys(std::set<std::string>& keys, const std::string& prefix) {
    for (const char* field : kModelFields) keys.insert(prefix + "." + field);
}

void add_train_keys(std::set<std::string>& keys, const std::string& prefix) {
    for (const char* field : kTrainFields) keys.insert(prefix + "." + field);
}

std::set<std::string> known_keys(const Config& cfg) {
    std::set<std::string> keys = {
        "seed",
        "out_dir",
        "skill_catalog",
        "dataset.count",
        "dataset.file",
        "dataset.eval_count",
        "dataset.eval_file",
        "teacher_checkpoint",
        "student_checkpoint",
        "classifier_checkpoint",
        "explainer_checkpoint",
        "summarizer_checkpoint",
        "compression_mode",
        "cls.per_label",
        "cls.compressed_fraction",
        "cls.structure",
        "cls.pooling",
        "cls.interaction",
        "cls.holdout",
        "bench.pairs",
        "bench.classification",
        "bench.summarization",
        "bench.explanation",
        "path.name",
        "initial_teacher",
        "stages",
        "eval.checkpoint",
        "eval.dataset",
    };
    add_model_keys(keys, "teacher");
    add_model_keys(keys, "student");
    add_model_keys(keys, "cls");
    add_train_keys(keys, "train");
    add_train_keys(keys, "distill");
    add_train_keys(keys, "cls_train");
    const long stages = cfg.get_int("stages", 0);
    for (long i = 0; i < stages; ++i) {
        const std::string prefix = "stage" + std::to_string(i);
        keys.insert(prefix + ".kind");
        add_model_keys(keys, prefix);
        add_train_keys(keys, prefix);
    }
    return keys;
}

// ---------------------------------------------------------------------------
// Run context: parsed config, effective seed/out_dir, artifact bookkeeping.

struct Ctx {
    Config cfg;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string format;
    Clock::time_point start;
    std::vector<std::string> artifacts;
};

Ctx make_ctx(const CommonOpts& opts) {
    Ctx ctx;
    ctx.start = Clock::now();
    ctx.cfg = Config::parse_file(opts.config_path);
    ctx.cfg.require_known(known_keys(ctx.cfg));
    ctx.seed = opts.seed_override >= 0 ? static_cast<std::uint64_t>(opts.seed_override)
                                       : static_cast<std::uint64_t>(ctx.cfg.get_int("seed", 0));
    ctx.out_dir = !opts.out_override.empty() ? opts.out_override
                                             : ctx.cfg.get_string("out_dir", ".");
    std::filesystem::create_directories(ctx.out_dir);
    ctx.format = opts.format;
    return ctx;
}

// Relative artifact names live under out_dir; absolute paths pass through.
std::string artifact_path(const Ctx& ctx, const std::string& name) {
    std::filesystem::path p(name);
    if (p.is_absolute()) return name;
    return (std::filesystem::path(ctx.out_dir) / p).string();
}

// Run manifest: what ran, with which settings, producing which files. The
// wall clock is informational and deliberately the only nondeterministic
// field, so artifact files stay byte-reproducible.
void write_manifest(const Ctx& ctx, const std::string& subcommand) {
    nlohmann::ordered_json m;
    m["subcommand"] = subcommand;
    m["config"] = ctx.cfg.origin();
    m["config_digest"] = ctx.cfg.digest();
    m["seed"] = ctx.seed;
    m["artifacts"] = ctx.artifacts;
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(Clock::now() - ctx.start).count();
    const std::string path = artifact_path(ctx, subcommand + "-manifest.json");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cli: cannot write manifest " + path);
    out << m.dump(2) << "\n";
}

// Writes <base>.txt (table) or <base>.jsonl (machine) under out_dir and
// echoes the same content to stdout.
void write_report_rows(Ctx& ctx, const std::vector<ReportRow>& rows, const std::string& base) {
    if (ctx.format == "machine") {
        const std::string path = artifact_path(ctx, base + ".jsonl");
        emit_report(rows, "", path);
        ctx.artifacts.push_back(path);
        for (const auto& row : rows) std::cout << row.dump() << "\n";
    } else {
        const std::string path = artifact_path(ctx, base + ".txt");
        emit_report(rows, path, "");
        ctx.artifacts.push_back(path);
        std::cout << format_table(rows);
    }
}

ModelConfig parse_model(const Config& cfg, const std::string& prefix, int vocab_size,
                        long def_layers, long def_dim, std::uint64_t def_seed) {
    ModelConfig m;
    m.vocab_size = vocab_size;
    m.num_layers = static_cast<int>(cfg.get_int(prefix + ".layers", def_layers));
    m.model_dim = static_cast<int>(cfg.get_int(prefix + ".dim", def_dim));
    m.num_heads = static_cast<int>(cfg.get_int(prefix + ".heads", 4));
    m.mlp_dim = static_cast<int>(cfg.get_int(prefix + ".mlp", 4L * m.model_dim));
    m.max_seq_len = static_cast<int>(cfg.get_int(prefix + ".max_seq_len", 256));
    m.seed = static_cast<std::uint64_t>(
        cfg.get_int(prefix + ".seed", static_cast<long>(def_seed)));
    return m;
}

TrainConfig parse_train(const Config& cfg, const std::string& prefix, std::uint64_t seed) {
    TrainConfig t;
    t.learning_rate = cfg.get_real(prefix + ".lr", t.learning_rate);
    t.epochs = static_cast<int>(cfg.get_int(prefix + ".epochs", t.epochs));
    t.batch_size = static_cast<int>(cfg.get_int(prefix + ".batch", t.batch_size));
    t.weight_decay = cfg.get_real(prefix + ".weight_decay", t.weight_decay);
    t.max_seq_len = static_cast<int>(cfg.get_int(prefix + ".max_seq_len", t.max_seq_len));
    t.seed = seed;
    t.weights.lambda_sft = cfg.get_real(prefix + ".lambda_sft", t.weights.lambda_sft);
    t.weights.lambda_kd = cfg.get_real(prefix + ".lambda_kd", t.weights.lambda_kd);
    t.divergence = divergence_from_name(cfg.get_string(prefix + ".divergence", "fkl"));
    return t;
}

Vocab vocab_from(const Ctx& ctx) {
    return Vocab::build(static_cast<int>(ctx.cfg.get_int("skill_catalog", 24)));
}

std::vector<ExampleRecord> read_dataset(const Ctx& ctx, const std::string& key,
                                        const std::string& fallback, const Vocab& vocab) {
    return read_records(artifact_path(ctx, ctx.cfg.get_string(key, fallback)), vocab);
}

std::vector<ReportRow> loss_rows(const std::vector<LossReport>& reports) {
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        ReportRow row;
        row["epoch"] = static_cast<long>(i + 1);
        row["sft"] = reports[i].sft;
        row["kd"] = reports[i].kd;
        row["combined"] = reports[i].combined;
        row["tokens"] = reports[i].token_count;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_datagen(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const Vocab vocab = vocab_from(ctx);
    const TemplateSet templates;
    const long count = ctx.cfg.get_int("dataset.count", 512);
    OracleDataset train = make_oracle_dataset(static_cast<int>(count), vocab, templates, ctx.seed);
    const std::string train_path =
        artifact_path(ctx, ctx.cfg.get_string("dataset.file", "records.jsonl"));
    write_records(train_path, train.records, vocab);
    ctx.artifacts.push_back(train_path);
    std::cout << "datagen: " << train.records.size() << " records -> " << train_path << "\n";

    const long eval_count = ctx.cfg.get_int("dataset.eval_count", 0);
    if (eval_count > 0) {
        OracleDataset eval_set =
            make_oracle_dataset(static_cast<int>(eval_count), vocab, templates, ctx.seed + 1);
        const std::string eval_path =
            artifact_path(ctx, ctx.cfg.get_string("dataset.eval_file", "eval.jsonl"));
        write_records(eval_path, eval_set.records, vocab);
        ctx.artifacts.push_back(eval_path);
        std::cout << "datagen: " << eval_set.records.size() << " eval records -> " << eval_path
                  << "\n";
    }
    write_manifest(ctx, "datagen");
    return 0;
}

int cmd_train_teacher(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const Vocab vocab = vocab_from(ctx);
    const auto records = read_dataset(ctx, "dataset.file", "records.jsonl", vocab);
    const ModelConfig model = parse_model(ctx.cfg, "teacher", vocab.size(), 4, 64, ctx.seed);
    const TrainConfig train = parse_train(ctx.cfg, "train", ctx.seed);
    auto [ckpt, reports] = train_sft(model, records, train, "sft", 0);
    const std::string ckpt_path =
        artifact_path(ctx, ctx.cfg.get_string("teacher_checkpoint", "teacher.ckpt"));
    save_checkpoint(ckpt, ckpt_path);
    ctx.artifacts.push_back(ckpt_path);
    write_report_rows(ctx, loss_rows(reports), "teacher-loss");
    write_manifest(ctx, "train-teacher");
    std::cout << "train-teacher: " << model_size_label(model) << " -> " << ckpt_path << "\n";
    return 0;
}

int cmd_distill_exp(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const Vocab vocab = vocab_from(ctx);
    const auto records = read_dataset(ctx, "dataset.file", "records.jsonl", vocab);
    const Checkpoint teacher = load_checkpoint(
        artifact_path(ctx, ctx.cfg.get_string("teacher_checkpoint", "teacher.ckpt")));
    const ModelConfig model = parse_model(ctx.cfg, "student", vocab.size(), 1, 32, ctx.seed + 1);
    const TrainConfig train = parse_train(ctx.cfg, "distill", ctx.seed);
    auto [ckpt, reports] = distill_explanation(teacher, model, records, train, "distill-exp", 0);
    const std::string ckpt_path =
        artifact_path(ctx, ctx.cfg.get_string("student_checkpoint", "student.ckpt"));
    save_checkpoint(ckpt, ckpt_path);
    ctx.artifacts.push_back(ckpt_path);
    write_report_rows(ctx, loss_rows(reports), "student-loss");
    write_manifest(ctx, "distill-exp");
    std::cout << "distill-exp: " << model_size_label(model) << " ("
              << divergence_name(train.divergence) << ") -> " << ckpt_path << "\n";
    return 0;
}

int cmd_distill_cls(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const Vocab vocab = vocab_from(ctx);
    const int per_label = static_cast<int>(ctx.cfg.get_int("cls.per_label", 1000));
    const double fraction = ctx.cfg.get_real("cls.compressed_fraction", 0.7);
    const auto examples = make_classification_dataset(per_label, vocab, ctx.seed, fraction);
    const ModelConfig trunk = parse_model(ctx.cfg, "cls", vocab.size(), 1, 32, ctx.seed + 2);
    const TrainConfig train = parse_train(ctx.cfg, "cls_train", ctx.seed);
    const ClsStructure structure =
        structure_from_name(ctx.cfg.get_string("cls.structure", "seqcls"));
    const Pooling pooling = pooling_from_name(ctx.cfg.get_string("cls.pooling", "last-token"));
    const Interaction interaction =
        interaction_from_name(ctx.cfg.get_string("cls.interaction", "concat"));
    const double holdout = ctx.cfg.get_real("cls.holdout", 0.1);
    auto [ckpt, reports] =
        distill_classifier(trunk, examples, train, structure, pooling, interaction, holdout);
    const std::string ckpt_path =
        artifact_path(ctx, ctx.cfg.get_string("classifier_checkpoint", "classifier.ckpt"));
    save_checkpoint(ckpt, ckpt_path);
    ctx.artifacts.push_back(ckpt_path);
    std::vector<ReportRow> rows;
    for (const auto& r : reports) {
        ReportRow row;
        row["epoch"] = static_cast<long>(r.epoch);
        row["train_loss"] = r.train_loss;
        row["accuracy"] = r.accuracy;
        row["weighted_f1"] = r.weighted_f1;
        rows.push_back(std::move(row));
    }
    write_report_rows(ctx, rows, "classifier-report");
    write_manifest(ctx, "distill-cls");
    std::cout << "distill-cls: " << structure_name(structure) << "/" << pooling_name(pooling)
              << " -> " << ckpt_path << "\n";
    return 0;
}

int cmd_run_path(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const Vocab vocab = vocab_from(ctx);
    const auto train_data = read_dataset(ctx, "dataset.file", "records.jsonl", vocab);
    const auto eval_data = read_dataset(ctx, "dataset.eval_file", "eval.jsonl", vocab);

    DistillPath path;
    path.name = ctx.cfg.get_string("path.name", "path");
    if (ctx.cfg.has("initial_teacher"))
        path.initial_teacher = artifact_path(ctx, ctx.cfg.get_string("initial_teacher"));
    const long stages = ctx.cfg.get_int("stages");
    for (long i = 0; i < stages; ++i) {
        const std::string prefix = "stage" + std::to_string(i);
        PathStage stage;
        stage.kind = ctx.cfg.get_string(prefix + ".kind");
        stage.model = parse_model(ctx.cfg, prefix, vocab.size(), 1, 32,
                                  ctx.seed + static_cast<std::uint64_t>(i));
        stage.train = parse_train(ctx.cfg, prefix, ctx.seed);
        path.stages.push_back(std::move(stage));
    }

    PathResult result = run_path(path, train_data, eval_data, ctx.out_dir);
    for (std::size_t i = 0; i < result.checkpoints.size(); ++i)
        ctx.artifacts.push_back(artifact_path(ctx, "stage" + std::to_string(i) + ".ckpt"));
    write_report_rows(ctx, result.rows, "path-report");
    write_manifest(ctx, "run-path");
    std::cout << "run-path: " << path.name << " finished " << result.checkpoints.size()
              << " stages\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const Vocab vocab = vocab_from(ctx);
    const std::string ckpt_name =
        ctx.cfg.get_string("eval.checkpoint", ctx.cfg.get_string("student_checkpoint", "student.ckpt"));
    const std::string data_name =
        ctx.cfg.get_string("eval.dataset", ctx.cfg.get_string("dataset.eval_file", "eval.jsonl"));
    const auto records = read_records(artifact_path(ctx, data_name), vocab);
    const LanguageModel model = lm_from_checkpoint(load_checkpoint(artifact_path(ctx, ckpt_name)));
    const RougeScores scores = eval_explanations(model, records);
    ReportRow row;
    row["checkpoint"] = ckpt_name;
    row["records"] = static_cast<long>(records.size());
    row["nll"] = scores.mean_nll;
    row["rouge1"] = scores.rouge1.f1;
    row["rouge2"] = scores.rouge2.f1;
    row["rougeL"] = scores.rougeL.f1;
    row["decode_failures"] = static_cast<long>(scores.decode_failures);
    write_report_rows(ctx, {row}, "eval-report");
    write_manifest(ctx, "eval");
    return 0;
}

PipelineConfig pipeline_config(const Ctx& ctx, bool need_classifier, bool need_explainer) {
    PipelineConfig pc;
    pc.mode = compression_mode_from_name(ctx.cfg.get_string("compression_mode", "rule"));
    pc.skill_catalog = static_cast<int>(ctx.cfg.get_int("skill_catalog", 24));
    if (need_classifier)
        pc.classifier_checkpoint =
            artifact_path(ctx, ctx.cfg.get_string("classifier_checkpoint", "classifier.ckpt"));
    if (need_explainer)
        pc.explainer_checkpoint =
            artifact_path(ctx, ctx.cfg.get_string("explainer_checkpoint", "student.ckpt"));
    if (pc.mode == CompressionMode::Model)
        pc.summarizer_checkpoint =
            artifact_path(ctx, ctx.cfg.get_string("summarizer_checkpoint"));
    pc.bench_classification = static_cast<int>(ctx.cfg.get_int("bench.classification", 30));
    pc.bench_summarization = static_cast<int>(ctx.cfg.get_int("bench.summarization", 4));
    pc.bench_explanation = static_cast<int>(ctx.cfg.get_int("bench.explanation", 1));
    pc.bench_seed = ctx.seed;
    return pc;
}

struct ServeOpts {
    CommonOpts common;
    std::string job_text;
    std::string profile_text;
    bool explain = false;
};

int cmd_serve(const ServeOpts& opts) {
    Ctx ctx = make_ctx(opts.common);
    const ServeBundle bundle = load_bundle(pipeline_config(ctx, true, opts.explain));
    const ServeResult fit = serve_fit(bundle, opts.job_text, opts.profile_text);
    ExplanationResult explanation;
    if (opts.explain) explanation = serve_explanation(bundle, opts.job_text, opts.profile_text);

    if (ctx.format == "machine") {
        nlohmann::ordered_json out;
        out["fit"] = fit_label_name(fit.fit.label);
        out["rating"] = fit.fit.rating;
        out["compressed_ratio"] = fit.compressed_ratio;
        if (opts.explain) {
            out["explanation"] = explanation.text;
            out["well_formed"] = explanation.well_formed;
            out["truncated"] = explanation.truncated;
        }
        std::cout << out.dump() << "\n";
    } else {
        std::cout << "fit: " << fit_label_name(fit.fit.label) << " (rating "
                  << fit.fit.rating << ", compressed ratio " << fit.compressed_ratio << ")\n";
        if (opts.explain) {
            std::cout << "explanation: " << explanation.text << "\n";
            if (!explanation.well_formed) std::cout << "explanation flagged: malformed\n";
            if (explanation.truncated) std::cout << "explanation flagged: truncated\n";
        }
    }
    write_manifest(ctx, "serve");
    return 0;
}

int cmd_bench(const CommonOpts& opts) {
    Ctx ctx = make_ctx(opts);
    const PipelineConfig pc = pipeline_config(ctx, true, true);
    const ServeBundle bundle = load_bundle(pc);
    const int pair_count = static_cast<int>(ctx.cfg.get_int("bench.pairs", 8));
    if (pair_count < 1) throw std::runtime_error("cli: bench.pairs must be positive");
    Rng rng(ctx.seed);
    std::vector<std::pair<JobPosting, MemberProfile>> pairs;
    const double affinities[] = {0.15, 0.5, 0.9};
    for (int i = 0; i < pair_count; ++i) {
        JobPosting job = gen_job(rng, i, bundle.vocab, {1, 4}, {4, 7});
        MemberProfile profile =
            gen_profile_for_job(rng, i, bundle.vocab, job, affinities[i % 3]);
        pairs.emplace_back(std::move(job), std::move(profile));
    }
    const auto bench_rows = bench(bundle, pairs, pc.bench_classification, pc.bench_summarization,
                                  pc.bench_explanation);
    std::vector<ReportRow> rows;
    for (const auto& r : bench_rows) {
        ReportRow row;
        row["module"] = r.module;
        row["requests"] = static_cast<long>(r.requests);
        row["mean_ms"] = r.mean_ms;
        row["p95_ms"] = r.p95_ms;
        row["rps"] = r.rps;
        row["normalized"] = r.normalized;
        rows.push_back(std::move(row));
    }
    write_report_rows(ctx, rows, "bench-report");
    write_manifest(ctx, "bench");
    return 0;
}

struct ReportOpts {
    std::string in_path;
    std::string out_dir;
    std::string format = "table";
};

// Renders a machine report file; no config, no manifest.
int cmd_report(const ReportOpts& opts) {
    const auto rows = read_report(opts.in_path);
    if (opts.format == "machine") {
        for (const auto& row : rows) std::cout << row.dump() << "\n";
    } else {
        std::cout << format_table(rows);
    }
    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        const std::string path = (std::filesystem::path(opts.out_dir) / "report.txt").string();
        emit_report(rows, path, "");
    }
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"job-person fit distillation toolkit", "fitkd"};
    app.require_subcommand(1);

    int rc = 0;
    CommonOpts datagen_opts, teacher_opts, exp_opts, cls_opts, path_opts, eval_opts, bench_opts;
    ServeOpts serve_opts;
    ReportOpts report_opts;

    auto* datagen = app.add_subcommand("datagen", "generate oracle-labeled datasets");
    add_common(datagen, datagen_opts);
    datagen->callback([&] { rc = cmd_datagen(datagen_opts); });

    auto* teacher = app.add_subcommand("train-teacher", "supervised training of the teacher LM");
    add_common(teacher, teacher_opts);
    teacher->callback([&] { rc = cmd_train_teacher(teacher_opts); });

    auto* exp = app.add_subcommand("distill-exp", "distill an explanation student from a teacher");
    add_common(exp, exp_opts);
    exp->callback([&] { rc = cmd_distill_exp(exp_opts); });

    auto* cls = app.add_subcommand("distill-cls", "train the fit classifier");
    add_common(cls, cls_opts);
    cls->callback([&] { rc = cmd_distill_cls(cls_opts); });

    auto* path = app.add_subcommand("run-path", "execute a multi-stage distillation path");
    add_common(path, path_opts);
    path->callback([&] { rc = cmd_run_path(path_opts); });

    auto* eval = app.add_subcommand("eval", "score a checkpoint on an eval dataset");
    add_common(eval, eval_opts);
    eval->callback([&] { rc = cmd_eval(eval_opts); });

    auto* serve = app.add_subcommand("serve", "assess one job/profile pair");
    add_common(serve, serve_opts.common);
    serve->add_option("--job", serve_opts.job_text, "job posting text")->required();
    serve->add_option("--profile", serve_opts.profile_text, "member profile text")->required();
    serve->add_flag("--explain", serve_opts.explain, "also decode an explanation");
    serve->callback([&] { rc = cmd_serve(serve_opts); });

    auto* bench_cmd = app.add_subcommand("bench", "latency/throughput benchmark");
    add_common(bench_cmd, bench_opts);
    bench_cmd->callback([&] { rc = cmd_bench(bench_opts); });

    auto* report = app.add_subcommand("report", "render a machine report file");
    report->add_option("--in", report_opts.in_path, "machine report (.jsonl)")->required();
    report->add_option("--out", report_opts.out_dir, "also write report.txt here");
    report->add_option("--format", report_opts.format, "stdout format")
        ->check(CLI::IsMember({"table", "machine"}));
    report->callback([&] { rc = cmd_report(report_opts); });

    try {
        std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "fitkd: error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}

}  // namespace fitkd
