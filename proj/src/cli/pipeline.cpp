#include <functional>

#include "commands.hpp"
#include "mlsent/backend.hpp"
#include "mlsent/checkpoint.hpp"
#include "mlsent/cli/manifest.hpp"
#include "mlsent/digest.hpp"
#include "mlsent/error.hpp"
#include "mlsent/limex.hpp"
#include "mlsent/metrics.hpp"
#include "mlsent/render.hpp"

namespace mlsent::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Chain {
  fs::path root;
  Manifest root_manifest;
  json stages = json::array();
  std::string prev_stage;
  fs::path prev_manifest;
  std::vector<fs::path> prev_outputs;
};

// Runs one stage in its own directory. The stage manifest records the previous
// stage's manifest digest and takes its outputs as inputs; on failure both the
// stage and root manifests are marked FAILED before the error propagates.
void run_stage(Chain& chain, const std::string& name, Streams io,
               const std::function<std::vector<fs::path>(const fs::path&, Manifest&)>& body) {
  const fs::path dir = chain.root / name;
  fs::create_directories(dir);
  Manifest m;
  m.command = "pipeline";
  m.stage = name;
  m.started = utc_timestamp();
  m.config = chain.root_manifest.config;
  m.seed = chain.root_manifest.seed;
  if (!chain.prev_stage.empty()) {
    m.extra["previous"] = {{"stage", chain.prev_stage},
                           {"manifest", chain.prev_manifest.string()},
                           {"digest", sha256_file(chain.prev_manifest)}};
    for (const auto& p : chain.prev_outputs) m.add_input(p);
  }
  io.err << "[pipeline] " << name << "\n";
  std::vector<fs::path> outputs;
  try {
    outputs = body(dir, m);
  } catch (const std::exception& e) {
    m.status = "FAILED";
    m.error = e.what();
    m.write(dir / "manifest.json");
    chain.stages.push_back({{"stage", name}, {"status", "FAILED"}, {"manifest", (dir / "manifest.json").string()}});
    chain.root_manifest.status = "FAILED";
    chain.root_manifest.error = name + ": " + e.what();
    chain.root_manifest.extra["stages"] = chain.stages;
    chain.root_manifest.write(chain.root / "manifest.json");
    throw;
  }
  for (const auto& p : outputs) m.add_artifact(p);
  m.write(dir / "manifest.json");
  chain.stages.push_back({{"stage", name},
                          {"status", "OK"},
                          {"manifest", (dir / "manifest.json").string()},
                          {"digest", sha256_file(dir / "manifest.json")}});
  for (const auto& p : outputs) chain.root_manifest.add_artifact(p);
  chain.prev_stage = name;
  chain.prev_manifest = dir / "manifest.json";
  chain.prev_outputs = outputs;
}

}  // namespace

int cmd_pipeline(const PipelineArgs& a, Streams io) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_run_config(a.config);
  apply_profile(cfg, a.profile.empty() ? cfg.profile : a.profile);
  if (!a.data.empty()) cfg.data = fs::absolute(a.data);
  if (!a.model.empty()) cfg.model = a.model;
  if (!a.freeze.empty()) cfg.freeze = a.freeze;
  cfg.trainer.validate();
  const std::optional<Label> target = parse_target(cfg.limex.target);

  const auto arch = describe_backend(cfg.model);
  if (!arch && !looks_like_model_dir(cfg.model)) throw LoadError("unknown backend '" + cfg.model + "'");

  Chain chain;
  chain.root = a.out;
  fs::create_directories(a.out);
  Manifest& root = chain.root_manifest;
  root.command = "pipeline";
  root.started = utc_timestamp();
  root.config = run_config_json(cfg);
  root.seed = cfg.trainer.seed;
  if (arch) {
    const FreezePlan plan = FreezePlan::parse(cfg.freeze, arch->layers);
    const FreezeSummary counts = count_freeze(*arch, plan);
    root.extra["freeze"] = {{"plan", plan.describe()},
                            {"frozen_params", counts.frozen_param_count},
                            {"trainable_params", counts.trainable_param_count}};
  }

  if (a.dry_run) {
    if (!cfg.data.empty() && fs::exists(cfg.data)) root.add_input(cfg.data);
    root.status = "DRY_RUN";
    root.write(a.out / "manifest.json");
    io.out << root.config.dump(2) << "\n";
    return kExitOk;
  }
  if (cfg.data.empty()) throw ArgumentError("pipeline needs a data path (config data.path or --data)");
  root.add_input(cfg.data);

  Corpus cleaned;
  CorpusSplit split;
  std::optional<TrainResult> trained;
  TokenizerSettings tok;
  EvalReport report;

  run_stage(chain, "01-preprocess", io, [&](const fs::path& dir, Manifest& m) {
    m.add_input(cfg.data);
    const Corpus raw = load_any(cfg.data);
    for (const auto& w : raw.warnings) io.err << "warning: " << w << "\n";
    CleanedCorpus cc = clean_corpus(raw, cfg.clean);
    m.extra["excluded"] = cc.excluded;
    cleaned = std::move(cc.corpus);
    save_corpus(cleaned, dir / "cleaned.jsonl");
    return std::vector<fs::path>{dir / "cleaned.jsonl"};
  });

  run_stage(chain, "02-split", io, [&](const fs::path& dir, Manifest& m) {
    split = split_corpus(cleaned, cfg.split, cfg.split_seed);
    m.extra["sizes"] = {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};
    save_corpus(split.train, dir / "train.jsonl");
    save_corpus(split.val, dir / "val.jsonl");
    save_corpus(split.test, dir / "test.jsonl");
    return std::vector<fs::path>{dir / "train.jsonl", dir / "val.jsonl", dir / "test.jsonl"};
  });

  run_stage(chain, "03-train", io, [&](const fs::path& dir, Manifest& m) {
    TrainableModel model = load_encoder_backend(cfg.model, kNumLabels, cfg.trainer.seed);
    const FreezePlan plan = FreezePlan::parse(cfg.freeze, model.arch().layers);
    tok.max_length = cfg.max_length;
    tok.vocab_size = model.arch().vocab_size;
    TrainOptions opts;
    opts.out_dir = dir;
    opts.tokenizer = tok;
    trained = train(std::move(model), plan, split.train, split.val, cfg.trainer, opts);
    save_model(trained->model, tok, dir / "model");
    save_freeze_plan(plan, trained->freeze, dir / "model");
    m.extra["freeze"] = {{"plan", plan.describe()},
                         {"frozen_params", trained->freeze.frozen_param_count},
                         {"trainable_params", trained->freeze.trainable_param_count}};
    m.extra["schedule"] = {{"steps_per_epoch", trained->schedule.steps_per_epoch},
                           {"total_optimizer_steps", trained->schedule.total_optimizer_steps},
                           {"warmup_steps", trained->schedule.warmup_steps},
                           {"effective_batch_size", trained->schedule.effective_batch_size}};
    m.extra["fp16_active"] = trained->fp16_active;
    root.extra["freeze"] = m.extra["freeze"];
    return std::vector<fs::path>{dir / "model" / "config.json", dir / "model" / "weights.bin",
                                 dir / "history.jsonl"};
  });

  const ClassifierProbe probe = probe_from_model(trained->model, tok);

  run_stage(chain, "04-evaluate", io, [&](const fs::path& dir, Manifest&) {
    if (split.test.empty()) throw EmptyInputError("test split is empty");
    report = evaluate(probe, split.test, cfg.trainer.eval_batch_size);
    write_file(dir / "report.json", report_json(report));
    return std::vector<fs::path>{dir / "report.json"};
  });

  run_stage(chain, "05-report", io, [&](const fs::path& dir, Manifest& m) {
    const ComparisonTable table = comparison_table({{display_name(cfg), report}});
    write_file(dir / "comparison.md", table.markdown);
    write_file(dir / "comparison.json", table.json);
    io.out << table.text;

    const std::string text = cfg.limex.text.empty() ? split.test.examples.front().text : cfg.limex.text;
    limex::LimeConfig lc;
    lc.n_samples = cfg.limex.samples;
    lc.kernel_width = cfg.limex.kernel_width;
    lc.ridge_lambda = cfg.limex.ridge_lambda;
    lc.top_k = cfg.limex.top_k;
    lc.seed = cfg.limex.seed;
    const limex::Explanation ex = limex::explain(with_cleaning(probe, cfg.clean), text, target, lc);
    write_file(dir / "explanation.json", limex::render_explanation(ex, limex::RenderFormat::json));
    write_file(dir / "explanation.html", limex::render_explanation(ex, limex::RenderFormat::html));
    m.extra["explained_text"] = text;
    return std::vector<fs::path>{dir / "comparison.md", dir / "comparison.json", dir / "explanation.json",
                                 dir / "explanation.html"};
  });

  root.extra["stages"] = chain.stages;
  root.extra["report"] = (a.out / "04-evaluate" / "report.json").string();
  root.write(a.out / "manifest.json");
  io.out << "report: " << (a.out / "04-evaluate" / "report.json").string() << "\n";
  return kExitOk;
}

}  // namespace mlsent::cli
