#include "commands.hpp"

#include <fstream>
#include <sstream>

#include "mlsent/backend.hpp"
#include "mlsent/checkpoint.hpp"
#include "mlsent/cli/manifest.hpp"
#include "mlsent/error.hpp"
#include "mlsent/limex.hpp"
#include "mlsent/metrics.hpp"
#include "mlsent/render.hpp"

namespace mlsent::cli {

using nlohmann::json;
namespace fs = std::filesystem;

Corpus load_any(const fs::path& path) { return load_corpus(path, format_from_path(path)); }

fs::path find_split_file(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".jsonl", ".csv"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  throw IoError("no " + stem + ".jsonl or " + stem + ".csv in " + dir.string());
}

void write_file(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::optional<Label> parse_target(const std::string& name) {
  if (name == "predicted") return std::nullopt;
  const auto label = parse_label(name);
  if (!label) throw ArgumentError("unknown class '" + name + "' (expected positive, neutral, negative or predicted)");
  return label;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int cmd_stats(const StatsArgs& a, Streams io) {
  Manifest m;
  m.command = "stats";
  m.started = utc_timestamp();
  m.config = {{"data", fs::absolute(a.data).string()}, {"out", fs::absolute(a.out).string()}};
  const Corpus corpus = load_any(a.data);
  m.add_input(a.data);
  for (const auto& w : corpus.warnings) io.err << "warning: " << w << "\n";
  const DistributionReport report = distribution_report(corpus);
  for (const auto& p : emit_distribution_artifacts(report, a.out)) m.add_artifact(p);
  m.write(a.out / "manifest.json");

  io.out << "examples: " << report.total << "\n";
  for (const auto& [label, n] : report.label_counts) io.out << "  " << to_string(label) << ": " << n << "\n";
  for (const auto& [lang, n] : report.language_counts) io.out << "  [" << lang << "] " << n << "\n";
  return kExitOk;
}

int cmd_preprocess(const PreprocessArgs& a, Streams io) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_run_config(a.config);
  for (const auto& name : a.disable) {
    const auto step = parse_clean_step(name);
    if (!step) throw ArgumentError("unknown cleaning step '" + name + "'");
    cfg.clean.set_enabled(*step, false);
  }
  Manifest m;
  m.command = "preprocess";
  m.started = utc_timestamp();
  m.config = {{"textclean", run_config_json(cfg)["textclean"]}};
  const Corpus corpus = load_any(a.in);
  m.add_input(a.in);
  const CleanedCorpus cleaned = clean_corpus(corpus, cfg.clean);
  save_corpus(cleaned.corpus, a.out, format_from_path(a.out));
  m.add_artifact(a.out);
  m.extra["excluded"] = cleaned.excluded;
  m.extra["excluded_indices"] = cleaned.excluded_indices;
  m.write(manifest_path_for(a.out));
  io.out << "cleaned " << cleaned.corpus.size() << " examples, excluded " << cleaned.excluded
         << " that became empty\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, Streams io) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_run_config(a.config);
  apply_profile(cfg, a.profile.empty() ? cfg.profile : a.profile);
  if (!a.model.empty()) cfg.model = a.model;
  if (!a.freeze.empty()) cfg.freeze = a.freeze;

  Manifest m;
  m.command = "train";
  m.started = utc_timestamp();
  const fs::path train_path = find_split_file(a.data, "train");
  const fs::path val_path = find_split_file(a.data, "val");
  const Corpus train_set = load_any(train_path);
  const Corpus val_set = load_any(val_path);
  m.add_input(train_path);
  m.add_input(val_path);

  TrainableModel model;
  FreezePlan plan;
  TrainOptions options;
  options.out_dir = a.out;
  options.max_steps = a.max_steps;
  if (!a.resume.empty()) {
    ResumeState st = resume(a.resume);
    model = std::move(st.model);
    plan = st.plan;
    cfg.trainer = st.config;
    cfg.model = model.backend_id();
    cfg.freeze = plan.to_spec();
    options.tokenizer = st.tokenizer;
    options.start_epoch = st.completed_epochs;
    options.optimizer = std::move(st.optimizer);
    m.extra["resumed_from"] = fs::absolute(a.resume).string();
    io.out << "resuming after epoch " << st.completed_epochs << "\n";
  } else {
    model = load_encoder_backend(cfg.model, kNumLabels, cfg.trainer.seed);
    plan = FreezePlan::parse(cfg.freeze, model.arch().layers);
    options.tokenizer.max_length = cfg.max_length;
    options.tokenizer.vocab_size = model.arch().vocab_size;
  }
  m.config = run_config_json(cfg);
  m.seed = cfg.trainer.seed;

  TrainResult result = train(std::move(model), plan, train_set, val_set, cfg.trainer, options);
  const fs::path final_dir = a.out / "model";
  save_model(result.model, options.tokenizer, final_dir);
  save_freeze_plan(plan, result.freeze, final_dir);
  for (const auto& entry : fs::recursive_directory_iterator(a.out)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") m.add_artifact(entry.path());
  }
  m.extra["freeze"] = {{"plan", plan.describe()},
                       {"frozen_params", result.freeze.frozen_param_count},
                       {"trainable_params", result.freeze.trainable_param_count}};
  m.extra["schedule"] = {{"steps_per_epoch", result.schedule.steps_per_epoch},
                         {"total_optimizer_steps", result.schedule.total_optimizer_steps},
                         {"warmup_steps", result.schedule.warmup_steps},
                         {"effective_batch_size", result.schedule.effective_batch_size}};
  m.extra["fp16_active"] = result.fp16_active;
  m.write(a.out / "manifest.json");

  for (const auto& rec : result.history.epochs) {
    io.out << "epoch " << rec.epoch << ": train loss " << rec.train_loss;
    if (rec.eval) io.out << ", val accuracy " << rec.eval->overall.accuracy;
    io.out << "\n";
  }
  io.out << "model written to " << final_dir.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, Streams io) {
  Manifest m;
  m.command = "evaluate";
  m.started = utc_timestamp();
  m.config = {{"checkpoint", fs::absolute(a.checkpoint).string()},
              {"data", fs::absolute(a.data).string()},
              {"batch_size", a.batch_size}};
  const LoadedModel loaded = load_model(a.checkpoint);
  const Corpus test = load_any(a.data);
  m.add_input(a.data);
  for (const char* f : {"config.json", "weights.bin"}) m.add_input(a.checkpoint / f);
  const EvalReport report = evaluate(probe_from_model(loaded.model, loaded.tokenizer), test, a.batch_size);
  write_file(a.out, report_json(report));
  m.add_artifact(a.out);
  m.write(manifest_path_for(a.out));
  io.out << comparison_row(loaded.model.backend_id(), report.overall) << "\n";
  return kExitOk;
}

int cmd_explain(const ExplainArgs& a, Streams io) {
  const auto format = limex::parse_render_format(a.format);
  const auto target = parse_target(a.target);
  Manifest m;
  m.command = "explain";
  m.started = utc_timestamp();
  m.seed = a.seed;
  m.config = {{"checkpoint", fs::absolute(a.checkpoint).string()},
              {"text", a.text},
              {"class", a.target},
              {"samples", a.samples},
              {"seed", a.seed},
              {"top_k", a.top_k},
              {"kernel_width", a.kernel_width},
              {"format", a.format}};
  const LoadedModel loaded = load_model(a.checkpoint);
  for (const char* f : {"config.json", "weights.bin"}) m.add_input(a.checkpoint / f);
  const ClassifierProbe probe = with_cleaning(probe_from_model(loaded.model, loaded.tokenizer));

  limex::LimeConfig lc;
  lc.n_samples = a.samples;
  lc.seed = a.seed;
  lc.top_k = a.top_k;
  lc.kernel_width = a.kernel_width;
  const limex::Explanation ex = limex::explain(probe, a.text, target, lc);
  const std::string rendered = limex::render_explanation(ex, format);
  if (a.out.empty()) {
    io.out << rendered;
    return kExitOk;
  }
  write_file(a.out, rendered);
  m.add_artifact(a.out);
  m.write(manifest_path_for(a.out));
  io.out << "explained class " << to_string(ex.target_class) << " (p=" << ex.probe_probability
         << ", r2=" << ex.surrogate_r2 << ") -> " << a.out.string() << "\n";
  return kExitOk;
}

int cmd_compare(const CompareArgs& a, Streams io) {
  std::vector<std::pair<std::string, EvalReport>> reports;
  Manifest m;
  m.command = "compare";
  m.started = utc_timestamp();
  for (const auto& spec : a.reports) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--report expects NAME=PATH, got '" + spec + "'");
    const fs::path p = spec.substr(eq + 1);
    reports.emplace_back(spec.substr(0, eq), parse_report_json(read_file(p)));
    m.add_input(p);
  }
  if (!a.rows.empty()) {
    // Literal rows: [{"name", "accuracy", "precision", "recall", "f1"}].
    json doc;
    try {
      doc = json::parse(read_file(a.rows));
      for (const auto& r : doc) {
        EvalReport rep;
        rep.overall.accuracy = r.at("accuracy").get<double>();
        rep.overall.precision = r.at("precision").get<double>();
        rep.overall.recall = r.at("recall").get<double>();
        rep.overall.f1 = r.at("f1").get<double>();
        reports.emplace_back(r.at("name").get<std::string>(), rep);
      }
    } catch (const json::exception& e) {
      throw ValidationError("bad rows file " + a.rows.string() + ": " + e.what());
    }
    m.add_input(a.rows);
  }
  if (reports.empty()) throw ArgumentError("compare needs at least one --report or --rows entry");
  const ComparisonTable table = comparison_table(reports);
  io.out << table.text;
  if (!a.out.empty()) {
    fs::path md = a.out;
    fs::path js = a.out;
    js.replace_extension(".json");
    if (md.extension() != ".md") md.replace_extension(".md");
    write_file(md, table.markdown);
    write_file(js, table.json);
    m.add_artifact(md);
    m.add_artifact(js);
    m.write(manifest_path_for(md));
  }
  return kExitOk;
}

}  // namespace mlsent::cli
