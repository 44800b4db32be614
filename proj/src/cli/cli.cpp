#include "mlsent/cli/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mlsent/error.hpp"

namespace mlsent::cli {

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual sentiment classification: data stats, cleaning, training, evaluation, explanations"};
  app.require_subcommand(1);
  Streams io{out, err};

  StatsArgs stats;
  auto* s = app.add_subcommand("stats", "Language/label distribution of a corpus");
  s->add_option("--data", stats.data, "Corpus file (.jsonl or .csv)")->required();
  s->add_option("--out", stats.out, "Output directory")->required();

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Clean a corpus");
  p->add_option("--in", pre.in, "Input corpus")->required();
  p->add_option("--out", pre.out, "Output corpus")->required();
  p->add_option("--config", pre.config, "Config file (textclean section)");
  p->add_option("--disable", pre.disable, "Cleaning step to skip (repeatable)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fine-tune an encoder with a freeze plan");
  t->add_option("--model", tr.model, "Backend id, tiny-encoder[:...] or model directory");
  t->add_option("--freeze", tr.freeze, "first8 | firstN | none | custom:<layers>[;embeddings=on|off][;head=on|off]");
  t->add_option("--data", tr.data, "Directory holding train and val splits")->required();
  t->add_option("--config", tr.config, "Config file");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--resume", tr.resume, "Resume from a checkpoint-epoch-N directory");
  t->add_option("--profile", tr.profile, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  t->add_option("--max-steps", tr.max_steps, "Stop after this many optimizer steps (0 = no limit)");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a model on a test corpus");
  e->add_option("--checkpoint", ev.checkpoint, "Model directory")->required();
  e->add_option("--data", ev.data, "Test corpus (already cleaned)")->required();
  e->add_option("--out", ev.out, "Report path")->required();
  e->add_option("--batch-size", ev.batch_size, "Inference batch size");

  ExplainArgs ex;
  auto* x = app.add_subcommand("explain", "Word-level attributions for one text");
  x->add_option("--checkpoint", ex.checkpoint, "Model directory")->required();
  x->add_option("--text", ex.text, "Text to explain")->required();
  x->add_option("--class", ex.target, "positive | neutral | negative | predicted")
      ->check(CLI::IsMember({"positive", "neutral", "negative", "predicted"}));
  x->add_option("--samples", ex.samples, "Perturbation samples (above the enumeration threshold)");
  x->add_option("--seed", ex.seed, "Sampling seed");
  x->add_option("--top-k", ex.top_k, "Attributions to keep");
  x->add_option("--kernel-width", ex.kernel_width, "Proximity kernel width");
  x->add_option("--format", ex.format, "html | json | ansi")->check(CLI::IsMember({"html", "json", "ansi"}));
  x->add_option("--out", ex.out, "Output file (stdout if omitted)");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Render a model comparison table");
  c->add_option("--report", cmp.reports, "NAME=report.json (repeatable, input order kept)");
  c->add_option("--rows", cmp.rows, "JSON list of {name, accuracy, precision, recall, f1}");
  c->add_option("--out", cmp.out, "Markdown path; JSON written alongside");

  PipelineArgs pl;
  auto* q = app.add_subcommand("pipeline", "preprocess -> split -> train -> evaluate -> report");
  q->add_option("--config", pl.config, "Config file or a previous run manifest");
  q->add_option("--profile", pl.profile, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  q->add_option("--out", pl.out, "Run directory")->required();
  q->add_option("--data", pl.data, "Corpus file (overrides config)");
  q->add_option("--model", pl.model, "Backend (overrides config)");
  q->add_option("--freeze", pl.freeze, "Freeze plan (overrides config)");
  q->add_flag("--dry-run", pl.dry_run, "Resolve config and write the manifest only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*s) return cmd_stats(stats, io);
    if (*p) return cmd_preprocess(pre, io);
    if (*t) return cmd_train(tr, io);
    if (*e) return cmd_evaluate(ev, io);
    if (*x) return cmd_explain(ex, io);
    if (*c) return cmd_compare(cmp, io);
    if (*q) return cmd_pipeline(pl, io);
  } catch (const Error& er) {
    err << "error (" << to_string(er.kind()) << "): " << er.what() << "\n";
    return exit_code_for(er.kind());
  } catch (const std::exception& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace mlsent::cli
