#include "mlsent/cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "mlsent/backend.hpp"
#include "mlsent/cli/manifest.hpp"
#include "mlsent/error.hpp"

namespace mlsent::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError("config section \"" + where + "\" must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ValidationError("unknown key \"" + item.key() + "\" in config section \"" + where + "\"");
  }
}

fs::path resolve(const fs::path& p, const fs::path& base_dir) {
  if (p.empty() || p.is_absolute() || base_dir.empty()) return p;
  return fs::weakly_canonical(base_dir / p);
}

}  // namespace

RunConfig parse_run_config(const json& doc, RunConfig c, const fs::path& base_dir) {
  reject_unknown(doc, {"profile", "data", "textclean", "corpus", "backend", "trainer", "limex", "metrics"}, "<root>");
  try {
    if (doc.contains("profile")) c.profile = doc["profile"].get<std::string>();
    if (doc.contains("data")) {
      const json& d = doc["data"];
      reject_unknown(d, {"path"}, "data");
      if (d.contains("path")) c.data = resolve(d["path"].get<std::string>(), base_dir);
    }
    if (doc.contains("textclean")) {
      const json& t = doc["textclean"];
      reject_unknown(t, {"steps"}, "textclean");
      if (t.contains("steps")) {
        for (const auto& item : t["steps"].items()) {
          const auto step = parse_clean_step(item.key());
          if (!step) throw ValidationError("unknown cleaning step \"" + item.key() + "\"");
          c.clean.set_enabled(*step, item.value().get<bool>());
        }
      }
    }
    if (doc.contains("corpus")) {
      const json& s = doc["corpus"];
      reject_unknown(s, {"split", "seed"}, "corpus");
      if (s.contains("split")) {
        const json& r = s["split"];
        reject_unknown(r, {"train", "val", "test"}, "corpus.split");
        if (r.contains("train")) c.split.train = r["train"].get<double>();
        if (r.contains("val")) c.split.val = r["val"].get<double>();
        if (r.contains("test")) c.split.test = r["test"].get<double>();
      }
      if (s.contains("seed")) c.split_seed = s["seed"].get<std::uint64_t>();
    }
    if (doc.contains("backend")) {
      const json& b = doc["backend"];
      reject_unknown(b, {"model", "freeze", "max_length"}, "backend");
      if (b.contains("model")) c.model = b["model"].get<std::string>();
      if (b.contains("freeze")) c.freeze = b["freeze"].get<std::string>();
      if (b.contains("max_length")) c.max_length = b["max_length"].get<std::size_t>();
    }
    if (doc.contains("trainer")) c.trainer = parse_train_config(doc["trainer"].dump(), c.trainer);
    if (doc.contains("limex")) {
      const json& l = doc["limex"];
      reject_unknown(l, {"samples", "kernel_width", "ridge_lambda", "top_k", "seed", "text", "target"}, "limex");
      if (l.contains("samples")) c.limex.samples = l["samples"].get<std::size_t>();
      if (l.contains("kernel_width")) c.limex.kernel_width = l["kernel_width"].get<double>();
      if (l.contains("ridge_lambda")) c.limex.ridge_lambda = l["ridge_lambda"].get<double>();
      if (l.contains("top_k")) c.limex.top_k = l["top_k"].get<std::size_t>();
      if (l.contains("seed")) c.limex.seed = l["seed"].get<std::uint64_t>();
      if (l.contains("text")) c.limex.text = l["text"].get<std::string>();
      if (l.contains("target")) c.limex.target = l["target"].get<std::string>();
    }
    if (doc.contains("metrics")) {
      const json& m = doc["metrics"];
      reject_unknown(m, {"report_name"}, "metrics");
      if (m.contains("report_name")) c.report_name = m["report_name"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid json: " + e.what());
  }
  if (doc.is_object() && doc.value("format", "") == kManifestFormat) {
    if (!doc.contains("config")) throw ValidationError("manifest " + path.string() + " has no config snapshot");
    doc = doc["config"];
  }
  const fs::path dir = fs::absolute(path).parent_path();
  return parse_run_config(doc, std::move(base), dir);
}

void apply_profile(RunConfig& c, std::string_view profile) {
  if (profile.empty()) return;
  if (profile == "paper") {
    // Full-scale reference setup; the trainer section is pinned to it.
    c.trainer = TrainConfig{};
    if (!is_reference_backend(c.model)) c.model = "xlm-roberta-base";
    c.max_length = 128;
  } else if (profile == "desk") {
    c.trainer.train_batch_size = 16;
    c.trainer.eval_batch_size = 16;
    c.trainer.epochs = 1;
    if (c.model.rfind("tiny-encoder", 0) != 0) c.model = "tiny-encoder";
    c.max_length = 64;
  } else {
    throw ArgumentError("unknown profile '" + std::string(profile) + "' (expected desk or paper)");
  }
  c.profile = std::string(profile);
}

json run_config_json(const RunConfig& c) {
  json steps = json::object();
  for (const auto& e : c.clean.steps) steps[std::string(to_string(e.step))] = e.enabled;
  return json{
      {"profile", c.profile},
      {"data", {{"path", c.data.string()}}},
      {"textclean", {{"steps", steps}}},
      {"corpus", {{"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
                  {"seed", c.split_seed}}},
      {"backend", {{"model", c.model}, {"freeze", c.freeze}, {"max_length", c.max_length}}},
      {"trainer", json::parse(train_config_json(c.trainer))},
      {"limex",
       {{"samples", c.limex.samples},
        {"kernel_width", c.limex.kernel_width},
        {"ridge_lambda", c.limex.ridge_lambda},
        {"top_k", c.limex.top_k},
        {"seed", c.limex.seed},
        {"text", c.limex.text},
        {"target", c.limex.target}}},
      {"metrics", {{"report_name", c.report_name}}},
  };
}

std::string display_name(const RunConfig& c) {
  if (!c.report_name.empty()) return c.report_name;
  std::string base = c.model;
  if (c.model == "bert-base-multilingual-cased") base = "BERT-base-multilingual-cased";
  else if (c.model == "roberta-base") base = "RoBERTa-base";
  else if (c.model == "xlm-roberta-base") base = "XLM-RoBERTa-base";
  const bool frozen = c.freeze != "none";
  return base + (frozen ? " (Frozen)" : " (Unfrozen)");
}

}  // namespace mlsent::cli
