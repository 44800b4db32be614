#include "mlsent/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlsent/checkpoint.hpp"
#include "mlsent/encoder.hpp"
#include "mlsent/error.hpp"
#include "mlsent/random.hpp"

namespace mlsent {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

json config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"per_device_train_batch_size", c.train_batch_size},
              {"per_device_eval_batch_size", c.eval_batch_size},
              {"gradient_accumulation_steps", c.grad_accumulation_steps},
              {"num_train_epochs", c.epochs},
              {"warmup_ratio", c.warmup_ratio},
              {"evaluation_strategy", "epoch"},
              {"save_strategy", "epoch"},
              {"fp16", c.mixed_precision},
              {"seed", c.seed},
              {"weight_decay", c.weight_decay}};
}

void write_text(const fs::path& path, const std::string& body, bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

void adamw_update(TrainableModel& model, std::span<const double> grad, OptimizerState& opt,
                  double lr, double weight_decay) {
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(kBeta1, t);
  const double bc2 = 1.0 - std::pow(kBeta2, t);
  auto params = model.params();
  for (const auto& g : model.groups()) {
    if (!g.trainable) continue;
    for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
      opt.m[i] = kBeta1 * opt.m[i] + (1.0 - kBeta1) * grad[i];
      opt.v[i] = kBeta2 * opt.v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      if (lr == 0.0) continue;
      const double mhat = opt.m[i] / bc1;
      const double vhat = opt.v[i] / bc2;
      params[i] -= lr * (mhat / (std::sqrt(vhat) + kEps) + weight_decay * params[i]);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning_rate must be >= 0");
  if (train_batch_size == 0 || eval_batch_size == 0) throw ArgumentError("batch sizes must be positive");
  if (grad_accumulation_steps == 0) throw ArgumentError("gradient_accumulation_steps must be positive");
  if (epochs == 0) throw ArgumentError("num_train_epochs must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ArgumentError("warmup_ratio must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be >= 0");
}

std::string train_config_json(const TrainConfig& config) { return config_to_json(config).dump(2) + "\n"; }

TrainConfig parse_train_config(const std::string& json_text, const TrainConfig& base) {
  TrainConfig c = base;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed trainer config: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("trainer config must be an object");
  try {
    for (const auto& item : doc.items()) {
      const std::string& k = item.key();
      const json& v = item.value();
      if (k == "learning_rate") c.learning_rate = v.get<double>();
      else if (k == "per_device_train_batch_size") c.train_batch_size = v.get<std::size_t>();
      else if (k == "per_device_eval_batch_size") c.eval_batch_size = v.get<std::size_t>();
      else if (k == "gradient_accumulation_steps") c.grad_accumulation_steps = v.get<std::size_t>();
      else if (k == "num_train_epochs") c.epochs = v.get<std::size_t>();
      else if (k == "warmup_ratio") c.warmup_ratio = v.get<double>();
      else if (k == "fp16") c.mixed_precision = v.get<bool>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "weight_decay") c.weight_decay = v.get<double>();
      else if (k == "evaluation_strategy" || k == "save_strategy") {
        if (v.get<std::string>() != "epoch") throw ValidationError(k + " supports only \"epoch\"");
      } else {
        throw ValidationError("unknown trainer config key \"" + k + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad trainer config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainSchedule derive_schedule(const TrainConfig& config, std::size_t train_set_size) {
  config.validate();
  if (train_set_size == 0) throw ArgumentError("training set is empty");
  TrainSchedule s;
  s.effective_batch_size = config.train_batch_size * config.grad_accumulation_steps;
  s.steps_per_epoch = (train_set_size + s.effective_batch_size - 1) / s.effective_batch_size;
  s.total_optimizer_steps = s.steps_per_epoch * config.epochs;
  // ceil(warmup_ratio * total) in exact decimal terms: guard against 0.01 * 100
  // landing a hair above 1.
  const double raw = config.warmup_ratio * static_cast<double>(s.total_optimizer_steps);
  const double nearest = std::round(raw);
  s.warmup_steps = static_cast<std::size_t>(std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw));
  return s;
}

double lr_multiplier(const TrainSchedule& schedule, std::size_t step) {
  if (step < schedule.warmup_steps) {
    return static_cast<double>(step) / static_cast<double>(std::max<std::size_t>(1, schedule.warmup_steps));
  }
  const double remaining = static_cast<double>(schedule.total_optimizer_steps) - static_cast<double>(step);
  const double span = static_cast<double>(
      std::max<std::size_t>(1, schedule.total_optimizer_steps - schedule.warmup_steps));
  return std::max(0.0, remaining / span);
}

std::string epoch_record_json(const EpochRecord& r) {
  json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["global_step"] = r.global_step;
  j["checkpoint"] = r.checkpoint;
  j["wall_seconds"] = r.wall_seconds;
  j["eval"] = r.eval ? json::parse(report_json(*r.eval)) : json(nullptr);
  return j.dump();
}

bool fp16_supported() { return false; }

TrainResult train(TrainableModel model, const FreezePlan& plan, const Corpus& train_set,
                  const Corpus& val_set, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw ArgumentError("training set is empty");

  TrainResult result;
  result.freeze = apply_freeze_plan(model, plan);
  result.schedule = derive_schedule(config, train_set.size());
  result.fp16_active = config.mixed_precision && fp16_supported();
  const TrainSchedule& sched = result.schedule;

  const HashTokenizer tokenizer(model.arch().vocab_size, options.tokenizer);
  std::vector<Encoding> encoded;
  encoded.reserve(train_set.size());
  for (const auto& ex : train_set.examples) encoded.push_back(tokenizer.encode(ex.text));

  OptimizerState opt = options.optimizer.value_or(OptimizerState{});
  if (opt.m.empty()) {
    opt.m.assign(model.total_param_count(), 0.0);
    opt.v.assign(model.total_param_count(), 0.0);
  }
  if (opt.m.size() != model.total_param_count() || opt.v.size() != model.total_param_count()) {
    throw CheckpointError("optimizer state does not match the model size");
  }

  if (!options.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
    // A fresh run starts a fresh history; a resumed one appends.
    if (options.start_epoch == 0) fs::remove(options.out_dir / "history.jsonl", ec);
  }

  std::vector<double> grad(model.total_param_count(), 0.0);
  const std::size_t n = train_set.size();
  bool stopped = false;
  for (std::size_t epoch = options.start_epoch; epoch < config.epochs && !stopped; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::derive(config.seed, epoch);
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t s = 0; s < sched.steps_per_epoch; ++s) {
      if (options.max_steps != 0 && opt.step >= options.max_steps) {
        stopped = true;
        break;
      }
      const auto step_start = std::chrono::steady_clock::now();
      const std::size_t begin = s * sched.effective_batch_size;
      const std::size_t end = std::min(n, begin + sched.effective_batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);
      // Micro-batches of train_batch_size; gradients summed before one update.
      for (std::size_t micro = begin; micro < end; micro += config.train_batch_size) {
        const std::size_t micro_end = std::min(end, micro + config.train_batch_size);
        for (std::size_t k = micro; k < micro_end; ++k) {
          const Encoding& enc = encoded[order[k]];
          loss_sum += encoder::accumulate_gradient(
              model, std::span<const std::int32_t>(enc.ids.data(), enc.length),
              train_set.examples[order[k]].label, scale, grad);
          ++loss_count;
        }
      }
      const double lr = config.learning_rate * lr_multiplier(sched, opt.step);
      adamw_update(model, grad, opt, lr, config.weight_decay);
      result.history.step_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - step_start).count());
    }
    if (stopped) break;

    EpochRecord record;
    record.epoch = epoch + 1;
    record.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    record.global_step = opt.step;
    if (!val_set.empty()) {
      TokenizerSettings eval_tok = options.tokenizer;
      record.eval = evaluate(probe_from_model(model, eval_tok), val_set, config.eval_batch_size);
    }
    if (!options.out_dir.empty()) {
      const fs::path ckpt = options.out_dir / ("checkpoint-epoch-" + std::to_string(record.epoch));
      save_model(model, options.tokenizer, ckpt);
      save_freeze_plan(plan, result.freeze, ckpt);
      write_text(ckpt / "train_config.json", train_config_json(config));
      json state{{"completed_epochs", record.epoch}, {"global_step", opt.step},
                 {"train_loss", record.train_loss}, {"fp16_active", result.fp16_active}};
      write_text(ckpt / "trainer_state.json", state.dump(2) + "\n");
      std::vector<double> moments(opt.m);
      moments.insert(moments.end(), opt.v.begin(), opt.v.end());
      write_doubles(ckpt / "optimizer.bin", moments);
      record.checkpoint = ckpt.string();
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    if (!options.out_dir.empty()) {
      write_text(options.out_dir / "history.jsonl", epoch_record_json(record) + "\n", true);
    }
    result.history.epochs.push_back(std::move(record));
  }
  result.model = std::move(model);
  result.optimizer = std::move(opt);
  return result;
}

ResumeState resume(const fs::path& checkpoint_dir) {
  if (!fs::is_directory(checkpoint_dir)) throw CheckpointError("no checkpoint at " + checkpoint_dir.string());
  ResumeState state;
  LoadedModel loaded;
  try {
    loaded = load_model(checkpoint_dir);
  } catch (const LoadError& e) {
    throw CheckpointError(e.what());
  }
  state.model = std::move(loaded.model);
  state.tokenizer = loaded.tokenizer;

  auto read = [&](const char* name) {
    std::ifstream in(checkpoint_dir / name);
    if (!in) throw CheckpointError(std::string("missing ") + name + " in " + checkpoint_dir.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  try {
    state.config = parse_train_config(read("train_config.json"));
    const json st = json::parse(read("trainer_state.json"));
    state.completed_epochs = st.at("completed_epochs").get<std::size_t>();
    state.optimizer.step = st.at("global_step").get<std::size_t>();
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt trainer sidecar in " + checkpoint_dir.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw CheckpointError("corrupt train_config.json in " + checkpoint_dir.string() + ": " + e.what());
  }
  const auto plan = load_freeze_plan(checkpoint_dir);
  if (!plan) throw CheckpointError("missing freeze_plan.json in " + checkpoint_dir.string());
  state.plan = *plan;
  apply_freeze_plan(state.model, state.plan);

  const std::size_t p = state.model.total_param_count();
  std::vector<double> moments;
  try {
    moments = read_doubles(checkpoint_dir / "optimizer.bin");
  } catch (const LoadError& e) {
    throw CheckpointError(e.what());
  }
  if (moments.size() != 2 * p) throw CheckpointError("optimizer state size mismatch in " + checkpoint_dir.string());
  state.optimizer.m.assign(moments.begin(), moments.begin() + static_cast<std::ptrdiff_t>(p));
  state.optimizer.v.assign(moments.begin() + static_cast<std::ptrdiff_t>(p), moments.end());
  return state;
}

}  // namespace mlsent
