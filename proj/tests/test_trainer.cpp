#include <doctest.h>

#include <fstream>

#include "mlsent/backend.hpp"
#include "mlsent/checkpoint.hpp"
#include "mlsent/error.hpp"
#include "mlsent/textclean.hpp"
#include "mlsent/trainer.hpp"
#include "test_util.hpp"

using namespace mlsent;
using testutil::TempDir;

namespace {

Corpus small_corpus(std::size_t n) {
  static const char* words[3][3] = {{"love", "great", "happy"}, {"table", "train", "today"}, {"hate", "awful", "bad"}};
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 3;
    c.examples.push_back({std::string("the ") + words[y][i % 3] + " one " + words[y][(i + 1) % 3],
                          label_at(y), i % 2 ? "fr" : "en"});
  }
  return c;
}

std::vector<double> snapshot(const TrainableModel& m, const std::string& group) {
  const auto s = m.group_params(group);
  return {s.begin(), s.end()};
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.train_batch_size = 4;
  c.eval_batch_size = 8;
  c.grad_accumulation_steps = 2;
  c.epochs = 2;
  c.learning_rate = 1e-2;
  c.warmup_ratio = 0.0;
  return c;
}

}  // namespace

TEST_CASE("schedule arithmetic") {
  const TrainConfig def;
  CHECK(def.train_batch_size == 512);
  CHECK(def.grad_accumulation_steps == 2);
  // effective 1024; 100000 -> ceil(97.66) = 98 per epoch, 490 total, warmup ceil(4.9) = 5.
  CHECK(derive_schedule(def, 100000) == TrainSchedule{98, 490, 5, 1024});
  CHECK(derive_schedule(def, 10240) == TrainSchedule{10, 50, 1, 1024});
  CHECK(derive_schedule(def, 1) == TrainSchedule{1, 5, 1, 1024});
  CHECK_THROWS_AS(derive_schedule(def, 0), ArgumentError);
  TrainConfig nowarm = def;
  nowarm.warmup_ratio = 0.0;
  CHECK(derive_schedule(nowarm, 5000).warmup_steps == 0);
}

TEST_CASE("linear warmup then linear decay") {
  const TrainSchedule s{10, 100, 10, 32};
  CHECK(lr_multiplier(s, 0) == 0.0);
  CHECK(lr_multiplier(s, 5) == doctest::Approx(0.5));
  CHECK(lr_multiplier(s, 10) == doctest::Approx(1.0));
  CHECK(lr_multiplier(s, 55) == doctest::Approx(0.5));
  CHECK(lr_multiplier(s, 100) == 0.0);
  const TrainSchedule flat{10, 100, 0, 32};
  CHECK(lr_multiplier(flat, 0) == 1.0);
}

TEST_CASE("train config json round trip and strictness") {
  TrainConfig c;
  c.learning_rate = 3e-4;
  c.epochs = 7;
  c.mixed_precision = false;
  CHECK(parse_train_config(train_config_json(c)) == c);
  CHECK_THROWS_AS(parse_train_config(R"({"learning_rat": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config(R"({"evaluation_strategy": "steps"})"), ValidationError);
  CHECK_THROWS_AS(parse_train_config(R"({"num_train_epochs": 0})"), ArgumentError);
  const TrainConfig partial = parse_train_config(R"({"seed": 7})");
  CHECK(partial.seed == 7);
  CHECK(partial.learning_rate == 5e-5);
}

TEST_CASE("frozen layers are untouched, trainable ones move") {
  TrainableModel m = load_encoder_backend("tiny-encoder:layers=2,vocab=128,positions=32", 3, 1);
  const auto l0 = snapshot(m, "layer.0"), l1 = snapshot(m, "layer.1"), head = snapshot(m, "head"),
             emb = snapshot(m, "embeddings");
  TrainOptions opts;
  opts.max_steps = 2;
  opts.tokenizer.max_length = 32;
  const TrainResult r = train(m, FreezePlan::parse("custom:0", 2), small_corpus(24), {}, tiny_config(), opts);
  CHECK(snapshot(r.model, "layer.0") == l0);
  CHECK(snapshot(r.model, "embeddings") == emb);
  CHECK(snapshot(r.model, "layer.1") != l1);
  CHECK(snapshot(r.model, "head") != head);
  CHECK(r.optimizer.step == 2);
  CHECK_FALSE(r.fp16_active);
}

TEST_CASE("learning rate zero changes nothing") {
  TrainableModel m = load_encoder_backend("tiny-encoder:layers=2,vocab=128,positions=32", 3, 1);
  TrainConfig c = tiny_config();
  c.learning_rate = 0.0;
  TrainOptions opts;
  opts.tokenizer.max_length = 32;
  const TrainResult r = train(m, FreezePlan::none(2), small_corpus(24), {}, c, opts);
  CHECK(std::equal(m.params().begin(), m.params().end(), r.model.params().begin()));
}

TEST_CASE("checkpoints, history and resume") {
  TempDir tmp("train");
  const Corpus tr = small_corpus(30), val = small_corpus(9);
  TrainableModel m = load_encoder_backend("tiny-encoder:layers=2,vocab=128,positions=32", 3, 2);
  TrainOptions opts;
  opts.tokenizer.max_length = 32;
  opts.tokenizer.vocab_size = 128;
  opts.out_dir = tmp.path / "full";
  const TrainResult full = train(m, FreezePlan::parse("custom:0", 2), tr, val, tiny_config(), opts);
  REQUIRE(full.history.epochs.size() == 2);
  CHECK(full.history.epochs[0].epoch == 1);
  CHECK(full.history.epochs[1].epoch == 2);
  CHECK(full.history.epochs[1].global_step > full.history.epochs[0].global_step);
  CHECK(full.history.epochs[0].eval.has_value());
  CHECK(std::filesystem::exists(tmp.path / "full" / "checkpoint-epoch-1" / "optimizer.bin"));
  CHECK(std::filesystem::exists(tmp.path / "full" / "checkpoint-epoch-2" / "freeze_plan.json"));
  {
    std::ifstream h(tmp.path / "full" / "history.jsonl");
    std::size_t lines = 0;
    for (std::string s; std::getline(h, s);) lines += !s.empty();
    CHECK(lines == 2);
  }

  // Resuming the same run after epoch 1 reproduces epoch 2 bit for bit.
  ResumeState st = resume(tmp.path / "full" / "checkpoint-epoch-1");
  CHECK(st.completed_epochs == 1);
  CHECK(st.plan == FreezePlan::parse("custom:0", 2));
  CHECK(st.config == tiny_config());
  TrainOptions ro = opts;
  ro.out_dir = tmp.path / "resumed";
  ro.start_epoch = st.completed_epochs;
  ro.optimizer = st.optimizer;
  ro.tokenizer = st.tokenizer;
  const TrainResult resumed = train(st.model, st.plan, tr, val, st.config, ro);
  REQUIRE(resumed.history.epochs.size() == 1);
  CHECK(resumed.history.epochs[0].epoch == 2);
  CHECK(std::equal(full.model.params().begin(), full.model.params().end(), resumed.model.params().begin()));

  // Missing or corrupt sidecars.
  std::filesystem::remove(tmp.path / "resumed" / "checkpoint-epoch-2" / "optimizer.bin");
  CHECK_THROWS_AS(resume(tmp.path / "resumed" / "checkpoint-epoch-2"), CheckpointError);
  testutil::spit(tmp.path / "full" / "checkpoint-epoch-1" / "trainer_state.json", "{oops");
  CHECK_THROWS_AS(resume(tmp.path / "full" / "checkpoint-epoch-1"), CheckpointError);
  CHECK_THROWS_AS(resume(tmp.path / "nowhere"), CheckpointError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const TrainableModel m = load_encoder_backend("tiny-encoder:layers=1,vocab=64,positions=32", 3, 4);
  TrainOptions opts;
  opts.tokenizer.max_length = 32;
  const TrainResult a = train(m, FreezePlan::none(1), small_corpus(20), {}, tiny_config(), opts);
  const TrainResult b = train(m, FreezePlan::none(1), small_corpus(20), {}, tiny_config(), opts);
  CHECK(std::equal(a.model.params().begin(), a.model.params().end(), b.model.params().begin()));
  TrainConfig other = tiny_config();
  other.seed = 43;
  const TrainResult c = train(m, FreezePlan::none(1), small_corpus(20), {}, other, opts);
  CHECK_FALSE(std::equal(a.model.params().begin(), a.model.params().end(), c.model.params().begin()));
}

TEST_CASE("training learns a separable toy task") {
  const TrainableModel m = load_encoder_backend("tiny-encoder:layers=1,vocab=256,positions=32", 3, 4);
  TrainConfig c = tiny_config();
  c.epochs = 30;
  c.learning_rate = 2e-2;
  TrainOptions opts;
  opts.tokenizer.max_length = 32;
  const Corpus data = small_corpus(30);
  const TrainResult r = train(m, FreezePlan::none(1), data, data, c, opts);
  CHECK(r.history.epochs.back().train_loss < r.history.epochs.front().train_loss);
  CHECK(r.history.epochs.back().eval->overall.accuracy >= 0.9);
}
