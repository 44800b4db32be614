#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "mlsent/backend.hpp"
#include "mlsent/checkpoint.hpp"
#include "mlsent/error.hpp"
#include "test_util.hpp"

using namespace mlsent;
using testutil::TempDir;

TEST_CASE("freeze plan parsing") {
  const FreezePlan p8 = FreezePlan::parse("first8", 12);
  CHECK(p8 == FreezePlan::reference_default());
  CHECK(p8.frozen_layer_indices.size() == 8);
  CHECK(p8.freeze_embeddings);
  CHECK_FALSE(p8.freeze_head);
  CHECK(FreezePlan::parse("none", 12).frozen_layer_indices.empty());
  CHECK_FALSE(FreezePlan::parse("none", 12).freeze_embeddings);

  const FreezePlan c = FreezePlan::parse("custom:0-2,5", 12);
  CHECK(c.frozen_layer_indices == std::set<std::size_t>{0, 1, 2, 5});
  CHECK(c.freeze_embeddings);
  CHECK_FALSE(FreezePlan::parse("custom:4-5", 12).freeze_embeddings);
  CHECK(FreezePlan::parse("custom:4;embeddings=on", 12).freeze_embeddings);
  CHECK(FreezePlan::parse("custom:0-11;head=on", 12).freeze_head);

  CHECK_THROWS_AS(FreezePlan::parse("first13", 12), ArgumentError);
  CHECK_THROWS_AS(FreezePlan::parse("custom:12", 12), ArgumentError);
  CHECK_THROWS_AS(FreezePlan::parse("custom:3-1", 12), ArgumentError);
  CHECK_THROWS_AS(FreezePlan::parse("last8", 12), ArgumentError);
  CHECK_THROWS_AS(FreezePlan::parse("custom:1;colour=on", 12), ArgumentError);
}

TEST_CASE("to_spec round-trips through parse") {
  for (const char* spec : {"none", "first8", "first1", "custom:2,4", "custom:0-3;embeddings=off",
                           "custom:0-11;head=on", "custom:;embeddings=on"}) {
    const FreezePlan p = FreezePlan::parse(spec, 12);
    CAPTURE(spec);
    CHECK(FreezePlan::parse(p.to_spec(), 12) == p);
  }
  CHECK(FreezePlan::parse("custom:0-7", 12).to_spec() == "first8");
}

TEST_CASE("parameter counts for the desk encoder") {
  // d=16, f=32: per layer 4(d^2+d) + 2fd + f + d = 1088 + 1024 + 48 = 2160;
  // embeddings 4096*16 + 128*16 = 67584; head 3*16 + 3 = 51.
  const EncoderArch desk;
  TrainableModel m("tiny-encoder", desk);
  CHECK(m.total_param_count() == 67584 + 12 * 2160 + 51);
  const FreezeSummary s = apply_freeze_plan(m, FreezePlan::reference_default());
  CHECK(s.frozen_param_count == 67584 + 8 * 2160);
  CHECK(s.trainable_param_count == 4 * 2160 + 51);
  CHECK(m.trainable_param_count() == s.trainable_param_count);
  CHECK(count_freeze(desk, FreezePlan::reference_default()) == s);
  // Idempotent.
  CHECK(apply_freeze_plan(m, FreezePlan::reference_default()) == s);
  CHECK(apply_freeze_plan(m, FreezePlan::none(12)).frozen_param_count == 0);

  FreezePlan all = FreezePlan::first_n(12, 12);
  all.freeze_head = true;
  CHECK(apply_freeze_plan(m, all).trainable_param_count == 0);
  CHECK_THROWS_AS(apply_freeze_plan(m, FreezePlan::first_n(6, 2)), ArgumentError);
}

TEST_CASE("reference encoders freeze more than they train") {
  for (const char* id : {"bert-base-multilingual-cased", "roberta-base", "xlm-roberta-base"}) {
    const auto arch = describe_backend(id);
    REQUIRE(arch);
    CHECK(arch->layers == 12);
    CHECK(arch->hidden == 768);
    const FreezeSummary s = count_freeze(*arch, FreezePlan::reference_default());
    CHECK(s.frozen_param_count > s.trainable_param_count);
    CHECK(is_reference_backend(id));
  }
  CHECK(describe_backend("xlm-roberta-base")->vocab_size == 250002);
  CHECK_FALSE(describe_backend("gpt-17"));
}

TEST_CASE("tiny encoder descriptor options") {
  const auto a = describe_backend("tiny-encoder:layers=2,hidden=8,ffn=4,vocab=64,positions=16");
  REQUIRE(a);
  CHECK(*a == EncoderArch{64, 8, 4, 2, 16, 3});
  CHECK_THROWS_AS(describe_backend("tiny-encoder:depth=3"), ArgumentError);
}

TEST_CASE("backend loading errors") {
  TempDir cache("cache");
  setenv("MLSENT_CACHE_DIR", cache.path.c_str(), 1);
  CHECK_THROWS_AS(load_encoder_backend("no-such-model", 3), LoadError);
  CHECK_THROWS_AS(load_encoder_backend("xlm-roberta-base", 3), LoadError);
  CHECK_THROWS_AS(load_encoder_backend("tiny-encoder", 4), ArgumentError);
  const TrainableModel m = load_encoder_backend("tiny-encoder:layers=3", 3, 1);
  CHECK(m.arch().layers == 3);
  unsetenv("MLSENT_CACHE_DIR");
}

TEST_CASE("initialization is seeded") {
  const TrainableModel a = load_encoder_backend("tiny-encoder:layers=1", 3, 5);
  const TrainableModel b = load_encoder_backend("tiny-encoder:layers=1", 3, 5);
  const TrainableModel c = load_encoder_backend("tiny-encoder:layers=1", 3, 6);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  CHECK_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
  CHECK(std::all_of(a.group_params("head").begin() + 3 * 16, a.group_params("head").end(),
                    [](double v) { return v == 0.0; }));
}

TEST_CASE("lexicon probe is analytically predictable") {
  const ClassifierProbe p = lexicon_probe({"good", "great"}, {"bad"}, {0, 0, 0}, 2.0);
  const auto rows = p.predict_proba(std::vector<std::string>{"Good good day", "bad", "nothing here"});
  // Two positive hits: logits (4, 0, 0).
  const double e4 = std::exp(4.0);
  CHECK(rows[0][0] == doctest::Approx(e4 / (e4 + 2)).epsilon(1e-12));
  CHECK(argmax(rows[1]) == index_of(Label::negative));
  // All logits tie: lowest index wins.
  CHECK(argmax(rows[2]) == 0);
  CHECK_THROWS_AS(lexicon_probe({"x"}, {"X"}), ArgumentError);
}

TEST_CASE("probe output validation") {
  auto make = [](ProbaRow r, std::size_t n) {
    return ClassifierProbe("bad", [=](std::span<const std::string> b) {
      return std::vector<ProbaRow>(n == 0 ? b.size() : n, r);
    });
  };
  const std::vector<std::string> batch{"a", "b"};
  CHECK_NOTHROW(make({0.2, 0.3, 0.5}, 0).predict_proba(batch));
  CHECK_THROWS_AS(make({0.2, 0.3, 0.5}, 1).predict_proba(batch), ProbeError);
  CHECK_THROWS_AS(make({0.2, 0.3, 0.6}, 0).predict_proba(batch), ProbeError);
  CHECK_THROWS_AS(make({-0.1, 0.6, 0.5}, 0).predict_proba(batch), ProbeError);
  CHECK_THROWS_AS(make({NAN, 0.5, 0.5}, 0).predict_proba(batch), ProbeError);
}

TEST_CASE("with_cleaning applies the cleaner before the probe") {
  const ClassifierProbe inner("echo", [](std::span<const std::string> b) {
    std::vector<ProbaRow> out;
    for (const auto& t : b) out.push_back(t == "great" ? ProbaRow{1, 0, 0} : ProbaRow{0, 0, 1});
    return out;
  });
  CHECK(with_cleaning(inner).predict_one("GREAT!!! @you") == ProbaRow{1, 0, 0});
}

TEST_CASE("model directory round trip and probe capability checks") {
  TempDir tmp("model");
  TrainableModel m = load_encoder_backend("tiny-encoder:layers=2,vocab=64,positions=16", 3, 3);
  apply_freeze_plan(m, FreezePlan::first_n(2, 1));
  TokenizerSettings tok;
  tok.max_length = 16;
  save_model(m, tok, tmp.path / "m");
  CHECK(looks_like_model_dir(tmp.path / "m"));
  const LoadedModel back = load_model(tmp.path / "m");
  CHECK(back.model.arch() == m.arch());
  CHECK(std::equal(m.params().begin(), m.params().end(), back.model.params().begin()));
  CHECK(back.tokenizer.max_length == 16);
  CHECK(back.model.group("layer.0").trainable == false);

  const TrainableModel via = load_encoder_backend((tmp.path / "m").string(), 3);
  CHECK(std::equal(m.params().begin(), m.params().end(), via.params().begin()));

  TokenizerSettings too_long = tok;
  too_long.max_length = 32;
  CHECK_THROWS_AS(probe_from_model(m, too_long), CapabilityError);
  TokenizerSettings wrong_vocab = tok;
  wrong_vocab.vocab_size = 99;
  CHECK_THROWS_AS(probe_from_model(m, wrong_vocab), CapabilityError);

  const ClassifierProbe p = probe_from_model(m, tok);
  const auto rows = p.predict_proba(std::vector<std::string>{"hello world", ""});
  CHECK(rows.size() == 2);

  // Corruption is detected.
  const auto w = tmp.path / "m" / "weights.bin";
  std::string bytes = testutil::slurp(w);
  bytes[bytes.size() / 2] ^= 0x5A;
  testutil::spit(w, bytes);
  CHECK_THROWS_AS(load_model(tmp.path / "m"), CheckpointError);
  CHECK_THROWS_AS(load_model(tmp.path / "nothing"), LoadError);
}
