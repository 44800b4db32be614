#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mlsent/backend.hpp"
#include "mlsent/error.hpp"
#include "mlsent/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mlsent;

namespace {

ConfusionMatrix random_matrix(std::mt19937_64& rng) {
  ConfusionMatrix cm;
  std::uniform_int_distribution<int> v(0, 9), coin(0, 4);
  do {
    for (auto& row : cm.counts)
      for (auto& x : row) x = v(rng);
    // Zero out whole rows/columns sometimes to exercise zero division.
    if (coin(rng) == 0) cm.counts[v(rng) % 3] = {0, 0, 0};
    if (coin(rng) == 0) {
      const int c = v(rng) % 3;
      for (auto& row : cm.counts) row[c] = 0;
    }
  } while (cm.total() == 0);
  return cm;
}

}  // namespace

TEST_CASE("hand-computed example") {
  using L = Label;
  const std::vector<L> t{L::positive, L::positive, L::neutral, L::negative, L::negative, L::negative};
  const std::vector<L> p{L::positive, L::neutral, L::neutral, L::negative, L::positive, L::negative};
  const Scores s = scores(confusion(t, p));
  CHECK(s.accuracy == doctest::Approx(4.0 / 6));
  CHECK(s.precision == doctest::Approx(2.0 / 3));
  CHECK(s.recall == doctest::Approx(13.0 / 18));
  CHECK(s.f1 == doctest::Approx(59.0 / 90));
  CHECK(s.per_class[2].f1 == doctest::Approx(0.8));
  CHECK(s.zero_division_warnings == 0);
}

TEST_CASE("scores match the brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const ConfusionMatrix cm = random_matrix(rng);
    const Scores s = scores(cm), o = oracle::brute_force_scores(cm);
    CHECK(std::abs(s.accuracy - o.accuracy) <= 1e-12);
    CHECK(std::abs(s.precision - o.precision) <= 1e-12);
    CHECK(std::abs(s.recall - o.recall) <= 1e-12);
    CHECK(std::abs(s.f1 - o.f1) <= 1e-12);
    CHECK(s.zero_division_warnings == o.zero_division_warnings);
    CHECK(s.accuracy == s.micro_precision);
    CHECK(s.accuracy == s.micro_recall);
    std::size_t support = 0;
    for (const auto& c : s.per_class) support += c.support;
    CHECK(support == s.n);
  }
}

TEST_CASE("permutation invariance") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> lab(0, 2);
  std::vector<Label> t(50), p(50);
  for (int i = 0; i < 50; ++i) {
    t[i] = label_at(lab(rng));
    p[i] = label_at(lab(rng));
  }
  const Scores a = scores(confusion(t, p));
  std::vector<int> idx(50);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Label> t2, p2;
  for (int i : idx) {
    t2.push_back(t[i]);
    p2.push_back(p[i]);
  }
  const Scores b = scores(confusion(t2, p2));
  CHECK(a.f1 == b.f1);
  CHECK(a.accuracy == b.accuracy);
}

TEST_CASE("degenerate inputs") {
  const std::vector<Label> one{Label::positive};
  CHECK_THROWS_AS(confusion(one, std::vector<Label>{}), ArgumentError);
  CHECK_THROWS_AS(confusion(std::vector<Label>{}, std::vector<Label>{}), ArgumentError);
  // Everything is positive: neutral/negative have 0/0 precision, recall and f1.
  const Scores s = scores(confusion(one, one));
  CHECK(s.accuracy == 1.0);
  CHECK(s.precision == doctest::Approx(1.0 / 3));
  CHECK(s.zero_division_warnings == 6);
}

TEST_CASE("evaluate with a lexicon probe") {
  const ClassifierProbe probe = lexicon_probe({"good"}, {"bad"});
  Corpus c;
  c.examples = {{"good day", Label::positive, "en"}, {"bad day", Label::negative, "en"},
                {"jour", Label::positive, "fr"},  // all logits tie -> positive
                {"good bad", Label::neutral, "fr"}};  // tie again -> positive, wrong
  const EvalReport r = evaluate(probe, c, 3);
  CHECK(r.n == 4);
  CHECK(r.overall.accuracy == 0.75);
  CHECK(r.per_language.size() == 2);
  CHECK(r.per_language.at("en").accuracy == 1.0);
  CHECK(r.per_language.at("fr").accuracy == 0.5);
  CHECK(r.confusion.counts[1][0] == 1);
  CHECK(r.averaging == "macro");
  CHECK_THROWS_AS(evaluate(probe, Corpus{}), EmptyInputError);

  const ClassifierProbe broken("broken", [](std::span<const std::string>) { return std::vector<ProbaRow>{}; });
  try {
    evaluate(broken, c, 2);
    FAIL("expected ProbeError");
  } catch (const ProbeError& e) {
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

TEST_CASE("report json round trip") {
  const ClassifierProbe probe = lexicon_probe({"good"}, {"bad"});
  Corpus c;
  c.examples = {{"good", Label::positive, "en"}, {"bad", Label::neutral, "ja"}};
  const EvalReport r = evaluate(probe, c);
  const EvalReport back = parse_report_json(report_json(r));
  CHECK(back.overall.f1 == r.overall.f1);
  CHECK(back.confusion == r.confusion);
  CHECK(back.per_language.size() == 2);
  CHECK(report_json(back) == report_json(r));
  CHECK_THROWS_AS(parse_report_json("[]"), ValidationError);
}

TEST_CASE("comparison table rows") {
  Scores s;
  s.accuracy = 0.923;
  s.precision = 0.93;
  s.recall = 0.90;
  s.f1 = 0.91;
  CHECK(comparison_row("XLM-RoBERTa-base (Frozen)", s) == "XLM-RoBERTa-base (Frozen) 92.30% 0.93 0.90 0.91");

  EvalReport a, b;
  a.overall = s;
  b.overall = s;
  const ComparisonTable t = comparison_table({{"first", a}, {"second", b}});
  CHECK(t.text.find("first") < t.text.find("second"));
  CHECK(t.markdown.find("| first | 92.30% | 0.93 | 0.90 | 0.91 |") != std::string::npos);
  const auto j = nlohmann::json::parse(t.json);
  CHECK(j["rows"].size() == 2);
  CHECK(j["averaging"] == "macro");
  const ComparisonTable single = comparison_table({{"only", a}});
  CHECK(std::count(single.text.begin(), single.text.end(), '\n') == 1);
}
