#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "mlsent/backend.hpp"
#include "mlsent/error.hpp"
#include "mlsent/limex.hpp"
#include "oracles.hpp"

using namespace mlsent;
using namespace mlsent::limex;

namespace {

MaskMatrix random_masks(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  MaskMatrix m;
  m.rows = rows;
  m.cols = cols;
  std::bernoulli_distribution b(0.6);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data.push_back(b(rng));
  return m;
}

}  // namespace

TEST_CASE("interpretable tokens keep byte positions") {
  const InterpretableText it = interpret_tokens("  The  cat 不良品!");
  REQUIRE(it.size() == 6);
  CHECK(it.tokens[0] == "the");
  CHECK(it.original.substr(it.positions[0].begin, it.positions[0].size()) == "The");
  CHECK(it.tokens[2] == "不");
  CHECK(it.tokens[5] == "!");
  CHECK_THROWS_AS(interpret_tokens(" \t "), ArgumentError);
  CHECK_THROWS_AS(interpret_tokens(""), ArgumentError);
}

TEST_CASE("reconstruction joins kept tokens") {
  const InterpretableText it = interpret_tokens("The  cat sat 不良品");
  CHECK(it.reconstruct(std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1}) == "The cat sat 不良品");
  CHECK(it.reconstruct(std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1}) == "The sat 不品");
  CHECK(it.reconstruct(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1}) == "品");
  CHECK(it.reconstruct(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0}).empty());
  CHECK_THROWS_AS(it.reconstruct(std::vector<std::uint8_t>{1}), ArgumentError);
}

TEST_CASE("full enumeration order") {
  const MaskMatrix m = sample_masks(3, LimeConfig{});
  REQUIRE(m.rows == 8);
  const std::vector<std::uint8_t> expect{1, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0,
                                         0, 1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  CHECK(m.data == expect);
}

TEST_CASE("sampled masks") {
  LimeConfig cfg;
  cfg.n_samples = 400;
  cfg.seed = 9;
  const MaskMatrix m = sample_masks(20, cfg);
  REQUIRE(m.rows == 400);
  for (auto b : m.row(0)) CHECK(b == 1);
  std::size_t all_removed = 0;
  for (std::size_t r = 1; r < m.rows; ++r) {
    std::size_t kept = 0;
    for (auto b : m.row(r)) kept += b;
    CHECK(kept < 20);
    all_removed += kept == 0;
  }
  // Removal count uniform on [1, 20]: roughly 1 in 20 rows drop everything.
  CHECK(all_removed > 5);
  CHECK(all_removed < 45);
  CHECK(sample_masks(20, cfg).data == m.data);
  cfg.seed = 10;
  CHECK(sample_masks(20, cfg).data != m.data);
}

TEST_CASE("proximity kernel values") {
  CHECK(proximity(std::vector<std::uint8_t>{1, 1, 1, 1}, 0.25) == 1.0);
  // One of four kept: cos = 1/2, D = 1/2 -> exp(-0.25 / 0.0625) = exp(-4).
  CHECK(proximity(std::vector<std::uint8_t>{0, 1, 0, 0}, 0.25) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(proximity(std::vector<std::uint8_t>{0, 0, 0}, 0.25) == doctest::Approx(std::exp(-16.0)).epsilon(1e-14));
  CHECK_THROWS_AS(proximity(std::vector<std::uint8_t>{1}, 0.0), ArgumentError);
}

TEST_CASE("ridge fit matches the Eigen oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t p = 1 + trial % 9, n = 40 + trial;
    const MaskMatrix z = random_masks(rng, n, p);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = u(rng);
      w[i] = 0.05 + u(rng);
    }
    for (double lambda : {0.0, 0.5, 3.0}) {
      const SurrogateFit f = fit_surrogate(z, y, w, lambda);
      const auto o = oracle::eigen_wls(z, y, w, lambda);
      bool any_degenerate = false;
      for (bool d : f.degenerate) any_degenerate = any_degenerate || d;
      if (any_degenerate) continue;  // oracle returns the min-norm solution instead
      CHECK(std::abs(f.intercept - o.intercept) <= 1e-9);
      for (std::size_t j = 0; j < p; ++j) CHECK(std::abs(f.coefficients[j] - o.coefficients[j]) <= 1e-9);
      CHECK(f.r2 <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("constant target, constant and duplicate columns") {
  MaskMatrix z;
  z.rows = 6;
  z.cols = 3;
  // col 0 varies, col 1 is always on, col 2 duplicates col 0.
  z.data = {1, 1, 1, 0, 1, 0, 1, 1, 1, 0, 1, 0, 1, 1, 1, 0, 1, 0};
  const std::vector<double> w(6, 1.0);
  const SurrogateFit c = fit_surrogate(z, std::vector<double>(6, 0.4), w, 0.0);
  CHECK(c.constant_target);
  CHECK(c.r2 == 1.0);
  CHECK(c.intercept == doctest::Approx(0.4).epsilon(1e-15));
  for (double b : c.coefficients) CHECK(b == 0.0);

  const std::vector<double> y{1.0, 0.2, 1.0, 0.2, 1.0, 0.2};
  const SurrogateFit f = fit_surrogate(z, y, w, 0.0);
  CHECK(f.degenerate == std::vector<bool>{false, true, true});
  CHECK(f.coefficients[0] == doctest::Approx(0.8));
  CHECK(f.coefficients[1] == 0.0);
  CHECK(f.coefficients[2] == 0.0);
  CHECK(f.intercept == doctest::Approx(0.2));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("fit input validation") {
  MaskMatrix z;
  z.rows = 3;
  z.cols = 1;
  z.data = {1, 0, 1};
  const std::vector<double> y{1, 0, 1};
  CHECK_THROWS_AS(fit_surrogate(z, y, std::vector<double>{1, 1}, 0.0), ArgumentError);
  CHECK_THROWS_AS(fit_surrogate(z, y, std::vector<double>{1, 0, 0}, 0.0), ArgumentError);
  CHECK_THROWS_AS(fit_surrogate(z, y, std::vector<double>{1, -1, 1}, 0.0), ArgumentError);
  CHECK_THROWS_AS(fit_surrogate(z, y, std::vector<double>{1, 1, 1}, -1.0), ArgumentError);
}

TEST_CASE("exact recovery of an affine probe") {
  std::vector<double> beta{0.05, -0.02, 0.0, 0.03};
  const ClassifierProbe probe = oracle::affine_probe(0.4, beta, Label::neutral);
  LimeConfig cfg;
  cfg.ridge_lambda = 0.0;
  const Explanation ex = explain(probe, "w0 w1 w2 w3", Label::neutral, cfg);
  CHECK(ex.samples == 16);
  CHECK(ex.surrogate_r2 >= 1.0 - 1e-9);
  CHECK(ex.intercept == doctest::Approx(0.4).epsilon(1e-10));
  REQUIRE(ex.attributions.size() == 4);
  CHECK(ex.attributions[0].token == "w0");
  CHECK(ex.attributions[1].token == "w3");
  CHECK(ex.attributions[2].token == "w1");
  CHECK(ex.attributions[3].token == "w2");
  CHECK(std::abs(ex.attributions[0].weight - 0.05) <= 1e-10);
  CHECK(std::abs(ex.attributions[3].weight) <= 1e-10);
}

TEST_CASE("explain with a lexicon probe") {
  const ClassifierProbe probe = lexicon_probe({"love"}, {"awful", "hate"}, {0, 0, 0}, 2.0);
  const Explanation ex = explain(probe, "I hate this awful movie", std::nullopt);
  CHECK(ex.target_class == Label::negative);
  REQUIRE(ex.attributions.size() == 5);
  // Both lexicon words lead with (near) equal positive weight.
  const std::set<std::string> top{ex.attributions[0].token, ex.attributions[1].token};
  CHECK(top == std::set<std::string>{"hate", "awful"});
  CHECK(ex.attributions[0].weight > 0.0);
  CHECK(ex.attributions[0].weight == doctest::Approx(ex.attributions[1].weight).epsilon(1e-9));
  for (const auto& a : ex.attributions) {
    if (a.token == "hate") {
      CHECK(a.start == 2);
      CHECK(a.end == 6);
    }
  }
  const ProbaRow full = probe.predict_one("I hate this awful movie");
  CHECK(ex.probe_probability == full[2]);

  LimeConfig cfg;
  cfg.top_k = 2;
  CHECK(explain(probe, "I hate this awful movie", Label::positive, cfg).attributions.size() == 2);
  CHECK(explain(probe, "I hate this awful movie", Label::positive, cfg).attributions[0].weight < 0.0);
}

TEST_CASE("neutral-only text under a lexicon probe is degenerate") {
  const ClassifierProbe probe = lexicon_probe({"love"}, {"hate"});
  const Explanation ex = explain(probe, "the train leaves at noon", Label::neutral);
  CHECK(ex.degenerate);
  CHECK(ex.surrogate_r2 == 1.0);
  for (const auto& a : ex.attributions) CHECK(std::abs(a.weight) <= 1e-9);
}

TEST_CASE("sampling mode is deterministic per seed") {
  const ClassifierProbe probe = lexicon_probe({"good"}, {"bad"});
  std::string text;
  for (int i = 0; i < 15; ++i) text += "w" + std::to_string(i) + " ";
  text += "bad";
  LimeConfig cfg;
  cfg.n_samples = 300;
  const Explanation a = explain(probe, text, Label::negative, cfg);
  const Explanation b = explain(probe, text, Label::negative, cfg);
  CHECK(a.samples == 300);
  CHECK(a.attributions == b.attributions);
  CHECK(a.attributions[0].token == "bad");
}

TEST_CASE("probe failures surface as ProbeError") {
  const ClassifierProbe broken("broken", [](std::span<const std::string> b) {
    return std::vector<ProbaRow>(b.size(), ProbaRow{0.9, 0.9, 0.9});
  });
  CHECK_THROWS_AS(explain(broken, "a b", Label::positive), ProbeError);
  LimeConfig bad;
  bad.kernel_width = 0.0;
  CHECK_THROWS_AS(explain(lexicon_probe({"a"}, {"b"}), "x y", Label::positive, bad), ArgumentError);
}
