#include <doctest.h>

#include <cmath>
#include <random>

#include "mlsent/backend.hpp"
#include "mlsent/encoder.hpp"

using namespace mlsent;

namespace {

double loss_of(const TrainableModel& m, std::span<const std::int32_t> ids, Label y) {
  const ProbaRow p = softmax(encoder::logits(m, ids));
  return -std::log(p[index_of(y)]);
}

TrainableModel toy(std::uint64_t seed) {
  TrainableModel m("toy", EncoderArch{20, 4, 6, 2, 8, 3});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.4);
  for (double& p : m.params()) p = d(rng);
  return m;
}

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
  TrainableModel m = toy(11);
  const std::vector<std::int32_t> ids{3, 7, 7, 12, 19};
  for (Label y : kLabelOrder) {
    std::vector<double> grad(m.total_param_count(), 0.0);
    const double loss = encoder::accumulate_gradient(m, ids, y, 1.0, grad);
    CHECK(loss == doctest::Approx(loss_of(m, ids, y)).epsilon(1e-12));
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < m.total_param_count(); ++i) {
      const double keep = m.params()[i];
      m.params()[i] = keep + h;
      const double up = loss_of(m, ids, y);
      m.params()[i] = keep - h;
      const double down = loss_of(m, ids, y);
      m.params()[i] = keep;
      const double fd = (up - down) / (2 * h);
      // Mixed tolerance: absolute near zero, relative elsewhere.
      worst = std::max(worst, std::abs(fd - grad[i]) / (1e-4 + std::abs(fd) + std::abs(grad[i])));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("gradient scale and accumulation") {
  TrainableModel m = toy(5);
  const std::vector<std::int32_t> ids{2, 3};
  std::vector<double> g1(m.total_param_count(), 0.0), g2(m.total_param_count(), 0.0);
  encoder::accumulate_gradient(m, ids, Label::negative, 1.0, g1);
  encoder::accumulate_gradient(m, ids, Label::negative, 0.25, g2);
  encoder::accumulate_gradient(m, ids, Label::negative, 0.25, g2);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(0.5 * g1[i]).epsilon(1e-12));
}

TEST_CASE("frozen groups receive no gradient") {
  TrainableModel m = toy(9);
  apply_freeze_plan(m, FreezePlan::parse("custom:0", 2));
  std::vector<double> g(m.total_param_count(), 0.0);
  encoder::accumulate_gradient(m, std::vector<std::int32_t>{4, 5, 6}, Label::positive, 1.0, g);
  for (const auto& grp : m.groups()) {
    double mag = 0.0;
    for (std::size_t i = grp.offset; i < grp.offset + grp.size; ++i) mag += std::abs(g[i]);
    CAPTURE(grp.name);
    if (grp.trainable) CHECK(mag > 0.0);
    else CHECK(mag == 0.0);
  }
}

TEST_CASE("layout covers the parameter vector exactly") {
  const EncoderArch a{20, 4, 6, 2, 8, 3};
  const auto lay = encoder::layout(a);
  CHECK(lay.total == TrainableModel("x", a).total_param_count());
  CHECK(lay.head_bias + 3 == lay.total);
  // Per layer: 4(d^2 + d) + f d + f + d f + d = 64 + 16 + 24 + 6 + 24 + 4 = 138.
  CHECK(lay.layers[1].wq - lay.layers[0].wq == 138);
}

TEST_CASE("empty input still produces finite logits") {
  TrainableModel m = toy(1);
  const ProbaRow l = encoder::logits(m, std::vector<std::int32_t>{});
  for (double v : l) CHECK(std::isfinite(v));
}
