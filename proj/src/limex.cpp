#include "mlsent/limex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlsent/error.hpp"
#include "mlsent/random.hpp"
#include "mlsent/simd/kernels.hpp"

namespace mlsent::limex {

std::string InterpretableText::reconstruct(std::span<const std::uint8_t> mask) const {
  if (mask.size() != tokens.size()) throw ArgumentError("mask length does not match token count");
  std::string out;
  std::size_t prev_end = 0;
  bool any = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!mask[i]) continue;
    const unicode::Span& s = positions[i];
    if (any) {
      bool spaced = false;
      for (std::size_t k = prev_end; k < s.begin && !spaced;) {
        const auto cp = unicode::decode(original, k);
        spaced = unicode::is_whitespace(cp.value);
        k += cp.length;
      }
      if (spaced) out += ' ';
    }
    out.append(original, s.begin, s.size());
    prev_end = s.end;
    any = true;
  }
  return out;
}

InterpretableText interpret_tokens(std::string_view text, const unicode::Segmenter& segmenter) {
  InterpretableText it;
  it.original = std::string(text);
  it.positions = unicode::split_units(it.original, segmenter);
  if (it.positions.empty()) throw ArgumentError("cannot explain empty or whitespace-only text");
  it.tokens.reserve(it.positions.size());
  for (const auto& s : it.positions) it.tokens.push_back(unicode::fold_case(it.original.substr(s.begin, s.size())));
  return it;
}

void LimeConfig::validate() const {
  if (n_samples < 10) throw ArgumentError("n_samples must be at least 10");
  if (!(kernel_width > 0.0)) throw ArgumentError("kernel width must be positive");
  if (!(ridge_lambda >= 0.0)) throw ArgumentError("ridge lambda must be non-negative");
  if (top_k < 1) throw ArgumentError("top_k must be at least 1");
  if (batch_size < 1) throw ArgumentError("batch size must be positive");
  if (enumerate_threshold > 24) throw ArgumentError("enumerate_threshold above 24 is not supported");
}

MaskMatrix sample_masks(std::size_t n_tokens, const LimeConfig& config) {
  if (n_tokens == 0) throw ArgumentError("need at least one token");
  MaskMatrix m;
  m.cols = n_tokens;
  if (n_tokens <= config.enumerate_threshold) {
    // Row r encodes v = 2^n - 1 - r; token i is kept iff bit (n - 1 - i) of v is set.
    m.rows = std::size_t{1} << n_tokens;
    m.data.assign(m.rows * m.cols, 0);
    for (std::size_t r = 0; r < m.rows; ++r) {
      const std::size_t v = m.rows - 1 - r;
      for (std::size_t i = 0; i < n_tokens; ++i) m.data[r * m.cols + i] = (v >> (n_tokens - 1 - i)) & 1U;
    }
    return m;
  }
  m.rows = config.n_samples;
  m.data.assign(m.rows * m.cols, 1);
  Rng rng(config.seed);
  std::vector<std::size_t> idx(n_tokens);
  for (std::size_t r = 1; r < m.rows; ++r) {
    const std::size_t remove = 1 + rng.uniform_index(n_tokens);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `remove` entries are a uniform subset.
    for (std::size_t k = 0; k < remove; ++k) {
      const std::size_t j = k + rng.uniform_index(n_tokens - k);
      std::swap(idx[k], idx[j]);
      m.data[r * m.cols + idx[k]] = 0;
    }
  }
  return m;
}

double proximity(std::span<const std::uint8_t> mask, double sigma) {
  if (mask.empty()) throw ArgumentError("mask is empty");
  if (!(sigma > 0.0)) throw ArgumentError("kernel width must be positive");
  std::size_t kept = 0;
  for (auto b : mask) kept += b ? 1 : 0;
  double distance = 1.0;
  if (kept > 0) {
    const double k = static_cast<double>(kept);
    distance = 1.0 - k / std::sqrt(static_cast<double>(mask.size()) * k);
  }
  return std::exp(-(distance * distance) / (sigma * sigma));
}

SurrogateFit fit_surrogate(const MaskMatrix& masks, std::span<const double> targets,
                           std::span<const double> weights, double lambda) {
  const std::size_t rows = masks.rows;
  const std::size_t p = masks.cols;
  if (targets.size() != rows || weights.size() != rows) throw ArgumentError("masks, targets and weights differ in length");
  if (rows < 2) throw ArgumentError("need at least two samples");
  if (!(lambda >= 0.0)) throw ArgumentError("ridge lambda must be non-negative");
  std::size_t positive = 0;
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be finite and non-negative");
    if (w > 0.0) ++positive;
    wsum += w;
  }
  if (positive < 2) throw ArgumentError("need at least two strictly positive weights");

  const auto& K = simd::active();
  SurrogateFit fit;
  fit.coefficients.assign(p, 0.0);
  fit.degenerate.assign(p, false);

  std::vector<double> mean(p, 0.0);
  double ybar = 0.0;
  std::vector<double> z(p);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = masks.row(i);
    for (std::size_t j = 0; j < p; ++j) z[j] = row[j];
    K.axpy(weights[i], z.data(), mean.data(), p);
    ybar += weights[i] * targets[i];
  }
  for (double& m : mean) m /= wsum;
  ybar /= wsum;

  // Weighted Gram matrix and right-hand side of the centred system.
  std::vector<double> gram(p * p, 0.0);
  std::vector<double> rhs(p, 0.0);
  double sst = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (weights[i] == 0.0) continue;
    const auto row = masks.row(i);
    for (std::size_t j = 0; j < p; ++j) z[j] = static_cast<double>(row[j]) - mean[j];
    const double dy = targets[i] - ybar;
    K.ger(weights[i], z.data(), p, z.data(), p, gram.data());
    K.axpy(weights[i] * dy, z.data(), rhs.data(), p);
    sst += weights[i] * dy * dy;
  }

  const double yscale = std::max(1.0, std::abs(ybar));
  if (sst <= 1e-24 * wsum * yscale * yscale) {
    fit.constant_target = true;
    fit.intercept = ybar;
    fit.r2 = 1.0;
    for (std::size_t j = 0; j < p; ++j) fit.degenerate[j] = gram[j * p + j] <= 1e-12 * wsum;
    return fit;
  }

  // Active features: those with weighted variance.
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < p; ++j) {
    if (gram[j * p + j] <= 1e-12 * wsum) {
      fit.degenerate[j] = true;
    } else {
      active.push_back(j);
    }
  }
  const std::size_t q = active.size();
  std::vector<double> a(q * q);
  std::vector<double> b(q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t c = 0; c < q; ++c) a[r * q + c] = gram[active[r] * p + active[c]];
    a[r * q + r] += lambda;
    b[r] = rhs[active[r]];
  }

  // Cholesky; a column whose residual pivot vanishes is linearly dependent on
  // earlier columns and is dropped (coefficient 0).
  std::vector<double> l(q * q, 0.0);
  std::vector<bool> dropped(q, false);
  for (std::size_t j = 0; j < q; ++j) {
    double diag = a[j * q + j];
    for (std::size_t k = 0; k < j; ++k) diag -= l[j * q + k] * l[j * q + k];
    if (diag <= 1e-10 * a[j * q + j]) {
      dropped[j] = true;
      fit.degenerate[active[j]] = true;
      continue;
    }
    const double ljj = std::sqrt(diag);
    l[j * q + j] = ljj;
    for (std::size_t i = j + 1; i < q; ++i) {
      double s = a[i * q + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * q + k] * l[j * q + k];
      l[i * q + j] = s / ljj;
    }
  }
  auto solve = [&](std::vector<double> v) {
    for (std::size_t i = 0; i < q; ++i) {
      if (dropped[i]) {
        v[i] = 0.0;
        continue;
      }
      double s = v[i];
      for (std::size_t k = 0; k < i; ++k) s -= l[i * q + k] * v[k];
      v[i] = s / l[i * q + i];
    }
    for (std::size_t i = q; i-- > 0;) {
      if (dropped[i]) {
        v[i] = 0.0;
        continue;
      }
      double s = v[i];
      for (std::size_t k = i + 1; k < q; ++k) s -= l[k * q + i] * v[k];
      v[i] = s / l[i * q + i];
    }
    return v;
  };
  std::vector<double> beta = solve(b);
  // Iterative refinement on the normal equations.
  std::vector<double> resid(q);
  for (int round = 0; round < 3; ++round) {
    double rmax = 0.0;
    double bmax = 0.0;
    for (std::size_t r = 0; r < q; ++r) {
      if (dropped[r]) {
        resid[r] = 0.0;
        continue;
      }
      double s = b[r];
      for (std::size_t c = 0; c < q; ++c) s -= a[r * q + c] * beta[c];
      resid[r] = s;
      rmax = std::max(rmax, std::abs(s));
      bmax = std::max(bmax, std::abs(b[r]));
    }
    if (rmax <= 1e-14 * std::max(1.0, bmax)) break;
    const std::vector<double> delta = solve(resid);
    for (std::size_t r = 0; r < q; ++r) beta[r] += delta[r];
  }
  for (std::size_t r = 0; r < q; ++r) fit.coefficients[active[r]] = beta[r];

  fit.intercept = ybar - K.dot(fit.coefficients.data(), mean.data(), p);
  double sse = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = masks.row(i);
    double pred = fit.intercept;
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j]) pred += fit.coefficients[j];
    }
    const double e = targets[i] - pred;
    sse += weights[i] * e * e;
  }
  fit.r2 = 1.0 - sse / sst;
  return fit;
}

Explanation explain(const ClassifierProbe& probe, std::string_view text, std::optional<Label> target,
                    const LimeConfig& config) {
  config.validate();
  const InterpretableText it = interpret_tokens(text, config.segmenter);
  const MaskMatrix masks = sample_masks(it.size(), config);

  Explanation ex;
  ex.text = it.original;
  const ProbaRow original = probe.predict_one(it.original);
  ex.target_class = target.value_or(label_at(argmax(original)));
  const std::size_t cls = index_of(ex.target_class);
  ex.probe_probability = original[cls];

  std::vector<double> y(masks.rows);
  std::vector<double> w(masks.rows);
  std::vector<std::string> batch;
  for (std::size_t start = 0; start < masks.rows; start += config.batch_size) {
    const std::size_t stop = std::min(masks.rows, start + config.batch_size);
    batch.clear();
    for (std::size_t r = start; r < stop; ++r) batch.push_back(it.reconstruct(masks.row(r)));
    std::vector<ProbaRow> rows;
    try {
      rows = probe.predict_proba(batch);
    } catch (const Error& e) {
      throw ProbeError("explaining perturbations " + std::to_string(start) + ".." +
                       std::to_string(stop - 1) + ": " + e.what());
    }
    for (std::size_t r = start; r < stop; ++r) {
      y[r] = rows[r - start][cls];
      w[r] = proximity(masks.row(r), config.kernel_width);
    }
  }

  const SurrogateFit fit = fit_surrogate(masks, y, w, config.ridge_lambda);
  ex.intercept = fit.intercept;
  ex.surrogate_r2 = fit.r2;
  ex.degenerate = fit.constant_target;
  ex.samples = masks.rows;

  std::vector<std::size_t> order(it.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(fit.coefficients[a]) > std::abs(fit.coefficients[b]);
  });
  const std::size_t keep = std::min(config.top_k, order.size());
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t i = order[k];
    ex.attributions.push_back({it.tokens[i], it.positions[i].begin, it.positions[i].end, fit.coefficients[i]});
  }
  return ex;
}

}  // namespace mlsent::limex
