#include "mlsent/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mlsent/error.hpp"
#include "mlsent/simd/kernels.hpp"

namespace mlsent::encoder {
namespace {

constexpr double kGeluC = 0.044715;

double gelu(double u) {
  const double s = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * u * (1.0 + std::tanh(s * (u + kGeluC * u * u * u)));
}

double gelu_grad(double u) {
  const double s = std::sqrt(2.0 / std::numbers::pi);
  const double t = std::tanh(s * (u + kGeluC * u * u * u));
  return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * s * (1.0 + 3.0 * kGeluC * u * u);
}

struct LayerCache {
  std::vector<double> x, q, k, v, a, c, h, u, g;
};

struct ForwardState {
  std::vector<LayerCache> layers;
  std::vector<double> out;  // final token states, n x d
  std::vector<double> pooled;
  ProbaRow logits{};
};

void forward(const TrainableModel& model, const Layout& lay, std::span<const std::int32_t> ids,
             ForwardState& st, bool keep_cache) {
  const auto& arch = model.arch();
  const auto& K = simd::active();
  const std::size_t n = ids.size();
  const std::size_t d = arch.hidden;
  const std::size_t f = arch.ffn;
  const double* p = model.params().data();
  if (n > arch.max_positions) throw CapabilityError("sequence longer than the position table");

  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::size_t>(ids[i]);
    if (id >= arch.vocab_size) throw CapabilityError("token id outside the model vocabulary");
    const double* te = p + lay.token_embeddings + id * d;
    const double* pe = p + lay.position_embeddings + i * d;
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = te[j] + pe[j];
  }

  st.layers.clear();
  if (keep_cache) st.layers.resize(arch.layers);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  LayerCache scratch;
  for (std::size_t l = 0; l < arch.layers; ++l) {
    const LayerOffsets& o = lay.layers[l];
    LayerCache& cache = keep_cache ? st.layers[l] : scratch;
    cache.x = x;
    cache.q.assign(n * d, 0.0);
    cache.k.assign(n * d, 0.0);
    cache.v.assign(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x.data() + i * d;
      K.gemv(p + o.wq, d, d, xi, cache.q.data() + i * d);
      K.gemv(p + o.wk, d, d, xi, cache.k.data() + i * d);
      K.gemv(p + o.wv, d, d, xi, cache.v.data() + i * d);
      K.axpy(1.0, p + o.bq, cache.q.data() + i * d, d);
      K.axpy(1.0, p + o.bk, cache.k.data() + i * d, d);
      K.axpy(1.0, p + o.bv, cache.v.data() + i * d, d);
    }
    cache.a.assign(n * n, 0.0);
    cache.c.assign(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* ai = cache.a.data() + i * n;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        ai[j] = K.dot(cache.q.data() + i * d, cache.k.data() + j * d, d) * inv_sqrt_d;
        peak = std::max(peak, ai[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        ai[j] = std::exp(ai[j] - peak);
        total += ai[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        ai[j] /= total;
        K.axpy(ai[j], cache.v.data() + j * d, cache.c.data() + i * d, d);
      }
    }
    cache.h.assign(n * d, 0.0);
    cache.u.assign(n * f, 0.0);
    cache.g.assign(n * f, 0.0);
    std::vector<double> tmp(d);
    for (std::size_t i = 0; i < n; ++i) {
      double* hi = cache.h.data() + i * d;
      K.gemv(p + o.wo, d, d, cache.c.data() + i * d, hi);
      for (std::size_t j = 0; j < d; ++j) hi[j] += p[o.bo + j] + x[i * d + j];
      double* ui = cache.u.data() + i * f;
      K.gemv(p + o.w1, f, d, hi, ui);
      for (std::size_t j = 0; j < f; ++j) {
        ui[j] += p[o.b1 + j];
        cache.g[i * f + j] = gelu(ui[j]);
      }
      K.gemv(p + o.w2, d, f, cache.g.data() + i * f, tmp.data());
      for (std::size_t j = 0; j < d; ++j) x[i * d + j] = hi[j] + tmp[j] + p[o.b2 + j];
    }
  }
  st.out = std::move(x);
  st.pooled.assign(d, 0.0);
  if (n > 0) {
    for (std::size_t i = 0; i < n; ++i) K.axpy(1.0, st.out.data() + i * d, st.pooled.data(), d);
    for (double& v : st.pooled) v /= static_cast<double>(n);
  }
  for (std::size_t c = 0; c < arch.num_labels; ++c) {
    st.logits[c] = K.dot(p + lay.head_weight + c * d, st.pooled.data(), d) + p[lay.head_bias + c];
  }
}

bool is_trainable(const TrainableModel& model, std::string_view name) {
  return model.group(name).trainable;
}

}  // namespace

Layout layout(const EncoderArch& arch) {
  const std::size_t d = arch.hidden;
  const std::size_t f = arch.ffn;
  Layout lay;
  std::size_t at = 0;
  lay.token_embeddings = at;
  at += arch.vocab_size * d;
  lay.position_embeddings = at;
  at += arch.max_positions * d;
  for (std::size_t l = 0; l < arch.layers; ++l) {
    LayerOffsets o{};
    o.wq = at; at += d * d;
    o.bq = at; at += d;
    o.wk = at; at += d * d;
    o.bk = at; at += d;
    o.wv = at; at += d * d;
    o.bv = at; at += d;
    o.wo = at; at += d * d;
    o.bo = at; at += d;
    o.w1 = at; at += f * d;
    o.b1 = at; at += f;
    o.w2 = at; at += d * f;
    o.b2 = at; at += d;
    lay.layers.push_back(o);
  }
  lay.head_weight = at;
  at += arch.num_labels * d;
  lay.head_bias = at;
  at += arch.num_labels;
  lay.total = at;
  return lay;
}

ProbaRow logits(const TrainableModel& model, std::span<const std::int32_t> ids) {
  ForwardState st;
  forward(model, layout(model.arch()), ids, st, false);
  return st.logits;
}

double accumulate_gradient(const TrainableModel& model, std::span<const std::int32_t> ids,
                           Label target, double scale, std::span<double> grad) {
  const auto& arch = model.arch();
  const Layout lay = layout(arch);
  if (grad.size() != lay.total) throw ArgumentError("gradient buffer size mismatch");
  const auto& K = simd::active();
  ForwardState st;
  forward(model, lay, ids, st, true);

  const ProbaRow probs = softmax(st.logits);
  const std::size_t y = index_of(target);
  const double loss = -std::log(std::max(probs[y], std::numeric_limits<double>::min()));

  const std::size_t n = ids.size();
  const std::size_t d = arch.hidden;
  const std::size_t f = arch.ffn;
  const double* p = model.params().data();
  double* gp = grad.data();

  ProbaRow dz{};
  for (std::size_t c = 0; c < arch.num_labels; ++c) dz[c] = scale * (probs[c] - (c == y ? 1.0 : 0.0));

  std::vector<double> dpooled(d, 0.0);
  for (std::size_t c = 0; c < arch.num_labels; ++c) {
    K.axpy(dz[c], p + lay.head_weight + c * d, dpooled.data(), d);
  }
  if (is_trainable(model, "head")) {
    for (std::size_t c = 0; c < arch.num_labels; ++c) {
      K.axpy(dz[c], st.pooled.data(), gp + lay.head_weight + c * d, d);
      gp[lay.head_bias + c] += dz[c];
    }
  }
  if (n == 0) return loss;

  // Lowest layer whose input gradient is still needed.
  const bool embeddings_trainable = is_trainable(model, "embeddings");
  std::size_t stop = arch.layers;
  for (std::size_t l = 0; l < arch.layers; ++l) {
    if (is_trainable(model, "layer." + std::to_string(l))) {
      stop = l;
      break;
    }
  }
  if (embeddings_trainable) stop = 0;
  if (stop == arch.layers) return loss;

  std::vector<double> dx(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) dx[i * d + j] = dpooled[j] / static_cast<double>(n);
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> dh(n * d), dc(n * d), dq(n * d), dk(n * d), dv(n * d), du(f), dg(f), da(n);
  for (std::size_t l = arch.layers; l-- > stop;) {
    const LayerOffsets& o = lay.layers[l];
    const LayerCache& cache = st.layers[l];
    const bool train_layer = is_trainable(model, "layer." + std::to_string(l));
    const bool need_input_grad = l > stop || embeddings_trainable;

    // Feed-forward block: y = h + W2 gelu(W1 h + b1) + b2.
    dh = dx;
    for (std::size_t i = 0; i < n; ++i) {
      const double* dyi = dx.data() + i * d;
      std::fill(dg.begin(), dg.end(), 0.0);
      K.gemv_t_acc(p + o.w2, d, f, dyi, dg.data());
      for (std::size_t j = 0; j < f; ++j) du[j] = dg[j] * gelu_grad(cache.u[i * f + j]);
      K.gemv_t_acc(p + o.w1, f, d, du.data(), dh.data() + i * d);
      if (train_layer) {
        K.ger(1.0, dyi, d, cache.g.data() + i * f, f, gp + o.w2);
        K.axpy(1.0, dyi, gp + o.b2, d);
        K.ger(1.0, du.data(), f, cache.h.data() + i * d, d, gp + o.w1);
        K.axpy(1.0, du.data(), gp + o.b1, f);
      }
    }

    // Attention block: h = x + Wo c + bo.
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* dhi = dh.data() + i * d;
      K.gemv_t_acc(p + o.wo, d, d, dhi, dc.data() + i * d);
      if (train_layer) {
        K.ger(1.0, dhi, d, cache.c.data() + i * d, d, gp + o.wo);
        K.axpy(1.0, dhi, gp + o.bo, d);
      }
    }
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* ai = cache.a.data() + i * n;
      const double* dci = dc.data() + i * d;
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        da[j] = K.dot(dci, cache.v.data() + j * d, d);
        weighted += ai[j] * da[j];
        K.axpy(ai[j], dci, dv.data() + j * d, d);
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double ds = ai[j] * (da[j] - weighted) * inv_sqrt_d;
        if (ds == 0.0) continue;
        K.axpy(ds, cache.k.data() + j * d, dq.data() + i * d, d);
        K.axpy(ds, cache.q.data() + i * d, dk.data() + j * d, d);
      }
    }
    dx = dh;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = cache.x.data() + i * d;
      if (need_input_grad) {
        K.gemv_t_acc(p + o.wq, d, d, dq.data() + i * d, dx.data() + i * d);
        K.gemv_t_acc(p + o.wk, d, d, dk.data() + i * d, dx.data() + i * d);
        K.gemv_t_acc(p + o.wv, d, d, dv.data() + i * d, dx.data() + i * d);
      }
      if (train_layer) {
        K.ger(1.0, dq.data() + i * d, d, xi, d, gp + o.wq);
        K.axpy(1.0, dq.data() + i * d, gp + o.bq, d);
        K.ger(1.0, dk.data() + i * d, d, xi, d, gp + o.wk);
        K.axpy(1.0, dk.data() + i * d, gp + o.bk, d);
        K.ger(1.0, dv.data() + i * d, d, xi, d, gp + o.wv);
        K.axpy(1.0, dv.data() + i * d, gp + o.bv, d);
      }
    }
  }

  if (embeddings_trainable) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = static_cast<std::size_t>(ids[i]);
      K.axpy(1.0, dx.data() + i * d, gp + lay.token_embeddings + id * d, d);
      K.axpy(1.0, dx.data() + i * d, gp + lay.position_embeddings + i * d, d);
    }
  }
  return loss;
}

}  // namespace mlsent::encoder
