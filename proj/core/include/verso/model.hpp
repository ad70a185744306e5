#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "verso/errors.hpp"
#include "verso/matrix.hpp"
#include "verso/rng.hpp"
#include "verso/vocab.hpp"

namespace verso {

// Syllable language model: tied-embedding lookup, single LSTM layer, tanh
// projection back to embedding space, and logits through the transposed
// embedding matrix. Forward, loss and exact analytic gradients (full BPTT)
// are implemented from first principles.
//
// Templated on the scalar type: training runs in float, gradient checks run
// the identical code in double.

struct ModelDims {
  std::int32_t vocab = 0;
  std::int32_t embed = 0;
  std::int32_t hidden = 0;
  bool operator==(const ModelDims&) const = default;
};

// Gate block order inside the stacked 4H rows.
enum GateBlock : int { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };

template <class Real>
struct ModelParams {
  ModelDims dims;
  Matrix<Real> embed;   // |V| x d; rows are embeddings, also the output layer
  Matrix<Real> gate_x;  // 4H x d
  Matrix<Real> gate_h;  // 4H x H
  std::vector<Real> gate_b;  // 4H
  Matrix<Real> proj_w;  // d x H
  std::vector<Real> proj_b;  // d

  static ModelParams zeros(ModelDims dims) {
    ModelParams p;
    p.dims = dims;
    p.embed = Matrix<Real>(dims.vocab, dims.embed);
    p.gate_x = Matrix<Real>(4 * dims.hidden, dims.embed);
    p.gate_h = Matrix<Real>(4 * dims.hidden, dims.hidden);
    p.gate_b.assign(static_cast<std::size_t>(4 * dims.hidden), Real(0));
    p.proj_w = Matrix<Real>(dims.embed, dims.hidden);
    p.proj_b.assign(static_cast<std::size_t>(dims.embed), Real(0));
    return p;
  }

  // Fixed tensor order; checkpoints, Adam state and reductions rely on it.
  std::array<std::span<Real>, 6> tensors() {
    return {std::span<Real>(embed.data), std::span<Real>(gate_x.data),
            std::span<Real>(gate_h.data), std::span<Real>(gate_b),
            std::span<Real>(proj_w.data), std::span<Real>(proj_b)};
  }
  std::array<std::span<const Real>, 6> tensors() const {
    return {std::span<const Real>(embed.data), std::span<const Real>(gate_x.data),
            std::span<const Real>(gate_h.data), std::span<const Real>(gate_b),
            std::span<const Real>(proj_w.data), std::span<const Real>(proj_b)};
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
  }

  void set_zero() {
    for (auto t : tensors()) std::fill(t.begin(), t.end(), Real(0));
  }
};

inline std::size_t param_count(ModelDims d) {
  const std::size_t v = static_cast<std::size_t>(d.vocab);
  const std::size_t e = static_cast<std::size_t>(d.embed);
  const std::size_t h = static_cast<std::size_t>(d.hidden);
  return v * e + 4 * h * e + 4 * h * h + 4 * h + e * h + e;
}

// Uniform(-0.05, 0.05) weights, zero biases, forget-gate bias +1.
template <class Real>
ModelParams<Real> init_params(ModelDims dims, Rng& rng) {
  ModelParams<Real> p = ModelParams<Real>::zeros(dims);
  for (Matrix<Real>* m : {&p.embed, &p.gate_x, &p.gate_h, &p.proj_w}) {
    for (Real& w : m->data) w = static_cast<Real>(rng.uniform(-0.05, 0.05));
  }
  const std::size_t h = static_cast<std::size_t>(dims.hidden);
  for (std::size_t i = h; i < 2 * h; ++i) p.gate_b[i] = Real(1);
  return p;
}

template <class Real>
struct LmState {
  std::vector<Real> h;
  std::vector<Real> c;

  static LmState zeros(std::int32_t hidden) {
    LmState s;
    s.h.assign(static_cast<std::size_t>(hidden), Real(0));
    s.c.assign(static_cast<std::size_t>(hidden), Real(0));
    return s;
  }

  bool finite() const {
    for (Real x : h) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    for (Real x : c) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }
};

template <class Real>
struct StepOutput {
  std::vector<Real> logits;
  std::vector<Real> probs;
  LmState<Real> state;
};

namespace detail {

template <class Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

// logsumexp with max subtraction; also fills probs when given.
template <class Real>
Real log_sum_exp(std::span<const Real> logits, std::vector<Real>* probs_out) {
  Real max = logits[0];
  for (Real v : logits) max = std::max(max, v);
  Real sum = 0;
  if (probs_out) {
    probs_out->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const Real e = std::exp(logits[i] - max);
      (*probs_out)[i] = e;
      sum += e;
    }
    const Real inv = Real(1) / sum;
    for (Real& pv : *probs_out) pv *= inv;
  } else {
    for (Real v : logits) sum += std::exp(v - max);
  }
  return max + std::log(sum);
}

}  // namespace detail

// Row of the tied embedding matrix; out-of-range ids are a programming error.
template <class Real>
std::span<const Real> embed(const ModelParams<Real>& p, std::int32_t token) {
  if (token < 0 || token >= p.dims.vocab) {
    throw std::out_of_range("token id " + std::to_string(token) + " out of range for vocab " +
                            std::to_string(p.dims.vocab));
  }
  return p.embed.row_span(token);
}

// Per-step activations kept for the backward pass.
template <class Real>
struct LstmCache {
  std::vector<Real> gate_i, gate_f, gate_g, gate_o;
  std::vector<Real> c_new, tanh_c;
};

template <class Real>
LmState<Real> lstm_step_cached(const ModelParams<Real>& p, std::span<const Real> e,
                               const LmState<Real>& s, LstmCache<Real>* cache) {
  const int hidden = p.dims.hidden;
  const std::size_t hs = static_cast<std::size_t>(hidden);
  std::vector<Real> pre(p.gate_b.begin(), p.gate_b.end());
  matvec_add(p.gate_x, e, std::span<Real>(pre));
  matvec_add(p.gate_h, std::span<const Real>(s.h), std::span<Real>(pre));

  LmState<Real> next = LmState<Real>::zeros(hidden);
  if (cache) {
    cache->gate_i.resize(hs);
    cache->gate_f.resize(hs);
    cache->gate_g.resize(hs);
    cache->gate_o.resize(hs);
    cache->c_new.resize(hs);
    cache->tanh_c.resize(hs);
  }
  for (std::size_t k = 0; k < hs; ++k) {
    const Real gi = detail::sigmoid(pre[k]);
    const Real gf = detail::sigmoid(pre[hs + k]);
    const Real gg = std::tanh(pre[2 * hs + k]);
    const Real go = detail::sigmoid(pre[3 * hs + k]);
    const Real c = gf * s.c[k] + gi * gg;
    const Real tc = std::tanh(c);
    next.c[k] = c;
    next.h[k] = go * tc;
    if (cache) {
      cache->gate_i[k] = gi;
      cache->gate_f[k] = gf;
      cache->gate_g[k] = gg;
      cache->gate_o[k] = go;
      cache->c_new[k] = c;
      cache->tanh_c[k] = tc;
    }
  }
  return next;
}

// Standard LSTM cell update: sigmoid gates, tanh candidate, h = o * tanh(c).
template <class Real>
LmState<Real> lstm_step(const ModelParams<Real>& p, std::span<const Real> e,
                        const LmState<Real>& s) {
  return lstm_step_cached<Real>(p, e, s, nullptr);
}

// Backpropagates (dh, dc) through one cached step. Gate/bias gradients are
// accumulated into grads; returns gradients w.r.t. the step inputs.
template <class Real>
void lstm_step_backward(const ModelParams<Real>& p, std::span<const Real> e,
                        const LmState<Real>& prev, const LstmCache<Real>& cache,
                        std::span<const Real> dh, std::span<const Real> dc,
                        std::span<Real> de, std::span<Real> dh_prev, std::span<Real> dc_prev,
                        ModelParams<Real>& grads) {
  const std::size_t hs = static_cast<std::size_t>(p.dims.hidden);
  std::vector<Real> da(4 * hs);
  for (std::size_t k = 0; k < hs; ++k) {
    const Real gi = cache.gate_i[k];
    const Real gf = cache.gate_f[k];
    const Real gg = cache.gate_g[k];
    const Real go = cache.gate_o[k];
    const Real tc = cache.tanh_c[k];

    const Real d_out = dh[k] * tc;
    const Real dc_total = dc[k] + dh[k] * go * (Real(1) - tc * tc);

    const Real d_in = dc_total * gg;
    const Real d_forget = dc_total * prev.c[k];
    const Real d_cell = dc_total * gi;
    dc_prev[k] = dc_total * gf;

    da[k] = d_in * gi * (Real(1) - gi);
    da[hs + k] = d_forget * gf * (Real(1) - gf);
    da[2 * hs + k] = d_cell * (Real(1) - gg * gg);
    da[3 * hs + k] = d_out * go * (Real(1) - go);
  }
  axpy(Real(1), std::span<const Real>(da), std::span<Real>(grads.gate_b));
  outer_add(grads.gate_x, std::span<const Real>(da), e);
  outer_add(grads.gate_h, std::span<const Real>(da), std::span<const Real>(prev.h));
  std::fill(de.begin(), de.end(), Real(0));
  std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
  matvec_transpose_add(p.gate_x, std::span<const Real>(da), de);
  matvec_transpose_add(p.gate_h, std::span<const Real>(da), dh_prev);
}

// z = tanh(W h + b); logits through the transposed embedding matrix;
// probs = softmax(logits) with max subtraction.
template <class Real>
StepOutput<Real> project_and_logits(const ModelParams<Real>& p, const LmState<Real>& s) {
  const std::size_t es = static_cast<std::size_t>(p.dims.embed);
  std::vector<Real> z(p.proj_b.begin(), p.proj_b.end());
  matvec_add(p.proj_w, std::span<const Real>(s.h), std::span<Real>(z));
  for (std::size_t i = 0; i < es; ++i) z[i] = std::tanh(z[i]);

  StepOutput<Real> out;
  out.logits.assign(static_cast<std::size_t>(p.dims.vocab), Real(0));
  matvec_add(p.embed, std::span<const Real>(z), std::span<Real>(out.logits));
  detail::log_sum_exp(std::span<const Real>(out.logits), &out.probs);
  out.state = s;
  return out;
}

// One full model step: embed, recur, project.
template <class Real>
StepOutput<Real> lm_step(const ModelParams<Real>& p, const LmState<Real>& s, std::int32_t token) {
  StepOutput<Real> out = project_and_logits(p, lstm_step(p, embed(p, token), s));
  return out;
}

template <class Real>
struct LossResult {
  double loss = 0;  // mean cross-entropy per prediction step
  ModelParams<Real> grads;
};

namespace detail {

// Teacher-forced forward + full-sequence BPTT. Gradients of
// scale * sum-cross-entropy are accumulated into `grads`; the summed loss is
// returned. The tied matrix receives both its output-layer and its
// embedding-row contributions.
template <class Real>
double sequence_grads_accumulate(const ModelParams<Real>& p, const TokenSeq& seq,
                                 double dropout_rate, std::uint64_t rng_seed, Real scale,
                                 ModelParams<Real>& grads) {
  const std::size_t len = seq.ids.size();
  if (len < 2) {
    throw DegenerateSequenceError("sequence too short for a prediction step (length " +
                                  std::to_string(len) + ")");
  }
  const std::size_t steps = len - 1;
  const std::size_t hs = static_cast<std::size_t>(p.dims.hidden);
  const std::size_t es = static_cast<std::size_t>(p.dims.embed);
  const std::size_t vs = static_cast<std::size_t>(p.dims.vocab);

  for (std::int32_t id : seq.ids) {
    if (id < 0 || id >= p.dims.vocab) {
      throw std::out_of_range("token id " + std::to_string(id) + " out of range for vocab " +
                              std::to_string(p.dims.vocab));
    }
  }

  Rng rng(rng_seed);
  const bool use_dropout = dropout_rate > 0.0;
  const Real keep_scale = use_dropout ? static_cast<Real>(1.0 / (1.0 - dropout_rate)) : Real(1);

  std::vector<LstmCache<Real>> caches(steps);
  std::vector<std::vector<Real>> hs_all(steps + 1, std::vector<Real>(hs, Real(0)));
  std::vector<std::vector<Real>> dh_proj(steps, std::vector<Real>(hs, Real(0)));
  std::vector<std::vector<Real>> cs_all(steps + 1, std::vector<Real>(hs, Real(0)));

  std::vector<Real> hd(hs), z(es), logits(vs), dlogits(vs), dz(es), dzpre(es);
  std::vector<Real> mask;
  if (use_dropout) mask.resize(hs);

  double total_loss = 0;
  LmState<Real> state = LmState<Real>::zeros(p.dims.hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::int32_t input = seq.ids[t];
    const std::int32_t target = seq.ids[t + 1];
    const std::span<const Real> e = p.embed.row_span(input);

    LmState<Real> next = lstm_step_cached(p, e, state, &caches[t]);
    hs_all[t + 1] = next.h;
    cs_all[t + 1] = next.c;

    // Inverted dropout on the state, before the projection only.
    if (use_dropout) {
      for (std::size_t k = 0; k < hs; ++k) {
        mask[k] = rng.next_double() >= dropout_rate ? keep_scale : Real(0);
        hd[k] = next.h[k] * mask[k];
      }
    } else {
      std::copy(next.h.begin(), next.h.end(), hd.begin());
    }

    std::copy(p.proj_b.begin(), p.proj_b.end(), z.begin());
    matvec_add(p.proj_w, std::span<const Real>(hd), std::span<Real>(z));
    for (std::size_t i = 0; i < es; ++i) z[i] = std::tanh(z[i]);

    std::fill(logits.begin(), logits.end(), Real(0));
    matvec_add(p.embed, std::span<const Real>(z), std::span<Real>(logits));
    const Real lse = log_sum_exp<Real>(std::span<const Real>(logits), nullptr);
    total_loss += static_cast<double>(lse - logits[static_cast<std::size_t>(target)]);

    // The output side of the graph does not depend on future steps, so its
    // backward runs here: d(loss)/dlogits = probs - onehot(target).
    for (std::size_t v = 0; v < vs; ++v) dlogits[v] = std::exp(logits[v] - lse) * scale;
    dlogits[static_cast<std::size_t>(target)] -= scale;

    outer_add(grads.embed, std::span<const Real>(dlogits), std::span<const Real>(z));
    std::fill(dz.begin(), dz.end(), Real(0));
    matvec_transpose_add(p.embed, std::span<const Real>(dlogits), std::span<Real>(dz));
    for (std::size_t i = 0; i < es; ++i) dzpre[i] = dz[i] * (Real(1) - z[i] * z[i]);
    outer_add(grads.proj_w, std::span<const Real>(dzpre), std::span<const Real>(hd));
    axpy(Real(1), std::span<const Real>(dzpre), std::span<Real>(grads.proj_b));

    std::fill(dh_proj[t].begin(), dh_proj[t].end(), Real(0));
    matvec_transpose_add(p.proj_w, std::span<const Real>(dzpre), std::span<Real>(dh_proj[t]));
    if (use_dropout) {
      for (std::size_t k = 0; k < hs; ++k) dh_proj[t][k] *= mask[k];
    }

    state = std::move(next);
  }

  // Recurrent backward pass.
  std::vector<Real> dh(hs), dc(hs, Real(0)), dh_prev(hs), dc_prev(hs), de(es);
  std::fill(dh.begin(), dh.end(), Real(0));
  LmState<Real> prev;
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t k = 0; k < hs; ++k) dh[k] += dh_proj[t][k];
    prev.h = hs_all[t];
    prev.c = cs_all[t];
    const std::int32_t input = seq.ids[t];
    lstm_step_backward(p, p.embed.row_span(input), prev, caches[t], std::span<const Real>(dh),
                       std::span<const Real>(dc), std::span<Real>(de), std::span<Real>(dh_prev),
                       std::span<Real>(dc_prev), grads);
    axpy(Real(1), std::span<const Real>(de), grads.embed.row_span(input));
    dh = dh_prev;
    dc = dc_prev;
  }

  return total_loss;
}

}  // namespace detail

// Mean cross-entropy over the sequence's prediction steps plus gradients of
// that mean. Dropout (inverted scaling) applies to the state before the
// projection; rate 0 makes the result independent of the seed.
template <class Real>
LossResult<Real> sequence_loss(const ModelParams<Real>& p, const TokenSeq& seq,
                               double dropout_rate, std::uint64_t rng_seed) {
  LossResult<Real> result;
  result.grads = ModelParams<Real>::zeros(p.dims);
  const std::size_t steps = seq.ids.size() >= 2 ? seq.ids.size() - 1 : 0;
  const Real scale = steps > 0 ? static_cast<Real>(1.0 / static_cast<double>(steps)) : Real(0);
  const double sum =
      detail::sequence_grads_accumulate(p, seq, dropout_rate, rng_seed, scale, result.grads);
  result.loss = sum / static_cast<double>(steps);
  return result;
}

// Forward-only summed cross-entropy of one sequence (dropout disabled).
template <class Real>
double sequence_cross_entropy(const ModelParams<Real>& p, const TokenSeq& seq) {
  const std::size_t len = seq.ids.size();
  if (len < 2) {
    throw DegenerateSequenceError("sequence too short for a prediction step (length " +
                                  std::to_string(len) + ")");
  }
  const std::size_t es = static_cast<std::size_t>(p.dims.embed);
  const std::size_t vs = static_cast<std::size_t>(p.dims.vocab);
  std::vector<Real> z(es), logits(vs);
  double total = 0;
  LmState<Real> state = LmState<Real>::zeros(p.dims.hidden);
  for (std::size_t t = 0; t + 1 < len; ++t) {
    state = lstm_step(p, embed(p, seq.ids[t]), state);
    std::copy(p.proj_b.begin(), p.proj_b.end(), z.begin());
    matvec_add(p.proj_w, std::span<const Real>(state.h), std::span<Real>(z));
    for (std::size_t i = 0; i < es; ++i) z[i] = std::tanh(z[i]);
    std::fill(logits.begin(), logits.end(), Real(0));
    matvec_add(p.embed, std::span<const Real>(z), std::span<Real>(logits));
    const Real lse = detail::log_sum_exp<Real>(std::span<const Real>(logits), nullptr);
    total += static_cast<double>(lse - logits[static_cast<std::size_t>(seq.ids[t + 1])]);
  }
  return total;
}

// exp(total cross-entropy / total prediction steps); state resets per
// sequence, dropout disabled. Invariant to corpus ordering.
template <class Real>
double perplexity(const ModelParams<Real>& p, std::span<const TokenSeq> corpus) {
  if (corpus.empty()) throw EmptyCorpusError("perplexity of an empty corpus");
  double total = 0;
  std::size_t steps = 0;
  for (const TokenSeq& seq : corpus) {
    total += sequence_cross_entropy(p, seq);
    steps += seq.ids.size() - 1;
  }
  return std::exp(total / static_cast<double>(steps));
}

template <class Real>
bool all_finite(const ModelParams<Real>& p) {
  for (auto t : p.tensors()) {
    for (Real x : t) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
  }
  return true;
}

}  // namespace verso
