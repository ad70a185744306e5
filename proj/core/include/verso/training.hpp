#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "verso/model.hpp"

namespace verso {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global gradient-norm clip, applied before the update
};

template <class Real>
struct AdamState {
  std::int64_t step = 0;
  std::vector<Real> m;
  std::vector<Real> v;

  static AdamState zeros(ModelDims dims) {
    AdamState s;
    s.m.assign(param_count(dims), Real(0));
    s.v.assign(param_count(dims), Real(0));
    return s;
  }
};

template <class Real>
double gradient_norm(const ModelParams<Real>& grads) {
  double sq = 0;
  for (auto t : grads.tensors()) {
    for (Real g : t) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

// Rescales grads in place so their global norm does not exceed max_norm.
// Returns the pre-clip norm.
template <class Real>
double clip_gradients(ModelParams<Real>& grads, double max_norm) {
  const double norm = gradient_norm(grads);
  if (norm > max_norm && norm > 0) {
    const Real s = static_cast<Real>(max_norm / norm);
    for (auto t : grads.tensors()) {
      for (Real& g : t) g *= s;
    }
  }
  return norm;
}

// Adam with bias correction; gradients are norm-clipped (without mutating
// the caller's copy) before the moment updates.
template <class Real>
void optimizer_step(ModelParams<Real>& params, const ModelParams<Real>& grads, double lr,
                    AdamState<Real>& state, const AdamConfig& cfg = {}) {
  const double norm = gradient_norm(grads);
  const double clip_scale = (norm > cfg.clip_norm && norm > 0) ? cfg.clip_norm / norm : 1.0;

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  auto ptens = params.tensors();
  auto gtens = grads.tensors();
  std::size_t offset = 0;
  for (std::size_t ti = 0; ti < ptens.size(); ++ti) {
    std::span<Real> pw = ptens[ti];
    std::span<const Real> gw = gtens[ti];
    for (std::size_t i = 0; i < pw.size(); ++i) {
      const double g = static_cast<double>(gw[i]) * clip_scale;
      const double m = cfg.beta1 * static_cast<double>(state.m[offset + i]) + (1.0 - cfg.beta1) * g;
      const double v =
          cfg.beta2 * static_cast<double>(state.v[offset + i]) + (1.0 - cfg.beta2) * g * g;
      state.m[offset + i] = static_cast<Real>(m);
      state.v[offset + i] = static_cast<Real>(v);
      const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
      pw[i] = static_cast<Real>(static_cast<double>(pw[i]) - update);
    }
    offset += pw.size();
  }
}

template <class Real>
struct BatchResult {
  double mean_loss = 0;       // token-mean cross-entropy over the batch
  std::size_t total_steps = 0;
};

// Gradient of the token-mean cross-entropy over a mini-batch. Sequences are
// processed independently (each with a private state), so variable lengths
// need no padding. Work is split into contiguous blocks per thread; each
// block accumulates in index order and blocks are reduced in a fixed order,
// which makes the result deterministic for a fixed (seed, thread count).
// Per-sequence dropout streams derive from the batch slot, not the thread.
template <class Real>
BatchResult<Real> batch_loss_grads(const ModelParams<Real>& p, std::span<const TokenSeq> corpus,
                                   std::span<const std::size_t> batch, double dropout_rate,
                                   std::uint64_t base_seed, int threads,
                                   ModelParams<Real>& grads_out) {
  grads_out.set_zero();
  BatchResult<Real> result;
  if (batch.empty()) return result;

  std::size_t total_steps = 0;
  for (std::size_t idx : batch) {
    const std::size_t len = corpus[idx].ids.size();
    if (len < 2) {
      throw DegenerateSequenceError("sequence too short for a prediction step (length " +
                                    std::to_string(len) + ")");
    }
    total_steps += len - 1;
  }
  const Real scale = static_cast<Real>(1.0 / static_cast<double>(total_steps));

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(batch.size())));
  if (n_threads == 1) {
    double sum = 0;
    for (std::size_t slot = 0; slot < batch.size(); ++slot) {
      sum += detail::sequence_grads_accumulate(p, corpus[batch[slot]], dropout_rate,
                                               Rng::splitmix64(base_seed) ^ slot, scale,
                                               grads_out);
    }
    result.mean_loss = sum / static_cast<double>(total_steps);
    result.total_steps = total_steps;
    return result;
  }

  std::vector<ModelParams<Real>> block_grads;
  block_grads.reserve(static_cast<std::size_t>(n_threads));
  for (int k = 0; k < n_threads; ++k) block_grads.push_back(ModelParams<Real>::zeros(p.dims));
  std::vector<double> block_loss(static_cast<std::size_t>(n_threads), 0.0);

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  const std::size_t n = batch.size();
  for (int k = 0; k < n_threads; ++k) {
    const std::size_t begin = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(n_threads);
    const std::size_t end =
        n * (static_cast<std::size_t>(k) + 1) / static_cast<std::size_t>(n_threads);
    pool.emplace_back([&, k, begin, end] {
      double sum = 0;
      for (std::size_t slot = begin; slot < end; ++slot) {
        sum += detail::sequence_grads_accumulate(p, corpus[batch[slot]], dropout_rate,
                                                 Rng::splitmix64(base_seed) ^ slot, scale,
                                                 block_grads[static_cast<std::size_t>(k)]);
      }
      block_loss[static_cast<std::size_t>(k)] = sum;
    });
  }
  for (auto& t : pool) t.join();

  double sum = 0;
  for (int k = 0; k < n_threads; ++k) {
    sum += block_loss[static_cast<std::size_t>(k)];
    auto dst = grads_out.tensors();
    auto src = block_grads[static_cast<std::size_t>(k)].tensors();
    for (std::size_t ti = 0; ti < dst.size(); ++ti) {
      axpy(Real(1), std::span<const Real>(src[ti]), dst[ti]);
    }
  }
  result.mean_loss = sum / static_cast<double>(total_steps);
  result.total_steps = total_steps;
  return result;
}

}  // namespace verso
