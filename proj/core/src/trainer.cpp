#include "verso/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "verso/errors.hpp"
#include "verso/rng.hpp"

namespace verso {

void TrainStage::validate() const {
  if (name.empty()) throw DataError("stage has no name");
  if (corpus.empty()) throw DataError("stage '" + name + "' has an empty training corpus");
  if (val.empty()) throw DataError("stage '" + name + "' needs a non-empty validation set");
  if (batch_size < 1) throw DataError("stage '" + name + "': batch_size must be >= 1");
  if (patience < 1) throw DataError("stage '" + name + "': patience must be >= 1");
  if (max_epochs < 0) throw DataError("stage '" + name + "': max_epochs must be >= 0");
  if (lr <= 0) throw DataError("stage '" + name + "': lr must be positive");
  if (dropout < 0 || dropout >= 1) throw DataError("stage '" + name + "': dropout must be in [0, 1)");
}

void TrainPlan::validate() const {
  if (stages.empty()) throw DataError("training plan has no stages");
  for (const TrainStage& s : stages) s.validate();
}

StageReport run_stage(ModelParams<float>& params, const TrainStage& stage, int threads,
                      const EpochCallback& on_epoch) {
  stage.validate();
  for (const std::vector<TokenSeq>* part : {&stage.corpus, &stage.val}) {
    for (const TokenSeq& seq : *part) {
      for (std::int32_t id : seq.ids) {
        if (id < 0 || id >= params.dims.vocab) {
          throw DataError("stage '" + stage.name + "': token id " + std::to_string(id) +
                          " outside the model vocabulary");
        }
      }
    }
  }

  StageReport report;
  report.name = stage.name;
  if (stage.max_epochs == 0) return report;

  AdamState<float> opt = AdamState<float>::zeros(params.dims);
  ModelParams<float> grads = ModelParams<float>::zeros(params.dims);
  ModelParams<float> best_params = params;
  EarlyStopping stopper(stage.patience);

  std::vector<std::size_t> order(stage.corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= stage.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(stage.seed, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double epoch_ce = 0;
    std::size_t epoch_steps = 0;
    const std::size_t bs = static_cast<std::size_t>(stage.batch_size);
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + bs);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      const std::uint64_t batch_seed =
          Rng::splitmix64(stage.seed ^ (static_cast<std::uint64_t>(epoch) << 32)) +
          static_cast<std::uint64_t>(batch_index);
      const BatchResult<float> res =
          batch_loss_grads(params, stage.corpus, batch, stage.dropout, batch_seed, threads, grads);
      if (!std::isfinite(res.mean_loss)) {
        throw DivergenceError(stage.name, epoch, batch_index);
      }
      epoch_ce += res.mean_loss * static_cast<double>(res.total_steps);
      epoch_steps += res.total_steps;
      optimizer_step(params, grads, stage.lr, opt);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_ce / static_cast<double>(epoch_steps);
    stats.val_ppl = perplexity(params, std::span<const TokenSeq>(stage.val));
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.history.push_back(stats);
    if (on_epoch) on_epoch(stage.name, stats);

    if (!std::isfinite(stats.val_ppl)) {
      throw DivergenceError(stage.name, epoch, -1);
    }
    if (stopper.observe(stats.val_ppl)) {
      best_params = params;
    }
    if (stopper.should_stop()) break;
  }

  report.best_epoch = stopper.best_index();
  report.best_val_ppl = stopper.best_value();
  params = std::move(best_params);
  return report;
}

PlanReport run_plan(ModelParams<float>& params, const TrainPlan& plan, int threads,
                    const EpochCallback& on_epoch, const StageCallback& on_stage) {
  plan.validate();
  PlanReport report;
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    TrainStage stage = plan.stages[i];
    if (stage.seed == 0) {
      stage.seed = Rng::splitmix64(plan.seed ^ (0x5747A1ULL + i));
    }
    StageReport sr = run_stage(params, stage, threads, on_epoch);
    if (on_stage) on_stage(sr, params);
    report.stages.push_back(std::move(sr));
  }
  if (!plan.test.empty()) {
    report.test_ppl = perplexity(params, std::span<const TokenSeq>(plan.test));
  }
  return report;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"dc", "paisa-dc", "dp-dc", "paisa-dp-dc"};
  return names;
}

std::vector<std::string> preset_roles(const std::string& preset) {
  if (preset == "dc") return {"dc"};
  if (preset == "paisa-dc") return {"paisa", "dc"};
  if (preset == "dp-dc") return {"dp", "dc"};
  if (preset == "paisa-dp-dc") return {"paisa", "dp", "dc"};
  throw DataError("unknown plan preset: " + preset +
                  " (expected dc, paisa-dc, dp-dc or paisa-dp-dc)");
}

}  // namespace verso
