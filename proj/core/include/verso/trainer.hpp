#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "verso/checkpoint.hpp"
#include "verso/model.hpp"
#include "verso/training.hpp"
#include "verso/vocab.hpp"

namespace verso {

struct TrainStage {
  std::string name;
  std::vector<TokenSeq> corpus;
  std::vector<TokenSeq> val;
  int batch_size = 32;
  double lr = 0.001;
  int patience = 3;
  int max_epochs = 50;
  double dropout = 0.3;
  std::uint64_t seed = 0;

  void validate() const;  // throws DataError
};

struct TrainPlan {
  std::vector<TrainStage> stages;
  std::uint64_t seed = 0;
  std::vector<TokenSeq> test;  // optional: final-model test perplexity

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_ppl = 0;
  double wall_seconds = 0;
};

struct StageReport {
  std::string name;
  std::vector<EpochStats> history;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_ppl = std::numeric_limits<double>::infinity();
};

struct PlanReport {
  std::vector<StageReport> stages;
  std::optional<double> test_ppl;
};

// Tracks the best validation value; stop after `patience` consecutive
// epochs without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Records the value for the next epoch; returns true when it improved.
  bool observe(double value) {
    ++count_;
    if (value < best_value_) {
      best_value_ = value;
      best_index_ = count_;
      bad_streak_ = 0;
      return true;
    }
    ++bad_streak_;
    return false;
  }

  bool should_stop() const { return bad_streak_ >= patience_; }
  int best_index() const { return best_index_; }  // 1-based epoch, 0 if none
  double best_value() const { return best_value_; }

 private:
  int patience_;
  int count_ = 0;
  int bad_streak_ = 0;
  int best_index_ = 0;
  double best_value_ = std::numeric_limits<double>::infinity();
};

using EpochCallback = std::function<void(const std::string& stage, const EpochStats&)>;
using StageCallback = std::function<void(const StageReport&, const ModelParams<float>&)>;

// Trains until validation perplexity stops improving for `patience`
// consecutive epochs or max_epochs is reached. `params` ends up holding the
// weights of the best-validation epoch (not the last one). Fresh optimizer
// state per stage. Throws DivergenceError on a non-finite batch loss.
StageReport run_stage(ModelParams<float>& params, const TrainStage& stage, int threads = 1,
                      const EpochCallback& on_epoch = {});

// Applies the stages in order, each starting from the previous stage's best
// parameters. Stage seeds of 0 are replaced by a value derived from the
// plan seed and the stage index.
PlanReport run_plan(ModelParams<float>& params, const TrainPlan& plan, int threads = 1,
                    const EpochCallback& on_epoch = {}, const StageCallback& on_stage = {});

// The pre-training schedules exposed as named presets. Each entry is an
// ordered list of corpus roles; the final role is always the target corpus.
const std::vector<std::string>& preset_names();
std::vector<std::string> preset_roles(const std::string& preset);

}  // namespace verso
