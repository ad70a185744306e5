#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "verso/corpus.hpp"
#include "verso/syllabifier.hpp"
#include "verso/trainer.hpp"
#include "verso/vocab.hpp"

namespace verso {

// One stage as written in a plan file.
struct StageSpec {
  std::string name;
  std::string corpus_path;
  std::string format = "tercets";  // tercets | prose | verse
  std::string val_path;
  double val_fraction = 0;  // 0 = unset; defaults to 0.05 when no val source is given
  std::array<double, 3> split_fractions{0, 0, 0};
  bool has_split = false;  // tercets only: train/val/test via make_splits
  int batch_size = 32;
  double lr = 0.001;
  int patience = 3;
  int max_epochs = 50;
  double dropout = 0.3;
  std::uint64_t seed = 0;
};

struct PlanSpec {
  std::uint64_t seed = 1;
  int embedding_dim = 300;
  int hidden_dim = 1024;
  std::string vocab_path;
  std::string test_path;
  std::string test_format = "tercets";
  std::vector<StageSpec> stages;
};

// Key/value plan file: `key = value` lines, `#` comments, one `[stage]`
// header per stage. A top-level `preset = dc|paisa-dc|dp-dc|paisa-dp-dc`
// expands to the named schedule, reading corpus paths from keys named after
// the roles (`paisa`, `dp`, `dc`, plus optional `dc_val`). Unknown keys are
// rejected.
PlanSpec parse_plan_file(std::string_view text);

struct LoadedPlan {
  TrainPlan plan;
  Vocabulary vocab;
  ModelDims dims;
  std::optional<SplitManifest> manifest;  // set when a stage was split
  std::string manifest_stage;
};

// Loads corpora, encodes them and assembles the runnable plan. Relative
// paths resolve against base_dir.
LoadedPlan load_plan(const PlanSpec& spec, const Syllabifier& syllabifier,
                     const std::string& base_dir = "");

// Encodes one corpus file. Formats: "tercets" (3-line blocks), "prose"
// (one sentence per line, long sentences chunked at word boundaries),
// "verse" (one verse per line).
std::vector<TokenSeq> encode_corpus_file(const std::string& path, const std::string& format,
                                         const Vocabulary& vocab, const Syllabifier& syllabifier);

std::string resolve_path(const std::string& base_dir, const std::string& path);

}  // namespace verso
