#include "verso/plan_config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "verso/errors.hpp"
#include "verso/rng.hpp"

namespace verso {

namespace {

std::string trim(std::string_view s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const std::size_t b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("plan file: bad numeric value for '" + key + "': " + value);
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("plan file: bad integer value for '" + key + "': " + value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("plan file: bad value for '" + key + "': " + value);
  }
}

void check_format(const std::string& format) {
  if (format != "tercets" && format != "prose" && format != "verse") {
    throw DataError("plan file: unknown corpus format '" + format +
                    "' (expected tercets, prose or verse)");
  }
}

bool apply_stage_key(StageSpec& stage, const std::string& key, const std::string& value) {
  if (key == "name") stage.name = value;
  else if (key == "corpus") stage.corpus_path = value;
  else if (key == "format") stage.format = value;
  else if (key == "val") stage.val_path = value;
  else if (key == "val_fraction") stage.val_fraction = parse_double(key, value);
  else if (key == "batch_size") stage.batch_size = parse_int(key, value);
  else if (key == "lr") stage.lr = parse_double(key, value);
  else if (key == "patience") stage.patience = parse_int(key, value);
  else if (key == "max_epochs") stage.max_epochs = parse_int(key, value);
  else if (key == "dropout") stage.dropout = parse_double(key, value);
  else if (key == "seed") stage.seed = parse_u64(key, value);
  else if (key == "split_fractions") {
    std::array<double, 3> f{};
    std::size_t i = 0, start = 0;
    const std::string v = value;
    while (start <= v.size() && i < 4) {
      std::size_t sp = v.find(' ', start);
      if (sp == std::string::npos) sp = v.size();
      if (sp > start) {
        if (i >= 3) throw DataError("plan file: split_fractions takes three numbers");
        f[i++] = parse_double(key, v.substr(start, sp - start));
      }
      start = sp + 1;
    }
    if (i != 3) throw DataError("plan file: split_fractions takes three numbers");
    stage.split_fractions = f;
    stage.has_split = true;
  } else {
    return false;
  }
  return true;
}

}  // namespace

PlanSpec parse_plan_file(std::string_view text) {
  PlanSpec spec;
  // Stage-level defaults given at the top level apply to preset stages.
  StageSpec defaults;
  std::unordered_map<std::string, std::string> preset_paths;
  std::string preset;

  StageSpec* current = nullptr;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;

    if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
      line = trim(std::string_view(line).substr(0, hash));
    }
    if (line.empty()) continue;
    if (line == "[stage]") {
      spec.stages.push_back(defaults);
      spec.stages.back().name.clear();
      current = &spec.stages.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("plan file line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));

    if (current != nullptr) {
      if (!apply_stage_key(*current, key, value)) {
        throw DataError("plan file line " + std::to_string(line_no) + ": unknown stage key '" +
                        key + "'");
      }
    } else if (key == "seed") {
      spec.seed = parse_u64(key, value);
    } else if (key == "embedding_dim") {
      spec.embedding_dim = parse_int(key, value);
    } else if (key == "hidden_dim") {
      spec.hidden_dim = parse_int(key, value);
    } else if (key == "vocab") {
      spec.vocab_path = value;
    } else if (key == "test") {
      spec.test_path = value;
    } else if (key == "test_format") {
      spec.test_format = value;
    } else if (key == "preset") {
      preset = value;
    } else if (key == "paisa" || key == "dp" || key == "dc" || key == "dc_val") {
      preset_paths[key] = value;
    } else if (key == "batch_size" || key == "lr" || key == "patience" || key == "max_epochs" ||
               key == "dropout" || key == "val_fraction") {
      apply_stage_key(defaults, key, value);
    } else {
      throw DataError("plan file line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  if (!preset.empty()) {
    if (!spec.stages.empty()) {
      throw DataError("plan file: use either a preset or explicit [stage] sections, not both");
    }
    for (const std::string& role : preset_roles(preset)) {
      const auto it = preset_paths.find(role);
      if (it == preset_paths.end()) {
        throw DataError("plan file: preset '" + preset + "' needs a corpus path for '" + role +
                        "'");
      }
      StageSpec stage = defaults;
      stage.name = role;
      stage.corpus_path = it->second;
      stage.format = (role == "dc") ? "tercets" : "prose";
      if (role == "dc") {
        if (const auto v = preset_paths.find("dc_val"); v != preset_paths.end()) {
          stage.val_path = v->second;
        }
      }
      spec.stages.push_back(std::move(stage));
    }
  }

  if (spec.vocab_path.empty()) throw DataError("plan file: missing 'vocab' path");
  if (spec.stages.empty()) throw DataError("plan file: no stages defined");
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    StageSpec& s = spec.stages[i];
    if (s.name.empty()) s.name = "stage" + std::to_string(i + 1);
    if (s.corpus_path.empty()) {
      throw DataError("plan file: stage '" + s.name + "' is missing a corpus path");
    }
    check_format(s.format);
    if (s.has_split && s.format != "tercets") {
      throw DataError("plan file: split_fractions requires the tercets format");
    }
  }
  check_format(spec.test_format);
  return spec;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (base_dir.empty() || path.empty() || path.front() == '/') return path;
  if (base_dir.back() == '/') return base_dir + path;
  return base_dir + "/" + path;
}

std::vector<TokenSeq> encode_corpus_file(const std::string& path, const std::string& format,
                                         const Vocabulary& vocab, const Syllabifier& syllabifier) {
  std::vector<TokenSeq> out;
  if (format == "tercets") {
    for (const TercetText& t : load_tercet_file(path)) {
      out.push_back(encode_tercet(t, vocab, syllabifier));
    }
  } else if (format == "prose") {
    for (const std::string& line : load_line_corpus(path)) {
      for (TokenSeq& seq : encode_prose_sentence(line, vocab, syllabifier)) {
        out.push_back(std::move(seq));
      }
    }
  } else if (format == "verse") {
    for (const std::string& line : load_line_corpus(path)) {
      out.push_back(encode_verse_line(line, vocab, syllabifier));
    }
  } else {
    throw DataError("unknown corpus format: " + format);
  }
  return out;
}

namespace {

// Deterministic held-out slice for stages configured with val_fraction.
void split_off_validation(std::vector<TokenSeq>& corpus, double fraction, std::uint64_t seed,
                          std::vector<TokenSeq>& val_out) {
  if (fraction <= 0 || fraction >= 1) {
    throw DataError("val_fraction must be in (0, 1), got " + std::to_string(fraction));
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(corpus.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, corpus.size() - 1);
  std::vector<TokenSeq> train;
  train.reserve(corpus.size() - n_val);
  val_out.reserve(n_val);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_val) {
      val_out.push_back(std::move(corpus[order[i]]));
    } else {
      train.push_back(std::move(corpus[order[i]]));
    }
  }
  corpus = std::move(train);
}

}  // namespace

LoadedPlan load_plan(const PlanSpec& spec, const Syllabifier& syllabifier,
                     const std::string& base_dir) {
  LoadedPlan loaded;
  loaded.vocab = Vocabulary::load(resolve_path(base_dir, spec.vocab_path));
  loaded.dims = ModelDims{loaded.vocab.size(), spec.embedding_dim, spec.hidden_dim};
  loaded.plan.seed = spec.seed;

  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const StageSpec& s = spec.stages[i];
    TrainStage stage;
    stage.name = s.name;
    stage.batch_size = s.batch_size;
    stage.lr = s.lr;
    stage.patience = s.patience;
    stage.max_epochs = s.max_epochs;
    stage.dropout = s.dropout;
    stage.seed = s.seed;
    const std::uint64_t derived_seed = Rng::splitmix64(spec.seed ^ (0xA11CE + i));

    if (s.has_split) {
      const std::vector<TercetText> tercets =
          load_tercet_file(resolve_path(base_dir, s.corpus_path));
      const TercetSplit split =
          make_splits(tercets, derived_seed,
                      SplitFractions{s.split_fractions[0], s.split_fractions[1],
                                     s.split_fractions[2]});
      const auto encode_all = [&](const std::vector<TercetText>& part) {
        std::vector<TokenSeq> seqs;
        seqs.reserve(part.size());
        for (const TercetText& t : part) seqs.push_back(encode_tercet(t, loaded.vocab, syllabifier));
        return seqs;
      };
      stage.corpus = encode_all(split.train);
      stage.val = encode_all(split.val);
      if (!split.test.empty() && spec.test_path.empty() && loaded.plan.test.empty()) {
        loaded.plan.test = encode_all(split.test);
      }
      loaded.manifest = manifest_for(split, derived_seed);
      loaded.manifest_stage = s.name;
    } else {
      stage.corpus =
          encode_corpus_file(resolve_path(base_dir, s.corpus_path), s.format, loaded.vocab,
                             syllabifier);
      if (!s.val_path.empty()) {
        stage.val = encode_corpus_file(resolve_path(base_dir, s.val_path), s.format, loaded.vocab,
                                       syllabifier);
      } else {
        const double fraction = s.val_fraction > 0 ? s.val_fraction : 0.05;
        split_off_validation(stage.corpus, fraction, derived_seed, stage.val);
      }
    }
    loaded.plan.stages.push_back(std::move(stage));
  }

  if (!spec.test_path.empty()) {
    loaded.plan.test = encode_corpus_file(resolve_path(base_dir, spec.test_path),
                                          spec.test_format, loaded.vocab, syllabifier);
  }
  loaded.plan.validate();
  return loaded;
}

}  // namespace verso
