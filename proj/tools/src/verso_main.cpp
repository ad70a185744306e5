// verso: train a syllable language model on a poet's corpus and generate
// scored tercets.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "verso/checkpoint.hpp"
#include "verso/corpus.hpp"
#include "verso/generator.hpp"
#include "verso/hash.hpp"
#include "verso/plan_config.hpp"
#include "verso/syllabifier.hpp"
#include "verso/trainer.hpp"
#include "verso/vocab.hpp"

namespace {

using json = nlohmann::json;
using namespace verso;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct BuildVocabArgs {
  std::string corpus;
  std::string format = "tercets";
  std::string out = "vocab.txt";
  bool json_mode = false;
};

int cmd_build_vocab(const BuildVocabArgs& args) {
  Syllabifier syl;
  std::vector<std::vector<std::string>> token_seqs;
  std::size_t units = 0;
  if (args.format == "tercets") {
    for (const TercetText& t : load_tercet_file(args.corpus)) {
      ++units;
      for (const std::string& verse : t.verses) token_seqs.push_back(syl.syllabify_verse(verse));
    }
  } else {
    for (const std::string& line : load_line_corpus(args.corpus)) {
      ++units;
      token_seqs.push_back(syl.syllabify_verse(line));
    }
  }
  const Vocabulary vocab = Vocabulary::build(token_seqs);
  vocab.save(args.out);
  if (args.json_mode) {
    json rec{{"vocab", args.out},
             {"size", vocab.size()},
             {"units", units},
             {"hash", to_hex(vocab.content_hash())}};
    std::cout << rec.dump() << "\n";
  } else {
    std::cout << "vocabulary: " << vocab.size() << " tokens from " << units << " units -> "
              << args.out << "\n";
  }
  return kExitOk;
}

struct TrainArgs {
  std::string plan;
  std::string out = "model.ckpt";
  std::string log_path;
  int threads = 1;
  bool save_stages = false;
  // flag overrides (flags > plan file > defaults)
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<int> batch_size;
  std::optional<int> max_epochs;
  bool json_mode = false;
};

int cmd_train(const TrainArgs& args) {
  const std::string plan_dir = std::filesystem::path(args.plan).parent_path().string();
  PlanSpec spec = parse_plan_file(read_text_file(args.plan));
  if (args.seed) spec.seed = *args.seed;
  for (StageSpec& s : spec.stages) {
    if (args.lr) s.lr = *args.lr;
    if (args.batch_size) s.batch_size = *args.batch_size;
    if (args.max_epochs) s.max_epochs = *args.max_epochs;
  }

  Syllabifier syl;
  LoadedPlan loaded = load_plan(spec, syl, plan_dir);

  const std::string log_path = args.log_path.empty() ? args.out + ".log" : args.log_path;
  std::ofstream log(log_path);
  if (!log) throw DataError("cannot open log file: " + log_path);

  // Effective configuration, echoed for reproducibility.
  log << "# plan=" << args.plan << " seed=" << spec.seed << " vocab=" << loaded.dims.vocab
      << " embed=" << loaded.dims.embed << " hidden=" << loaded.dims.hidden
      << " threads=" << args.threads << "\n";
  for (const TrainStage& s : loaded.plan.stages) {
    log << "# stage=" << s.name << " corpus_size=" << s.corpus.size()
        << " val_size=" << s.val.size() << " batch_size=" << s.batch_size << " lr=" << s.lr
        << " dropout=" << s.dropout << " patience=" << s.patience
        << " max_epochs=" << s.max_epochs << "\n";
  }
  log << "stage\tepoch\ttrain_loss\tval_ppl\twall_seconds\n";

  if (loaded.manifest) {
    write_text_file(args.out + ".manifest", format_manifest(*loaded.manifest));
  }

  Rng init_rng(spec.seed);
  auto params = init_params<float>(loaded.dims, init_rng);

  const auto on_epoch = [&](const std::string& stage, const EpochStats& e) {
    log << stage << '\t' << e.epoch << '\t' << e.train_loss << '\t' << e.val_ppl << '\t'
        << e.wall_seconds << "\n";
    log.flush();
    if (!args.json_mode) {
      std::cerr << stage << " epoch " << e.epoch << ": train_loss=" << e.train_loss
                << " val_ppl=" << e.val_ppl << "\n";
    }
  };
  int stage_index = 0;
  const auto on_stage = [&](const StageReport& sr, const ModelParams<float>& best) {
    ++stage_index;
    if (args.save_stages) {
      save_checkpoint(args.out + ".stage" + std::to_string(stage_index), best,
                      loaded.vocab.content_hash());
    }
  };

  const PlanReport report = run_plan(params, loaded.plan, args.threads, on_epoch, on_stage);
  save_checkpoint(args.out, params, loaded.vocab.content_hash());

  // The final stage's corpus defines the generation lexicon.
  {
    const StageSpec& last = spec.stages.back();
    const std::string path = resolve_path(plan_dir, last.corpus_path);
    Lexicon lexicon;
    if (last.format == "tercets") {
      lexicon = Lexicon::from_tercets(load_tercet_file(path));
    } else {
      const auto lines = load_line_corpus(path);
      lexicon = Lexicon::from_lines(lines);
    }
    lexicon.save(args.out + ".lexicon");
  }

  if (args.json_mode) {
    json rec{{"checkpoint", args.out}, {"log", log_path}, {"lexicon", args.out + ".lexicon"}};
    json stages = json::array();
    for (const StageReport& sr : report.stages) {
      stages.push_back({{"name", sr.name},
                        {"epochs", sr.history.size()},
                        {"best_epoch", sr.best_epoch},
                        {"best_val_ppl", sr.best_val_ppl}});
    }
    rec["stages"] = stages;
    if (report.test_ppl) rec["test_ppl"] = *report.test_ppl;
    std::cout << rec.dump() << "\n";
  } else {
    for (const StageReport& sr : report.stages) {
      std::cout << "stage " << sr.name << ": best epoch " << sr.best_epoch << ", val ppl "
                << sr.best_val_ppl << "\n";
    }
    if (report.test_ppl) std::cout << "test ppl " << *report.test_ppl << "\n";
    std::cout << "checkpoint -> " << args.out << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string vocab;
  std::string corpus;
  std::string format = "tercets";
  bool json_mode = false;
};

int cmd_eval_ppl(const EvalArgs& args) {
  const Vocabulary vocab = Vocabulary::load(args.vocab);
  const Checkpoint ckpt = load_checkpoint(args.ckpt, &vocab);
  Syllabifier syl;
  const std::vector<TokenSeq> corpus = encode_corpus_file(args.corpus, args.format, vocab, syl);
  if (corpus.empty()) throw EmptyCorpusError("no sequences in " + args.corpus);
  const double ppl = perplexity(ckpt.params, std::span<const TokenSeq>(corpus));
  if (args.json_mode) {
    std::cout << json{{"ppl", ppl}, {"sequences", corpus.size()}}.dump() << "\n";
  } else {
    std::cout << ppl << "\n";
  }
  return kExitOk;
}

struct GenerateArgs {
  std::string ckpt;
  std::string vocab;
  std::string lexicon;
  std::string out;
  std::string scores_path;
  GenConfig cfg;
  int threads = 1;
  bool json_mode = false;
};

int cmd_generate(const GenerateArgs& args) {
  const Vocabulary vocab = Vocabulary::load(args.vocab);
  const Checkpoint ckpt = load_checkpoint(args.ckpt, &vocab);
  const Lexicon lexicon = Lexicon::load(args.lexicon);
  Syllabifier syl;
  const auto best = generate_best(ckpt.params, vocab, syl, lexicon, args.cfg, args.threads);

  if (!args.scores_path.empty()) {
    write_text_file(args.scores_path, format_score_sidecar(best));
  }
  std::string text;
  if (args.json_mode) {
    for (const ScoredTercet& t : best) {
      json rec{{"index", t.sample_index},
               {"verses", t.verses},
               {"r1", t.scores.r1},
               {"r2", t.scores.r2},
               {"r3", t.scores.r3},
               {"r4", t.scores.r4},
               {"r", t.scores.r}};
      text += rec.dump();
      text += "\n";
    }
  } else {
    text = format_tercets(best);
  }
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(args.out, text);
  }
  return kExitOk;
}

struct ScoreArgs {
  std::string tercets;
  std::string lexicon;
  double a = 0.05;
  double b = 1.0;
  bool json_mode = false;
};

int cmd_score(const ScoreArgs& args) {
  const std::vector<TercetText> tercets = load_tercet_file(args.tercets);
  const Lexicon lexicon = Lexicon::load(args.lexicon);
  Syllabifier syl;
  if (!args.json_mode) std::cout << "index\tr1\tr2\tr3\tr4\tr\n";
  for (std::size_t i = 0; i < tercets.size(); ++i) {
    const std::vector<std::string> verses(tercets[i].verses.begin(), tercets[i].verses.end());
    const Scores s = score_text_tercet(verses, syl, lexicon, args.a, args.b);
    if (args.json_mode) {
      json rec{{"index", i}, {"r1", s.r1}, {"r2", s.r2}, {"r3", s.r3}, {"r4", s.r4}, {"r", s.r}};
      std::cout << rec.dump() << "\n";
    } else {
      std::cout << i << '\t' << s.r1 << '\t' << s.r2 << '\t' << s.r3 << '\t' << s.r4 << '\t'
                << s.r << "\n";
    }
  }
  return kExitOk;
}

struct SyllabifyArgs {
  std::string input;
  std::string exceptions;
  bool json_mode = false;
};

int cmd_syllabify(const SyllabifyArgs& args) {
  Syllabifier syl;
  if (!args.exceptions.empty()) syl.load_exceptions(args.exceptions);

  const auto hyphenate = [&](const std::string& word) {
    const auto bd = syl.syllabify(word);
    if (!bd) return word;  // vowelless words stay opaque
    std::string out;
    for (std::size_t i = 0; i < bd->syllables.size(); ++i) {
      if (i > 0) out.push_back('-');
      out += bd->syllables[i];
    }
    return out;
  };

  if (std::filesystem::exists(args.input)) {
    std::vector<std::string> seen_order;
    std::set<std::string> seen;
    for (const std::string& line : load_line_corpus(args.input)) {
      std::size_t start = 0;
      while (start <= line.size()) {
        std::size_t sp = line.find(' ', start);
        if (sp == std::string::npos) sp = line.size();
        if (sp > start) {
          const std::string word = line.substr(start, sp - start);
          if (seen.insert(word).second) seen_order.push_back(word);
        }
        if (sp == line.size()) break;
        start = sp + 1;
      }
    }
    for (const std::string& word : seen_order) {
      if (args.json_mode) {
        std::cout << json{{"word", word}, {"hyphenation", hyphenate(word)}}.dump() << "\n";
      } else {
        std::cout << word << '\t' << hyphenate(word) << "\n";
      }
    }
  } else {
    const std::string word = normalize(args.input);
    if (word.empty() || word.find(' ') != std::string::npos) {
      throw DataError("expected a single word or an existing file, got: " + args.input);
    }
    if (args.json_mode) {
      std::cout << json{{"word", word}, {"hyphenation", hyphenate(word)}}.dump() << "\n";
    } else {
      std::cout << hyphenate(word) << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"syllable-level verse model: train on a poet's corpus, generate scored tercets"};
  app.require_subcommand(1);

  BuildVocabArgs bv;
  auto* sub_bv = app.add_subcommand("build-vocab", "build the syllable vocabulary from a corpus");
  sub_bv->add_option("corpus", bv.corpus, "corpus file")->required();
  sub_bv->add_option("--format", bv.format, "tercets|prose|verse")
      ->check(CLI::IsMember({"tercets", "prose", "verse"}));
  sub_bv->add_option("--out", bv.out, "output vocabulary file");
  sub_bv->add_flag("--json", bv.json_mode, "machine-readable output");

  TrainArgs tr;
  auto* sub_tr = app.add_subcommand("train", "run a training plan");
  sub_tr->add_option("--plan", tr.plan, "plan config file")->required();
  sub_tr->add_option("--out", tr.out, "output checkpoint path");
  sub_tr->add_option("--log", tr.log_path, "training log path (default: <out>.log)");
  sub_tr->add_option("--threads", tr.threads, "worker threads (1 = bit-reproducible)")
      ->check(CLI::PositiveNumber);
  sub_tr->add_flag("--save-stages", tr.save_stages, "write per-stage checkpoints");
  std::uint64_t seed_flag = 0;
  double lr_flag = 0;
  int batch_flag = 0;
  int epochs_flag = 0;
  sub_tr->add_option("--seed", seed_flag, "override the plan seed");
  sub_tr->add_option("--lr", lr_flag, "override every stage's learning rate");
  sub_tr->add_option("--batch-size", batch_flag, "override every stage's batch size");
  sub_tr->add_option("--max-epochs", epochs_flag, "override every stage's epoch cap");
  sub_tr->add_flag("--json", tr.json_mode, "machine-readable output");

  EvalArgs ev;
  auto* sub_ev = app.add_subcommand("eval-ppl", "perplexity of a checkpoint on a corpus");
  sub_ev->add_option("corpus", ev.corpus, "corpus file")->required();
  sub_ev->add_option("--ckpt", ev.ckpt, "checkpoint file")->required();
  sub_ev->add_option("--vocab", ev.vocab, "vocabulary file")->required();
  sub_ev->add_option("--format", ev.format, "tercets|prose|verse")
      ->check(CLI::IsMember({"tercets", "prose", "verse"}));
  sub_ev->add_flag("--json", ev.json_mode, "machine-readable output");

  GenerateArgs gen;
  auto* sub_gen = app.add_subcommand("generate", "sample tercets and keep the best-scored");
  sub_gen->add_option("--ckpt", gen.ckpt, "checkpoint file")->required();
  sub_gen->add_option("--vocab", gen.vocab, "vocabulary file")->required();
  sub_gen->add_option("--lexicon", gen.lexicon, "lexicon file for the word score")->required();
  sub_gen->add_option("--count", gen.cfg.batch, "batch of candidates to sample");
  sub_gen->add_option("--top", gen.cfg.top_k, "how many best tercets to keep");
  sub_gen->add_option("--seed", gen.cfg.seed, "sampling seed");
  sub_gen->add_option("--temperature", gen.cfg.temperature, "softmax temperature");
  sub_gen->add_option("--max-syllables", gen.cfg.max_syllables, "per-sample syllable cap");
  sub_gen->add_option("--score-a", gen.cfg.a, "reward for lexicon words");
  sub_gen->add_option("--score-b", gen.cfg.b, "penalty for invented words");
  sub_gen->add_option("--scores", gen.scores_path, "write a tab-separated score sidecar");
  sub_gen->add_option("--out", gen.out, "write tercets here instead of stdout");
  sub_gen->add_option("--threads", gen.threads, "sampling threads")->check(CLI::PositiveNumber);
  sub_gen->add_flag("--json", gen.json_mode, "machine-readable output");

  ScoreArgs sc;
  auto* sub_sc = app.add_subcommand("score", "score a tercet file with R1..R4");
  sub_sc->add_option("tercets", sc.tercets, "tercet corpus file")->required();
  sub_sc->add_option("--lexicon", sc.lexicon, "lexicon file")->required();
  sub_sc->add_option("--score-a", sc.a, "reward for lexicon words");
  sub_sc->add_option("--score-b", sc.b, "penalty for invented words");
  sub_sc->add_flag("--json", sc.json_mode, "machine-readable output");

  SyllabifyArgs sy;
  auto* sub_sy = app.add_subcommand("syllabify", "hyphenate a word or every word of a file");
  sub_sy->add_option("input", sy.input, "a word, or a path to a text file")->required();
  sub_sy->add_option("--exceptions", sy.exceptions, "extra exception lexicon file");
  sub_sy->add_flag("--json", sy.json_mode, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help and friends
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sub_bv->parsed()) return cmd_build_vocab(bv);
    if (sub_tr->parsed()) {
      if (sub_tr->count("--seed") > 0) tr.seed = seed_flag;
      if (sub_tr->count("--lr") > 0) tr.lr = lr_flag;
      if (sub_tr->count("--batch-size") > 0) tr.batch_size = batch_flag;
      if (sub_tr->count("--max-epochs") > 0) tr.max_epochs = epochs_flag;
      return cmd_train(tr);
    }
    if (sub_ev->parsed()) return cmd_eval_ppl(ev);
    if (sub_gen->parsed()) return cmd_generate(gen);
    if (sub_sc->parsed()) return cmd_score(sc);
    if (sub_sy->parsed()) return cmd_syllabify(sy);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
