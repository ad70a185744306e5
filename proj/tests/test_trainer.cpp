#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "verso/corpus.hpp"
#include "verso/plan_config.hpp"
#include "verso/syllabifier.hpp"
#include "verso/trainer.hpp"
#include "verso/vocab.hpp"

using namespace verso;

namespace {

struct Fixture {
  Syllabifier syl;
  std::vector<TercetText> tercets;
  Vocabulary vocab;
  std::vector<TokenSeq> seqs;

  Fixture() {
    tercets = load_tercet_file(std::string(VERSO_TEST_DATA_DIR) + "/sample_tercets.txt");
    std::vector<std::vector<std::string>> token_seqs;
    for (const TercetText& t : tercets) {
      for (const std::string& verse : t.verses) token_seqs.push_back(syl.syllabify_verse(verse));
    }
    vocab = Vocabulary::build(token_seqs);
    for (const TercetText& t : tercets) seqs.push_back(encode_tercet(t, vocab, syl));
  }
};

bool params_equal(const ModelParams<float>& a, const ModelParams<float>& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  for (std::size_t ti = 0; ti < ta.size(); ++ti) {
    if (ta[ti].size() != tb[ti].size()) return false;
    for (std::size_t j = 0; j < ta[ti].size(); ++j) {
      if (ta[ti][j] != tb[ti][j]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("early stopping: patience 1 over [10, 9, 9.5] keeps epoch 2") {
  EarlyStopping es(1);
  CHECK(es.observe(10));
  CHECK_FALSE(es.should_stop());
  CHECK(es.observe(9));
  CHECK_FALSE(es.should_stop());
  CHECK_FALSE(es.observe(9.5));
  CHECK(es.should_stop());
  CHECK(es.best_index() == 2);
  CHECK(es.best_value() == 9);
}

TEST_CASE("early stopping: patience counts consecutive non-improvements") {
  EarlyStopping es(2);
  es.observe(10);
  es.observe(11);  // bad 1
  CHECK_FALSE(es.should_stop());
  es.observe(9);  // improvement resets the streak
  CHECK_FALSE(es.should_stop());
  es.observe(9.5);  // bad 1
  es.observe(9.4);  // bad 2
  CHECK(es.should_stop());
  CHECK(es.best_index() == 3);
}

TEST_CASE("run_stage with max_epochs 0 returns input unchanged") {
  Fixture fx;
  Rng rng(1);
  const ModelDims dims{fx.vocab.size(), 8, 12};
  auto params = init_params<float>(dims, rng);
  const auto before = params;

  TrainStage stage;
  stage.name = "noop";
  stage.corpus = fx.seqs;
  stage.val = fx.seqs;
  stage.max_epochs = 0;
  const StageReport report = run_stage(params, stage);
  CHECK(report.history.empty());
  CHECK(report.best_epoch == 0);
  CHECK(params_equal(params, before));
}

TEST_CASE("run_stage validates its configuration") {
  Fixture fx;
  Rng rng(1);
  auto params = init_params<float>(ModelDims{fx.vocab.size(), 4, 6}, rng);

  TrainStage stage;
  stage.name = "bad";
  stage.corpus = fx.seqs;
  stage.val = {};
  CHECK_THROWS_AS(run_stage(params, stage), DataError);
  stage.val = fx.seqs;
  stage.batch_size = 0;
  CHECK_THROWS_AS(run_stage(params, stage), DataError);
  stage.batch_size = 4;
  stage.patience = 0;
  CHECK_THROWS_AS(run_stage(params, stage), DataError);
}

TEST_CASE("run_stage returns the best-validation parameters") {
  Fixture fx;
  Rng rng(33);
  const ModelDims dims{fx.vocab.size(), 12, 16};
  auto params = init_params<float>(dims, rng);

  TrainStage stage;
  stage.name = "fit";
  stage.corpus = fx.seqs;
  stage.val = fx.seqs;
  stage.batch_size = 4;
  stage.lr = 0.005;
  stage.dropout = 0.0;
  stage.patience = 3;
  stage.max_epochs = 12;
  stage.seed = 7;

  const StageReport report = run_stage(params, stage);
  REQUIRE(!report.history.empty());

  // no recorded epoch beats the returned checkpoint
  double min_ppl = report.history.front().val_ppl;
  for (const EpochStats& e : report.history) min_ppl = std::min(min_ppl, e.val_ppl);
  CHECK(report.best_val_ppl == min_ppl);
  CHECK(report.history[static_cast<std::size_t>(report.best_epoch - 1)].val_ppl == min_ppl);

  // the returned parameters reproduce exactly the best recorded perplexity
  const double returned_ppl = perplexity(params, std::span<const TokenSeq>(stage.val));
  CHECK(returned_ppl == doctest::Approx(min_ppl).epsilon(1e-9));

  // training moved the model
  CHECK(report.history.back().train_loss < report.history.front().train_loss);
}

TEST_CASE("run_stage is bit-reproducible for a fixed seed, single thread") {
  Fixture fx;
  const ModelDims dims{fx.vocab.size(), 8, 10};

  const auto run_once = [&] {
    Rng rng(5);
    auto params = init_params<float>(dims, rng);
    TrainStage stage;
    stage.name = "repro";
    stage.corpus = fx.seqs;
    stage.val = fx.seqs;
    stage.batch_size = 3;
    stage.dropout = 0.3;
    stage.max_epochs = 3;
    stage.patience = 3;
    stage.seed = 99;
    run_stage(params, stage, 1);
    return params;
  };
  CHECK(params_equal(run_once(), run_once()));
}

TEST_CASE("run_stage throws DivergenceError when the loss explodes") {
  Fixture fx;
  Rng rng(2);
  auto params = init_params<float>(ModelDims{fx.vocab.size(), 6, 8}, rng);

  TrainStage stage;
  stage.name = "explode";
  stage.corpus = fx.seqs;
  stage.val = fx.seqs;
  stage.batch_size = 1;
  stage.lr = 1e30;
  stage.max_epochs = 3;
  CHECK_THROWS_AS(run_stage(params, stage), DivergenceError);
  try {
    Rng rng2(2);
    auto p2 = init_params<float>(ModelDims{fx.vocab.size(), 6, 8}, rng2);
    run_stage(p2, stage);
  } catch (const DivergenceError& e) {
    CHECK(e.stage() == "explode");
    CHECK(e.epoch() >= 1);
  }
}

TEST_CASE("run_plan: single-stage plan is equivalent to run_stage") {
  Fixture fx;
  const ModelDims dims{fx.vocab.size(), 8, 10};

  TrainStage stage;
  stage.name = "only";
  stage.corpus = fx.seqs;
  stage.val = fx.seqs;
  stage.batch_size = 4;
  stage.max_epochs = 2;
  stage.seed = 13;

  Rng rng_a(4);
  auto via_stage = init_params<float>(dims, rng_a);
  run_stage(via_stage, stage, 1);

  Rng rng_b(4);
  auto via_plan = init_params<float>(dims, rng_b);
  TrainPlan plan;
  plan.stages = {stage};
  plan.seed = 1;  // stage.seed is set, so the plan seed must not matter
  const PlanReport report = run_plan(via_plan, plan, 1);
  CHECK(params_equal(via_stage, via_plan));
  CHECK(report.stages.size() == 1);
  CHECK_FALSE(report.test_ppl.has_value());
}

TEST_CASE("run_plan chains stages and reports test perplexity") {
  Fixture fx;
  const ModelDims dims{fx.vocab.size(), 8, 10};
  Rng rng(6);
  auto params = init_params<float>(dims, rng);

  TrainStage s1;
  s1.name = "pre";
  s1.corpus = fx.seqs;
  s1.val = fx.seqs;
  s1.batch_size = 4;
  s1.max_epochs = 2;
  TrainStage s2 = s1;
  s2.name = "fine";

  TrainPlan plan;
  plan.stages = {s1, s2};
  plan.seed = 77;
  plan.test = fx.seqs;

  std::vector<std::string> epochs_seen;
  std::vector<std::string> stages_seen;
  const PlanReport report = run_plan(
      params, plan, 1,
      [&](const std::string& stage, const EpochStats& e) {
        epochs_seen.push_back(stage + ":" + std::to_string(e.epoch));
      },
      [&](const StageReport& sr, const ModelParams<float>&) { stages_seen.push_back(sr.name); });

  CHECK(report.stages.size() == 2);
  CHECK(report.test_ppl.has_value());
  CHECK(*report.test_ppl > 0);
  CHECK(stages_seen == std::vector<std::string>{"pre", "fine"});
  REQUIRE(epochs_seen.size() >= 2);
  CHECK(epochs_seen.front() == "pre:1");

  TrainPlan empty;
  auto p2 = params;
  CHECK_THROWS_AS(run_plan(p2, empty), DataError);
}

TEST_CASE("plan presets expose the four schedules") {
  CHECK(preset_roles("dc") == std::vector<std::string>{"dc"});
  CHECK(preset_roles("paisa-dc") == std::vector<std::string>{"paisa", "dc"});
  CHECK(preset_roles("dp-dc") == std::vector<std::string>{"dp", "dc"});
  CHECK(preset_roles("paisa-dp-dc") == std::vector<std::string>{"paisa", "dp", "dc"});
  CHECK_THROWS_AS(preset_roles("nonsense"), DataError);
  CHECK(preset_names().size() == 4);
}

TEST_CASE("plan file parsing: explicit stages") {
  const char* text =
      "# comment\n"
      "seed = 42\n"
      "embedding_dim = 32\n"
      "hidden_dim = 48\n"
      "vocab = vocab.txt\n"
      "\n"
      "[stage]\n"
      "name = pre\n"
      "corpus = pre.txt\n"
      "format = prose\n"
      "val_fraction = 0.1\n"
      "batch_size = 16\n"
      "lr = 0.002\n"
      "\n"
      "[stage]\n"
      "name = target\n"
      "corpus = target.txt\n"
      "split_fractions = 0.8 0.1 0.1\n"
      "max_epochs = 7\n";
  const PlanSpec spec = parse_plan_file(text);
  CHECK(spec.seed == 42);
  CHECK(spec.embedding_dim == 32);
  CHECK(spec.hidden_dim == 48);
  CHECK(spec.vocab_path == "vocab.txt");
  REQUIRE(spec.stages.size() == 2);
  CHECK(spec.stages[0].name == "pre");
  CHECK(spec.stages[0].format == "prose");
  CHECK(spec.stages[0].batch_size == 16);
  CHECK(spec.stages[0].lr == 0.002);
  CHECK(spec.stages[1].has_split);
  CHECK(spec.stages[1].split_fractions[0] == 0.8);
  CHECK(spec.stages[1].max_epochs == 7);
}

TEST_CASE("plan file parsing: presets and errors") {
  const char* preset_text =
      "vocab = v.txt\n"
      "preset = paisa-dp-dc\n"
      "paisa = paisa.txt\n"
      "dp = dp.txt\n"
      "dc = dc.txt\n"
      "max_epochs = 3\n";
  const PlanSpec spec = parse_plan_file(preset_text);
  REQUIRE(spec.stages.size() == 3);
  CHECK(spec.stages[0].name == "paisa");
  CHECK(spec.stages[0].format == "prose");
  CHECK(spec.stages[2].name == "dc");
  CHECK(spec.stages[2].format == "tercets");
  CHECK(spec.stages[2].max_epochs == 3);

  CHECK_THROWS_AS(parse_plan_file("vocab = v\npreset = dc\n"), DataError);  // missing dc path
  CHECK_THROWS_AS(parse_plan_file("vocab = v\nnot_a_key = 1\n"), DataError);
  CHECK_THROWS_AS(parse_plan_file("vocab = v\n"), DataError);  // no stages
  CHECK_THROWS_AS(parse_plan_file("[stage]\ncorpus = x\n"), DataError);  // no vocab
  CHECK_THROWS_AS(parse_plan_file("vocab = v\n[stage]\ncorpus = c\nbogus = 1\n"), DataError);
}

TEST_CASE("load_plan builds a runnable plan from files") {
  Fixture fx;
  const std::string dir = "/tmp/verso_plan_test";
  std::remove((dir + "/vocab.txt").c_str());
  (void)std::system(("mkdir -p " + dir).c_str());
  fx.vocab.save(dir + "/vocab.txt");
  write_text_file(dir + "/corpus.txt",
                  read_text_file(std::string(VERSO_TEST_DATA_DIR) + "/sample_tercets.txt"));
  write_text_file(dir + "/plan.cfg",
                  "seed = 9\n"
                  "embedding_dim = 8\n"
                  "hidden_dim = 12\n"
                  "vocab = vocab.txt\n"
                  "[stage]\n"
                  "name = target\n"
                  "corpus = corpus.txt\n"
                  "split_fractions = 0.7 0.15 0.15\n"
                  "max_epochs = 1\n"
                  "batch_size = 4\n");

  const PlanSpec spec = parse_plan_file(read_text_file(dir + "/plan.cfg"));
  const LoadedPlan loaded = load_plan(spec, fx.syl, dir);
  CHECK(loaded.dims.vocab == fx.vocab.size());
  CHECK(loaded.dims.embed == 8);
  REQUIRE(loaded.plan.stages.size() == 1);
  CHECK(loaded.plan.stages[0].corpus.size() == 8);  // 12 tercets x 0.7 -> 8 by largest remainder
  CHECK(loaded.plan.stages[0].val.size() == 2);
  CHECK(loaded.plan.test.size() == 2);
  REQUIRE(loaded.manifest.has_value());
  CHECK(loaded.manifest->train_count == 8);

  // the derived split is reproducible
  const LoadedPlan again = load_plan(spec, fx.syl, dir);
  CHECK(again.manifest->train_hash == loaded.manifest->train_hash);

  // stages run end to end
  Rng rng(3);
  auto params = init_params<float>(loaded.dims, rng);
  TrainPlan plan = loaded.plan;
  const PlanReport report = run_plan(params, plan, 1);
  CHECK(report.test_ppl.has_value());
}
