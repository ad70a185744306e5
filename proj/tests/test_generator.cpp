#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <map>

#include "verso/generator.hpp"
#include "verso/special_tokens.hpp"

using namespace verso;

namespace {

struct Fixture {
  Syllabifier syl;
  std::vector<TercetText> tercets;
  Vocabulary vocab;
  ModelParams<float> params;
  Lexicon lexicon;

  Fixture() : params() {
    tercets = load_tercet_file(std::string(VERSO_TEST_DATA_DIR) + "/sample_tercets.txt");
    std::vector<std::vector<std::string>> token_seqs;
    for (const TercetText& t : tercets) {
      for (const std::string& verse : t.verses) token_seqs.push_back(syl.syllabify_verse(verse));
    }
    vocab = Vocabulary::build(token_seqs);
    Rng rng(2024);
    params = init_params<float>(ModelDims{vocab.size(), 16, 24}, rng);
    lexicon = Lexicon::from_tercets(tercets);
  }
};

}  // namespace

TEST_CASE("score_r1 penalizes non-tercet verse counts") {
  CHECK(score_r1(3) == 1.0);
  CHECK(score_r1(5) == -1.0);
  CHECK(score_r1(0) == -2.0);
  CHECK(score_r1(2) == 0.0);
  CHECK(score_r1(4) == 0.0);
}

TEST_CASE("score_r2 rewards hendecasyllables") {
  CHECK(score_r2(std::vector<int>{11, 11, 11}) == 1.0);
  CHECK(score_r2(std::vector<int>{10, 11, 12}) == -1.0);
  CHECK(score_r2(std::vector<int>{11}) == 1.0);
  CHECK(score_r2(std::vector<int>{}) == 1.0);  // empty sum, formula unchanged
  CHECK(score_r2(std::vector<int>{5, 11, 11}) == -5.0);
}

TEST_CASE("rhymes: stressed-vowel suffix match") {
  Syllabifier syl;
  CHECK(rhymes("mondo", "fondo", syl));      // suffix "ondo"
  CHECK(rhymes("parole", "sole", syl));      // suffix "ole"
  CHECK(rhymes("virtù", "più", syl));  // accented final vowel
  CHECK(rhymes("vita", "smarrita", syl));    // suffix "ita"
  CHECK(rhymes("mondo", "mondo", syl));      // reflexivity
  CHECK_FALSE(rhymes("novo", "fondo", syl));
  CHECK_FALSE(rhymes("mondo", "monto", syl));
  CHECK_FALSE(rhymes("vita", "virtù", syl));
  // apostrophes are stripped before the suffix is taken
  CHECK(rhymes("l'amore", "cuore", syl));    // "ore" both
  // vowelless words never rhyme, even with themselves
  CHECK_FALSE(rhymes("brr", "brr", syl));
  CHECK_FALSE(rhymes("", "mondo", syl));
}

TEST_CASE("score_r3 checks first and third verse") {
  Syllabifier syl;
  const std::vector<std::string> aba = {"e tenendo con li occhi e nel mondo",
                                        "che sotto regal facevan mi novo",
                                        "che 'l s'apparve un dell'altro fondo"};
  CHECK(score_r3(aba, syl) == 1.0);  // mondo / fondo
  const std::vector<std::string> off = {"che sotto regal facevan mi novo",
                                        "e tenendo con li occhi e nel mondo",
                                        "che 'l s'apparve un dell'altro fondo"};
  CHECK(score_r3(off, syl) == -1.0);  // novo / fondo
  const std::vector<std::string> two = {"nel mezzo del cammin", "mi ritrovai"};
  CHECK(score_r3(two, syl) == -1.0);
  CHECK(score_r3(std::vector<std::string>{}, syl) == -1.0);
}

TEST_CASE("score_r4 sums lexicon rewards and penalties") {
  Lexicon lex;
  for (const char* w : {"uno", "due", "tre", "quattro", "cinque", "sei", "sette", "otto", "nove",
                        "dieci"}) {
    lex.insert(w);
  }
  const std::vector<std::string> all_in = {"uno due tre quattro", "cinque sei sette", "otto nove dieci"};
  CHECK(score_r4(all_in, lex, 0.05, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  const std::vector<std::string> one_out = {"uno due tre quattro", "cinque sei sette", "otto nove fuori"};
  CHECK(score_r4(one_out, lex, 0.05, 1.0) == doctest::Approx(-0.55).epsilon(1e-12));
  CHECK(score_r4(std::vector<std::string>{}, lex, 0.05, 1.0) == 0.0);
}

TEST_CASE("r4 monotonicity: an out-of-lexicon word always costs more than it gains") {
  Lexicon lex;
  lex.insert("casa");
  lex.insert("sole");
  const std::vector<std::string> with_in = {"casa sole casa"};
  const std::vector<std::string> with_out = {"casa fuori casa"};
  CHECK(score_r4(with_out, lex, 0.05, 1.0) < score_r4(with_in, lex, 0.05, 1.0));
}

TEST_CASE("score_text_tercet: hand-computed golden tercet") {
  Syllabifier syl;
  // 3 verses of 11 syllables, 15 words, v1/v3 rhyme, every word in lexicon:
  // nel(1) mez-zo(2) del(1) cam-min(2) di(1) no-stra(2) vi-ta(2)        = 11
  // u-na(2) di-vi-na(3) com-me-dia(3) can-ta-va(3)                      = 11
  // ca-val-lo(3) bel-lez-za(3) stra-da(2) smar-ri-ta(3)                 = 11
  const std::vector<std::string> verses = {
      "nel mezzo del cammin di nostra vita",
      "una divina commedia cantava",
      "cavallo bellezza strada smarrita",
  };
  Lexicon lex;
  for (const char* w : {"nel", "mezzo", "del", "cammin", "di", "nostra", "vita", "una", "divina",
                        "commedia", "cantava", "cavallo", "bellezza", "strada", "smarrita"}) {
    lex.insert(w);
  }
  const Scores s = score_text_tercet(verses, syl, lex);
  CHECK(s.r1 == 1.0);
  CHECK(s.r2 == 1.0);
  CHECK(s.r3 == 1.0);
  CHECK(s.r4 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.r == doctest::Approx(0.9375).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic per seed and never re-emits <go>") {
  Fixture fx;
  GenConfig cfg;
  cfg.seed = 42;
  cfg.batch = 1;

  const TokenSeq a = sample_tercet(fx.params, fx.vocab, cfg, 0);
  const TokenSeq b = sample_tercet(fx.params, fx.vocab, cfg, 0);
  CHECK(a == b);
  const TokenSeq c = sample_tercet(fx.params, fx.vocab, cfg, 1);
  CHECK(a != c);

  for (int i = 0; i < 50; ++i) {
    const TokenSeq s = sample_tercet(fx.params, fx.vocab, cfg, static_cast<std::uint64_t>(i));
    REQUIRE(!s.ids.empty());
    CHECK(s.ids[0] == kGoId);
    int syllables = 0;
    for (std::size_t j = 1; j < s.ids.size(); ++j) {
      CHECK(s.ids[j] != kGoId);
      CHECK(s.ids[j] >= 0);
      CHECK(s.ids[j] < fx.vocab.size());
      if (!is_special_id(s.ids[j])) ++syllables;
    }
    CHECK(syllables <= cfg.max_syllables);
    const DecodedText d = decode(s, fx.vocab);  // must not throw
    (void)d;
  }
}

TEST_CASE("temperature -> 0 equals greedy argmax decoding") {
  Fixture fx;
  // widen the weights so logit gaps dwarf the 1e-6 temperature
  Rng rng(8);
  for (auto t : fx.params.tensors()) {
    for (float& w : t) w = static_cast<float>(rng.uniform(-0.8, 0.8));
  }
  GenConfig cfg;
  cfg.seed = 7;
  cfg.temperature = 1e-6;
  const TokenSeq sampled = sample_tercet(fx.params, fx.vocab, cfg, 3);

  // greedy replay
  LmState<float> state = LmState<float>::zeros(fx.params.dims.hidden);
  std::int32_t input = kGoId;
  int syllables = 0;
  std::vector<std::int32_t> greedy = {kGoId};
  while (true) {
    const auto out = lm_step(fx.params, state, input);
    state = out.state;
    std::int32_t best = -1;
    float best_logit = 0;
    for (std::int32_t v = 0; v < fx.vocab.size(); ++v) {
      if (v == kGoId) continue;
      const float l = out.logits[static_cast<std::size_t>(v)];
      if (best < 0 || l > best_logit) {
        best = v;
        best_logit = l;
      }
    }
    greedy.push_back(best);
    if (best == kEotId) break;
    if (!is_special_id(best)) {
      ++syllables;
      if (syllables >= cfg.max_syllables) break;
    }
    input = best;
  }
  CHECK(sampled.ids == greedy);
}

TEST_CASE("max_syllables cap is a hard stop") {
  Fixture fx;
  GenConfig cfg;
  cfg.seed = 11;
  cfg.max_syllables = 5;
  for (int i = 0; i < 20; ++i) {
    const TokenSeq s = sample_tercet(fx.params, fx.vocab, cfg, static_cast<std::uint64_t>(i));
    int syllables = 0;
    for (std::size_t j = 1; j < s.ids.size(); ++j) {
      if (!is_special_id(s.ids[j])) ++syllables;
    }
    CHECK(syllables <= 5);
  }
}

TEST_CASE("completed_verses drops material after the last <eov>") {
  Fixture fx;
  TokenSeq seq;
  const std::int32_t syl_a = 5;  // first non-special ids
  const std::int32_t syl_b = 6;
  seq.ids = {kGoId, syl_a, kSepId, syl_b, kEovId, syl_a, syl_b};  // trailing open verse
  const TercetStructure st = completed_verses(seq, fx.vocab);
  REQUIRE(st.verses.size() == 1);
  CHECK(st.verse_syllables == std::vector<int>{2});
  CHECK(st.verses[0] == fx.vocab.token_of(syl_a) + " " + fx.vocab.token_of(syl_b));

  // <unk> contributes text but no syllable count
  TokenSeq with_unk;
  with_unk.ids = {kGoId, syl_a, kUnkId, kEovId, kEotId};
  const TercetStructure st2 = completed_verses(with_unk, fx.vocab);
  REQUIRE(st2.verses.size() == 1);
  CHECK(st2.verse_syllables == std::vector<int>{1});
  CHECK(st2.verses[0] == fx.vocab.token_of(syl_a) + "<unk>");
}

TEST_CASE("r1 and r2 depend only on structure, not syllable identities") {
  Fixture fx;
  GenConfig cfg;
  cfg.seed = 77;
  const TokenSeq seq = sample_tercet(fx.params, fx.vocab, cfg, 0);
  const TercetStructure before = completed_verses(seq, fx.vocab);

  // permute non-special ids while keeping positions/counts intact
  TokenSeq permuted = seq;
  for (auto& id : permuted.ids) {
    if (!is_special_id(id)) {
      id = 5 + (id - 5 + 13) % (fx.vocab.size() - 5);
    }
  }
  const TercetStructure after = completed_verses(permuted, fx.vocab);
  CHECK(before.verse_syllables == after.verse_syllables);
  CHECK(score_r1(static_cast<int>(before.verses.size())) ==
        score_r1(static_cast<int>(after.verses.size())));
  CHECK(score_r2(before.verse_syllables) == score_r2(after.verse_syllables));
}

TEST_CASE("generate_best matches a brute-force re-score over the same batch") {
  Fixture fx;
  GenConfig cfg;
  cfg.seed = 99;
  cfg.batch = 50;
  cfg.top_k = 5;

  const auto best = generate_best(fx.params, fx.vocab, fx.syl, fx.lexicon, cfg, 2);
  REQUIRE(best.size() == 5);

  // independent pass: regenerate the identical batch, re-score, argmax
  double best_r = -1e300;
  int best_index = -1;
  for (int i = 0; i < cfg.batch; ++i) {
    const TokenSeq seq = sample_tercet(fx.params, fx.vocab, cfg, static_cast<std::uint64_t>(i));
    const TercetStructure st = completed_verses(seq, fx.vocab);
    const double r1 = score_r1(static_cast<int>(st.verses.size()));
    const double r2 = score_r2(st.verse_syllables);
    const double r3 = score_r3(st.verses, fx.syl);
    const double r4 = score_r4(st.verses, fx.lexicon, cfg.a, cfg.b);
    const double r = (r1 + r2 + r3 + r4) / 4.0;
    if (r > best_r) {
      best_r = r;
      best_index = i;
    }
  }
  CHECK(best[0].sample_index == best_index);
  CHECK(best[0].scores.r == doctest::Approx(best_r).epsilon(1e-12));

  // sorted non-increasing, ties by earlier index
  for (std::size_t i = 1; i < best.size(); ++i) {
    const bool ordered = best[i - 1].scores.r > best[i].scores.r ||
                         (best[i - 1].scores.r == best[i].scores.r &&
                          best[i - 1].sample_index < best[i].sample_index);
    CHECK(ordered);
  }

  // aggregate invariant
  for (const ScoredTercet& t : best) {
    CHECK(t.scores.r == (t.scores.r1 + t.scores.r2 + t.scores.r3 + t.scores.r4) / 4.0);
  }

  // re-scoring a stored tercet reproduces identical scores
  const ScoredTercet again =
      score_sample(best[0].tokens, best[0].sample_index, fx.vocab, fx.syl, fx.lexicon, cfg);
  CHECK(again.scores.r1 == best[0].scores.r1);
  CHECK(again.scores.r2 == best[0].scores.r2);
  CHECK(again.scores.r3 == best[0].scores.r3);
  CHECK(again.scores.r4 == best[0].scores.r4);
  CHECK(again.scores.r == best[0].scores.r);
}

TEST_CASE("generate_best with batch 1 returns that sample regardless of score") {
  Fixture fx;
  GenConfig cfg;
  cfg.seed = 5;
  cfg.batch = 1;
  cfg.top_k = 1;
  const auto best = generate_best(fx.params, fx.vocab, fx.syl, fx.lexicon, cfg, 1);
  REQUIRE(best.size() == 1);
  CHECK(best[0].sample_index == 0);
  CHECK(best[0].tokens == sample_tercet(fx.params, fx.vocab, cfg, 0));
}

TEST_CASE("generate_best is independent of the thread count") {
  Fixture fx;
  GenConfig cfg;
  cfg.seed = 31;
  cfg.batch = 24;
  cfg.top_k = 24;
  const auto a = generate_best(fx.params, fx.vocab, fx.syl, fx.lexicon, cfg, 1);
  const auto b = generate_best(fx.params, fx.vocab, fx.syl, fx.lexicon, cfg, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].scores.r == b[i].scores.r);
  }
}

TEST_CASE("GenConfig validation") {
  GenConfig cfg;
  cfg.batch = 1;
  cfg.top_k = 2;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = GenConfig{};
  cfg.max_syllables = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = GenConfig{};
  cfg.temperature = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = GenConfig{};
  cfg.a = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("lexicon save/load round-trip") {
  Fixture fx;
  const std::string path = "/tmp/verso_lexicon_test.txt";
  fx.lexicon.save(path);
  const Lexicon loaded = Lexicon::load(path);
  CHECK(loaded.size() == fx.lexicon.size());
  CHECK(loaded.contains("selva"));
  CHECK(loaded.contains("vita"));
  CHECK_FALSE(loaded.contains("zanzara"));
  std::remove(path.c_str());
}

TEST_CASE("output formatting: tercets and score sidecar") {
  ScoredTercet t1;
  t1.verses = {"primo verso", "secondo verso", "terzo verso"};
  t1.sample_index = 4;
  t1.scores = {1.0, -1.0, 1.0, 0.5, 0.375};
  ScoredTercet t2;
  t2.verses = {"altro verso"};
  t2.sample_index = 9;
  t2.scores = {-1.0, 1.0, -1.0, 0.0, -0.25};

  const std::vector<ScoredTercet> list = {t1, t2};
  CHECK(format_tercets(list) ==
        "primo verso\nsecondo verso\nterzo verso\n\naltro verso\n");
  const std::string sidecar = format_score_sidecar(list);
  CHECK(sidecar.find("index\tr1\tr2\tr3\tr4\tr\n") == 0);
  CHECK(sidecar.find("4\t1\t-1\t1\t0.5\t0.375\n") != std::string::npos);
  CHECK(sidecar.find("9\t-1\t1\t-1\t0\t-0.25\n") != std::string::npos);
}
