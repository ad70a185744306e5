#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "verso/corpus.hpp"
#include "verso/syllabifier.hpp"
#include "verso/vocab.hpp"

using namespace verso;

namespace {

std::vector<std::vector<std::string>> tokens_of(std::initializer_list<const char*> toks) {
  std::vector<std::vector<std::string>> out;
  out.emplace_back();
  for (const char* t : toks) out.back().emplace_back(t);
  return out;
}

}  // namespace

TEST_CASE("build_vocab: specials first, then syllables by frequency") {
  const auto corpus = tokens_of({"mo", "re", "mo", "<sep>", "a", "mo", "re"});
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.size() == 8);  // 5 specials + mo, re, a
  CHECK(v.token_of(kSepId) == "<sep>");
  CHECK(v.token_of(kGoId) == "<go>");
  CHECK(v.token_of(kEovId) == "<eov>");
  CHECK(v.token_of(kEotId) == "<eot>");
  CHECK(v.token_of(kUnkId) == "<unk>");
  CHECK(v.token_of(5) == "mo");  // freq 3
  CHECK(v.token_of(6) == "re");  // freq 2
  CHECK(v.token_of(7) == "a");   // freq 1
  CHECK(v.id_of("mo") == 5);
  CHECK(v.id_of("never-seen") == kUnkId);
  CHECK_FALSE(v.find("never-seen").has_value());
}

TEST_CASE("build_vocab: frequency ties break lexicographically") {
  const auto corpus = tokens_of({"zz", "ba", "zz", "ba", "ab"});
  const Vocabulary v = Vocabulary::build(corpus);
  // ba and zz tie at 2: ba first; ab has 1
  CHECK(v.token_of(5) == "ba");
  CHECK(v.token_of(6) == "zz");
  CHECK(v.token_of(7) == "ab");
}

TEST_CASE("build_vocab: 1879 distinct syllables give |V| = 1884") {
  std::vector<std::vector<std::string>> corpus;
  corpus.emplace_back();
  for (int i = 0; i < 1879; ++i) corpus.back().push_back("syl" + std::to_string(i));
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.size() == 1884);
}

TEST_CASE("build_vocab: minimal and empty corpora") {
  CHECK(Vocabulary::build(tokens_of({"a"})).size() == 6);
  CHECK_THROWS_AS(Vocabulary::build(std::vector<std::vector<std::string>>{}), EmptyCorpusError);
  // a corpus of only separators has no syllables
  CHECK_THROWS_AS(Vocabulary::build(tokens_of({"<sep>", "<sep>"})), EmptyCorpusError);
}

TEST_CASE("encode_tercet layout: go, verses with eov, eot") {
  Syllabifier syl;
  const auto corpus = tokens_of({"a", "e", "o"});
  const Vocabulary v = Vocabulary::build(corpus);
  TercetText t;
  t.verses = {"a", "e", "o"};
  const TokenSeq seq = encode_tercet(t, v, syl);
  REQUIRE(seq.ids.size() == 8);  // go + 3 x (syllable, eov) + eot
  CHECK(seq.ids[0] == kGoId);
  CHECK(seq.ids[2] == kEovId);
  CHECK(seq.ids[4] == kEovId);
  CHECK(seq.ids[6] == kEovId);
  CHECK(seq.ids[7] == kEotId);
}

TEST_CASE("encode maps out-of-vocabulary syllables to <unk>") {
  Syllabifier syl;
  const auto corpus = tokens_of({"mon", "do"});
  const Vocabulary v = Vocabulary::build(corpus);
  TercetText t;
  t.verses = {"mondo", "zanzara", "mondo"};  // zan/za/ra are OOV
  const TokenSeq seq = encode_tercet(t, v, syl);
  int unks = 0;
  for (auto id : seq.ids) unks += id == kUnkId ? 1 : 0;
  CHECK(unks == 3);
  const DecodedText d = decode(seq, v);
  REQUIRE(d.verses.size() == 3);
  CHECK(d.verses[0] == "mondo");
  CHECK(d.verses[1] == "<unk><unk><unk>");
}

TEST_CASE("decode merges syllables and splits verses") {
  Syllabifier syl;
  const auto corpus = tokens_of({"nel", "mez", "zo"});
  const Vocabulary v = Vocabulary::build(corpus);
  TokenSeq seq;
  seq.ids = {kGoId, v.id_of("nel"), kSepId, v.id_of("mez"), v.id_of("zo"), kEovId, kEotId};
  const DecodedText d = decode(seq, v);
  REQUIRE(d.verses.size() == 1);
  CHECK(d.verses[0] == "nel mezzo");

  // no <eot>: trailing material is decoded as-is
  TokenSeq open;
  open.ids = {kGoId, v.id_of("nel"), kEovId, v.id_of("mez"), v.id_of("zo")};
  const DecodedText d2 = decode(open, v);
  REQUIRE(d2.verses.size() == 2);
  CHECK(d2.verses[1] == "mezzo");

  CHECK(decode(TokenSeq{}, v).verses.empty());
}

TEST_CASE("decode(encode(t)) reproduces normalized tercet text") {
  Syllabifier syl;
  const auto tercets = load_tercet_file(std::string(VERSO_TEST_DATA_DIR) + "/sample_tercets.txt");
  REQUIRE(!tercets.empty());

  std::vector<std::vector<std::string>> token_seqs;
  for (const TercetText& t : tercets) {
    for (const std::string& verse : t.verses) {
      token_seqs.push_back(syl.syllabify_verse(verse));
    }
  }
  const Vocabulary v = Vocabulary::build(token_seqs);

  for (const TercetText& t : tercets) {
    const DecodedText d = decode(encode_tercet(t, v, syl), v);
    REQUIRE(d.verses.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(d.verses[static_cast<std::size_t>(k)] == t.verses[static_cast<std::size_t>(k)]);
  }
}

TEST_CASE("vocabulary serialization round-trips bit-exact") {
  Syllabifier syl;
  const auto tercets = load_tercet_file(std::string(VERSO_TEST_DATA_DIR) + "/sample_tercets.txt");
  std::vector<std::vector<std::string>> token_seqs;
  for (const TercetText& t : tercets) {
    for (const std::string& verse : t.verses) token_seqs.push_back(syl.syllabify_verse(verse));
  }
  const Vocabulary v = Vocabulary::build(token_seqs);
  const std::string text = v.to_text();
  const Vocabulary loaded = Vocabulary::from_text(text);
  CHECK(loaded.to_text() == text);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.content_hash() == v.content_hash());
  for (std::int32_t i = 0; i < v.size(); ++i) CHECK(loaded.token_of(i) == v.token_of(i));

  // tampering breaks the hash check
  std::string tampered = text;
  const std::size_t pos = tampered.rfind('\n', tampered.size() - 2);
  tampered.insert(pos + 1, "x");
  CHECK_THROWS_AS(Vocabulary::from_text(tampered), DataError);
}

TEST_CASE("encode_prose_sentence wraps in go/eot and chunks long sentences") {
  Syllabifier syl;
  const auto corpus = tokens_of({"la", "ca", "sa"});
  const Vocabulary v = Vocabulary::build(corpus);

  const auto seqs = encode_prose_sentence("la casa", v, syl);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].ids.front() == kGoId);
  CHECK(seqs[0].ids.back() == kEotId);
  CHECK(seqs[0].ids.size() == 6);  // go la <sep> ca sa eot

  // chunking at word boundaries: max 8 ids per sequence
  std::string longer = "casa";
  for (int i = 0; i < 20; ++i) longer += " casa";
  const auto chunks = encode_prose_sentence(longer, v, syl, 8);
  CHECK(chunks.size() > 1);
  for (const TokenSeq& c : chunks) {
    CHECK(c.ids.size() <= 8);
    CHECK(c.ids.front() == kGoId);
    CHECK(c.ids.back() == kEotId);
    CHECK(c.ids[1] != kSepId);                    // chunks never start on a separator
    CHECK(c.ids[c.ids.size() - 2] != kSepId);     // nor end on one
  }
  // all syllable tokens survive chunking
  std::size_t syllables = 0;
  for (const TokenSeq& c : chunks) {
    for (auto id : c.ids) syllables += !is_special_id(id) ? 1 : 0;
  }
  CHECK(syllables == 42);  // 21 words x 2 syllables

  CHECK(encode_prose_sentence("", v, syl).empty());
}

TEST_CASE("encode_verse_line wraps in go/eov/eot") {
  Syllabifier syl;
  const auto corpus = tokens_of({"so", "le"});
  const Vocabulary v = Vocabulary::build(corpus);
  const TokenSeq seq = encode_verse_line("sole", v, syl);
  REQUIRE(seq.ids.size() == 5);
  CHECK(seq.ids[0] == kGoId);
  CHECK(seq.ids[3] == kEovId);
  CHECK(seq.ids[4] == kEotId);
}
