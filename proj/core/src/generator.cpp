#include "verso/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "verso/errors.hpp"
#include "verso/rng.hpp"
#include "verso/special_tokens.hpp"
#include "verso/utf8.hpp"

namespace verso {

void GenConfig::validate() const {
  if (max_syllables < 1) throw DataError("max_syllables must be >= 1");
  if (top_k < 1) throw DataError("top_k must be >= 1");
  if (batch < top_k) throw DataError("batch must be >= top_k");
  if (temperature <= 0) throw DataError("temperature must be positive");
  if (a <= 0) throw DataError("score constant a must be positive");
  if (b <= 0) throw DataError("score constant b must be positive");
}

Lexicon Lexicon::from_tercets(std::span<const TercetText> tercets) {
  Lexicon lex;
  for (const TercetText& t : tercets) {
    for (const std::string& verse : t.verses) {
      std::size_t start = 0;
      while (start <= verse.size()) {
        std::size_t sp = verse.find(' ', start);
        if (sp == std::string::npos) sp = verse.size();
        if (sp > start) lex.insert(std::string_view(verse).substr(start, sp - start));
        if (sp == verse.size()) break;
        start = sp + 1;
      }
    }
  }
  return lex;
}

Lexicon Lexicon::from_lines(std::span<const std::string> normalized_lines) {
  Lexicon lex;
  for (const std::string& line : normalized_lines) {
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t sp = line.find(' ', start);
      if (sp == std::string::npos) sp = line.size();
      if (sp > start) lex.insert(std::string_view(line).substr(start, sp - start));
      if (sp == line.size()) break;
      start = sp + 1;
    }
  }
  return lex;
}

void Lexicon::save(const std::string& path) const {
  std::vector<std::string> sorted(words_.begin(), words_.end());
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (const std::string& w : sorted) {
    out += w;
    out.push_back('\n');
  }
  write_text_file(path, out);
}

Lexicon Lexicon::load(const std::string& path) {
  Lexicon lex;
  const std::string contents = read_text_file(path);
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    std::string_view word(contents.data() + start, end - start);
    while (!word.empty() && (word.back() == '\r' || word.back() == ' ')) word.remove_suffix(1);
    if (!word.empty()) lex.insert(word);
    start = end + 1;
  }
  return lex;
}

TokenSeq sample_tercet(const ModelParams<float>& params, const Vocabulary& vocab,
                       const GenConfig& cfg, std::uint64_t sample_index) {
  cfg.validate();
  if (vocab.size() != params.dims.vocab) {
    throw DataError("vocabulary size does not match the model");
  }
  Rng rng(cfg.seed + sample_index);
  const std::int32_t vocab_size = params.dims.vocab;

  TokenSeq seq;
  seq.ids.push_back(kGoId);
  LmState<float> state = LmState<float>::zeros(params.dims.hidden);
  std::int32_t input = kGoId;
  int syllables = 0;
  // Safety net against degenerate models that emit only structural tokens.
  const int max_total_tokens = cfg.max_syllables * 8 + 16;

  std::vector<double> probs(static_cast<std::size_t>(vocab_size));
  while (static_cast<int>(seq.ids.size()) < max_total_tokens) {
    const StepOutput<float> out = lm_step(params, state, input);
    state = out.state;

    // Temperature-scaled softmax in double, <go> masked out, renormalized.
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::int32_t v = 0; v < vocab_size; ++v) {
      if (v == kGoId) continue;
      max_logit = std::max(max_logit,
                           static_cast<double>(out.logits[static_cast<std::size_t>(v)]) /
                               cfg.temperature);
    }
    double total = 0;
    for (std::int32_t v = 0; v < vocab_size; ++v) {
      if (v == kGoId) {
        probs[static_cast<std::size_t>(v)] = 0;
        continue;
      }
      const double e = std::exp(
          static_cast<double>(out.logits[static_cast<std::size_t>(v)]) / cfg.temperature -
          max_logit);
      probs[static_cast<std::size_t>(v)] = e;
      total += e;
    }

    const double u = rng.next_double() * total;
    double cumulative = 0;
    std::int32_t drawn = -1;
    for (std::int32_t v = 0; v < vocab_size; ++v) {
      cumulative += probs[static_cast<std::size_t>(v)];
      if (u < cumulative) {
        drawn = v;
        break;
      }
    }
    if (drawn < 0) {  // float rounding pushed u past the last mass
      drawn = vocab_size - 1;
      while (drawn > 0 && probs[static_cast<std::size_t>(drawn)] <= 0) --drawn;
    }

    seq.ids.push_back(drawn);
    if (drawn == kEotId) break;
    if (!is_special_id(drawn)) {
      ++syllables;
      if (syllables >= cfg.max_syllables) break;
    }
    input = drawn;
  }
  return seq;
}

double score_r1(int verse_count) { return -std::abs(verse_count - 3) + 1.0; }

double score_r2(std::span<const int> verse_syllables) {
  double penalty = 0;
  for (int count : verse_syllables) penalty += std::abs(count - 11);
  return -penalty + 1.0;
}

namespace {

bool is_stress_accented(char32_t cp) {
  switch (cp) {
    case 0xE0: case 0xE1:  // à á
    case 0xE8: case 0xE9:  // è é
    case 0xEC: case 0xED:  // ì í
    case 0xF2: case 0xF3:  // ò ó
    case 0xF9: case 0xFA:  // ù ú
      return true;
    default:
      return false;
  }
}

bool is_vowel_cp(char32_t cp) {
  switch (cp) {
    case U'a': case U'e': case U'i': case U'o': case U'u':
    case 0xE0: case 0xE1: case 0xE2: case 0xE4:
    case 0xE8: case 0xE9: case 0xEA: case 0xEB:
    case 0xEC: case 0xED: case 0xEE: case 0xEF:
    case 0xF2: case 0xF3: case 0xF4: case 0xF6:
    case 0xF9: case 0xFA: case 0xFB: case 0xFC:
      return true;
    default:
      return false;
  }
}

bool is_weak_cp(char32_t cp) { return cp == U'i' || cp == U'u'; }

// Suffix from the stressed vowel onward, empty optional when no vowel.
std::optional<std::string> rhyme_suffix(std::string_view word, const Syllabifier& syllabifier) {
  std::u32string stripped;
  for (char32_t cp : utf8::decode_all(word)) {
    if (cp != U'\'') stripped.push_back(cp);
  }
  if (stripped.empty()) return std::nullopt;
  bool any_vowel = false;
  for (char32_t cp : stripped) any_vowel = any_vowel || is_vowel_cp(cp);
  if (!any_vowel) return std::nullopt;

  // Oxytone: accent-marked final vowel.
  if (is_stress_accented(stripped.back())) {
    return utf8::encode_all(std::u32string_view(&stripped.back(), 1));
  }

  const auto bd = syllabifier.syllabify(utf8::encode_all(stripped));
  if (!bd) return std::nullopt;
  const std::size_t n = bd->syllables.size();
  const std::size_t stressed = n >= 2 ? n - 2 : 0;

  std::size_t offset = 0;  // codepoint offset of the stressed syllable
  std::vector<std::u32string> syls;
  syls.reserve(n);
  for (const std::string& s : bd->syllables) syls.push_back(utf8::decode_all(s));
  for (std::size_t i = 0; i < stressed; ++i) offset += syls[i].size();

  const std::u32string& syl = syls[stressed];
  std::size_t vowel_pos = syl.size();
  for (std::size_t i = 0; i < syl.size(); ++i) {
    if (is_vowel_cp(syl[i]) && !is_weak_cp(syl[i])) vowel_pos = i;  // last strong vowel
  }
  if (vowel_pos == syl.size()) {
    for (std::size_t i = 0; i < syl.size(); ++i) {
      if (is_vowel_cp(syl[i])) {
        vowel_pos = i;
        break;
      }
    }
  }
  if (vowel_pos == syl.size()) return std::nullopt;  // clitic syllable without a vowel
  return utf8::encode_all(std::u32string_view(stripped).substr(offset + vowel_pos));
}

std::string_view last_word(std::string_view verse) {
  const std::size_t sp = verse.find_last_of(' ');
  return sp == std::string_view::npos ? verse : verse.substr(sp + 1);
}

}  // namespace

bool rhymes(std::string_view w1, std::string_view w2, const Syllabifier& syllabifier) {
  const auto s1 = rhyme_suffix(w1, syllabifier);
  const auto s2 = rhyme_suffix(w2, syllabifier);
  return s1.has_value() && s2.has_value() && *s1 == *s2;
}

double score_r3(std::span<const std::string> verses, const Syllabifier& syllabifier) {
  if (verses.size() < 3) return -1.0;
  return rhymes(last_word(verses[0]), last_word(verses[2]), syllabifier) ? 1.0 : -1.0;
}

double score_r4(std::span<const std::string> verses, const Lexicon& lexicon, double a, double b) {
  double total = 0;
  for (const std::string& verse : verses) {
    std::size_t start = 0;
    while (start <= verse.size()) {
      std::size_t sp = verse.find(' ', start);
      if (sp == std::string::npos) sp = verse.size();
      if (sp > start) {
        const std::string_view word = std::string_view(verse).substr(start, sp - start);
        total += lexicon.contains(word) ? a : -b;
      }
      if (sp == verse.size()) break;
      start = sp + 1;
    }
  }
  return total;
}

Scores score_verses(std::span<const std::string> verses, std::span<const int> verse_syllables,
                    const Syllabifier& syllabifier, const Lexicon& lexicon, double a, double b) {
  Scores s;
  s.r1 = score_r1(static_cast<int>(verses.size()));
  s.r2 = score_r2(verse_syllables);
  s.r3 = score_r3(verses, syllabifier);
  s.r4 = score_r4(verses, lexicon, a, b);
  s.r = (s.r1 + s.r2 + s.r3 + s.r4) / 4.0;
  return s;
}

Scores score_text_tercet(std::span<const std::string> verses, const Syllabifier& syllabifier,
                         const Lexicon& lexicon, double a, double b) {
  std::vector<int> counts;
  counts.reserve(verses.size());
  for (const std::string& verse : verses) {
    const std::vector<std::string> tokens = syllabifier.syllabify_verse(verse);
    counts.push_back(count_verse_syllables(tokens));
  }
  return score_verses(verses, counts, syllabifier, lexicon, a, b);
}

TercetStructure completed_verses(const TokenSeq& seq, const Vocabulary& vocab) {
  TercetStructure out;
  std::string verse;
  std::string word;
  int syllables = 0;
  const auto flush_word = [&] {
    if (word.empty()) return;
    if (!verse.empty()) verse.push_back(' ');
    verse += word;
    word.clear();
  };
  for (std::int32_t id : seq.ids) {
    if (id == kGoId) continue;
    if (id == kEotId) break;
    if (id == kSepId) {
      flush_word();
      continue;
    }
    if (id == kEovId) {
      flush_word();
      out.verses.push_back(std::move(verse));
      out.verse_syllables.push_back(syllables);
      verse.clear();
      syllables = 0;
      continue;
    }
    word += vocab.token_of(id);
    if (!is_special_id(id)) ++syllables;
  }
  // Anything after the last <eov> was cut off by the cap; it is not a verse.
  return out;
}

ScoredTercet score_sample(const TokenSeq& seq, int sample_index, const Vocabulary& vocab,
                          const Syllabifier& syllabifier, const Lexicon& lexicon,
                          const GenConfig& cfg) {
  ScoredTercet st;
  st.tokens = seq;
  st.sample_index = sample_index;
  TercetStructure structure = completed_verses(seq, vocab);
  st.scores = score_verses(structure.verses, structure.verse_syllables, syllabifier, lexicon,
                           cfg.a, cfg.b);
  st.verses = std::move(structure.verses);
  return st;
}

std::vector<ScoredTercet> generate_best(const ModelParams<float>& params, const Vocabulary& vocab,
                                        const Syllabifier& syllabifier, const Lexicon& lexicon,
                                        const GenConfig& cfg, int threads) {
  cfg.validate();
  std::vector<ScoredTercet> scored(static_cast<std::size_t>(cfg.batch));

  const auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const TokenSeq seq = sample_tercet(params, vocab, cfg, static_cast<std::uint64_t>(i));
      scored[static_cast<std::size_t>(i)] =
          score_sample(seq, i, vocab, syllabifier, lexicon, cfg);
    }
  };

  const int n_threads = std::max(1, std::min(threads, cfg.batch));
  if (n_threads == 1) {
    worker(0, cfg.batch);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k) {
      const int begin = cfg.batch * k / n_threads;
      const int end = cfg.batch * (k + 1) / n_threads;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  std::stable_sort(scored.begin(), scored.end(), [](const ScoredTercet& a, const ScoredTercet& b) {
    if (a.scores.r != b.scores.r) return a.scores.r > b.scores.r;
    return a.sample_index < b.sample_index;
  });
  scored.resize(static_cast<std::size_t>(std::min(cfg.top_k, cfg.batch)));
  return scored;
}

std::string format_tercets(std::span<const ScoredTercet> tercets) {
  std::string out;
  for (std::size_t i = 0; i < tercets.size(); ++i) {
    if (i > 0) out.push_back('\n');
    for (const std::string& verse : tercets[i].verses) {
      out += verse;
      out.push_back('\n');
    }
  }
  return out;
}

std::string format_score_sidecar(std::span<const ScoredTercet> tercets) {
  std::ostringstream out;
  out << "index\tr1\tr2\tr3\tr4\tr\n";
  for (const ScoredTercet& t : tercets) {
    out << t.sample_index << '\t' << t.scores.r1 << '\t' << t.scores.r2 << '\t' << t.scores.r3
        << '\t' << t.scores.r4 << '\t' << t.scores.r << '\n';
  }
  return out.str();
}

}  // namespace verso
