#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "verso/corpus.hpp"
#include "verso/model.hpp"
#include "verso/syllabifier.hpp"
#include "verso/vocab.hpp"

namespace verso {

struct GenConfig {
  int max_syllables = 75;
  int batch = 2000;
  int top_k = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  double a = 0.05;  // reward for words of the target lexicon
  double b = 1.0;   // penalty for invented words

  void validate() const;  // throws DataError
};

struct Scores {
  double r1 = 0;
  double r2 = 0;
  double r3 = 0;
  double r4 = 0;
  double r = 0;  // (r1+r2+r3+r4)/4
};

struct ScoredTercet {
  TokenSeq tokens;
  std::vector<std::string> verses;  // completed verses (those closed by <eov>)
  Scores scores;
  int sample_index = 0;
};

// Whole words of the target corpus, for the lexicon score.
class Lexicon {
 public:
  static Lexicon from_tercets(std::span<const TercetText> tercets);
  static Lexicon from_lines(std::span<const std::string> normalized_lines);

  void insert(std::string_view word) { words_.emplace(word); }
  bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
  std::size_t size() const { return words_.size(); }

  void save(const std::string& path) const;  // sorted, one word per line
  static Lexicon load(const std::string& path);

 private:
  std::unordered_set<std::string> words_;
};

// Monte-Carlo sample: starts from a zero state and <go>, draws each next
// token from the softmax of logits/temperature (with <go> masked out and the
// rest renormalized), and stops at <eot> or once max_syllables non-special
// tokens were emitted. The returned sequence begins with <go>. The stream is
// seeded from cfg.seed + sample_index.
TokenSeq sample_tercet(const ModelParams<float>& params, const Vocabulary& vocab,
                       const GenConfig& cfg, std::uint64_t sample_index);

// -abs(#verses - 3) + 1
double score_r1(int verse_count);

// -sum_v abs(|v| - 11) + 1 over the given per-verse syllable counts
double score_r2(std::span<const int> verse_syllables);

// Rhyme predicate: suffixes from the stressed vowel onward must match.
// Stress heuristic: an accent-marked final vowel is stressed; otherwise the
// penultimate syllable carries the stress (its last strong vowel, or its
// first vowel when none is strong). Apostrophes are stripped first.
// Vowel-less words never rhyme.
bool rhymes(std::string_view w1, std::string_view w2, const Syllabifier& syllabifier);

// +1 when the last words of the first and third verse rhyme, else -1;
// fewer than 3 verses also scores -1.
double score_r3(std::span<const std::string> verses, const Syllabifier& syllabifier);

// sum over words: +a if the word is in the lexicon, else -b
double score_r4(std::span<const std::string> verses, const Lexicon& lexicon, double a, double b);

Scores score_verses(std::span<const std::string> verses, std::span<const int> verse_syllables,
                    const Syllabifier& syllabifier, const Lexicon& lexicon, double a, double b);

// Scores a plain-text tercet (verse syllable counts via the syllabifier).
Scores score_text_tercet(std::span<const std::string> verses, const Syllabifier& syllabifier,
                         const Lexicon& lexicon, double a = 0.05, double b = 1.0);

// Completed verses of a sampled sequence: decoded text plus the per-verse
// syllable-token counts. Material after the last <eov> is dropped.
struct TercetStructure {
  std::vector<std::string> verses;
  std::vector<int> verse_syllables;
};
TercetStructure completed_verses(const TokenSeq& seq, const Vocabulary& vocab);

ScoredTercet score_sample(const TokenSeq& seq, int sample_index, const Vocabulary& vocab,
                          const Syllabifier& syllabifier, const Lexicon& lexicon,
                          const GenConfig& cfg);

// Samples cfg.batch tercets, scores each, and returns the top_k by
// descending r; ties go to the earlier sample index. Sampling is
// parallelized over the batch; each sample owns its own rng stream, so the
// result does not depend on the thread count.
std::vector<ScoredTercet> generate_best(const ModelParams<float>& params, const Vocabulary& vocab,
                                        const Syllabifier& syllabifier, const Lexicon& lexicon,
                                        const GenConfig& cfg, int threads = 1);

// Tercets separated by blank lines.
std::string format_tercets(std::span<const ScoredTercet> tercets);

// Tab-separated score sidecar: index, r1, r2, r3, r4, r.
std::string format_score_sidecar(std::span<const ScoredTercet> tercets);

}  // namespace verso
