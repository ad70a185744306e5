#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace verso {

struct SyllableBreakdown {
  std::string word;
  std::vector<std::string> syllables;  // concatenation equals word exactly
};

// Deterministic orthographic syllabification for Italian.
//
// The rule set is the standard one: a single consonant opens the next
// syllable, geminates split, s+consonant clusters and stop+liquid clusters
// attach forward, the digraphs ch/gh/gn/gl/sc never split, weak-vowel
// (unaccented i/u) diphthongs stay whole, and adjacent strong vowels are a
// hiatus and split. Words that genuinely violate the rules (stressed i/u in
// hiatus, e.g. "pa-u-ra") come from an exception lexicon; a small built-in
// table covers common cases and more entries can be loaded from a file.
//
// Stateless after construction; safe for concurrent use.
class Syllabifier {
 public:
  Syllabifier();

  // Exception lexicon file: one entry per line, "word TAB syl-syl-syl".
  // Blank lines and lines starting with '#' are ignored.
  void load_exceptions(const std::string& path);
  void add_exception(std::string_view word, std::vector<std::string> syllables);
  std::size_t exception_count() const { return exceptions_.size(); }

  // Splits a normalized word. Returns nullopt when the word has no vowel
  // and no elision apostrophe to license it (the caller may keep such a
  // word as a single opaque token).
  std::optional<SyllableBreakdown> syllabify(std::string_view word) const;

  // Syllables of every word of a normalized verse, with kSepToken between
  // words. Words without vowels fall back to a single opaque token.
  std::vector<std::string> syllabify_verse(std::string_view verse) const;

 private:
  std::unordered_map<std::string, std::vector<std::string>> exceptions_;
};

// Number of syllable tokens in a verse: specials (<sep> and the structural
// tokens) count zero, everything else counts one.
int count_verse_syllables(std::span<const std::string> tokens);

}  // namespace verso
