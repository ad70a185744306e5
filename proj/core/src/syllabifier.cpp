#include "verso/syllabifier.hpp"

#include <fstream>

#include "verso/errors.hpp"
#include "verso/special_tokens.hpp"
#include "verso/utf8.hpp"

namespace verso {

namespace {

constexpr char32_t kApostrophe = U'\'';

bool is_vowel(char32_t cp) {
  switch (cp) {
    case U'a': case U'e': case U'i': case U'o': case U'u':
    case 0xE0: case 0xE1: case 0xE2: case 0xE4:            // à á â ä
    case 0xE8: case 0xE9: case 0xEA: case 0xEB:            // è é ê ë
    case 0xEC: case 0xED: case 0xEE: case 0xEF:            // ì í î ï
    case 0xF2: case 0xF3: case 0xF4: case 0xF6:            // ò ó ô ö
    case 0xF9: case 0xFA: case 0xFB: case 0xFC:            // ù ú û ü
      return true;
    default:
      return false;
  }
}

// Unaccented i/u act as glides and never break a vowel cluster. Everything
// else (a/e/o and any accent- or diaeresis-marked vowel) is "strong".
bool is_weak_vowel(char32_t cp) { return cp == U'i' || cp == U'u'; }

bool is_strong_vowel(char32_t cp) { return is_vowel(cp) && !is_weak_vowel(cp); }

bool is_stop_or_f(char32_t cp) {
  switch (cp) {
    case U'b': case U'c': case U'd': case U'f': case U'g':
    case U'p': case U't': case U'v':
      return true;
    default:
      return false;
  }
}

bool is_liquid(char32_t cp) { return cp == U'l' || cp == U'r'; }

bool is_digraph(char32_t c1, char32_t c2) {
  if (c1 == U'c' && c2 == U'h') return true;
  if (c1 == U'g' && (c2 == U'h' || c2 == U'n' || c2 == U'l')) return true;
  if (c1 == U's' && c2 == U'c') return true;
  return false;
}

// Consonant sequences that may open a syllable.
bool is_legal_onset(std::u32string_view c) {
  switch (c.size()) {
    case 1:
      return true;
    case 2:
      if (is_stop_or_f(c[0]) && is_liquid(c[1])) return true;
      if (is_digraph(c[0], c[1])) return true;
      if (c[0] == U's' && c[1] != U's') return true;  // s impura, geminate excluded
      return false;
    case 3:
      if (c[0] != U's') return false;
      return (is_stop_or_f(c[1]) && is_liquid(c[2])) || is_digraph(c[1], c[2]);
    default:
      return false;
  }
}

// Core splitter for an all-letter word that contains at least one vowel.
std::vector<std::u32string> split_alpha(const std::u32string& w) {
  const std::size_t n = w.size();

  // Nucleus boundaries inside vowel runs: split between two vowels when the
  // first is strong and the second is either strong (hiatus) or a glide
  // claimed by a following vowel ("gio|ia", "a|iuo|la").
  std::vector<std::pair<std::size_t, std::size_t>> nuclei;  // [start,end) of vowel groups
  std::size_t i = 0;
  while (i < n) {
    if (!is_vowel(w[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < n && is_vowel(w[run_end])) ++run_end;
    std::size_t group_start = i;
    for (std::size_t k = i; k + 1 < run_end; ++k) {
      const bool has_third = k + 2 < run_end;
      if (is_strong_vowel(w[k]) && (is_strong_vowel(w[k + 1]) || has_third)) {
        nuclei.emplace_back(group_start, k + 1);
        group_start = k + 1;
      }
    }
    nuclei.emplace_back(group_start, run_end);
    i = run_end;
  }

  // Place syllable boundaries inside the consonant gap between consecutive
  // nuclei: the longest legal onset goes right, the rest closes the left
  // syllable. Leading and trailing consonants stick to the edge nuclei.
  std::vector<std::size_t> boundaries;
  for (std::size_t g = 0; g + 1 < nuclei.size(); ++g) {
    const std::size_t gap_begin = nuclei[g].second;
    const std::size_t gap_end = nuclei[g + 1].first;
    const std::size_t gap_len = gap_end - gap_begin;
    std::size_t onset = std::min<std::size_t>(gap_len, 3);
    while (onset > 1 && !is_legal_onset(std::u32string_view(w).substr(gap_end - onset, onset))) {
      --onset;
    }
    boundaries.push_back(gap_end - onset);
  }

  std::vector<std::u32string> out;
  std::size_t prev = 0;
  for (std::size_t b : boundaries) {
    out.push_back(w.substr(prev, b - prev));
    prev = b;
  }
  out.push_back(w.substr(prev));
  return out;
}

bool has_vowel(const std::u32string& w) {
  for (char32_t cp : w) {
    if (is_vowel(cp)) return true;
  }
  return false;
}

}  // namespace

Syllabifier::Syllabifier() {
  // Stressed-i/u hiatus words the orthographic rules cannot see.
  add_exception("paura", {"pa", "u", "ra"});
  add_exception("paure", {"pa", "u", "re"});
  add_exception("baule", {"ba", "u", "le"});
  add_exception("bauli", {"ba", "u", "li"});
  add_exception("bugia", {"bu", "gi", "a"});
  add_exception("bugie", {"bu", "gi", "e"});
  add_exception("poesia", {"po", "e", "si", "a"});
  add_exception("poesie", {"po", "e", "si", "e"});
  add_exception("follia", {"fol", "li", "a"});
  add_exception("follie", {"fol", "li", "e"});
  add_exception("magia", {"ma", "gi", "a"});
  add_exception("magie", {"ma", "gi", "e"});
  add_exception("energia", {"e", "ner", "gi", "a"});
  add_exception("energie", {"e", "ner", "gi", "e"});
  add_exception("armonia", {"ar", "mo", "ni", "a"});
  add_exception("armonie", {"ar", "mo", "ni", "e"});
}

void Syllabifier::add_exception(std::string_view word, std::vector<std::string> syllables) {
  exceptions_[std::string(word)] = std::move(syllables);
}

void Syllabifier::load_exceptions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open exception lexicon: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 'word TAB syl-syl-syl'");
    }
    const std::string word = line.substr(0, tab);
    const std::string hyphenated = line.substr(tab + 1);
    std::vector<std::string> syllables;
    std::size_t start = 0;
    while (start <= hyphenated.size()) {
      std::size_t dash = hyphenated.find('-', start);
      if (dash == std::string::npos) dash = hyphenated.size();
      syllables.push_back(hyphenated.substr(start, dash - start));
      start = dash + 1;
    }
    std::string joined;
    for (const std::string& s : syllables) joined += s;
    if (word.empty() || joined != word) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": syllables do not concatenate back to the word");
    }
    add_exception(word, std::move(syllables));
  }
}

std::optional<SyllableBreakdown> Syllabifier::syllabify(std::string_view word) const {
  if (word.empty()) return std::nullopt;

  if (const auto it = exceptions_.find(std::string(word)); it != exceptions_.end()) {
    return SyllableBreakdown{std::string(word), it->second};
  }

  const std::u32string cps = utf8::decode_all(word);

  // Fragments split at apostrophes; each apostrophe stays with the fragment
  // on its left when there is one ("s'|apparve", "po'"), otherwise with the
  // fragment on its right ("'l", "'ntelletto").
  struct Fragment {
    bool leading_apostrophe = false;
    bool trailing_apostrophe = false;
    std::u32string letters;
  };
  std::vector<Fragment> fragments;
  Fragment current;
  for (char32_t cp : cps) {
    if (cp == kApostrophe) {
      if (current.letters.empty() && !current.leading_apostrophe && fragments.empty()) {
        current.leading_apostrophe = true;
      } else {
        current.trailing_apostrophe = true;
        fragments.push_back(std::move(current));
        current = Fragment{};
      }
    } else {
      current.letters.push_back(cp);
    }
  }
  if (!current.letters.empty() || current.leading_apostrophe) {
    fragments.push_back(std::move(current));
  }
  if (fragments.empty()) return std::nullopt;

  bool any_vowel = false;
  for (const Fragment& f : fragments) any_vowel = any_vowel || has_vowel(f.letters);
  const bool has_apostrophe = cps.find(kApostrophe) != std::u32string::npos;
  if (!any_vowel) {
    // Clitic forms like "'l" stand as a single token; anything else vowelless
    // is not syllabifiable.
    if (has_apostrophe) {
      return SyllableBreakdown{std::string(word), {std::string(word)}};
    }
    return std::nullopt;
  }

  std::vector<std::u32string> syllables;
  std::u32string pending;  // vowelless fragments waiting to join the next syllable
  for (const Fragment& f : fragments) {
    std::u32string prefix = pending;
    pending.clear();
    if (f.leading_apostrophe) prefix += kApostrophe;
    if (!has_vowel(f.letters)) {
      pending = prefix + f.letters;
      if (f.trailing_apostrophe) pending += kApostrophe;
      continue;
    }
    std::vector<std::u32string> parts = split_alpha(f.letters);
    parts.front() = prefix + parts.front();
    if (f.trailing_apostrophe) parts.back() += kApostrophe;
    for (auto& p : parts) syllables.push_back(std::move(p));
  }
  if (!pending.empty()) {
    // Trailing vowelless fragment: close it onto the last syllable.
    syllables.back() += pending;
  }

  SyllableBreakdown out;
  out.word = std::string(word);
  out.syllables.reserve(syllables.size());
  for (const std::u32string& s : syllables) out.syllables.push_back(utf8::encode_all(s));
  return out;
}

std::vector<std::string> Syllabifier::syllabify_verse(std::string_view verse) const {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  bool first_word = true;
  while (start <= verse.size()) {
    std::size_t space = verse.find(' ', start);
    if (space == std::string_view::npos) space = verse.size();
    std::string_view word = verse.substr(start, space - start);
    if (!word.empty()) {
      if (!first_word) tokens.emplace_back(kSepToken);
      first_word = false;
      if (auto bd = syllabify(word)) {
        for (auto& s : bd->syllables) tokens.push_back(std::move(s));
      } else {
        tokens.emplace_back(word);  // opaque fallback for vowelless words
      }
    }
    if (space == verse.size()) break;
    start = space + 1;
  }
  return tokens;
}

int count_verse_syllables(std::span<const std::string> tokens) {
  int count = 0;
  for (const std::string& t : tokens) {
    if (!is_special_token(t)) ++count;
  }
  return count;
}

}  // namespace verso
