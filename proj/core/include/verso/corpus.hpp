#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "verso/errors.hpp"

namespace verso {

// One tercet: exactly three normalized, non-empty verses.
struct TercetText {
  std::array<std::string, 3> verses;
  bool operator==(const TercetText&) const = default;
};

// Lowercases, strips punctuation and collapses whitespace. Apostrophes that
// touch a letter mark elision and stay attached to their word; every other
// punctuation character is dropped. Idempotent.
std::string normalize(std::string_view text);

// Parses a tercet corpus: blocks of 3 lines separated by blank lines.
// Verses are normalized. Throws CorpusFormatError for blocks that do not
// have exactly three lines (the message carries 1-based line numbers).
std::vector<TercetText> parse_tercets(std::string_view file_contents);

// Inverse of parse_tercets on well-formed corpora.
std::string serialize_tercets(std::span<const TercetText> tercets);

std::vector<TercetText> load_tercet_file(const std::string& path);

// Prose/verse corpora: one sentence (or verse) per line, normalized,
// empty lines dropped.
std::vector<std::string> load_line_corpus(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct TercetSplit {
  std::vector<TercetText> train;
  std::vector<TercetText> val;
  std::vector<TercetText> test;
};

// Seeded uniform shuffle followed by a largest-remainder partition.
// Fractions must sum to 1 within 1e-9. Throws DegenerateSplitError for
// fewer than 3 tercets.
TercetSplit make_splits(std::span<const TercetText> tercets, std::uint64_t seed,
                        SplitFractions fractions);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::size_t test_count = 0;
  std::uint64_t train_hash = 0;
  std::uint64_t val_hash = 0;
  std::uint64_t test_hash = 0;
  bool operator==(const SplitManifest&) const = default;
};

SplitManifest manifest_for(const TercetSplit& split, std::uint64_t seed);
std::string format_manifest(const SplitManifest& manifest);
SplitManifest parse_manifest(std::string_view text);

}  // namespace verso
