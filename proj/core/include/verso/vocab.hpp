#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "verso/corpus.hpp"
#include "verso/special_tokens.hpp"
#include "verso/syllabifier.hpp"

namespace verso {

// Bidirectional syllable-token <-> index map. Indices 0..4 are the special
// tokens; syllables follow by descending core-corpus frequency, ties broken
// lexicographically. Immutable once built.
class Vocabulary {
 public:
  Vocabulary() = default;  // empty placeholder; build or load one before use

  // Builds from the tokenized core corpus (one token list per unit). Only
  // core-corpus syllables enter the vocabulary; tokens seen elsewhere encode
  // to <unk>. Throws EmptyCorpusError when no tokens are given.
  static Vocabulary build(std::span<const std::vector<std::string>> core_token_seqs);

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }

  // <unk> for out-of-vocabulary tokens.
  std::int32_t id_of(std::string_view token) const;
  std::optional<std::int32_t> find(std::string_view token) const;
  const std::string& token_of(std::int32_t id) const;

  std::uint64_t content_hash() const { return hash_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Text format: header "verso-vocab v1 count=N hash=HEX", then one token
  // per line, line number (0-based, after the header) = index. Round-trips
  // bit-exact.
  void save(const std::string& path) const;
  std::string to_text() const;
  static Vocabulary load(const std::string& path);
  static Vocabulary from_text(std::string_view text);

 private:
  void rebuild_index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::uint64_t hash_ = 0;
};

struct TokenSeq {
  std::vector<std::int32_t> ids;
  bool operator==(const TokenSeq&) const = default;
};

// <go> v1 <eov> v2 <eov> v3 <eov> <eot>; out-of-vocabulary syllables
// become <unk>.
TokenSeq encode_tercet(const TercetText& tercet, const Vocabulary& vocab,
                       const Syllabifier& syllabifier);

// Pre-training sentences: <go> tokens <eot>. Sentences longer than
// max_tokens ids are split at word boundaries into multiple sequences.
std::vector<TokenSeq> encode_prose_sentence(std::string_view normalized_sentence,
                                            const Vocabulary& vocab,
                                            const Syllabifier& syllabifier,
                                            std::size_t max_tokens = 256);

// Stand-alone verse lines: <go> tokens <eov> <eot>.
TokenSeq encode_verse_line(std::string_view normalized_verse, const Vocabulary& vocab,
                           const Syllabifier& syllabifier);

struct DecodedText {
  std::vector<std::string> verses;
  bool operator==(const DecodedText&) const = default;
};

// Merges syllables into words (word breaks at <sep>), splits verses at
// <eov>, stops at <eot>. A trailing segment without <eov> is kept as-is.
DecodedText decode(const TokenSeq& seq, const Vocabulary& vocab);

}  // namespace verso
