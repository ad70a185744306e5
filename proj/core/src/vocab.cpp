#include "verso/vocab.hpp"

#include <algorithm>
#include <fstream>

#include "verso/errors.hpp"
#include "verso/hash.hpp"

namespace verso {

namespace {

std::uint64_t hash_tokens(std::span<const std::string> tokens) {
  Fnv1a64 h;
  for (const std::string& t : tokens) {
    h.update(t);
    h.update_byte('\n');
  }
  return h.digest();
}

}  // namespace

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> core_token_seqs) {
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& seq : core_token_seqs) {
    for (const std::string& tok : seq) {
      if (is_special_token(tok)) continue;
      ++freq[tok];
    }
  }
  if (freq.empty()) throw EmptyCorpusError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::uint64_t>> by_freq(freq.begin(), freq.end());
  std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.tokens_ = {std::string(kSepToken), std::string(kGoToken), std::string(kEovToken),
               std::string(kEotToken), std::string(kUnkToken)};
  v.tokens_.reserve(v.tokens_.size() + by_freq.size());
  for (auto& [tok, _] : by_freq) v.tokens_.push_back(std::move(tok));
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
  }
  hash_ = hash_tokens(tokens_);
}

std::int32_t Vocabulary::id_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token_of(std::int32_t id) const {
  if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::to_text() const {
  std::string out = "verso-vocab v1 count=" + std::to_string(tokens_.size()) +
                    " hash=" + to_hex(hash_) + "\n";
  for (const std::string& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

void Vocabulary::save(const std::string& path) const { write_text_file(path, to_text()); }

Vocabulary Vocabulary::from_text(std::string_view text) {
  const std::size_t header_end = text.find('\n');
  if (header_end == std::string_view::npos) throw DataError("vocabulary file: missing header");
  const std::string header(text.substr(0, header_end));
  if (header.rfind("verso-vocab v1 ", 0) != 0) {
    throw DataError("vocabulary file: unrecognized header");
  }
  const std::size_t count_pos = header.find("count=");
  const std::size_t hash_pos = header.find("hash=");
  if (count_pos == std::string::npos || hash_pos == std::string::npos) {
    throw DataError("vocabulary file: malformed header");
  }
  const std::size_t count = std::stoull(header.substr(count_pos + 6));
  const std::uint64_t expect_hash =
      from_hex(std::string_view(header).substr(hash_pos + 5, 16));

  Vocabulary v;
  v.tokens_.reserve(count);
  std::size_t start = header_end + 1;
  while (start < text.size() && v.tokens_.size() < count) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    v.tokens_.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (v.tokens_.size() != count) {
    throw DataError("vocabulary file: expected " + std::to_string(count) + " tokens, found " +
                    std::to_string(v.tokens_.size()));
  }
  for (std::int32_t s = 0; s < kNumSpecialTokens; ++s) {
    // Specials must sit at their fixed indices.
    static constexpr std::string_view expected[] = {kSepToken, kGoToken, kEovToken, kEotToken,
                                                    kUnkToken};
    if (v.tokens_[static_cast<std::size_t>(s)] != expected[s]) {
      throw DataError("vocabulary file: special tokens out of order");
    }
  }
  v.rebuild_index();
  if (v.hash_ != expect_hash) throw DataError("vocabulary file: content hash mismatch");
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  try {
    return from_text(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

namespace {

void encode_verse_tokens(std::string_view verse, const Vocabulary& vocab,
                         const Syllabifier& syllabifier, std::vector<std::int32_t>& out) {
  for (const std::string& tok : syllabifier.syllabify_verse(verse)) {
    out.push_back(vocab.id_of(tok));
  }
}

}  // namespace

TokenSeq encode_tercet(const TercetText& tercet, const Vocabulary& vocab,
                       const Syllabifier& syllabifier) {
  TokenSeq seq;
  seq.ids.push_back(kGoId);
  for (const std::string& verse : tercet.verses) {
    encode_verse_tokens(verse, vocab, syllabifier, seq.ids);
    seq.ids.push_back(kEovId);
  }
  seq.ids.push_back(kEotId);
  return seq;
}

std::vector<TokenSeq> encode_prose_sentence(std::string_view normalized_sentence,
                                            const Vocabulary& vocab,
                                            const Syllabifier& syllabifier,
                                            std::size_t max_tokens) {
  std::vector<std::int32_t> body;
  encode_verse_tokens(normalized_sentence, vocab, syllabifier, body);

  std::vector<TokenSeq> out;
  if (body.empty()) return out;
  if (max_tokens < 4) max_tokens = 4;
  const std::size_t max_body = max_tokens - 2;  // room for <go> and <eot>

  std::size_t start = 0;
  while (start < body.size()) {
    std::size_t end = std::min(body.size(), start + max_body);
    if (end < body.size()) {
      // Prefer a word boundary; the boundary <sep> itself is dropped.
      std::size_t cut = end;
      while (cut > start && body[cut] != kSepId) --cut;
      if (cut > start) end = cut;
    }
    TokenSeq seq;
    seq.ids.reserve(end - start + 2);
    seq.ids.push_back(kGoId);
    for (std::size_t i = start; i < end; ++i) seq.ids.push_back(body[i]);
    seq.ids.push_back(kEotId);
    out.push_back(std::move(seq));
    start = end;
    if (start < body.size() && body[start] == kSepId) ++start;
  }
  return out;
}

TokenSeq encode_verse_line(std::string_view normalized_verse, const Vocabulary& vocab,
                           const Syllabifier& syllabifier) {
  TokenSeq seq;
  seq.ids.push_back(kGoId);
  encode_verse_tokens(normalized_verse, vocab, syllabifier, seq.ids);
  seq.ids.push_back(kEovId);
  seq.ids.push_back(kEotId);
  return seq;
}

DecodedText decode(const TokenSeq& seq, const Vocabulary& vocab) {
  DecodedText out;
  std::string verse;
  std::string word;
  const auto flush_word = [&] {
    if (word.empty()) return;
    if (!verse.empty()) verse.push_back(' ');
    verse += word;
    word.clear();
  };
  const auto flush_verse = [&] {
    flush_word();
    out.verses.push_back(std::move(verse));
    verse.clear();
  };
  for (std::int32_t id : seq.ids) {
    if (id == kGoId) continue;
    if (id == kEotId) break;
    if (id == kSepId) {
      flush_word();
      continue;
    }
    if (id == kEovId) {
      flush_verse();
      continue;
    }
    word += vocab.token_of(id);
  }
  if (!word.empty() || !verse.empty()) flush_verse();
  return out;
}

}  // namespace verso
