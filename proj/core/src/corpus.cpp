#include "verso/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "verso/hash.hpp"
#include "verso/rng.hpp"
#include "verso/utf8.hpp"

namespace verso {

namespace {

constexpr char32_t kApostrophe = U'\'';
constexpr char32_t kRightQuote = 0x2019;

bool is_apostrophe(char32_t cp) { return cp == kApostrophe || cp == kRightQuote; }

bool is_word_char(char32_t cp) {
  return utf8::is_letter(cp) || utf8::is_digit(cp);
}

}  // namespace

std::string normalize(std::string_view text) {
  const std::u32string cps = utf8::decode_all(text);
  std::u32string kept;
  kept.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_apostrophe(cp)) {
      const bool prev_letter = i > 0 && utf8::is_letter(cps[i - 1]);
      const bool next_letter = i + 1 < cps.size() && utf8::is_letter(cps[i + 1]);
      if (prev_letter || next_letter) kept.push_back(kApostrophe);
      continue;
    }
    if (utf8::is_punct(cp)) continue;
    if (utf8::is_space(cp)) {
      kept.push_back(U' ');
      continue;
    }
    kept.push_back(utf8::to_lower(cp));
  }
  // Collapse whitespace runs and trim.
  std::u32string out;
  out.reserve(kept.size());
  bool pending_space = false;
  for (char32_t cp : kept) {
    if (cp == U' ') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return utf8::encode_all(out);
}

std::vector<TercetText> parse_tercets(std::string_view file_contents) {
  // Split into lines, tolerating \r\n endings.
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= file_contents.size()) {
    std::size_t end = file_contents.find('\n', start);
    if (end == std::string_view::npos) end = file_contents.size();
    std::string line(file_contents.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (end == file_contents.size()) break;
    start = end + 1;
  }
  const auto is_blank = [](const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
  };

  std::vector<TercetText> tercets;
  std::vector<std::string> bad_blocks;
  std::size_t i = 0;
  while (i < lines.size()) {
    while (i < lines.size() && is_blank(lines[i])) ++i;
    if (i >= lines.size()) break;
    const std::size_t block_start = i;
    std::vector<std::string> block;
    while (i < lines.size() && !is_blank(lines[i])) {
      block.push_back(lines[i]);
      ++i;
    }
    if (block.size() != 3) {
      bad_blocks.push_back("block at line " + std::to_string(block_start + 1) + " has " +
                           std::to_string(block.size()) + " line(s), expected 3");
      continue;
    }
    TercetText t;
    bool ok = true;
    for (std::size_t v = 0; v < 3; ++v) {
      t.verses[v] = normalize(block[v]);
      if (t.verses[v].empty()) {
        bad_blocks.push_back("verse at line " + std::to_string(block_start + 1 + v) +
                             " is empty after normalization");
        ok = false;
      }
    }
    if (ok) tercets.push_back(std::move(t));
  }
  if (!bad_blocks.empty()) {
    std::string msg = "malformed tercet corpus: " + bad_blocks.front();
    if (bad_blocks.size() > 1) {
      msg += " (and " + std::to_string(bad_blocks.size() - 1) + " more)";
    }
    throw CorpusFormatError(msg);
  }
  return tercets;
}

std::string serialize_tercets(std::span<const TercetText> tercets) {
  std::string out;
  for (std::size_t i = 0; i < tercets.size(); ++i) {
    if (i > 0) out.push_back('\n');
    for (const std::string& v : tercets[i].verses) {
      out += v;
      out.push_back('\n');
    }
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("error reading file: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("error writing file: " + path);
}

std::vector<TercetText> load_tercet_file(const std::string& path) {
  try {
    return parse_tercets(read_text_file(path));
  } catch (const CorpusFormatError& e) {
    throw CorpusFormatError(path + ": " + e.what());
  }
}

std::vector<std::string> load_line_corpus(const std::string& path) {
  const std::string contents = read_text_file(path);
  std::vector<std::string> sentences;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    std::string norm = normalize(std::string_view(contents).substr(start, end - start));
    if (!norm.empty()) sentences.push_back(std::move(norm));
    start = end + 1;
  }
  return sentences;
}

TercetSplit make_splits(std::span<const TercetText> tercets, std::uint64_t seed,
                        SplitFractions fractions) {
  const double sum = fractions.train + fractions.val + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("split fractions must sum to 1, got " + std::to_string(sum));
  }
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0) {
    throw DataError("split fractions must be non-negative");
  }
  const std::size_t n = tercets.size();
  if (n < 3) {
    throw DegenerateSplitError("need at least 3 tercets to split, got " + std::to_string(n));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  // Largest-remainder apportionment of n into the three fractions.
  const std::array<double, 3> frac = {fractions.train, fractions.val, fractions.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = frac[static_cast<std::size_t>(k)] * static_cast<double>(n);
    counts[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor(exact));
    remainders[static_cast<std::size_t>(k)] = exact - std::floor(exact);
    assigned += counts[static_cast<std::size_t>(k)];
  }
  std::array<int, 3> by_remainder = {0, 1, 2};
  std::stable_sort(by_remainder.begin(), by_remainder.end(), [&](int a, int b) {
    return remainders[static_cast<std::size_t>(a)] > remainders[static_cast<std::size_t>(b)];
  });
  for (std::size_t leftover = n - assigned, k = 0; leftover > 0; --leftover, ++k) {
    counts[static_cast<std::size_t>(by_remainder[k % 3])] += 1;
  }

  TercetSplit split;
  std::size_t pos = 0;
  const auto take = [&](std::vector<TercetText>& dst, std::size_t count) {
    dst.reserve(count);
    for (std::size_t k = 0; k < count; ++k) dst.push_back(tercets[order[pos++]]);
  };
  take(split.train, counts[0]);
  take(split.val, counts[1]);
  take(split.test, counts[2]);
  return split;
}

namespace {

std::uint64_t hash_tercets(std::span<const TercetText> tercets) {
  Fnv1a64 h;
  for (const TercetText& t : tercets) {
    for (const std::string& v : t.verses) {
      h.update(v);
      h.update_byte('\n');
    }
  }
  return h.digest();
}

}  // namespace

SplitManifest manifest_for(const TercetSplit& split, std::uint64_t seed) {
  SplitManifest m;
  m.seed = seed;
  m.train_count = split.train.size();
  m.val_count = split.val.size();
  m.test_count = split.test.size();
  m.train_hash = hash_tercets(split.train);
  m.val_hash = hash_tercets(split.val);
  m.test_hash = hash_tercets(split.test);
  return m;
}

std::string format_manifest(const SplitManifest& m) {
  std::ostringstream out;
  out << "seed = " << m.seed << '\n'
      << "train_count = " << m.train_count << '\n'
      << "val_count = " << m.val_count << '\n'
      << "test_count = " << m.test_count << '\n'
      << "train_hash = " << to_hex(m.train_hash) << '\n'
      << "val_hash = " << to_hex(m.val_hash) << '\n'
      << "test_hash = " << to_hex(m.test_hash) << '\n';
  return out.str();
}

SplitManifest parse_manifest(std::string_view text) {
  SplitManifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const std::size_t a = s.find_first_not_of(" \t");
      const std::size_t b = s.find_last_not_of(" \t\r");
      s = (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    try {
      if (key == "seed") m.seed = std::stoull(value);
      else if (key == "train_count") m.train_count = std::stoull(value);
      else if (key == "val_count") m.val_count = std::stoull(value);
      else if (key == "test_count") m.test_count = std::stoull(value);
      else if (key == "train_hash") m.train_hash = from_hex(value);
      else if (key == "val_hash") m.val_hash = from_hex(value);
      else if (key == "test_hash") m.test_hash = from_hex(value);
    } catch (const std::exception&) {
      throw DataError("malformed manifest entry: " + line);
    }
  }
  return m;
}

}  // namespace verso
