#include "verso/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "verso/errors.hpp"

namespace verso {

namespace {

constexpr char kMagic[8] = {'V', 'E', 'R', 'S', 'O', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open checkpoint for writing: " + path);
  }

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void byte(unsigned char v) { out_.write(reinterpret_cast<const char*>(&v), 1); }
  void bytes(const char* data, std::size_t n) {
    out_.write(data, static_cast<std::streamsize>(n));
  }
  void floats(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(reinterpret_cast<const char*>(v.data()), v.size() * 4);
    } else {
      for (float x : v) f32(x);
    }
  }
  bool good() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot open checkpoint: " + path);
  }

  std::uint32_t u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  unsigned char byte() {
    unsigned char v;
    read(reinterpret_cast<char*>(&v), 1);
    return v;
  }
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw DataError("truncated checkpoint: " + path_);
    }
  }
  void floats(std::span<float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      read(reinterpret_cast<char*>(v.data()), v.size() * 4);
    } else {
      for (float& x : v) x = std::bit_cast<float>(u32());
    }
  }
  bool at_end() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     std::uint64_t vocab_hash, const AdamState<float>* opt) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(params.dims.vocab));
  w.u32(static_cast<std::uint32_t>(params.dims.embed));
  w.u32(static_cast<std::uint32_t>(params.dims.hidden));
  w.u64(vocab_hash);
  for (auto t : params.tensors()) w.floats(t);
  if (opt != nullptr) {
    w.byte(1);
    w.u64(static_cast<std::uint64_t>(opt->step));
    w.floats(std::span<const float>(opt->m));
    w.floats(std::span<const float>(opt->v));
  } else {
    w.byte(0);
  }
  if (!w.good()) throw DataError("error writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path, const Vocabulary* expect) {
  Reader r(path);
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  ModelDims dims;
  dims.vocab = static_cast<std::int32_t>(r.u32());
  dims.embed = static_cast<std::int32_t>(r.u32());
  dims.hidden = static_cast<std::int32_t>(r.u32());
  if (dims.vocab <= 0 || dims.embed <= 0 || dims.hidden <= 0) {
    throw DataError("checkpoint has invalid dimensions: " + path);
  }

  Checkpoint ckpt;
  ckpt.vocab_hash = r.u64();
  if (expect != nullptr) {
    if (dims.vocab != expect->size()) {
      throw DataError("checkpoint vocabulary size " + std::to_string(dims.vocab) +
                      " does not match vocabulary (" + std::to_string(expect->size()) +
                      "): " + path);
    }
    if (ckpt.vocab_hash != expect->content_hash()) {
      throw DataError("checkpoint vocabulary hash does not match vocabulary: " + path);
    }
  }

  ckpt.params = ModelParams<float>::zeros(dims);
  for (auto t : ckpt.params.tensors()) r.floats(t);
  const unsigned char has_opt = r.byte();
  if (has_opt == 1) {
    AdamState<float> opt = AdamState<float>::zeros(dims);
    opt.step = static_cast<std::int64_t>(r.u64());
    r.floats(std::span<float>(opt.m));
    r.floats(std::span<float>(opt.v));
    ckpt.opt = std::move(opt);
  } else if (has_opt != 0) {
    throw DataError("malformed checkpoint trailer: " + path);
  }
  return ckpt;
}

}  // namespace verso
