#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace verso {

// FNV-1a, used for vocabulary and split-manifest content hashes.
class Fnv1a64 {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 0x100000001B3ULL;
    }
  }
  void update_byte(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001B3ULL;
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view hex);

}  // namespace verso
