#pragma once

#include <cstdint>
#include <string_view>

namespace verso {

// Structural tokens of the syllable stream. Their vocabulary indices are
// fixed: specials come first, in this order.
inline constexpr std::string_view kSepToken = "<sep>";
inline constexpr std::string_view kGoToken = "<go>";
inline constexpr std::string_view kEovToken = "<eov>";
inline constexpr std::string_view kEotToken = "<eot>";
inline constexpr std::string_view kUnkToken = "<unk>";

enum SpecialId : std::int32_t {
  kSepId = 0,
  kGoId = 1,
  kEovId = 2,
  kEotId = 3,
  kUnkId = 4,
};

inline constexpr std::int32_t kNumSpecialTokens = 5;

inline bool is_special_token(std::string_view token) {
  return token == kSepToken || token == kGoToken || token == kEovToken ||
         token == kEotToken || token == kUnkToken;
}

inline bool is_special_id(std::int32_t id) { return id >= 0 && id < kNumSpecialTokens; }

}  // namespace verso
