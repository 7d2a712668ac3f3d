#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace supaudit {

// The nine general identity groups. Enum order is the canonical order used
// for serialization and for deterministic tie-breaking.
enum class GeneralIdentity : uint8_t {
  men,
  women,
  white,
  non_white,
  christian,
  non_christian,
  straight,
  lgbt,
  disability,
};

inline constexpr std::size_t kIdentityCount = 9;

inline constexpr std::array<GeneralIdentity, kIdentityCount> kAllIdentities = {
    GeneralIdentity::men,          GeneralIdentity::women,
    GeneralIdentity::white,        GeneralIdentity::non_white,
    GeneralIdentity::christian,    GeneralIdentity::non_christian,
    GeneralIdentity::straight,     GeneralIdentity::lgbt,
    GeneralIdentity::disability,
};

const char* to_string(GeneralIdentity identity);

// Accepts the canonical snake_case names plus hyphenated aliases
// ("non-white", "non-christian").
std::optional<GeneralIdentity> identity_from_string(std::string_view name);

// Small fixed-capacity identity set (bitmask over the nine groups).
class IdentitySet {
 public:
  IdentitySet() = default;

  void insert(GeneralIdentity identity) {
    bits_ |= static_cast<uint16_t>(1u << static_cast<unsigned>(identity));
  }

  bool contains(GeneralIdentity identity) const {
    return (bits_ >> static_cast<unsigned>(identity)) & 1u;
  }

  bool empty() const { return bits_ == 0; }

  std::size_t size() const { return static_cast<std::size_t>(__builtin_popcount(bits_)); }

  uint16_t bits() const { return bits_; }

  void merge(IdentitySet other) { bits_ |= other.bits_; }

  bool operator==(const IdentitySet&) const = default;

  // Iterates members in canonical enum order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (GeneralIdentity identity : kAllIdentities) {
      if (contains(identity)) fn(identity);
    }
  }

 private:
  uint16_t bits_ = 0;
};

// How an identity tag was attached to an instance.
enum class TagProvenance : uint8_t {
  template_based,
  individually_coded,
  text_reference,
  external_association,
};

const char* to_string(TagProvenance provenance);
std::optional<TagProvenance> provenance_from_string(std::string_view name);

// Dataset aggregation bucket.
enum class Family : uint8_t { traditional, genai };

const char* to_string(Family family);
std::optional<Family> family_from_string(std::string_view name);

}  // namespace supaudit
