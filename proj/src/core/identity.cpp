#include "core/identity.hpp"

namespace supaudit {

const char* to_string(GeneralIdentity identity) {
  switch (identity) {
    case GeneralIdentity::men: return "men";
    case GeneralIdentity::women: return "women";
    case GeneralIdentity::white: return "white";
    case GeneralIdentity::non_white: return "non_white";
    case GeneralIdentity::christian: return "christian";
    case GeneralIdentity::non_christian: return "non_christian";
    case GeneralIdentity::straight: return "straight";
    case GeneralIdentity::lgbt: return "lgbt";
    case GeneralIdentity::disability: return "disability";
  }
  return "?";
}

std::optional<GeneralIdentity> identity_from_string(std::string_view name) {
  for (GeneralIdentity identity : kAllIdentities) {
    if (name == to_string(identity)) return identity;
  }
  if (name == "non-white") return GeneralIdentity::non_white;
  if (name == "non-christian") return GeneralIdentity::non_christian;
  return std::nullopt;
}

const char* to_string(TagProvenance provenance) {
  switch (provenance) {
    case TagProvenance::template_based: return "template";
    case TagProvenance::individually_coded: return "individually_coded";
    case TagProvenance::text_reference: return "text_reference";
    case TagProvenance::external_association: return "external_association";
  }
  return "?";
}

std::optional<TagProvenance> provenance_from_string(std::string_view name) {
  if (name == "template") return TagProvenance::template_based;
  if (name == "individually_coded") return TagProvenance::individually_coded;
  if (name == "text_reference") return TagProvenance::text_reference;
  if (name == "external_association") return TagProvenance::external_association;
  return std::nullopt;
}

const char* to_string(Family family) {
  return family == Family::traditional ? "traditional" : "genai";
}

std::optional<Family> family_from_string(std::string_view name) {
  if (name == "traditional") return Family::traditional;
  if (name == "genai") return Family::genai;
  return std::nullopt;
}

}  // namespace supaudit
