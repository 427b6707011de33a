#include "parcelplan/land_use.hpp"

#include "parcelplan/error.hpp"

namespace parcelplan {

namespace {
constexpr std::array<char, kNumLandUses> kCodes = {'r', 'o', 'g', 'c', 'f'};
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Validation: return "E_VALIDATION";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Lookup: return "E_LOOKUP";
    case ErrorCode::Domain: return "E_DOMAIN";
    case ErrorCode::Aggregation: return "E_AGGREGATION";
    case ErrorCode::Contract: return "E_CONTRACT";
    case ErrorCode::Dimension: return "E_DIMENSION";
    case ErrorCode::MissingModel: return "E_MISSING_MODEL";
    case ErrorCode::Io: return "E_IO";
  }
  return "E_UNKNOWN";
}

LandUse land_use_from_ordinal(std::size_t index) {
  if (index >= kNumLandUses) {
    fail(ErrorCode::Validation, "land-use ordinal out of range: " + std::to_string(index));
  }
  return static_cast<LandUse>(index);
}

char land_use_code(LandUse use) { return kCodes[ordinal(use)]; }

std::optional<LandUse> parse_land_use(std::string_view code) {
  if (code.size() != 1) return std::nullopt;
  for (std::size_t i = 0; i < kNumLandUses; ++i) {
    if (kCodes[i] == code[0]) return static_cast<LandUse>(i);
  }
  return std::nullopt;
}

std::string LandUseSet::to_string() const {
  std::string out;
  for (LandUse u : kAllLandUses) {
    if (!contains(u)) continue;
    if (!out.empty()) out += ',';
    out += land_use_code(u);
  }
  return out;
}

LandUseSet LandUseSet::parse(std::string_view text) {
  LandUseSet set;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      auto use = parse_land_use(token);
      if (!use) fail(ErrorCode::Validation, "unknown land-use code '" + std::string(token) + "'");
      set.insert(*use);
    }
    pos = end + 1;
  }
  return set;
}

}  // namespace parcelplan
