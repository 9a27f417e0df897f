#include "cropcast/nutrient.hpp"

#include "cropcast/error.hpp"

namespace cropcast {

int encode_nutrient(NutrientLevel level) noexcept { return static_cast<int>(level); }

NutrientLevel parse_nutrient(std::string_view label) {
  if (label == "VL") return NutrientLevel::VL;
  if (label == "L") return NutrientLevel::L;
  if (label == "M") return NutrientLevel::M;
  if (label == "H") return NutrientLevel::H;
  if (label == "VH") return NutrientLevel::VH;
  throw Error(Errc::invalid_data,
              "unknown nutrient level '" + std::string(label) + "' (expected VL, L, M, H or VH)");
}

std::string to_string(NutrientLevel level) {
  switch (level) {
    case NutrientLevel::VL: return "VL";
    case NutrientLevel::L: return "L";
    case NutrientLevel::M: return "M";
    case NutrientLevel::H: return "H";
    case NutrientLevel::VH: return "VH";
  }
  return "?";
}

}  // namespace cropcast
