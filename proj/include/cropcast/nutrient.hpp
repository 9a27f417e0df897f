#pragma once

#include <string>
#include <string_view>

namespace cropcast {

/// Ordinal soil/crop nutrient scale, VL < L < M < H < VH.
enum class NutrientLevel { VL = 1, L = 2, M = 3, H = 4, VH = 5 };

int encode_nutrient(NutrientLevel level) noexcept;

/// Throws Error(invalid_data) on anything other than VL, L, M, H, VH.
NutrientLevel parse_nutrient(std::string_view label);

std::string to_string(NutrientLevel level);

}  // namespace cropcast
