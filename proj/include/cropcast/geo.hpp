#pragma once

#include <optional>
#include <span>
#include <string>

#include "cropcast/execution.hpp"
#include "cropcast/nutrient.hpp"

namespace cropcast::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Latitude/longitude in degrees. Construction rejects non-finite or
/// out-of-range coordinates.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

struct SoilProfile {
  double ph_low = 0.0;
  double ph_high = 0.0;
  NutrientLevel phosphorus = NutrientLevel::M;
  NutrientLevel potassium = NutrientLevel::M;
  std::optional<NutrientLevel> nitrogen;

  double ph_midpoint() const noexcept { return 0.5 * (ph_low + ph_high); }
  void validate() const;

  friend bool operator==(const SoilProfile&, const SoilProfile&) = default;
};

/// One sub-district row of the soil nutrition table.
struct ZoneRecord {
  std::string division;
  std::string district;
  std::string sub_district;
  GeoPoint location{0.0, 0.0};
  int aez_number = 1;
  std::string aez_name;
  std::string met_station;
  SoilProfile soil;

  void validate() const;

  friend bool operator==(const ZoneRecord&, const ZoneRecord&) = default;
};

/// Great-circle distance on a sphere of radius `radius_km`.
double haversine_distance(const GeoPoint& a, const GeoPoint& b,
                          double radius_km = kEarthRadiusKm);

/// Zone whose location minimizes the haversine distance to `p`; exact ties go
/// to the lexicographically smallest sub_district. Throws on an empty table.
const ZoneRecord& nearest_zone(const GeoPoint& p, std::span<const ZoneRecord> zones,
                               Execution exec = Execution::parallel);

}  // namespace cropcast::geo
