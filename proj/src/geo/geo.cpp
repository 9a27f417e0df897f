#include "cropcast/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cropcast/error.hpp"
#include "cropcast/kernels.hpp"

namespace cropcast::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw Error(Errc::invalid_argument, "coordinates must be finite");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw Error(Errc::invalid_argument, "latitude " + std::to_string(lat) + " outside [-90, 90]");
  }
  if (lon < -180.0 || lon > 180.0) {
    throw Error(Errc::invalid_argument,
                "longitude " + std::to_string(lon) + " outside [-180, 180]");
  }
}

void SoilProfile::validate() const {
  if (!std::isfinite(ph_low) || !std::isfinite(ph_high) || !(ph_low > 0.0) ||
      !(ph_low <= ph_high) || !(ph_high < 14.0)) {
    throw Error(Errc::invalid_data, "soil pH range must satisfy 0 < low <= high < 14");
  }
}

void ZoneRecord::validate() const {
  if (aez_number < 1) throw Error(Errc::invalid_data, "aez_number must be >= 1");
  if (met_station.empty()) throw Error(Errc::invalid_data, "met_station must be non-empty");
  soil.validate();
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b, double radius_km) {
  if (!std::isfinite(radius_km) || !(radius_km > 0.0)) {
    throw Error(Errc::invalid_argument, "radius must be positive and finite");
  }
  const double phi1 = a.lat() * kDegToRad;
  const double phi2 = b.lat() * kDegToRad;
  // Absolute differences keep the result exactly symmetric in (a, b).
  const double dphi = std::abs(phi2 - phi1);
  const double dlambda = std::abs(b.lon() - a.lon()) * kDegToRad;

  const double s_phi = std::sin(dphi / 2.0);
  const double s_lambda = std::sin(dlambda / 2.0);
  double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lambda * s_lambda;
  h = std::clamp(h, 0.0, 1.0);
  const double c = 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
  return radius_km * c;
}

const ZoneRecord& nearest_zone(const GeoPoint& p, std::span<const ZoneRecord> zones,
                               Execution exec) {
  if (zones.empty()) throw Error(Errc::invalid_argument, "zone table is empty");

  std::vector<GeoPoint> locations;
  locations.reserve(zones.size());
  for (const auto& z : zones) locations.push_back(z.location);
  std::vector<double> distances(zones.size());
  kernels::haversine_batch(p, locations, distances, kEarthRadiusKm, exec);

  std::size_t best = 0;
  for (std::size_t i = 1; i < zones.size(); ++i) {
    if (distances[i] < distances[best] ||
        (distances[i] == distances[best] && zones[i].sub_district < zones[best].sub_district)) {
      best = i;
    }
  }
  return zones[best];
}

}  // namespace cropcast::geo
