#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cropcast/error.hpp"
#include "cropcast/geo.hpp"
#include "cropcast/kernels.hpp"
#include "cropcast/rng.hpp"
#include "support/oracles.hpp"

using namespace cropcast;
using geo::GeoPoint;

namespace {

geo::ZoneRecord make_zone(std::string name, double lat, double lon) {
  geo::ZoneRecord z;
  z.division = "Div";
  z.district = "Dist";
  z.sub_district = std::move(name);
  z.location = GeoPoint(lat, lon);
  z.aez_number = 1;
  z.aez_name = "AEZ";
  z.met_station = "Station";
  z.soil = {5.0, 6.0, NutrientLevel::M, NutrientLevel::M, std::nullopt};
  return z;
}

GeoPoint random_point(Rng& rng) { return {rng.uniform(-90.0, 90.0), rng.uniform(-180.0, 180.0)}; }

}  // namespace

TEST_CASE("haversine of identical points is zero") {
  const GeoPoint p(25.74058, 89.261139);
  CHECK(geo::haversine_distance(p, p) == 0.0);
}

TEST_CASE("quarter great circle along the equator") {
  const double expected = 6371.0 * std::numbers::pi / 2.0;
  const double d = geo::haversine_distance({0, 0}, {0, 90}, 6371.0);
  CHECK(std::abs(d - expected) / expected < 1e-9);
  CHECK(d == doctest::Approx(10007.543).epsilon(1e-7));
}

TEST_CASE("Dhaka to Rangpur agrees with the law of cosines") {
  const double d = geo::haversine_distance({23.8103, 90.4125}, {25.74058, 89.261139});
  const double ref = oracle::law_of_cosines_km(23.8103, 90.4125, 25.74058, 89.261139);
  CHECK(std::abs(d - ref) / ref < 1e-6);
}

TEST_CASE("haversine is symmetric, bounded and matches the oracle on fuzzed pairs") {
  Rng rng(7);
  const double bound = std::numbers::pi * geo::kEarthRadiusKm;
  for (int i = 0; i < 20000; ++i) {
    const auto a = random_point(rng);
    const auto b = random_point(rng);
    const double ab = geo::haversine_distance(a, b);
    CHECK(ab == geo::haversine_distance(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= bound);
    const double ref = oracle::law_of_cosines_km(a.lat(), a.lon(), b.lat(), b.lon());
    // The cosine form loses precision for tiny separations; compare where it is well-conditioned.
    if (ref > 1.0) CHECK(std::abs(ab - ref) / ref < 1e-6);
  }
}

TEST_CASE("invalid coordinates and radius are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(GeoPoint(nan, 0.0), Error);
  CHECK_THROWS_AS(GeoPoint(0.0, std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(GeoPoint(95.0, 0.0), Error);
  CHECK_THROWS_AS(GeoPoint(0.0, -181.0), Error);
  CHECK_THROWS_AS(geo::haversine_distance({0, 0}, {1, 1}, 0.0), Error);
  CHECK_THROWS_AS(geo::haversine_distance({0, 0}, {1, 1}, nan), Error);
}

TEST_CASE("nearest_zone returns the zone located at the query point") {
  std::vector<geo::ZoneRecord> zones{make_zone("A", 10, 10), make_zone("B", 20, 20),
                                     make_zone("C", 30, 30)};
  CHECK(geo::nearest_zone({20, 20}, zones).sub_district == "B");
}

TEST_CASE("nearest_zone breaks exact ties by sub_district name") {
  // Mirror pair about the query meridian: identical distance by construction.
  const GeoPoint p(24.0, 90.0);
  std::vector<geo::ZoneRecord> zones{make_zone("Zeta", 24.0, 90.5), make_zone("Alpha", 24.0, 89.5)};
  const double d0 = geo::haversine_distance(p, zones[0].location);
  const double d1 = geo::haversine_distance(p, zones[1].location);
  REQUIRE(d0 == d1);
  CHECK(geo::nearest_zone(p, zones).sub_district == "Alpha");
  std::reverse(zones.begin(), zones.end());
  CHECK(geo::nearest_zone(p, zones).sub_district == "Alpha");
}

TEST_CASE("nearest_zone is never beaten by any other zone") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.index(500);
    std::vector<geo::ZoneRecord> zones;
    for (std::size_t i = 0; i < n; ++i) {
      zones.push_back(make_zone("z" + std::to_string(i), rng.uniform(20, 27), rng.uniform(88, 93)));
    }
    const GeoPoint p(rng.uniform(20, 27), rng.uniform(88, 93));
    const auto& best = geo::nearest_zone(p, zones);
    const double best_d = geo::haversine_distance(p, best.location);
    for (const auto& z : zones) CHECK(best_d <= geo::haversine_distance(p, z.location));
    CHECK(&geo::nearest_zone(p, zones, Execution::serial) == &best);
  }
}

TEST_CASE("nearest_zone rejects an empty table") {
  std::vector<geo::ZoneRecord> none;
  CHECK_THROWS_AS(geo::nearest_zone({0, 0}, none), Error);
}

TEST_CASE("parallel and serial distance kernels agree bit for bit") {
  Rng rng(3);
  std::vector<GeoPoint> targets;
  for (int i = 0; i < 5000; ++i) targets.push_back(random_point(rng));
  const GeoPoint origin(25.0, 90.0);
  std::vector<double> a(targets.size()), b(targets.size());
  kernels::haversine_batch(origin, targets, a, 6371.0, Execution::serial);
  kernels::haversine_batch(origin, targets, b, 6371.0, Execution::parallel);
  CHECK(a == b);
}
