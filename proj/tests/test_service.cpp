#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <thread>

#include "cropcast/error.hpp"
#include "cropcast/rng.hpp"
#include "cropcast/service.hpp"

// After the Eigen-based headers: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace cropcast;
using namespace cropcast::service;
using nlohmann::json;

namespace {

const pipeline::Bundle& fixture_bundle() {
  static const auto b = pipeline::build_bundle(data::fixture_datasets(),
                                               pipeline::TrainingConfig::from_json(data::fixture_training()), {});
  return b;
}

Service& fixture_service() {
  static Service s(fixture_bundle());
  return s;
}

Request get(std::string path, std::map<std::string, std::string> query = {}) {
  return {"GET", std::move(path), std::move(query), ""};
}

Request post_recommend(const json& body) { return {"POST", "/api/recommend", {}, body.dump()}; }

std::string code_of(const Response& r) { return json::parse(r.body).at("error").at("code").get<std::string>(); }

std::vector<std::string> ranking_crops(const Response& r) {
  std::vector<std::string> out;
  const auto body = json::parse(r.body);
  for (const auto& a : body.at("ranking")) out.push_back(a.at("crop").get<std::string>());
  return out;
}

const std::set<std::string> kCodes = {"invalid_request", "invalid_coordinates", "unknown_station", "year_out_of_range",
                                      "insufficient_history", "not_ready", "not_found", "internal_error"};

}  // namespace

TEST_CASE("requests before the bundle is ready get 503") {
  Service s;
  CHECK_FALSE(s.ready());
  const auto r = s.handle(get("/api/zones"));
  CHECK(r.status == 503);
  CHECK(code_of(r) == "not_ready");
  CHECK(json::parse(s.handle(get("/api/status")).body)["ready"] == false);
}

TEST_CASE("an empty zone table is refused at startup") {
  auto b = fixture_bundle();
  b.datasets.zones.clear();
  try {
    Service s(std::move(b));
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
}

TEST_CASE("zones endpoint lists the Rangpur zone") {
  auto& s = fixture_service();
  const auto r = s.handle(get("/api/zones"));
  REQUIRE(r.status == 200);
  const auto zones = json::parse(r.body).at("zones");
  const auto it = std::find_if(zones.begin(), zones.end(), [](const json& z) { return z["sub_district"] == "Rangpur Sadar"; });
  REQUIRE(it != zones.end());
  CHECK((*it)["soil"]["phosphorus"] == "VH");
  CHECK((*it)["soil"]["potassium"] == "M");
  CHECK((*it)["latitude"] == 25.74058);
  CHECK(s.handle(get("/api/zones")).body == r.body);
}

TEST_CASE("forecast endpoint serves the Rangpur 2023 table and caches it") {
  Service s(fixture_bundle());
  const auto first = s.handle(get("/api/forecast", {{"station", "Rangpur"}, {"year", "2023"}}));
  REQUIRE(first.status == 200);
  CHECK(first.headers.at("X-Cache") == "miss");
  const auto body = json::parse(first.body);
  CHECK(body["months"][0]["temperature"] == 15.8);
  CHECK(body["months"][0]["rainfall"] == 0.0);
  CHECK(body["months"][0]["humidity"] == 82.0);
  CHECK(body["months"][7]["rainfall"] == 572.0);
  const auto second = s.handle(get("/api/forecast", {{"station", "Rangpur"}, {"year", "2023"}}));
  CHECK(second.headers.at("X-Cache") == "hit");
  CHECK(second.body == first.body);
}

TEST_CASE("forecast endpoint errors") {
  auto& s = fixture_service();
  auto r = s.handle(get("/api/forecast", {{"station", "Atlantis"}, {"year", "2023"}}));
  CHECK(r.status == 404);
  CHECK(code_of(r) == "unknown_station");
  r = s.handle(get("/api/forecast", {{"station", "Rangpur"}, {"year", "2040"}}));
  CHECK(r.status == 422);
  CHECK(code_of(r) == "year_out_of_range");
  r = s.handle(get("/api/forecast", {{"station", "Rangpur"}, {"year", "20x3"}}));
  CHECK(r.status == 400);
  CHECK(code_of(r) == "invalid_request");
  r = s.handle(get("/api/forecast", {{"year", "2023"}}));
  CHECK(code_of(r) == "invalid_request");
}

TEST_CASE("recommend endpoint reproduces the fixture ranking") {
  auto& s = fixture_service();
  const auto r = s.handle(post_recommend({{"lat", 25.74058}, {"lon", 89.261139}, {"year", 2023}}));
  REQUIRE(r.status == 200);
  CHECK(ranking_crops(r) == std::vector<std::string>{"Papaya", "Sugarcane", "Tomato", "Garlic", "Soyabean", "Rice", "Lentil"});
  const auto j = json::parse(r.body);
  CHECK(j["ranking"][6]["diseases"] == json::array({"Foot rot"}));
  CHECK(j["ranking"][6]["disease_count"] == 1);
  CHECK(r.body == pipeline::recommend(fixture_bundle(), {geo::GeoPoint(25.74058, 89.261139), 2023, {}}).to_json().dump());
}

TEST_CASE("recommend exclusions") {
  auto& s = fixture_service();
  const auto full = ranking_crops(s.handle(post_recommend({{"lat", 25.74058}, {"lon", 89.261139}, {"year", 2023}})));
  const auto r = s.handle(
      post_recommend({{"lat", 25.74058}, {"lon", 89.261139}, {"year", 2023}, {"exclude_crops", {"Papaya"}}}));
  REQUIRE(r.status == 200);
  std::vector<std::string> expected;
  for (const auto& c : full) {
    if (c != "Papaya") expected.push_back(c);
  }
  CHECK(ranking_crops(r) == expected);

  const auto all = s.handle(post_recommend({{"lat", 25.74058},
                                            {"lon", 89.261139},
                                            {"year", 2023},
                                            {"exclude_crops", {"Garlic", "Lentil", "Papaya", "Rice", "Soyabean",
                                                               "Sugarcane", "Tomato"}}}));
  CHECK(all.status == 200);
  CHECK(json::parse(all.body)["ranking"].empty());
}

TEST_CASE("recommend validation") {
  auto& s = fixture_service();
  auto r = s.handle(post_recommend({{"lat", 95.0}, {"lon", 89.0}, {"year", 2023}}));
  CHECK(r.status == 400);
  CHECK(code_of(r) == "invalid_coordinates");
  r = s.handle(post_recommend({{"lat", "north"}, {"lon", 89.0}, {"year", 2023}}));
  CHECK(code_of(r) == "invalid_request");
  r = s.handle(post_recommend({{"lat", 25.0}, {"lon", 89.0}, {"year", 2023.5}}));
  CHECK(code_of(r) == "invalid_request");
  r = s.handle(post_recommend({{"lat", 25.0}, {"lon", 89.0}, {"year", 2023}, {"crops", 1}}));
  CHECK(code_of(r) == "invalid_request");
  r = s.handle(post_recommend({{"lat", 25.0}, {"lon", 89.0}, {"year", 2023}, {"exclude_crops", {1, 2}}}));
  CHECK(code_of(r) == "invalid_request");
  r = s.handle(post_recommend({{"lat", 25.0}, {"lon", 89.0}, {"year", 2090}}));
  CHECK(r.status == 422);
  CHECK(json::parse(r.body)["error"]["code"] == "year_out_of_range");
}

TEST_CASE("unknown routes and methods") {
  auto& s = fixture_service();
  CHECK(code_of(s.handle(get("/api/nothing"))) == "not_found");
  CHECK(code_of(s.handle(get("/api/recommend"))) == "not_found");
  CHECK(s.handle(get("/api/recommend")).status == 404);
}

TEST_CASE("fuzzed request bodies always get a coded error") {
  auto& s = fixture_service();
  Rng rng(99);
  const std::vector<std::string> fragments = {"{", "}", "[", "]", "\"lat\"", "\"lon\"", "\"year\"", ":", ",", "1e400",
                                              "-91", "null", "true", "\"x\"", "2023", "25.7", "\"exclude_crops\"", "\\u0000"};
  for (int i = 0; i < 500; ++i) {
    std::string body;
    const auto n = rng.index(12);
    for (std::size_t k = 0; k < n; ++k) body += fragments[rng.index(fragments.size())];
    if (i % 5 == 0) {
      body.clear();
      for (std::size_t k = 0; k < 20; ++k) body.push_back(static_cast<char>(rng.index(256)));
    }
    const auto r = s.handle({"POST", "/api/recommend", {}, body});
    INFO(body);
    if (r.status == 200) continue;
    const auto j = json::parse(r.body, nullptr, false);
    REQUIRE_FALSE(j.is_discarded());
    const auto code = j["error"]["code"].get<std::string>();
    CHECK(kCodes.contains(code));
    for (int c = 0; c <= static_cast<int>(ApiCode::internal_error); ++c) {
      if (to_string(static_cast<ApiCode>(c)) == code) CHECK(r.status == http_status(static_cast<ApiCode>(c)));
    }
    CHECK(code != "internal_error");
  }
}

TEST_CASE("concurrent requests fit each forecast key once") {
  Service s(fixture_bundle());
  std::atomic<int> misses = 0;
  std::vector<std::string> bodies(8);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      const auto r = s.handle(get("/api/forecast", {{"station", "Dhaka"}, {"year", "2024"}}));
      if (r.headers.at("X-Cache") == "miss") ++misses;
      bodies[t] = r.body;
    });
  }
  for (auto& th : threads) th.join();
  CHECK(misses == 1);
  for (const auto& b : bodies) CHECK(b == bodies.front());
  const auto sequential = pipeline::forecast_for(fixture_bundle(), "Dhaka", 2024).to_json().dump();
  CHECK(bodies.front() == sequential);
}

TEST_CASE("service config file and environment overrides") {
  const auto dir = std::filesystem::temp_directory_path() / "cropcast_test_config";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "service.json") << R"({"port": 9000, "bundle": "b/bundle.json", "static_dir": "web"})";
  auto c = ServiceConfig::read(dir / "service.json");
  CHECK(c.port == 9000);
  CHECK(c.bundle == dir / "b/bundle.json");
  CHECK(c.static_dir == dir / "web");
  c.apply_env([](const std::string& name) -> std::optional<std::string> {
    if (name == "CROPCAST_PORT") return "9100";
    if (name == "CROPCAST_BUNDLE") return "/data/bundle.json";
    return std::nullopt;
  });
  CHECK(c.port == 9100);
  CHECK(c.bundle == "/data/bundle.json");
  CHECK_THROWS_AS(c.apply_env([](const std::string&) -> std::optional<std::string> { return "abc"; }), Error);
  std::ofstream(dir / "bad.json") << R"({"prot": 1})";
  CHECK_THROWS_AS(ServiceConfig::read(dir / "bad.json"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("HTTP server routes the API and serves static assets") {
  const auto dir = std::filesystem::temp_directory_path() / "cropcast_test_static";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>crop</html>";
  auto& s = fixture_service();
  httplib::Server server;
  mount(server, s, dir);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto zones = client.Get("/api/zones");
  REQUIRE(zones);
  CHECK(zones->status == 200);
  CHECK(zones->body == s.handle(get("/api/zones")).body);
  const auto rec = client.Post("/api/recommend", R"({"lat": 25.74058, "lon": 89.261139, "year": 2023})", "application/json");
  REQUIRE(rec);
  CHECK(rec->status == 200);
  const auto fc = client.Get("/api/forecast?station=Rangpur&year=2023");
  REQUIRE(fc);
  CHECK(fc->has_header("X-Cache"));
  const auto page = client.Get("/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body == "<html>crop</html>");
  const auto missing = client.Get("/api/unknown");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  listener.join();
  std::filesystem::remove_all(dir);
}

TEST_CASE("recorded UI fixtures match live responses") {
  const std::filesystem::path dir = std::filesystem::path(CROPCAST_SOURCE_DIR) / "fixtures";
  const auto bundle = pipeline::load_bundle(dir / "rangpur" / "manifest.json");
  Service s(bundle);
  const auto recorded = [&](const char* name) {
    std::ifstream in(dir / "responses" / name, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(s.handle(get("/api/zones")).body == recorded("zones.json"));
  CHECK(s.handle(get("/api/forecast", {{"station", "Rangpur"}, {"year", "2023"}})).body ==
        recorded("forecast_rangpur_2023.json"));
  CHECK(s.handle(post_recommend({{"lat", 25.74058}, {"lon", 89.261139}, {"year", 2023}})).body ==
        recorded("recommend_rangpur_2023.json"));
  CHECK(s.handle(post_recommend({{"lat", 25.74058}, {"lon", 89.261139}, {"year", 2023}, {"exclude_crops", {"Papaya"}}})).body ==
        recorded("recommend_rangpur_2023_without_papaya.json"));
}
