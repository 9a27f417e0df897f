#include "cropcast/service.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>

#include "cropcast/error.hpp"

namespace cropcast::service {

namespace {

using nlohmann::json;

Response json_response(const json& body, int status = 200) {
  Response r;
  r.status = status;
  r.body = body.dump();
  return r;
}

Response from_error(const Error& e) {
  switch (e.code()) {
    case Errc::unknown_station: return error_response(ApiCode::unknown_station, e.what());
    case Errc::year_out_of_range: return error_response(ApiCode::year_out_of_range, e.what());
    case Errc::insufficient_history: return error_response(ApiCode::insufficient_history, e.what(), e.stage());
    default: return error_response(ApiCode::internal_error, e.what(), e.stage());
  }
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(ApiCode code) noexcept {
  switch (code) {
    case ApiCode::invalid_request: return "invalid_request";
    case ApiCode::invalid_coordinates: return "invalid_coordinates";
    case ApiCode::unknown_station: return "unknown_station";
    case ApiCode::year_out_of_range: return "year_out_of_range";
    case ApiCode::insufficient_history: return "insufficient_history";
    case ApiCode::not_ready: return "not_ready";
    case ApiCode::not_found: return "not_found";
    case ApiCode::internal_error: return "internal_error";
  }
  return "internal_error";
}

int http_status(ApiCode code) noexcept {
  switch (code) {
    case ApiCode::invalid_request:
    case ApiCode::invalid_coordinates: return 400;
    case ApiCode::unknown_station:
    case ApiCode::not_found: return 404;
    case ApiCode::year_out_of_range:
    case ApiCode::insufficient_history: return 422;
    case ApiCode::not_ready: return 503;
    case ApiCode::internal_error: return 500;
  }
  return 500;
}

Response error_response(ApiCode code, const std::string& message, const std::string& stage) {
  json err = {{"code", to_string(code)}, {"message", message}};
  if (!stage.empty()) err["stage"] = stage;
  return json_response({{"error", std::move(err)}}, http_status(code));
}

Service::Service(pipeline::Bundle bundle) { set_bundle(std::move(bundle)); }

void Service::set_bundle(pipeline::Bundle bundle) {
  if (bundle.datasets.zones.empty()) throw Error(Errc::config_error, "bundle has an empty zone table");
  auto shared = std::make_shared<const pipeline::Bundle>(std::move(bundle));
  std::lock_guard lock(mutex_);
  bundle_ = std::move(shared);
  cache_.clear();
}

std::shared_ptr<const pipeline::Bundle> Service::bundle() const {
  std::lock_guard lock(mutex_);
  return bundle_;
}

bool Service::ready() const { return bundle() != nullptr; }

pipeline::MonthlyWeather Service::forecast(const std::string& station, int year, bool* hit) const {
  const auto b = bundle();
  if (!b) throw Error(Errc::config_error, "service is not ready");
  std::optional<std::promise<pipeline::MonthlyWeather>> promise;
  std::shared_future<pipeline::MonthlyWeather> future;
  {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(station, year);
    const auto it = cache_.find(key);
    if (it != cache_.end()) {
      future = it->second;
    } else {
      promise.emplace();
      future = promise->get_future().share();
      cache_.emplace(key, future);
    }
  }
  if (hit) *hit = !promise.has_value();
  if (promise) {
    try {
      promise->set_value(pipeline::forecast_for(*b, station, year));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }
  return future.get();
}

Response Service::handle(const Request& request) const {
  try {
    if (request.path == "/api/status") {
      if (request.method != "GET") return error_response(ApiCode::not_found, "no route for " + request.method + " " + request.path);
      return json_response({{"ready", ready()}});
    }
    const bool known = request.path == "/api/zones" || request.path == "/api/forecast" || request.path == "/api/recommend";
    if (!known) return error_response(ApiCode::not_found, "no route for " + request.method + " " + request.path);
    const bool method_ok = request.path == "/api/recommend" ? request.method == "POST" : request.method == "GET";
    if (!method_ok) return error_response(ApiCode::not_found, "no route for " + request.method + " " + request.path);
    const auto b = bundle();
    if (!b) return error_response(ApiCode::not_ready, "the data bundle is still loading");
    if (request.path == "/api/zones") return zones(*b);
    if (request.path == "/api/forecast") return forecast_endpoint(request);
    return recommend_endpoint(*b, request);
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return error_response(ApiCode::internal_error, e.what());
  }
}

Response Service::zones(const pipeline::Bundle& b) const {
  auto list = json::array();
  for (const auto& z : b.datasets.zones) list.push_back(pipeline::zone_to_json(z));
  return json_response({{"zones", std::move(list)}});
}

Response Service::forecast_endpoint(const Request& request) const {
  const auto station = request.query.find("station");
  const auto year = request.query.find("year");
  if (station == request.query.end() || station->second.empty()) {
    return error_response(ApiCode::invalid_request, "query parameter 'station' is required");
  }
  if (year == request.query.end()) return error_response(ApiCode::invalid_request, "query parameter 'year' is required");
  const auto y = parse_int(year->second);
  if (!y) return error_response(ApiCode::invalid_request, "query parameter 'year' must be an integer");
  bool hit = false;
  auto r = json_response(forecast(station->second, *y, &hit).to_json());
  r.headers["X-Cache"] = hit ? "hit" : "miss";
  return r;
}

Response Service::recommend_endpoint(const pipeline::Bundle& b, const Request& request) const {
  const auto body = json::parse(request.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    return error_response(ApiCode::invalid_request, "request body must be a JSON object");
  }
  for (const auto& [key, value] : body.items()) {
    if (key != "lat" && key != "lon" && key != "year" && key != "exclude_crops") {
      return error_response(ApiCode::invalid_request, "unknown field '" + key + "'");
    }
  }
  for (const char* key : {"lat", "lon"}) {
    if (!body.contains(key) || !body[key].is_number()) {
      return error_response(ApiCode::invalid_request, std::string("field '") + key + "' must be a number");
    }
  }
  if (!body.contains("year") || !body["year"].is_number_integer()) {
    return error_response(ApiCode::invalid_request, "field 'year' must be an integer");
  }
  const double lat = body["lat"].get<double>();
  const double lon = body["lon"].get<double>();
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90 || lat > 90 || lon < -180 || lon > 180) {
    return error_response(ApiCode::invalid_coordinates, "lat must be in [-90, 90] and lon in [-180, 180]");
  }
  const auto year = body["year"].get<long long>();
  if (year < 1 || year > 9999) return error_response(ApiCode::year_out_of_range, "year must be in [1, 9999]");

  pipeline::RecommendRequest req{geo::GeoPoint(lat, lon), static_cast<int>(year), {}};
  if (body.contains("exclude_crops")) {
    const auto& ex = body["exclude_crops"];
    if (!ex.is_array()) return error_response(ApiCode::invalid_request, "field 'exclude_crops' must be a list of strings");
    for (const auto& c : ex) {
      if (!c.is_string()) return error_response(ApiCode::invalid_request, "field 'exclude_crops' must be a list of strings");
      req.exclude_crops.push_back(c.get<std::string>());
    }
  }
  const auto provider = [this](const std::string& station, int y) { return forecast(station, y); };
  return json_response(pipeline::recommend(b, req, provider).to_json());
}

ServiceConfig ServiceConfig::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::config_error, "cannot open service config " + file.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::config_error, "service config " + file.string() + " is not a JSON object");
  ServiceConfig c;
  const auto base = file.parent_path();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "host") c.host = value.get<std::string>();
      else if (key == "port") c.port = value.get<int>();
      else if (key == "bundle") c.bundle = base / value.get<std::string>();
      else if (key == "static_dir") c.static_dir = base / value.get<std::string>();
      else throw Error(Errc::config_error, "unknown key '" + key + "' in service config");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, "service config " + file.string() + ": " + e.what());
  }
  return c;
}

void ServiceConfig::apply_env(const EnvLookup& lookup) {
  if (const auto port_text = lookup("CROPCAST_PORT")) {
    const auto p = parse_int(*port_text);
    if (!p || *p < 0 || *p > 65535) throw Error(Errc::config_error, "CROPCAST_PORT must be a port number");
    port = *p;
  }
  if (const auto b = lookup("CROPCAST_BUNDLE")) bundle = *b;
}

ServiceConfig::EnvLookup ServiceConfig::process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

void mount(httplib::Server& server, const Service& service, const std::filesystem::path& static_dir) {
  const auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const auto out = service.handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  };
  server.Get(R"(/api/.*)", route);
  server.Post(R"(/api/.*)", route);
  server.Put(R"(/api/.*)", route);
  server.Delete(R"(/api/.*)", route);
  if (!static_dir.empty()) {
    if (!server.set_mount_point("/", static_dir.string())) {
      throw Error(Errc::config_error, "static directory " + static_dir.string() + " does not exist");
    }
  }
}

int run(const ServiceConfig& config, const std::function<void(int)>& on_listening) {
  httplib::Server server;
  Service service;
  mount(server, service, config.static_dir);
  int port = config.port;
  if (port == 0) {
    port = server.bind_to_any_port(config.host);
    if (port < 0) throw Error(Errc::io_error, "cannot bind " + config.host);
  } else if (!server.bind_to_port(config.host, port)) {
    throw Error(Errc::io_error, "cannot bind " + config.host + ":" + std::to_string(port));
  }
  std::thread listener([&] { server.listen_after_bind(); });
  std::cerr << "listening on http://" << config.host << ":" << port << "\n";
  if (on_listening) on_listening(port);
  try {
    service.set_bundle(pipeline::load_bundle(config.bundle));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    server.stop();
    listener.join();
    return 2;
  }
  std::cerr << "bundle ready\n";
  listener.join();
  return 0;
}

}  // namespace cropcast::service
