#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "cropcast/pipeline.hpp"

namespace httplib {
class Server;
}

namespace cropcast::service {

/// Closed set of error codes carried in every error body.
enum class ApiCode {
  invalid_request,
  invalid_coordinates,
  unknown_station,
  year_out_of_range,
  insufficient_history,
  not_ready,
  not_found,
  internal_error,
};

std::string_view to_string(ApiCode code) noexcept;
int http_status(ApiCode code) noexcept;

struct Request {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

/// Error body: {"error": {"code", "message", "stage"?}}.
Response error_response(ApiCode code, const std::string& message, const std::string& stage = {});

/// Request handling over an immutable bundle. handle() is safe to call from
/// many threads; the per-(station, year) forecast cache fits each key at
/// most once.
class Service {
 public:
  /// Not ready: every /api request answers 503 until set_bundle().
  Service() = default;
  explicit Service(pipeline::Bundle bundle);

  /// Throws Error(config_error) when the bundle has no zones.
  void set_bundle(pipeline::Bundle bundle);
  bool ready() const;

  Response handle(const Request& request) const;

  /// Cached forecast; `hit` reports whether the key was already present.
  pipeline::MonthlyWeather forecast(const std::string& station, int year, bool* hit = nullptr) const;

 private:
  std::shared_ptr<const pipeline::Bundle> bundle() const;
  Response zones(const pipeline::Bundle& b) const;
  Response forecast_endpoint(const Request& request) const;
  Response recommend_endpoint(const pipeline::Bundle& b, const Request& request) const;

  mutable std::mutex mutex_;
  std::shared_ptr<const pipeline::Bundle> bundle_;
  mutable std::map<std::pair<std::string, int>, std::shared_future<pipeline::MonthlyWeather>> cache_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path bundle;
  /// Built UI assets; not served when empty.
  std::filesystem::path static_dir;

  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  /// Reads a JSON config file {"host", "port", "bundle", "static_dir"}; paths
  /// are relative to the file's directory.
  static ServiceConfig read(const std::filesystem::path& file);
  /// CROPCAST_PORT and CROPCAST_BUNDLE override port and bundle.
  void apply_env(const EnvLookup& lookup);
  static EnvLookup process_env();
};

/// Routes /api/* to `service` and serves `static_dir` at "/".
void mount(httplib::Server& server, const Service& service, const std::filesystem::path& static_dir);

/// Starts listening, loads the bundle, then serves until stopped. Returns a
/// process exit code; `on_listening` receives the bound port.
int run(const ServiceConfig& config, const std::function<void(int)>& on_listening = {});

}  // namespace cropcast::service
