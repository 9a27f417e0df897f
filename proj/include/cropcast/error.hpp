#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cropcast {

enum class Errc {
  invalid_argument,
  invalid_data,
  io_error,
  fit_failed,
  not_converged,
  unknown_station,
  unknown_crop,
  insufficient_history,
  year_out_of_range,
  config_error,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. `stage` is filled in by the pipeline when an error
/// escapes one of its steps.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const;

 private:
  Errc code_;
  std::string stage_;
};

}  // namespace cropcast
