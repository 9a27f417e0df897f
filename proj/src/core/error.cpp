#include "cropcast/error.hpp"

namespace cropcast {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::invalid_data: return "invalid_data";
    case Errc::io_error: return "io_error";
    case Errc::fit_failed: return "fit_failed";
    case Errc::not_converged: return "not_converged";
    case Errc::unknown_station: return "unknown_station";
    case Errc::unknown_crop: return "unknown_crop";
    case Errc::insufficient_history: return "insufficient_history";
    case Errc::year_out_of_range: return "year_out_of_range";
    case Errc::config_error: return "config_error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error Error::with_stage(std::string stage) const {
  Error copy(*this);
  copy.stage_ = std::move(stage);
  return copy;
}

}  // namespace cropcast
