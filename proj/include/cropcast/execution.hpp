#pragma once

namespace cropcast {

/// Selects between the OpenMP kernel and its serial reference. Both paths
/// produce bit-identical results.
enum class Execution { serial, parallel };

}  // namespace cropcast
