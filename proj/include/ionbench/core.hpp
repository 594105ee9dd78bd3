#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ionbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Physical constants. The battery literature this code follows uses these
// rounded values; keep them so reported numbers reproduce.
inline constexpr double kFaraday = 96485.0;   // C/mol
inline constexpr double kGasConstant = 8.314; // J/(mol K)
inline constexpr double kReferenceTemperature = 298.15;

enum class Errc {
  domain,
  instability,
  saturation,
  negative_concentration,
  singular_system,
  porosity_collapse,
  degenerate_phase,
  boundary_collision,
  infeasible_window,
  non_positive_definite,
  no_charge_event,
  window_too_short,
  degenerate_feature,
  schema_mismatch,
  empty_file,
  non_monotone_time,
  misalignment,
  validation,
  io,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by the time loop; wraps the failing sub-operation with the time
/// at which the failure occurred.
class SimulationError : public Error {
 public:
  SimulationError(Errc code, double time, const std::string& what)
      : Error(code, what + " (t = " + std::to_string(time) + " s)"),
        time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

enum class Electrode { positive, negative };

/// SplitMix64 finalizer; used to fan one user seed out into independent
/// streams (member index, restart index, ...).
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename Scalar>
Scalar arrhenius_factor(Scalar activation_energy, Scalar temperature) {
  using std::exp;
  return exp(-activation_energy / Scalar(kGasConstant) *
             (Scalar(1) / temperature - Scalar(1) / Scalar(kReferenceTemperature)));
}

}  // namespace ionbench
