#pragma once

#include "ionbench/core.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace ionbench {

/// Open-circuit potential as a piecewise-linear table over stoichiometry.
class OcpTable {
 public:
  OcpTable() = default;
  /// Breakpoints must be strictly increasing, at least two, values finite.
  OcpTable(Vector stoichiometry, Vector volts);

  static OcpTable from_csv(const std::filesystem::path& path);
  /// Samples `fn` on `points` uniformly spaced breakpoints in [lo, hi].
  static OcpTable sample(const std::function<double(double)>& fn, double lo, double hi, int points);

  /// Linear interpolation; outside the table the end value is held and
  /// `extrapolated` (when given) is set.
  double operator()(double theta, bool* extrapolated = nullptr) const;

  bool in_domain(double theta) const { return theta >= lo() && theta <= hi(); }
  double lo() const { return theta_[0]; }
  double hi() const { return theta_[theta_.size() - 1]; }
  const Vector& stoichiometry() const { return theta_; }
  const Vector& volts() const { return volts_; }

  void write_csv(const std::filesystem::path& path) const;

 private:
  Vector theta_;
  Vector volts_;
};

/// Mean of the charge and discharge branches of a hysteretic electrode.
double average_positive_ocp(double theta, const OcpTable& charge, const OcpTable& discharge,
                            bool* extrapolated = nullptr);

/// Electrode potentials used by the cell model. When both positive branches
/// are present the positive potential is their average and `positive` is
/// ignored.
struct OcpSet {
  OcpTable positive;
  OcpTable negative;
  std::optional<OcpTable> positive_charge;
  std::optional<OcpTable> positive_discharge;

  bool has_branches() const { return positive_charge && positive_discharge; }
  double positive_potential(double theta, bool* extrapolated = nullptr) const;
  double negative_potential(double theta, bool* extrapolated = nullptr) const {
    return negative(theta, extrapolated);
  }
};

}  // namespace ionbench
