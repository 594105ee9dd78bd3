#include "ionbench/ocp.hpp"

#include "ionbench/timeseries.hpp"

#include <algorithm>
#include <cmath>

namespace ionbench {

OcpTable::OcpTable(Vector stoichiometry, Vector volts)
    : theta_(std::move(stoichiometry)), volts_(std::move(volts)) {
  if (theta_.size() < 2 || theta_.size() != volts_.size()) {
    throw Error(Errc::domain, "OCP table needs at least two (stoichiometry, volts) pairs");
  }
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    if (!std::isfinite(theta_[i]) || !std::isfinite(volts_[i])) {
      throw Error(Errc::domain, "OCP table contains non-finite values");
    }
    if (i > 0 && !(theta_[i] > theta_[i - 1])) {
      throw Error(Errc::domain, "OCP breakpoints must be strictly increasing");
    }
  }
}

OcpTable OcpTable::from_csv(const std::filesystem::path& path) {
  CsvTable table = read_csv_table(path);
  if (table.header.size() != 2) {
    throw Error(Errc::schema_mismatch, path.string() + ": OCP file needs exactly two columns");
  }
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Vector theta(n), volts(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    theta[i] = table.rows[static_cast<std::size_t>(i)][0];
    volts[i] = table.rows[static_cast<std::size_t>(i)][1];
  }
  return OcpTable(std::move(theta), std::move(volts));
}

OcpTable OcpTable::sample(const std::function<double(double)>& fn, double lo, double hi, int points) {
  Vector theta = Vector::LinSpaced(points, lo, hi);
  Vector volts = theta.unaryExpr(fn);
  return OcpTable(std::move(theta), std::move(volts));
}

double OcpTable::operator()(double theta, bool* extrapolated) const {
  const Eigen::Index n = theta_.size();
  if (!(theta >= theta_[0] && theta <= theta_[n - 1])) {
    if (extrapolated) *extrapolated = true;
    return theta < theta_[0] || std::isnan(theta) ? volts_[0] : volts_[n - 1];
  }
  const double* begin = theta_.data();
  auto it = std::upper_bound(begin, begin + n, theta);
  Eigen::Index hi = std::min<Eigen::Index>(it - begin, n - 1);
  Eigen::Index lo = hi - 1;
  const double w = (theta - theta_[lo]) / (theta_[hi] - theta_[lo]);
  return volts_[lo] + w * (volts_[hi] - volts_[lo]);
}

void OcpTable::write_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.header = {"stoichiometry", "volts"};
  for (Eigen::Index i = 0; i < theta_.size(); ++i) table.rows.push_back({theta_[i], volts_[i]});
  write_csv_table(path, table);
}

double average_positive_ocp(double theta, const OcpTable& charge, const OcpTable& discharge,
                            bool* extrapolated) {
  return 0.5 * (charge(theta, extrapolated) + discharge(theta, extrapolated));
}

double OcpSet::positive_potential(double theta, bool* extrapolated) const {
  if (has_branches()) {
    return average_positive_ocp(theta, *positive_charge, *positive_discharge, extrapolated);
  }
  return positive(theta, extrapolated);
}

}  // namespace ionbench
