#include "ionbench/cell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ionbench {

double TransportLaw::operator()(double concentration, double temperature) const {
  double value = constant;
  if (!coefficients.empty()) {
    value = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
      value = value * concentration + *it;
    }
  }
  if (activation_energy != 0.0) value *= arrhenius_factor(activation_energy, temperature);
  return value;
}

namespace {

// Index of the lower bracket for x in a strictly increasing axis, clamped.
Eigen::Index bracket(const Vector& axis, double x, double& weight) {
  const Eigen::Index n = axis.size();
  if (n == 1 || x <= axis[0]) {
    weight = 0.0;
    return 0;
  }
  if (x >= axis[n - 1]) {
    weight = 1.0;
    return n - 2;
  }
  Eigen::Index lo = 0;
  while (axis[lo + 1] < x) ++lo;
  weight = (x - axis[lo]) / (axis[lo + 1] - axis[lo]);
  return lo;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::domain, std::string("cell parameters: ") + what);
}

}  // namespace

double ResistanceMap::operator()(double soc_value, double current_value) const {
  double ws = 0.0, wi = 0.0;
  const Eigen::Index i = bracket(soc, soc_value, ws);
  const Eigen::Index j = bracket(current, current_value, wi);
  const Eigen::Index i1 = std::min<Eigen::Index>(i + 1, soc.size() - 1);
  const Eigen::Index j1 = std::min<Eigen::Index>(j + 1, current.size() - 1);
  return (1 - ws) * (1 - wi) * ohms(i, j) + ws * (1 - wi) * ohms(i1, j) +
         (1 - ws) * wi * ohms(i, j1) + ws * wi * ohms(i1, j1);
}

void CellParameters::validate() const {
  auto pos = [](double v) { return v > 0 && std::isfinite(v); };
  auto frac = [](double v) { return v > 0 && v < 1; };
  require(pos(A_cell), "A_cell must be positive");
  require(pos(L_p) && pos(L_s) && pos(L_n), "region thicknesses must be positive");
  require(pos(R_p) && pos(R_n), "particle radii must be positive");
  require(pos(D_s_p_ref) && pos(D_s_n_ref), "solid diffusivities must be positive");
  require(pos(D_e(c_e_init, kReferenceTemperature)), "electrolyte diffusivity must be positive");
  require(pos(kappa_e(c_e_init, kReferenceTemperature)), "electrolyte conductivity must be positive");
  require(pos(k_p) && pos(k_n), "reaction rates must be positive");
  require(pos(c_s_max_p) && pos(c_s_max_n) && pos(c_e_init), "concentrations must be positive");
  require(frac(eps_p) && frac(eps_s) && frac(eps_n), "porosities must lie in (0, 1)");
  require(frac(nu_p) && frac(nu_n), "active volume fractions must lie in (0, 1)");
  require(frac(t_plus), "transference number must lie in (0, 1)");
  require(pos(brugg), "Bruggeman coefficient must be positive");
  require(0 <= theta_n_0 && theta_n_0 < theta_n_100 && theta_n_100 <= 1,
          "need 0 <= theta_n_0 < theta_n_100 <= 1");
  require(0 <= theta_p_100 && theta_p_100 < theta_p_0 && theta_p_0 <= 1,
          "need 0 <= theta_p_100 < theta_p_0 <= 1");
  require(R_l >= 0 && R_el >= 0, "resistances must be non-negative");
  require(i0_floor > 0, "exchange current floor must be positive");
  if (R_l_map) {
    require(R_l_map->soc.size() >= 1 && R_l_map->current.size() >= 1 &&
                R_l_map->ohms.rows() == R_l_map->soc.size() &&
                R_l_map->ohms.cols() == R_l_map->current.size(),
            "R_l map shape mismatch");
  }
}

double CellParameters::capacity_p_ah() const {
  return nu_p * A_cell * L_p * kFaraday * c_s_max_p / 3600.0;
}

double CellParameters::capacity_n_ah() const {
  return nu_n * A_cell * L_n * kFaraday * c_s_max_n / 3600.0;
}

void SpatialGrid::validate() const {
  if (n_r < 3 || n_x_p < 3 || n_x_s < 3 || n_x_n < 3) {
    throw Error(Errc::domain, "spatial grid: every node count must be >= 3");
  }
}

Vector SpatialGrid::cell_centers(const CellParameters& cell) const {
  Vector x(n_x());
  Eigen::Index k = 0;
  auto fill = [&](double start, double length, int n) {
    const double dx = length / n;
    for (int i = 0; i < n; ++i) x[k++] = start + (i + 0.5) * dx;
  };
  fill(0.0, cell.L_p, n_x_p);
  fill(cell.L_p, cell.L_s, n_x_s);
  fill(cell.L_p + cell.L_s, cell.L_n, n_x_n);
  return x;
}

// ---------------------------------------------------------------------------

double graphite_ocp(double theta) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  return 0.7222 + 0.1387 * theta + 0.029 * sqrt(theta) - 0.0172 / theta +
         0.0019 / pow(theta, 1.5) + 0.2808 * exp(0.9 - 15.0 * theta) -
         0.7984 * exp(0.4465 * theta - 0.4108);
}

double nmc_ocp(double theta) {
  const double t2 = theta * theta;
  return -10.72 * t2 * t2 + 23.88 * t2 * theta - 16.77 * t2 + 2.595 * theta + 4.563;
}

namespace {
double lfp_shape(double theta) {
  using std::exp;
  return -0.05 * (theta - 0.5) + 0.6 * exp(-60.0 * theta) - 0.8 * exp(-60.0 * (1.0 - theta));
}
}  // namespace

double lfp_ocp_charge(double theta) { return 3.45 + lfp_shape(theta); }
double lfp_ocp_discharge(double theta) { return 3.41 + lfp_shape(theta); }

CellParameters reference_nmc_cell() {
  CellParameters c;
  c.A_cell = 0.4335;
  c.L_p = 70e-6;
  c.L_s = 25e-6;
  c.L_n = 70e-6;
  c.R_p = 5e-6;
  c.R_n = 6e-6;
  c.eps_p = 0.3;
  c.eps_s = 0.4;
  c.eps_n = 0.3;
  c.nu_p = 0.5;
  c.nu_n = 0.6;
  c.D_s_p_ref = 1e-14;
  c.D_s_n_ref = 3e-14;
  c.Ea_D_s_p = 25000;
  c.Ea_D_s_n = 25000;
  c.D_e.constant = 2.5e-10;
  c.kappa_e.constant = 1.1;
  c.t_plus = 0.38;
  c.brugg = 1.5;
  c.k_p = 2e-11;
  c.k_n = 5e-11;
  c.c_s_max_p = 51000;
  c.c_s_max_n = 31000;
  c.c_e_init = 1000;
  c.theta_n_0 = 0.03;
  c.theta_n_100 = 0.85;
  c.theta_p_100 = 0.35;
  c.theta_p_0 = c.theta_p_100 + c.window_capacity_ah() / c.capacity_p_ah();
  c.R_l = 1.5e-3;
  c.R_el = 0.5e-3;
  return c;
}

OcpSet reference_nmc_ocp() {
  OcpSet set;
  set.positive = OcpTable::sample(nmc_ocp, 0.0, 1.0, 401);
  set.negative = OcpTable::sample(graphite_ocp, 0.002, 1.0, 500);
  return set;
}

CellParameters reference_lfp_cell() {
  CellParameters c;
  c.A_cell = 0.5;
  c.L_p = 80e-6;
  c.L_s = 25e-6;
  c.L_n = 50e-6;
  c.R_p = 0.5e-6;
  c.R_n = 5e-6;
  c.eps_p = 0.35;
  c.eps_s = 0.45;
  c.eps_n = 0.35;
  c.nu_p = 0.45;
  c.nu_n = 0.55;
  c.D_s_p_ref = 2e-15;
  c.D_s_n_ref = 3e-14;
  c.D_e.constant = 2.5e-10;
  c.kappa_e.constant = 1.1;
  c.t_plus = 0.38;
  c.brugg = 1.5;
  c.k_p = 5e-11;
  c.k_n = 5e-11;
  c.c_s_max_p = 22806;
  c.c_s_max_n = 31000;
  c.c_e_init = 1000;
  c.theta_p_100 = 0.12;
  c.theta_p_0 = 0.88;
  c.theta_n_0 = 0.03;
  c.theta_n_100 = c.theta_n_0 + c.capacity_p_ah() * (c.theta_p_0 - c.theta_p_100) / c.capacity_n_ah();
  c.R_l = 2e-3;
  c.R_el = 0.0;
  return c;
}

OcpSet reference_lfp_ocp() {
  OcpSet set;
  set.positive_charge = OcpTable::sample(lfp_ocp_charge, 0.0, 1.0, 401);
  set.positive_discharge = OcpTable::sample(lfp_ocp_discharge, 0.0, 1.0, 401);
  set.positive = OcpTable::sample(
      [](double t) { return 0.5 * (lfp_ocp_charge(t) + lfp_ocp_discharge(t)); }, 0.0, 1.0, 401);
  set.negative = OcpTable::sample(graphite_ocp, 0.002, 1.0, 500);
  return set;
}

}  // namespace ionbench
