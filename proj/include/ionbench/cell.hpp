#pragma once

#include "ionbench/core.hpp"
#include "ionbench/ocp.hpp"

#include <optional>
#include <vector>

namespace ionbench {

/// Concentration/temperature law for a bulk electrolyte property:
/// value(c, T) = (coefficients empty ? constant : sum_k coeff[k] c^k) * arrhenius(Ea, T).
struct TransportLaw {
  double constant = 0.0;
  std::vector<double> coefficients;
  double activation_energy = 0.0;  // J/mol

  double operator()(double concentration, double temperature) const;
};

/// Bilinear lookup of a lumped resistance over (SOC, current).
struct ResistanceMap {
  Vector soc;      // strictly increasing
  Vector current;  // strictly increasing, A
  Matrix ohms;     // soc.size() x current.size()

  double operator()(double soc_value, double current_value) const;
};

/// Physical, geometric and transport description of one cell (SI units).
struct CellParameters {
  double A_cell = 0;                      // m^2
  double L_p = 0, L_s = 0, L_n = 0;       // m
  double R_p = 0, R_n = 0;                // m
  double eps_p = 0, eps_s = 0, eps_n = 0; // initial porosities
  double nu_p = 0, nu_n = 0;              // active volume fractions
  double D_s_p_ref = 0, D_s_n_ref = 0;    // m^2/s at 25 C
  double Ea_D_s_p = 0, Ea_D_s_n = 0;      // J/mol
  TransportLaw D_e;                       // m^2/s
  TransportLaw kappa_e;                   // S/m
  double t_plus = 0;
  double brugg = 1.5;
  double v_td = 1.0;                      // thermodynamic factor multiplier
  double k_p = 0, k_n = 0;                // m^2.5/(mol^0.5 s)
  double c_s_max_p = 0, c_s_max_n = 0;    // mol/m^3
  double c_e_init = 0;                    // mol/m^3
  double theta_p_0 = 0, theta_p_100 = 0;
  double theta_n_0 = 0, theta_n_100 = 0;
  double R_l = 0;                         // Ohm
  double R_el = 0;                        // Ohm
  std::optional<ResistanceMap> R_l_map;   // replaces R_l when present
  double i0_floor = 1e-8;                 // A/m^2

  /// Throws Errc::domain naming the first violated invariant.
  void validate() const;

  double specific_area_p() const { return 3.0 * nu_p / R_p; }
  double specific_area_n() const { return 3.0 * nu_n / R_n; }
  double length() const { return L_p + L_s + L_n; }

  /// Full-stoichiometry electrode capacities, Ah.
  double capacity_p_ah() const;
  double capacity_n_ah() const;
  /// Capacity of the negative stoichiometry window, Ah.
  double window_capacity_ah() const { return capacity_n_ah() * (theta_n_100 - theta_n_0); }

  double D_s_p(double temperature) const { return D_s_p_ref * arrhenius_factor(Ea_D_s_p, temperature); }
  double D_s_n(double temperature) const { return D_s_n_ref * arrhenius_factor(Ea_D_s_n, temperature); }

  /// Lumped contact resistance, from the map when one is configured.
  double contact_resistance(double soc, double current) const {
    return R_l_map ? (*R_l_map)(soc, current) : R_l;
  }
};

/// Uniform finite-volume grid: n_r shells per particle, n_x_* cells per region.
struct SpatialGrid {
  int n_r = 10;
  int n_x_p = 10, n_x_s = 6, n_x_n = 10;

  void validate() const;
  int n_x() const { return n_x_p + n_x_s + n_x_n; }
  /// Cell-centre positions across the sandwich (x = 0 at the positive collector).
  Vector cell_centers(const CellParameters& cell) const;
};

// ---------------------------------------------------------------------------
// Electrochemistry kernels

/// Bruggeman-corrected effective transport property eps^brugg * bulk.
template <typename Scalar>
Scalar effective_transport(Scalar eps, Scalar brugg, Scalar bulk) {
  using std::pow;
  if (!(eps > Scalar(0) && eps <= Scalar(1)) || !(bulk > Scalar(0))) {
    throw Error(Errc::domain, "effective_transport: need 0 < eps <= 1 and bulk > 0");
  }
  return pow(eps, brugg) * bulk;
}

/// Symmetric Butler-Volmer exchange current density, floored at `floor`.
template <typename Scalar>
Scalar exchange_current_density(Scalar c_e, Scalar c_s_surf, Scalar c_s_max, Scalar k,
                                Scalar floor = Scalar(1e-8)) {
  using std::sqrt;
  if (!(c_e > Scalar(0)) || !(c_s_surf >= Scalar(0)) || !(c_s_surf <= c_s_max)) {
    throw Error(Errc::domain, "exchange_current_density: surface concentration outside [0, c_max] "
                              "or non-positive electrolyte concentration");
  }
  const Scalar i0 = Scalar(kFaraday) * k * sqrt(c_e) * sqrt(c_s_surf) * sqrt(c_s_max - c_s_surf);
  return i0 > floor ? i0 : floor;
}

/// Butler-Volmer overpotential with alpha_a = alpha_c = 0.5. The reaction
/// current density is -I (positive electrode) or +I (negative electrode)
/// over A_cell * a_t * L, with I > 0 on discharge.
template <typename Scalar>
Scalar overpotential(Scalar current, Scalar i0, Scalar a_t, Scalar thickness, Scalar area,
                     Scalar temperature, Electrode electrode) {
  using std::asinh;
  if (!(i0 > Scalar(0)) || !(a_t > Scalar(0))) {
    throw Error(Errc::domain, "overpotential: need i0 > 0 and a_t > 0");
  }
  const Scalar signed_current = electrode == Electrode::positive ? -current : current;
  return Scalar(kGasConstant) * temperature / (Scalar(0.5) * Scalar(kFaraday)) *
         asinh(signed_current / (Scalar(2) * area * a_t * thickness * i0));
}

/// Electrode state of charge from the volume-averaged stoichiometry; not clamped.
inline double soc(double theta, const CellParameters& cell, Electrode electrode) {
  if (electrode == Electrode::negative) {
    return (theta - cell.theta_n_0) / (cell.theta_n_100 - cell.theta_n_0);
  }
  return (cell.theta_p_0 - theta) / (cell.theta_p_0 - cell.theta_p_100);
}

// ---------------------------------------------------------------------------
// Reference cells shipped with the workbench.

/// NMC/graphite pouch cell (about 12.4 Ah) with a balanced stoichiometry window.
CellParameters reference_nmc_cell();
OcpSet reference_nmc_ocp();

/// LFP/graphite cell used by the core-shell and hybrid workflows.
CellParameters reference_lfp_cell();
OcpSet reference_lfp_ocp();

/// Analytic electrode potentials behind the reference tables.
double graphite_ocp(double theta);
double nmc_ocp(double theta);
double lfp_ocp_charge(double theta);
double lfp_ocp_discharge(double theta);

}  // namespace ionbench
