#pragma once

#include "ionbench/cell.hpp"

namespace ionbench {

/// Side-reaction, film and active-material-loss parameters.
struct AgingParameters {
  double k_f_ref = 0;        // SEI kinetic constant, m/s
  double Ea_k_f = 0;         // optional Arrhenius activation energy, J/mol
  double c_solv_surf = 0;    // solvent concentration at the particle surface, mol/m^3
  double alpha_s = 0.5;      // side-reaction transfer coefficient
  double i_0_lpl = 0;        // plating exchange current, A/m^2
  double beta_lpl = 0;       // plated fraction converted to SEI
  double M_SEI = 0.162;      // kg/mol
  double M_Li = 6.94e-3;     // kg/mol
  double rho_SEI = 1690;     // kg/m^3
  double rho_Li = 534;       // kg/m^3
  double kappa_SEI = 5e-6;   // S/m
  double beta_prime_p = 0;   // 1/s
  double beta_prime_n = 0;   // 1/s
  double a_f_p = 0;          // fracture surface area, 1/m
  double a_f_n = 0;

  void validate() const;
  double k_f(double temperature) const {
    return Ea_k_f == 0 ? k_f_ref : k_f_ref * arrhenius_factor(Ea_k_f, temperature);
  }
  /// All parameters that drive degradation are zero.
  bool inert() const;
};

struct AgingState {
  double c_SEI = 0, c_Li = 0;                   // mol/m^3
  double L_film = 0, L_SEI = 0, L_Li = 0;       // m
  double a_ina_p = 0, a_ina_n = 0;              // 1/m
  double a_t_p = 0, a_t_n = 0;                  // 1/m
  double eps_p = 0, eps_n = 0;
  double R_film = 0;                            // Ohm
  double j_SEI = 0, j_lpl = 0;                  // side currents applied over the next step, A/m^3

  /// Fresh cell: no film, no inactive area, initial porosities.
  static AgingState fresh(const CellParameters& cell, const AgingParameters& aging);
};

/// Solid potential of the negative electrode relative to the electrolyte.
inline double negative_solid_potential(double U_n, double eta_n, double R_film, double current) {
  return U_n + eta_n + R_film * current;
}

/// SEI side current density (A/m^3, <= 0).
double sei_current(double a_n_t, double phi_s_n, double R_film, double current, double temperature,
                   const AgingParameters& aging);

/// Irreversible plating side current density (A/m^3, <= 0).
double plating_current(double a_n_t, double phi_s_n, double R_film, double current, double temperature,
                       const AgingParameters& aging);

struct SpeciesRates {
  double dc_SEI = 0;  // mol/m^3/s
  double dc_Li = 0;
};
SpeciesRates species_rates(double j_SEI, double j_lpl, const AgingParameters& aging);

struct FilmRates {
  double dL_SEI = 0;  // m/s
  double dL_Li = 0;
  double dL_film = 0;
};
FilmRates film_growth(const SpeciesRates& rates, double a_n_t, const AgingParameters& aging);

/// R_film = L_SEI / (a_n_t A_cell L_n kappa_SEI); zero for a film-free cell.
double film_resistance(double L_SEI, double a_n_t, double kappa_SEI, double A_cell, double L_n);

struct ActiveArea {
  double a_ina = 0;
  double a_t = 0;
};
/// Exact step of da_ina/dt = beta' (a + a_f - a_ina) over dt.
ActiveArea lam_step(double a_ina, double a_geometric, double a_f, double beta_prime, double dt);

/// Porosity update for one electrode; `film_thickness` and `nu` only enter
/// for the negative electrode. Throws Errc::porosity_collapse when the
/// result leaves (0, 1).
double porosity_update(double eps_0, double a_ina, double a_f, double radius, double nu,
                       double film_thickness);

struct SideCurrents {
  double j_SEI = 0;
  double j_lpl = 0;
};

/// SEI and plating currents for the present negative-electrode state.
SideCurrents side_currents(double a_n_t, double phi_s_n, double R_film, double current,
                           double temperature, const AgingParameters& aging);

/// Advances species, film, inactive area and porosity over dt using the side
/// currents stored in `state` (the ones injected into the negative particle
/// during the same step), so lithium bookkeeping closes exactly.
AgingState aging_advance(const AgingState& state, double dt, const CellParameters& cell,
                         const AgingParameters& aging);

}  // namespace ionbench
