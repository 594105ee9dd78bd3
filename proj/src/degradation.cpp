#include "ionbench/degradation.hpp"

#include <cmath>
#include <string>

namespace ionbench {

void AgingParameters::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::domain, std::string("aging parameters: ") + what);
  };
  check(k_f_ref >= 0 && c_solv_surf >= 0 && alpha_s >= 0 && i_0_lpl >= 0, "rates must be non-negative");
  check(beta_lpl >= 0 && beta_lpl <= 1, "beta_lpl must lie in [0, 1]");
  check(M_SEI > 0 && M_Li > 0 && rho_SEI > 0 && rho_Li > 0, "molar masses and densities must be positive");
  check(kappa_SEI > 0, "kappa_SEI must be positive");
  check(beta_prime_p >= 0 && beta_prime_n >= 0 && a_f_p >= 0 && a_f_n >= 0,
        "LAM coefficients must be non-negative");
}

bool AgingParameters::inert() const {
  return (k_f_ref == 0 || c_solv_surf == 0) && i_0_lpl == 0 && beta_prime_p == 0 &&
         beta_prime_n == 0 && a_f_p == 0 && a_f_n == 0;
}

AgingState AgingState::fresh(const CellParameters& cell, const AgingParameters& aging) {
  AgingState s;
  s.a_t_p = cell.specific_area_p() + aging.a_f_p;
  s.a_t_n = cell.specific_area_n() + aging.a_f_n;
  s.eps_p = porosity_update(cell.eps_p, 0.0, aging.a_f_p, cell.R_p, cell.nu_p, 0.0);
  s.eps_n = porosity_update(cell.eps_n, 0.0, aging.a_f_n, cell.R_n, cell.nu_n, 0.0);
  return s;
}

namespace {

double side_exponential(double phi_s_n, double R_film, double current, double temperature,
                        const AgingParameters& aging) {
  if (!(temperature > 0)) throw Error(Errc::domain, "side reaction: temperature must be positive");
  return std::exp(-aging.alpha_s * kFaraday / (kGasConstant * temperature) *
                  (phi_s_n - R_film * current));
}

}  // namespace

double sei_current(double a_n_t, double phi_s_n, double R_film, double current, double temperature,
                   const AgingParameters& aging) {
  if (!(a_n_t > 0)) throw Error(Errc::domain, "sei_current: a_n_t must be positive");
  const double k_f = aging.k_f(temperature);
  if (k_f == 0 || aging.c_solv_surf == 0) return 0.0;
  return -kFaraday * a_n_t * k_f * aging.c_solv_surf *
         side_exponential(phi_s_n, R_film, current, temperature, aging);
}

double plating_current(double a_n_t, double phi_s_n, double R_film, double current, double temperature,
                       const AgingParameters& aging) {
  if (!(a_n_t > 0)) throw Error(Errc::domain, "plating_current: a_n_t must be positive");
  if (aging.i_0_lpl == 0) return 0.0;
  return -2.0 * a_n_t * aging.i_0_lpl * side_exponential(phi_s_n, R_film, current, temperature, aging);
}

SideCurrents side_currents(double a_n_t, double phi_s_n, double R_film, double current,
                           double temperature, const AgingParameters& aging) {
  return {sei_current(a_n_t, phi_s_n, R_film, current, temperature, aging),
          plating_current(a_n_t, phi_s_n, R_film, current, temperature, aging)};
}

SpeciesRates species_rates(double j_SEI, double j_lpl, const AgingParameters& aging) {
  const double two_f = 2.0 * kFaraday;
  return {-(j_SEI / two_f + j_lpl / two_f * aging.beta_lpl),
          -j_lpl / two_f * (1.0 - aging.beta_lpl)};
}

FilmRates film_growth(const SpeciesRates& rates, double a_n_t, const AgingParameters& aging) {
  if (!(a_n_t > 0)) throw Error(Errc::domain, "film_growth: a_n_t must be positive");
  FilmRates f;
  f.dL_SEI = rates.dc_SEI * aging.M_SEI / aging.rho_SEI / a_n_t;
  f.dL_Li = rates.dc_Li * aging.M_Li / aging.rho_Li / a_n_t;
  f.dL_film = f.dL_SEI + f.dL_Li;
  return f;
}

double film_resistance(double L_SEI, double a_n_t, double kappa_SEI, double A_cell, double L_n) {
  if (L_SEI == 0) return 0.0;
  if (!(a_n_t > 0 && kappa_SEI > 0 && A_cell > 0 && L_n > 0)) {
    throw Error(Errc::domain, "film_resistance: denominators must be positive");
  }
  return L_SEI / (a_n_t * A_cell * L_n * kappa_SEI);
}

ActiveArea lam_step(double a_ina, double a_geometric, double a_f, double beta_prime, double dt) {
  const double ceiling = a_geometric + a_f;
  if (a_ina > ceiling) throw Error(Errc::domain, "lam_step: inactive area exceeds total area");
  ActiveArea out;
  out.a_t = (ceiling - a_ina) * std::exp(-beta_prime * dt);
  out.a_ina = ceiling - out.a_t;
  return out;
}

double porosity_update(double eps_0, double a_ina, double a_f, double radius, double nu,
                       double film_thickness) {
  const double eps = eps_0 + (a_ina - a_f) * radius / 3.0 - nu * 3.0 * film_thickness / radius;
  if (!(eps > 0 && eps < 1)) {
    throw Error(Errc::porosity_collapse, "porosity left (0, 1): " + std::to_string(eps));
  }
  return eps;
}

AgingState aging_advance(const AgingState& state, double dt, const CellParameters& cell,
                         const AgingParameters& aging) {
  AgingState next = state;
  const SpeciesRates rates = species_rates(state.j_SEI, state.j_lpl, aging);
  const FilmRates film = film_growth(rates, state.a_t_n, aging);
  next.c_SEI += rates.dc_SEI * dt;
  next.c_Li += rates.dc_Li * dt;
  next.L_SEI += film.dL_SEI * dt;
  next.L_Li += film.dL_Li * dt;
  next.L_film = next.L_SEI + next.L_Li;

  const ActiveArea p = lam_step(state.a_ina_p, cell.specific_area_p(), aging.a_f_p, aging.beta_prime_p, dt);
  const ActiveArea n = lam_step(state.a_ina_n, cell.specific_area_n(), aging.a_f_n, aging.beta_prime_n, dt);
  next.a_ina_p = p.a_ina;
  next.a_t_p = p.a_t;
  next.a_ina_n = n.a_ina;
  next.a_t_n = n.a_t;
  if (!(next.a_t_p > 0 && next.a_t_n > 0)) {
    throw Error(Errc::domain, "active surface area vanished");
  }
  next.eps_p = porosity_update(cell.eps_p, next.a_ina_p, aging.a_f_p, cell.R_p, cell.nu_p, 0.0);
  next.eps_n = porosity_update(cell.eps_n, next.a_ina_n, aging.a_f_n, cell.R_n, cell.nu_n, next.L_film);
  next.R_film = film_resistance(next.L_SEI, next.a_t_n, aging.kappa_SEI, cell.A_cell, cell.L_n);
  return next;
}

}  // namespace ionbench
