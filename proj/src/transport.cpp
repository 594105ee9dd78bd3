#include "ionbench/transport.hpp"

#include "ionbench/tridiagonal.hpp"

#include <cmath>

namespace ionbench {

Vector shell_volumes(Eigen::Index n, double radius) {
  const double dr = radius / static_cast<double>(n);
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r0 = dr * static_cast<double>(k);
    const double r1 = dr * static_cast<double>(k + 1);
    v[k] = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
  }
  return v;
}

double particle_average(const Vector& c, double radius) {
  const Vector v = shell_volumes(c.size(), radius);
  return v.dot(c) / v.sum();
}

double surface_concentration(const Vector& c, double radius, double diffusivity, double flux_in) {
  const double dr = radius / static_cast<double>(c.size());
  return c[c.size() - 1] + 0.5 * dr * flux_in / diffusivity;
}

Vector solid_diffusion_step(const Vector& c, double radius, double diffusivity, double flux_in,
                            double dt, double c_max) {
  if (!(dt > 0) || !std::isfinite(dt)) {
    throw Error(Errc::instability, "solid diffusion: time step must be positive and finite");
  }
  if (!(diffusivity > 0)) throw Error(Errc::domain, "solid diffusion: diffusivity must be positive");
  const Eigen::Index n = c.size();
  const double dr = radius / static_cast<double>(n);
  const Vector vol = shell_volumes(n, radius);
  Vector lower = Vector::Zero(n), diag(n), upper = Vector::Zero(n), rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r_in = dr * static_cast<double>(k);
    const double r_out = dr * static_cast<double>(k + 1);
    const double g_in = k > 0 ? diffusivity * r_in * r_in / dr : 0.0;
    const double g_out = k + 1 < n ? diffusivity * r_out * r_out / dr : 0.0;
    diag[k] = vol[k] / dt + g_in + g_out;
    lower[k] = -g_in;
    upper[k] = -g_out;
    rhs[k] = vol[k] / dt * c[k];
  }
  rhs[n - 1] += radius * radius * flux_in;
  Vector next = solve_tridiagonal<double>(lower, diag, upper, rhs);
  const double tol = 1e-9 * c_max;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(next[k] >= -tol && next[k] <= c_max + tol)) {
      throw Error(Errc::saturation, "solid concentration left [0, c_max]");
    }
  }
  return next;
}

// ---------------------------------------------------------------------------

ElectrolyteLayout::ElectrolyteLayout(const CellParameters& cell, const SpatialGrid& grid,
                                     const RegionPorosity& porosity)
    : dx(grid.n_x()), eps(grid.n_x()), region(grid.n_x()) {
  Eigen::Index k = 0;
  auto fill = [&](double length, int n, double e, int r) {
    for (int i = 0; i < n; ++i, ++k) {
      dx[k] = length / n;
      eps[k] = e;
      region[k] = r;
    }
  };
  fill(cell.L_p, grid.n_x_p, porosity.positive, 0);
  fill(cell.L_s, grid.n_x_s, porosity.separator, 1);
  fill(cell.L_n, grid.n_x_n, porosity.negative, 2);
}

std::array<double, 3> region_averages(const Vector& field, const ElectrolyteLayout& layout) {
  std::array<double, 3> sum{0, 0, 0}, len{0, 0, 0};
  for (Eigen::Index k = 0; k < layout.size(); ++k) {
    sum[layout.region[k]] += field[k] * layout.dx[k];
    len[layout.region[k]] += layout.dx[k];
  }
  return {sum[0] / len[0], sum[1] / len[1], sum[2] / len[2]};
}

std::array<double, 3> pore_wall_fluxes(double current, const CellParameters& cell) {
  return {-current / (cell.A_cell * kFaraday * cell.L_p), 0.0,
          current / (cell.A_cell * kFaraday * cell.L_n)};
}

double electrolyte_inventory(const Vector& c_e, const ElectrolyteLayout& layout) {
  return (layout.eps.array() * c_e.array() * layout.dx.array()).sum();
}

namespace {

std::array<double, 3> region_eps(const RegionPorosity& p) {
  return {p.positive, p.separator, p.negative};
}

}  // namespace

Vector electrolyte_mass_step(const Vector& c_e, double current, double dt, double temperature,
                             const CellParameters& cell, const SpatialGrid& grid,
                             const RegionPorosity& porosity) {
  if (!(dt > 0) || !std::isfinite(dt)) {
    throw Error(Errc::instability, "electrolyte: time step must be positive and finite");
  }
  const ElectrolyteLayout layout(cell, grid, porosity);
  const Eigen::Index n = layout.size();
  if (c_e.size() != n) throw Error(Errc::domain, "electrolyte: concentration size mismatch");
  const auto c_avg = region_averages(c_e, layout);
  const auto eps = region_eps(porosity);
  std::array<double, 3> d_eff{};
  for (int r = 0; r < 3; ++r) {
    d_eff[r] = effective_transport(eps[r], cell.brugg, cell.D_e(c_avg[r], temperature));
  }
  const auto flux = pore_wall_fluxes(current, cell);

  Vector lower = Vector::Zero(n), diag(n), upper = Vector::Zero(n), rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    diag[k] = layout.eps[k] * layout.dx[k] / dt;
    rhs[k] = diag[k] * c_e[k] + (1.0 - cell.t_plus) * flux[layout.region[k]] * layout.dx[k];
  }
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double g = 1.0 / (0.5 * layout.dx[k] / d_eff[layout.region[k]] +
                            0.5 * layout.dx[k + 1] / d_eff[layout.region[k + 1]]);
    diag[k] += g;
    diag[k + 1] += g;
    upper[k] = -g;
    lower[k + 1] = -g;
  }
  Vector next = solve_tridiagonal<double>(lower, diag, upper, rhs);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(next[k] > 0)) {
      throw Error(Errc::negative_concentration, "electrolyte concentration depleted");
    }
  }
  return next;
}

ElectrolytePotential electrolyte_potential_solve(const Vector& c_e, double current, double temperature,
                                                 const CellParameters& cell, const SpatialGrid& grid,
                                                 const RegionPorosity& porosity) {
  const ElectrolyteLayout layout(cell, grid, porosity);
  const Eigen::Index n = layout.size();
  if (c_e.size() != n) throw Error(Errc::domain, "electrolyte: concentration size mismatch");
  if (!(c_e.array() > 0).all()) {
    throw Error(Errc::negative_concentration, "electrolyte potential needs c_e > 0");
  }
  const auto c_avg = region_averages(c_e, layout);
  const auto eps = region_eps(porosity);
  std::array<double, 3> kappa{};
  for (int r = 0; r < 3; ++r) {
    const double bulk = cell.kappa_e(c_avg[r], temperature);
    if (!(bulk > 0) || !std::isfinite(bulk)) {
      throw Error(Errc::singular_system, "electrolyte conductivity degenerated");
    }
    kappa[r] = effective_transport(eps[r], cell.brugg, bulk);
  }

  const double x1 = cell.L_p;
  const double x2 = cell.L_p + cell.L_s;
  const double x3 = cell.length();
  const double i_app = current / cell.A_cell;
  // Ionic current density; zero at both collectors, -I/A across the separator.
  auto ionic = [&](double x) {
    if (x <= x1) return -i_app * x / cell.L_p;
    if (x <= x2) return -i_app;
    return -i_app * (1.0 - (x - x2) / cell.L_n);
  };
  // Integral of i_e / kappa_eff over [a, b]; i_e is linear inside each region.
  auto ohmic = [&](double a, double b) {
    const double breaks[4] = {0.0, x1, x2, x3};
    double total = 0.0;
    for (int r = 0; r < 3; ++r) {
      const double lo = std::max(a, breaks[r]);
      const double hi = std::min(b, breaks[r + 1]);
      if (hi <= lo) continue;
      total += 0.5 * (ionic(lo) + ionic(hi)) * (hi - lo) / kappa[r];
    }
    return total;
  };

  const double diffusion = 2.0 * kGasConstant * temperature * (1.0 - cell.t_plus) * cell.v_td / kFaraday;
  const Vector x = grid.cell_centers(cell);
  Vector phi(n);
  phi[0] = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    phi[k + 1] = phi[k] - ohmic(x[k], x[k + 1]) + diffusion * (std::log(c_e[k + 1]) - std::log(c_e[k]));
  }
  const double phi_left = phi[0] + ohmic(0.0, x[0]);
  const double phi_right = phi[n - 1] - ohmic(x[n - 1], x3);
  phi.array() -= phi_right;
  return {phi, phi_left - phi_right};
}

}  // namespace ionbench
