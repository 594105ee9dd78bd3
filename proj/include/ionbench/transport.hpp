#pragma once

#include "ionbench/cell.hpp"

#include <array>

namespace ionbench {

// ---------------------------------------------------------------------------
// Solid phase: finite volumes in r with the r^2 metric.
//
// A particle of radius R is split into n equal-width shells; entry k of the
// concentration vector is the shell average. Volumes and areas are carried
// without the 4*pi factor (V_k = (r_{k+1}^3 - r_k^3) / 3, A_k = r_k^2).

/// Shell volumes for n equal shells of a particle of radius `radius`.
Vector shell_volumes(Eigen::Index n, double radius);

/// Volume-averaged concentration.
double particle_average(const Vector& c, double radius);

/// Surface value extrapolated from the outer shell using the imposed
/// gradient flux_in / D at r = R.
double surface_concentration(const Vector& c, double radius, double diffusivity, double flux_in);

/// One implicit-Euler step of spherical diffusion with zero flux at the
/// centre and `flux_in` (mol/m^2/s, positive into the particle) at r = R.
/// Throws Errc::saturation if any shell leaves [0, c_max].
Vector solid_diffusion_step(const Vector& c, double radius, double diffusivity, double flux_in,
                            double dt, double c_max);

/// Molar flux into the positive particle surface (I > 0 on discharge).
inline double positive_surface_flux(double current, double a_t, const CellParameters& cell) {
  return current / (kFaraday * a_t * cell.A_cell * cell.L_p);
}

/// Molar flux into the negative particle surface, including the lithium
/// consumed by side reactions (j_side = j_SEI + j_lpl, A/m^3, <= 0).
inline double negative_surface_flux(double current, double j_side, double a_t,
                                    const CellParameters& cell) {
  return (-current + cell.L_n * cell.A_cell * j_side) / (kFaraday * a_t * cell.A_cell * cell.L_n);
}

// ---------------------------------------------------------------------------
// Electrolyte: finite volumes across positive | separator | negative.

/// Region porosities; aging may move eps_p and eps_n away from their initial values.
struct RegionPorosity {
  double positive = 0, separator = 0, negative = 0;
  static RegionPorosity initial(const CellParameters& cell) {
    return {cell.eps_p, cell.eps_s, cell.eps_n};
  }
};

/// Per-cell layout of the electrolyte grid.
struct ElectrolyteLayout {
  Vector dx;
  Vector eps;
  Eigen::VectorXi region;  // 0 positive, 1 separator, 2 negative

  ElectrolyteLayout(const CellParameters& cell, const SpatialGrid& grid, const RegionPorosity& porosity);
  Eigen::Index size() const { return dx.size(); }
};

/// Region-averaged values of a cell-wise field.
std::array<double, 3> region_averages(const Vector& field, const ElectrolyteLayout& layout);

/// Pore-wall molar fluxes J_p, J_s, J_n (mol/m^3/s).
std::array<double, 3> pore_wall_fluxes(double current, const CellParameters& cell);

/// Total electrolyte lithium per unit area, sum of eps * c * dx (mol/m^2).
double electrolyte_inventory(const Vector& c_e, const ElectrolyteLayout& layout);

/// One implicit-Euler step of electrolyte mass transport.
Vector electrolyte_mass_step(const Vector& c_e, double current, double dt, double temperature,
                             const CellParameters& cell, const SpatialGrid& grid,
                             const RegionPorosity& porosity);

struct ElectrolytePotential {
  Vector phi;          // at cell centres, gauge phi(L) = 0
  double delta_phi{};  // phi(0) - phi(L)
};

/// Electrolyte charge balance. The ionic current is integrated exactly from
/// the piecewise-constant pore-wall sources, then the potential follows
/// cell by cell from Ohm's law plus the diffusion potential.
ElectrolytePotential electrolyte_potential_solve(const Vector& c_e, double current, double temperature,
                                                 const CellParameters& cell, const SpatialGrid& grid,
                                                 const RegionPorosity& porosity);

}  // namespace ionbench
