#pragma once

#include "ionbench/core.hpp"
#include "ionbench/ocp.hpp"

namespace ionbench {

struct CoreShellParameters {
  double c_alpha = 0;        // lithium-poor phase, mol/m^3
  double c_beta = 0;         // lithium-rich phase, mol/m^3
  int n_shell = 20;          // finite volumes across the shell
  double guard_fraction = 0.02;

  void validate(double c_s_max) const;
};

/// Which phase occupies the core. Discharge inserts lithium into the
/// positive particle, so a lithium-rich shell grows over a lithium-poor core;
/// charge is the mirror image.
enum class PhaseOrientation { discharge, charge };

struct PhaseBoundaryState {
  double r_p = 0;
  double c_alpha = 0;
  double c_beta = 0;
  Vector shell;  // cell averages on [r_p, R], equal widths
  PhaseOrientation orientation = PhaseOrientation::discharge;

  double core_concentration() const {
    return orientation == PhaseOrientation::discharge ? c_alpha : c_beta;
  }
  double interface_concentration() const {
    return orientation == PhaseOrientation::discharge ? c_beta : c_alpha;
  }
};

/// Two-phase particle holding the lithium of a uniform particle at
/// concentration `c_mean`, with a uniform shell at the interface value.
/// Throws Errc::boundary_collision when the implied boundary falls outside
/// the guard band.
PhaseBoundaryState coreshell_initial(double c_mean, double radius, PhaseOrientation orientation,
                                     const CoreShellParameters& params);

/// Lithium per particle without the 4*pi factor (core plus shell).
double coreshell_lithium(const PhaseBoundaryState& state, double radius);

/// Surface concentration extrapolated from the outer shell cell.
double coreshell_surface(const PhaseBoundaryState& state, double radius, double diffusivity,
                         double flux_in);

/// Stefan condition dr_p/dt = s D dc/dr|r_p / (c_alpha - c_beta), where s is
/// the sign of the current (or of the stored orientation when I = 0).
double boundary_velocity(double gradient_at_rp, double current, const PhaseBoundaryState& state,
                         double diffusivity);

/// Nucleates the opposite orientation: the old shell phase becomes the core
/// and a fresh uniform shell forms, with r_p chosen to conserve lithium.
PhaseBoundaryState coreshell_reorient(const PhaseBoundaryState& state, double radius,
                                      PhaseOrientation orientation, const CoreShellParameters& params);

/// One implicit step of shell diffusion plus interface motion. `flux_in` is
/// the molar flux into the particle surface. A current whose sign disagrees
/// with the orientation first reorients the particle.
PhaseBoundaryState coreshell_step(const PhaseBoundaryState& state, double radius, double diffusivity,
                                  double flux_in, double current, double dt,
                                  const CoreShellParameters& params);

}  // namespace ionbench
