#pragma once

#include "ionbench/cell.hpp"
#include "ionbench/coreshell.hpp"
#include "ionbench/degradation.hpp"
#include "ionbench/timeseries.hpp"
#include "ionbench/transport.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ionbench {

/// Everything a simulation needs besides the input profile. Immutable once
/// built, so one Model can back many concurrent simulations.
struct Model {
  CellParameters cell;
  OcpSet ocp;
  SpatialGrid grid;
  std::optional<AgingParameters> aging;         // side reactions, film and LAM
  std::optional<CoreShellParameters> coreshell; // two-phase positive particle

  void validate() const;
  const AgingParameters& aging_or_inert() const;
};

struct CellState {
  Vector c_s_p;  // radial shells (unused when the core-shell particle is active)
  Vector c_s_n;
  Vector c_e;
  Vector phi_e;
  double T = kReferenceTemperature;
  double t = 0;
  double current = 0;  // current of the step that produced this state; sets the surface gradients
  AgingState aging;
  std::optional<PhaseBoundaryState> coreshell;

  RegionPorosity porosity(const CellParameters& cell) const {
    return {aging.eps_p, cell.eps_s, aging.eps_n};
  }
};

/// Uniform equilibrium state at the given cell SOC (1 = theta_*_100).
CellState initial_state(const Model& model, double soc, double temperature = kReferenceTemperature,
                        PhaseOrientation orientation = PhaseOrientation::discharge);

/// Terminal voltage and the internal signals that build it.
struct Observation {
  double V = 0;
  double U_p = 0, U_n = 0;
  double eta_p = 0, eta_n = 0;
  double delta_phi_e = 0;
  double theta_p = 0, theta_n = 0;            // particle averages
  double theta_p_surf = 0, theta_n_surf = 0;
  double soc_p = 0, soc_n = 0;
  double R_contact = 0;
  double r_p_norm = 0;                        // r_p / R_p, zero without core-shell
  bool extrapolated = false;
  Vector phi_e;
};

Observation observe(const CellState& state, double current, const Model& model);

inline double terminal_voltage(const CellState& state, double current, const Model& model) {
  return observe(state, current, model).V;
}

/// One coupled step: side currents from the present state, solid and
/// electrolyte transport with those currents injected, then the aging
/// update over the same interval.
CellState espm_step(const CellState& state, double current, double dt, const Model& model);

struct SimulationOptions {
  double dt = 1.0;
  int max_halvings = 6;
  double initial_soc = 1.0;
  double temperature = kReferenceTemperature;  // used when the profile has no T column
  std::optional<double> v_min, v_max;
  bool internal_columns = true;
  PhaseOrientation initial_orientation = PhaseOrientation::discharge;
};

struct SimulationResult {
  TimeSeries series;
  CellState final_state;
  std::optional<double> cutoff_time;  // interpolated crossing of a voltage limit
  bool extrapolated = false;          // an OCP lookup left its table
};

/// Integrates the model over a current profile (column "I", optional "T",
/// sample-and-hold between rows). Output columns are t, I, V, SOC_n, SOC_p, T
/// and, when requested, the internal signals.
SimulationResult simulate(const Model& model, const TimeSeries& profile, const SimulationOptions& options,
                          std::optional<CellState> initial = std::nullopt);

/// Output columns that feed the hysteresis model, in order.
const std::vector<std::string>& internal_signal_names();

/// Charge passed up to the end of the run (or the cutoff), Ah, positive on discharge.
double charge_throughput_ah(const SimulationResult& result);

/// Constant-current profile with two rows (t = 0 and t = duration).
TimeSeries constant_current_profile(double current, double duration);

}  // namespace ionbench
