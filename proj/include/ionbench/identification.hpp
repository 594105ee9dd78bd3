#pragma once

#include "ionbench/espm.hpp"
#include "ionbench/optimize.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ionbench {

struct ParameterRange {
  std::string name;
  double lower = 0;
  double upper = 0;
  Scale scale = Scale::linear;
};

/// Ordered search space. Names resolve to CellParameters fields, to
/// "L_SEI/kappa_SEI" (a film applied through the initial aging state), or to
/// the OCV-fit quantities "Q_n" and "Q_p".
struct ParameterSpec {
  std::vector<ParameterRange> ranges;

  std::size_t size() const { return ranges.size(); }
  std::vector<Bound> bounds() const;
  std::vector<std::string> names() const;
  void validate() const;
};

/// Every parameter name that can be written into a cell.
const std::vector<std::string>& identifiable_names();

/// Reads a named quantity from a cell (film ratio from the aging state).
double parameter_value(const std::string& name, const CellParameters& cell, const AgingState* aging = nullptr,
                       const AgingParameters* aging_params = nullptr);

/// Bounds at value * (1 -+ relative) for each name, log-scaled for the
/// positive quantities that span decades.
ParameterSpec relative_spec(const std::vector<std::string>& names, const CellParameters& cell,
                            double relative, const AgingState* aging = nullptr,
                            const AgingParameters* aging_params = nullptr);

/// Named presets.
std::vector<std::string> preset_theta1();   // fresh cell
std::vector<std::string> preset_theta2();   // aged cell
std::vector<std::string> preset_vartheta(); // OCV stoichiometry and capacities
std::vector<std::string> preset_names(const std::string& preset);

struct IdentificationDataset {
  TimeSeries record;          // t, I, V and optionally SOC_CC
  double initial_soc = 1.0;
  double capacity_ah = 0;     // used for Coulomb counting when SOC_CC is absent
  double temperature = kReferenceTemperature;

  /// SOC_CC column, or Coulomb counting from initial_soc and capacity_ah.
  Vector soc_cc() const;
  void validate() const;
};

struct CostWeights {
  double voltage = 1.0;
  double soc_n = 1.0;
  double soc_p = 1.0;
};

/// A model and initial state with the candidate values written in.
struct Candidate {
  Model model;
  CellState initial;
};

Candidate apply_parameters(const Model& base, const ParameterSpec& spec, const Vector& values,
                           const IdentificationDataset& data, const AgingState* base_aging = nullptr);

/// Simulates the dataset's current and returns
///   w1 RMSE(V_exp, V) + w2 RMSE(SOC_CC, SOC_n) + w3 RMSE(SOC_CC, SOC_p).
/// A failed or truncated simulation costs kFailurePenalty * (1 + fraction of
/// the horizon not simulated); no exception escapes.
double cost_fresh(const Model& base, const ParameterSpec& spec, const Vector& values,
                  const IdentificationDataset& data, const CostWeights& weights = {},
                  const SimulationOptions& sim = {}, const AgingState* base_aging = nullptr);

inline constexpr double kFailurePenalty = 1e6;

// ---------------------------------------------------------------------------
// Pseudo-OCV fit

struct OcvDataset {
  Vector capacity_ah;  // discharged capacity, starting at 0 (fully charged)
  Vector volts;
  void validate() const;
  double discharged() const { return capacity_ah[capacity_ah.size() - 1]; }
};

/// Stoichiometry window implied by a candidate. theta_p_100 is not free: it is
/// solved so the simulated curve starts at the measured first voltage.
struct OcvWindow {
  double theta_p_100 = 0, theta_n_100 = 0;
  double Q_n = 0, Q_p = 0;
  double theta_n_0 = 0, theta_p_0 = 0;
  double start_voltage = 0;
};

/// `candidate` holds {theta_p_100, theta_n_100, Q_n, Q_p}; the first entry is
/// replaced by the anchored value, searched in [theta_p_lo, theta_p_hi].
/// Throws Errc::infeasible_window when a stoichiometry leaves [0, 1] or no
/// anchor exists in the interval.
OcvWindow resolve_ocv_window(const Vector& candidate, const OcvDataset& data, const OcpSet& ocp,
                             double theta_p_lo, double theta_p_hi);

/// RMSE between U_p - U_n swept over the measured capacities and the
/// pseudo-OCV, for the resolved window.
double cost_ocv(const Vector& candidate, const OcvDataset& data, const OcpSet& ocp, double theta_p_lo,
                double theta_p_hi, OcvWindow* window = nullptr);

/// Simulated pseudo-OCV of a window at the given capacities.
Vector simulated_ocv(const OcvWindow& window, const Vector& capacity_ah, const OcpSet& ocp);

// ---------------------------------------------------------------------------

struct IdentificationOptions {
  DEOptions de;
  SimulationOptions sim;
  CostWeights weights;
};

struct IdentificationResult {
  ParameterSpec spec;
  Vector best;
  double best_cost = 0;
  std::vector<double> history;
  int evaluations = 0;
};

IdentificationResult identify(const Model& base, const ParameterSpec& spec, const IdentificationDataset& data,
                              const IdentificationOptions& options, const AgingState* base_aging = nullptr);

struct OcvResult {
  OcvWindow window;
  double best_cost = 0;
  std::vector<double> history;
};

/// `spec` must hold the VARTHETA names in order; its theta_p_100 range bounds
/// the anchoring search.
/// `observer`, when set, sees the window of every evaluated feasible candidate.
OcvResult identify_ocv(const OcvDataset& data, const OcpSet& ocp, const ParameterSpec& spec,
                       const DEOptions& options,
                       const std::function<void(const OcvWindow&)>& observer = nullptr);

struct StagedResult {
  IdentificationResult stage1;
  Model fresh;                                 // base with the stage-1 values written in
  std::vector<IdentificationResult> stage2;
  std::vector<double> theta_n_100_drift;       // per aged dataset
  std::vector<double> film_ratio_drift;        // L_SEI / kappa_SEI per aged dataset
};

/// Stage 1 fits `theta1` on fresh data; stage 2 freezes the result and fits
/// `theta2` on each aged dataset. With no aged datasets stage 2 is skipped.
StagedResult identify_two_stage(const Model& base, const ParameterSpec& theta1, const ParameterSpec& theta2,
                                const IdentificationDataset& fresh,
                                const std::vector<IdentificationDataset>& aged,
                                const IdentificationOptions& options);

/// Spread of the best parameters over restarts with different seeds:
/// per-parameter standard deviation divided by the absolute mean.
struct RestartSpread {
  std::vector<Vector> bests;
  Vector mean;
  Vector relative_spread;
};
RestartSpread restart_spread(const Model& base, const ParameterSpec& spec, const IdentificationDataset& data,
                             const IdentificationOptions& options, int restarts);

/// Noise-free dataset generated by the model itself.
IdentificationDataset synthetic_dataset(const Model& truth, const TimeSeries& profile,
                                        const SimulationOptions& sim, const CellState* initial = nullptr);

}  // namespace ionbench
