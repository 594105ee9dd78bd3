#pragma once

#include "ionbench/espm.hpp"
#include "ionbench/trees.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ionbench {

/// Residual-model inputs: the measured current, then nine simulated signals.
const std::vector<std::string>& hysteresis_feature_names();

struct ResidualDataset {
  Vector time;
  Matrix features;          // one row per kept sample, columns as hysteresis_feature_names()
  Vector V_cs;              // physics voltage
  Vector target;            // V_exp - V_cs
  std::size_t dropped_extrapolated = 0;
};

/// Pairs each experimental sample (t, I, V) with the nearest simulated sample.
/// The simulation needs the internal columns. Samples where the simulation
/// left its OCP tables are dropped. Throws Errc::misalignment when a pair is
/// further apart than one experimental sample period.
ResidualDataset build_residual_dataset(const TimeSeries& experiment, const TimeSeries& simulation);

/// Feature rows straight from a simulation output (its own I column).
Matrix hysteresis_features(const TimeSeries& simulation);

inline double hybrid_voltage(double V_cs, double V_h) { return V_cs + V_h; }

/// Physics run plus, when a forest is given, the learned residual.
/// Output columns: I, V_cs, V_h, V and the simulated feature signals.
TimeSeries hybrid_simulate(const Model& physics, const TimeSeries& profile, const SimulationOptions& options,
                           const RandomForest* hysteresis = nullptr);

struct ForestGrid {
  std::vector<int> max_depth{4, 8, 12};
  std::vector<int> min_leaf{2, 5, 10};
  std::vector<double> feature_rate{0.5, 1.0};
  std::vector<int> trees{30};
};

struct GridSearchResult {
  ForestOptions best;
  double best_rmse = 0;
  std::vector<std::pair<ForestOptions, double>> table;  // every grid point with its validation RMSE
};

/// Picks forest hyperparameters by validation RMSE; ties keep the earlier grid point.
GridSearchResult grid_search_forest(const ResidualDataset& train, const ResidualDataset& validation,
                                    const ForestGrid& grid, const ForestOptions& base = {});

void save_forest(const RandomForest& forest, const std::filesystem::path& path);
RandomForest load_forest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic data

struct DriveCycleOptions {
  double duration = 3600;     // s
  double dt = 1.0;            // s
  double mean_current = 3.0;  // A, average discharge
  double peak_current = 12.0; // A
  double regen_fraction = 0.25;
  double rest_fraction = 0.15;
  double min_pulse = 5, max_pulse = 60;  // s
  std::uint64_t seed = 1;
};

/// Pulse train: random-length pulses of random amplitude, some regenerative
/// (negative) and some rests, scaled so the mean current is `mean_current`.
TimeSeries synthetic_drive_cycle(const DriveCycleOptions& options);

struct HysteresisInjection {
  double amplitude = 0.015;    // V at full charge
  double soc_gain = 0.015;     // extra V as the cell empties
  double current_scale = 1.0;  // A; width of the sign transition
  double noise = 1e-3;         // V, standard deviation
  std::uint64_t seed = 1;
};

/// "Experimental" record from a simulation: V = V_cs + H(SOC) tanh(I / I0) + noise.
TimeSeries inject_hysteresis(const TimeSeries& simulation, const HysteresisInjection& options);

}  // namespace ionbench
