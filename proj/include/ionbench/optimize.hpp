#pragma once

#include "ionbench/core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ionbench {

using Objective = std::function<double(const Vector&)>;

enum class Scale { linear, log };

struct Bound {
  double lower = 0;
  double upper = 1;
  Scale scale = Scale::linear;
};

struct DEOptions {
  int budget = 20000;       // objective evaluations, including the initial population
  int population = 0;       // 0 selects 15 * dimension
  double F = 0.7;
  double CR = 0.9;
  std::uint64_t seed = 1;
  int threads = 1;          // concurrent evaluations within a generation
  double target = -1e300;   // stop once the best cost falls to this value
};

struct OptimizationResult {
  Vector best;
  double best_cost = 0;
  std::vector<double> history;  // best cost after each generation (DE) or iteration (NM)
  int evaluations = 0;
};

/// rand/1/bin differential evolution over a box. The search runs in the unit
/// cube mapped to each bound's scale; a mutant coordinate outside [0, 1] is
/// placed halfway between its base vector and the violated face, so every
/// evaluated candidate lies inside the bounds. Deterministic for a fixed seed
/// regardless of the thread count.
OptimizationResult differential_evolution(const Objective& cost, const std::vector<Bound>& bounds,
                                          const DEOptions& options);

/// Maps a point of the unit cube to parameter space and back.
Vector from_unit(const Vector& u, const std::vector<Bound>& bounds);
Vector to_unit(const Vector& x, const std::vector<Bound>& bounds);

struct NelderMeadOptions {
  int max_evaluations = 400;
  double tolerance = 1e-9;  // on the spread of simplex costs
  double initial_step = 0.1;
};

/// Nelder-Mead restricted to [lower, upper] by projecting every trial point.
OptimizationResult nelder_mead(const Objective& cost, const Vector& start, const Vector& lower,
                               const Vector& upper, const NelderMeadOptions& options = {});

}  // namespace ionbench
