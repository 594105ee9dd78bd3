#include "ionbench/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

namespace ionbench {

namespace {

const std::vector<std::string>& simulated_columns() {
  static const std::vector<std::string> cols = {"SOC_n",       "SOC_p", "r_p_norm", "theta_p_surf", "theta_n_surf",
                                                "V",           "eta_p", "eta_n",    "delta_phi_e"};
  return cols;
}

double rmse(const Vector& a, const Vector& b) { return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size())); }

}  // namespace

const std::vector<std::string>& hysteresis_feature_names() {
  static const std::vector<std::string> names = {"I",     "SOC_n", "SOC_p", "r_p_norm", "theta_p_surf", "theta_n_surf",
                                                 "V_cs",  "eta_p", "eta_n", "delta_phi_e"};
  return names;
}

Matrix hysteresis_features(const TimeSeries& sim) {
  Matrix F(sim.size(), 10);
  F.col(0) = sim.column("I");
  for (std::size_t j = 0; j < simulated_columns().size(); ++j) {
    F.col(static_cast<Eigen::Index>(j + 1)) = sim.column(simulated_columns()[j]);
  }
  return F;
}

ResidualDataset build_residual_dataset(const TimeSeries& exp, const TimeSeries& sim) {
  const Vector& te = exp.time();
  const Vector& ts = sim.time();
  if (te.size() < 2 || ts.size() == 0) throw Error(Errc::misalignment, "residual dataset: records too short");
  std::vector<double> gaps(static_cast<std::size_t>(te.size() - 1));
  for (Eigen::Index k = 0; k + 1 < te.size(); ++k) gaps[static_cast<std::size_t>(k)] = te[k + 1] - te[k];
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const double period = gaps[gaps.size() / 2];

  const Vector I = exp.column("I");
  const Vector V = exp.column("V");
  const Matrix F = hysteresis_features(sim);
  const Vector extrap = sim.has("extrapolated") ? sim.column("extrapolated") : Vector::Zero(ts.size());

  std::vector<Eigen::Index> exp_rows, sim_rows;
  ResidualDataset d;
  Eigen::Index j = 0;
  for (Eigen::Index k = 0; k < te.size(); ++k) {
    while (j + 1 < ts.size() && std::abs(ts[j + 1] - te[k]) <= std::abs(ts[j] - te[k])) ++j;
    if (std::abs(ts[j] - te[k]) > period * (1 + 1e-9)) {
      throw Error(Errc::misalignment, "residual dataset: no simulated sample within one period of t = " +
                                          std::to_string(te[k]) + " s");
    }
    if (extrap[j] != 0) {
      ++d.dropped_extrapolated;
      continue;
    }
    exp_rows.push_back(k);
    sim_rows.push_back(j);
  }
  const auto n = static_cast<Eigen::Index>(exp_rows.size());
  d.time.resize(n);
  d.features.resize(n, 10);
  d.V_cs.resize(n);
  d.target.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index k = exp_rows[static_cast<std::size_t>(r)], s = sim_rows[static_cast<std::size_t>(r)];
    d.time[r] = te[k];
    d.features.row(r) = F.row(s);
    d.features(r, 0) = I[k];
    d.V_cs[r] = F(s, 6);
    d.target[r] = V[k] - d.V_cs[r];
  }
  if (d.dropped_extrapolated > 0) {
    spdlog::warn("residual dataset: dropped {} samples with OCP extrapolation", d.dropped_extrapolated);
  }
  return d;
}

TimeSeries hybrid_simulate(const Model& physics, const TimeSeries& profile, const SimulationOptions& options,
                           const RandomForest* hysteresis) {
  SimulationOptions opt = options;
  opt.internal_columns = true;
  const SimulationResult r = simulate(physics, profile, opt);
  const Matrix F = hysteresis_features(r.series);
  const Vector V_cs = F.col(6);
  const Vector V_h = hysteresis ? hysteresis->predict(F) : Vector::Zero(V_cs.size());
  TimeSeries out(r.series.time());
  out.set_column("I", F.col(0));
  out.set_column("V_cs", V_cs);
  out.set_column("V_h", V_h);
  out.set_column("V", V_cs + V_h);
  for (const auto& c : simulated_columns()) {
    if (c != "V") out.set_column(c, r.series.column(c));
  }
  return out;
}

GridSearchResult grid_search_forest(const ResidualDataset& train, const ResidualDataset& validation,
                                    const ForestGrid& grid, const ForestOptions& base) {
  GridSearchResult result;
  result.best_rmse = std::numeric_limits<double>::infinity();
  for (int trees : grid.trees) {
    for (int depth : grid.max_depth) {
      for (int leaf : grid.min_leaf) {
        for (double rate : grid.feature_rate) {
          ForestOptions o = base;
          o.trees = trees;
          o.tree.max_depth = depth;
          o.tree.min_leaf = leaf;
          o.tree.feature_rate = rate;
          const RandomForest f = RandomForest::fit(train.features, train.target, o);
          const double e = rmse(f.predict(validation.features), validation.target);
          result.table.emplace_back(o, e);
          if (e < result.best_rmse) {
            result.best_rmse = e;
            result.best = o;
          }
        }
      }
    }
  }
  if (result.table.empty()) throw Error(Errc::validation, "forest grid is empty");
  return result;
}

void save_forest(const RandomForest& forest, const std::filesystem::path& path) {
  nlohmann::json j = forest.to_json();
  j["format"] = "ionbench-hysteresis-forest";
  j["feature_names"] = hysteresis_feature_names();
  std::ofstream out(path);
  out << j.dump() << '\n';
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
}

RandomForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema_mismatch, path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "ionbench-hysteresis-forest" ||
      j.value("feature_names", std::vector<std::string>{}) != hysteresis_feature_names()) {
    throw Error(Errc::schema_mismatch, path.string() + ": not a hysteresis forest for this feature schema");
  }
  return RandomForest::from_json(j);
}

// ---------------------------------------------------------------------------

TimeSeries synthetic_drive_cycle(const DriveCycleOptions& o) {
  if (!(o.dt > 0 && o.duration > o.dt && o.min_pulse > 0 && o.max_pulse >= o.min_pulse)) {
    throw Error(Errc::domain, "drive cycle: bad timing options");
  }
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(std::floor(o.duration / o.dt)) + 1;
  Vector I(n);
  Eigen::Index k = 0;
  while (k < n) {
    const double len = o.min_pulse + unit(rng) * (o.max_pulse - o.min_pulse);
    const double u = unit(rng);
    double level;
    if (u < o.rest_fraction) {
      level = 0.0;
    } else if (u < o.rest_fraction + o.regen_fraction) {
      level = -(0.2 + 0.5 * unit(rng)) * o.peak_current;
    } else {
      level = (0.1 + 0.9 * unit(rng)) * o.peak_current;
    }
    const auto steps = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::round(len / o.dt)));
    for (Eigen::Index s = 0; s < steps && k < n; ++s) I[k++] = level;
  }
  // Scale the discharge pulses so the average matches the requested mean.
  const double pos = I.cwiseMax(0.0).mean(), neg = I.cwiseMin(0.0).mean();
  if (pos > 0 && o.mean_current - neg > 0) {
    const double scale = (o.mean_current - neg) / pos;
    for (auto& v : I) {
      if (v > 0) v = std::min(v * scale, o.peak_current * 1.5);
    }
  }
  TimeSeries out(Vector::LinSpaced(n, 0.0, o.dt * static_cast<double>(n - 1)));
  out.set_column("I", I);
  return out;
}

TimeSeries inject_hysteresis(const TimeSeries& sim, const HysteresisInjection& o) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Vector I = sim.column("I");
  const Vector soc = sim.column("SOC_n");
  const Vector V_cs = sim.column("V");
  Vector V(V_cs.size());
  for (Eigen::Index k = 0; k < V.size(); ++k) {
    const double H = o.amplitude + o.soc_gain * (1.0 - std::clamp(soc[k], 0.0, 1.0));
    V[k] = V_cs[k] + H * std::tanh(I[k] / o.current_scale) + o.noise * gauss(rng);
  }
  TimeSeries out(sim.time());
  out.set_column("I", I);
  out.set_column("V", V);
  return out;
}

}  // namespace ionbench
