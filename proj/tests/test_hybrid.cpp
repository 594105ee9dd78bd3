#include "doctest.h"

#include "ionbench/hybrid.hpp"

#include <cmath>

using namespace ionbench;

namespace {

Model lfp() {
  Model m;
  m.cell = reference_lfp_cell();
  m.ocp = reference_lfp_ocp();
  CoreShellParameters cs;
  cs.c_alpha = 0.03 * m.cell.c_s_max_p;
  cs.c_beta = 0.97 * m.cell.c_s_max_p;
  m.coreshell = cs;
  return m;
}

SimulationOptions sim_options() {
  SimulationOptions s;
  s.dt = 2.0;
  s.initial_soc = 0.9;
  return s;
}

TimeSeries drive_sim(std::uint64_t seed, double duration = 1200) {
  DriveCycleOptions d;
  d.seed = seed;
  d.dt = 2.0;
  d.duration = duration;
  return simulate(lfp(), synthetic_drive_cycle(d), sim_options()).series;
}

TimeSeries with_voltage(const TimeSeries& sim, const Vector& V) {
  TimeSeries e(sim.time());
  e.set_column("I", sim.column("I"));
  e.set_column("V", V);
  return e;
}

double rmse(const Vector& a, const Vector& b) { return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size())); }

}  // namespace

TEST_CASE("hybrid voltage is a sum") {
  CHECK(hybrid_voltage(3.30, 0.0) == 3.30);
  CHECK(hybrid_voltage(3.30, 0.02) == doctest::Approx(3.32));
}

TEST_CASE("residual targets") {
  const TimeSeries sim = drive_sim(3);
  const Vector V = sim.column("V");
  const ResidualDataset same = build_residual_dataset(with_voltage(sim, V), sim);
  CHECK(same.target.cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.features.cols() == 10);
  CHECK(hysteresis_feature_names().size() == 10);

  const ResidualDataset offset = build_residual_dataset(with_voltage(sim, V.array() + 0.01), sim);
  CHECK((offset.target.array() - 0.01).abs().maxCoeff() < 1e-12);

  const Vector I = sim.column("I");
  const Vector signed_h = I.unaryExpr([](double i) { return i > 0 ? 0.02 : i < 0 ? -0.02 : 0.0; });
  const ResidualDataset hyst = build_residual_dataset(with_voltage(sim, V + signed_h), sim);
  for (Eigen::Index k = 0; k < hyst.target.size(); ++k) {
    const double i = hyst.features(k, 0);
    if (i > 0) CHECK(hyst.target[k] == doctest::Approx(0.02).epsilon(1e-9));
    if (i < 0) CHECK(hyst.target[k] == doctest::Approx(-0.02).epsilon(1e-9));
  }
}

TEST_CASE("misaligned records are rejected and extrapolated samples dropped") {
  TimeSeries sim = drive_sim(4, 200);
  TimeSeries shifted(sim.time().array() + 5.0);
  shifted.set_column("I", sim.column("I"));
  shifted.set_column("V", sim.column("V"));
  try {
    build_residual_dataset(shifted, sim);
    FAIL("expected misalignment");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::misalignment);
  }
  Vector flag = Vector::Zero(sim.size());
  flag.head(7).setOnes();
  sim.set_column("extrapolated", flag);
  const ResidualDataset d = build_residual_dataset(with_voltage(sim, sim.column("V")), sim);
  CHECK(d.dropped_extrapolated == 7);
  CHECK(d.target.size() == sim.size() - 7);
}

TEST_CASE("a fitted residual model never loses in sample") {
  const TimeSeries sim = drive_sim(5);
  HysteresisInjection h;
  const TimeSeries exp = inject_hysteresis(sim, h);
  const ResidualDataset d = build_residual_dataset(exp, sim);
  ForestOptions fo;
  fo.trees = 20;
  const RandomForest f = RandomForest::fit(d.features, d.target, fo);
  const Vector V_exp = d.V_cs + d.target;
  const double physics = rmse(d.V_cs, V_exp);
  const double hybrid = rmse(d.V_cs + f.predict(d.features), V_exp);
  CHECK(hybrid <= physics);
  CHECK(physics > 0.01);
}

TEST_CASE("hybrid simulation composes physics and residual") {
  DriveCycleOptions d;
  d.dt = 2.0;
  d.duration = 600;
  const TimeSeries profile = synthetic_drive_cycle(d);
  const TimeSeries plain = hybrid_simulate(lfp(), profile, sim_options());
  CHECK((plain.column("V") - plain.column("V_cs")).norm() == 0.0);
  CHECK(plain.column("V_h").norm() == 0.0);

  const TimeSeries sim = drive_sim(6, 600);
  const ResidualDataset r = build_residual_dataset(inject_hysteresis(sim, {}), sim);
  const RandomForest f = RandomForest::fit(r.features, r.target, {});
  const TimeSeries h = hybrid_simulate(lfp(), profile, sim_options(), &f);
  CHECK((h.column("V") - h.column("V_cs") - h.column("V_h")).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(h.column("V_h").cwiseAbs().maxCoeff() > 0.0);
  CHECK((h.column("V_cs") - plain.column("V_cs")).norm() == 0.0);
}

TEST_CASE("drive cycle generator") {
  DriveCycleOptions d;
  d.mean_current = 2.0;
  const TimeSeries p = synthetic_drive_cycle(d);
  const Vector I = p.column("I");
  CHECK(I.size() == 3601);
  CHECK(I.mean() == doctest::Approx(2.0).epsilon(0.05));
  CHECK(I.minCoeff() < 0.0);
  CHECK((I.array() == 0.0).any());
  CHECK(synthetic_drive_cycle(d).column("I") == I);
}

TEST_CASE("grid search keeps the best validation point") {
  const TimeSeries s1 = drive_sim(7, 600), s2 = drive_sim(8, 600);
  const ResidualDataset tr = build_residual_dataset(inject_hysteresis(s1, {}), s1);
  const ResidualDataset va = build_residual_dataset(inject_hysteresis(s2, {}), s2);
  ForestGrid grid;
  grid.max_depth = {2, 6};
  grid.min_leaf = {5};
  grid.feature_rate = {1.0};
  grid.trees = {5};
  const GridSearchResult g = grid_search_forest(tr, va, grid);
  CHECK(g.table.size() == 2);
  for (const auto& [o, e] : g.table) CHECK(g.best_rmse <= e);
}
