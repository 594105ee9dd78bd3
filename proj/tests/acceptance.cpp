// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance                  run everything, exit 1 on any failure
//   acceptance --only 3 --only 7
//   acceptance --expect-fail 9  exit 0 only when exactly the listed criteria fail

#include "ionbench/coreshell.hpp"
#include "ionbench/gp.hpp"
#include "ionbench/hybrid.hpp"
#include "ionbench/identification.hpp"
#include "ionbench/soh.hpp"
#include "ionbench/transport.hpp"
#include "ionbench/workbench.hpp"

#include "CLI11.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace ionbench;
namespace fs = std::filesystem;

namespace {

// Every tolerance the criteria are judged against.
namespace tol {
constexpr double electrolyte_conservation = 1e-8;
constexpr double solid_conservation = 1e-10;
constexpr double conservation_runtime_s = 10.0;
constexpr double order_window = 0.3;
constexpr double convergence_runtime_s = 120.0;
constexpr double zero_aging = 1e-12;
constexpr double lam_relative = 1e-6;
constexpr double truth_cost = 1e-9;
constexpr double recovery_relative = 0.05;
constexpr double identification_runtime_s = 1800.0;
constexpr double ocv_identity = 4.0 * std::numeric_limits<double>::epsilon();
constexpr double gp_oracle = 1e-8;
constexpr double gp_interpolation = 1e-3;
constexpr double gp_reversion = 1e-6;
constexpr double hybrid_improvement = 0.40;
constexpr double hybrid_runtime_s = 300.0;
constexpr double coreshell_conservation = 1e-8;
constexpr double boundary_return = 0.02;
}  // namespace tol

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Model nmc() {
  Model m;
  m.cell = reference_nmc_cell();
  m.ocp = reference_nmc_ocp();
  return m;
}

Model lfp_coreshell() {
  Model m;
  m.cell = reference_lfp_cell();
  m.ocp = reference_lfp_ocp();
  CoreShellParameters cs;
  cs.c_alpha = 0.03 * m.cell.c_s_max_p;
  cs.c_beta = 0.97 * m.cell.c_s_max_p;
  m.coreshell = cs;
  return m;
}

double solid_lithium(const CellState& s, const CellParameters& c) {
  return c.nu_n * c.A_cell * c.L_n * particle_average(s.c_s_n, c.R_n) +
         c.nu_p * c.A_cell * c.L_p * particle_average(s.c_s_p, c.R_p);
}

double rmse(const Vector& a, const Vector& b) { return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size())); }

// ---------------------------------------------------------------------------

Outcome conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = nmc();
  const double one_c = m.cell.window_capacity_ah();
  const ElectrolyteLayout layout(m.cell, m.grid, RegionPorosity::initial(m.cell));

  // 30 min of 1C charge then 30 min of 1C discharge, checked every step.
  CellState s = initial_state(m, 0.5);
  const double ce0 = electrolyte_inventory(s.c_e, layout);
  double worst_e = 0;
  for (int k = 0; k < 360; ++k) {
    s = espm_step(s, k < 180 ? -one_c : one_c, 10.0, m);
    worst_e = std::max(worst_e, std::abs(electrolyte_inventory(s.c_e, layout) - ce0) / ce0);
  }

  // Zero flux: a disturbed particle and a resting cell.
  Vector c(30);
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = 1e4 + 2e4 * static_cast<double>(i) / 29.0;
  const double R = m.cell.R_n;
  const double cs0 = particle_average(c, R);
  double worst_s = 0;
  for (int k = 0; k < 2000; ++k) {
    c = solid_diffusion_step(c, R, m.cell.D_s_n_ref, 0.0, 5.0, m.cell.c_s_max_n);
    worst_s = std::max(worst_s, std::abs(particle_average(c, R) - cs0) / cs0);
  }
  CellState rest = s;
  const double li0 = solid_lithium(rest, m.cell);
  for (int k = 0; k < 360; ++k) {
    rest = espm_step(rest, 0.0, 10.0, m);
    worst_s = std::max(worst_s, std::abs(solid_lithium(rest, m.cell) - li0) / li0);
  }
  const double elapsed = seconds_since(t0);
  return {worst_e <= tol::electrolyte_conservation && worst_s <= tol::solid_conservation &&
              elapsed < tol::conservation_runtime_s,
          fmt("electrolyte drift %.2e (<= %.0e), solid drift %.2e (<= %.0e), %.2f s", worst_e,
              tol::electrolyte_conservation, worst_s, tol::solid_conservation, elapsed)};
}

Outcome grid_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model base = nmc();
  SimulationOptions o;
  o.dt = 5;
  o.initial_soc = 0.9;
  o.internal_columns = false;
  const TimeSeries profile = constant_current_profile(base.cell.window_capacity_ah(), 1200);
  auto run = [&](int n) {
    Model m = base;
    m.grid.n_r = m.grid.n_x_p = m.grid.n_x_s = m.grid.n_x_n = n;
    return simulate(m, profile, o).series.column("V");
  };
  const Vector ref = run(400);
  const std::vector<int> sizes{10, 20, 40, 80};
  Vector lx(4), ly(4);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    lx[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(sizes[i]));
    ly[static_cast<Eigen::Index>(i)] = std::log((run(sizes[i]) - ref).cwiseAbs().maxCoeff());
  }
  const Vector dx = lx.array() - lx.mean();
  const double slope = -dx.dot(ly.array().matrix() - Vector::Constant(4, ly.mean())) / dx.squaredNorm();
  const double elapsed = seconds_since(t0);
  return {std::abs(slope - 2.0) <= tol::order_window && elapsed < tol::convergence_runtime_s,
          fmt("observed order %.3f vs formal 2 (+-%.1f), errors %.2e -> %.2e V, %.2f s", slope, tol::order_window,
              std::exp(ly[0]), std::exp(ly[3]), elapsed)};
}

Outcome zero_aging() {
  const Model fresh = nmc();
  Model aged = nmc();
  aged.aging = AgingParameters{};
  SimulationOptions o;
  o.dt = 30;
  o.v_min = 3.0;
  const TimeSeries p = constant_current_profile(fresh.cell.window_capacity_ah() / 3, 4 * 3600);
  const SimulationResult a = simulate(fresh, p, o), b = simulate(aged, p, o);
  const Vector va = a.series.column("V"), vb = b.series.column("V");
  if (va.size() != vb.size()) return {false, "sample counts differ"};
  const double diff = (va - vb).cwiseAbs().maxCoeff();
  return {diff <= tol::zero_aging && a.cutoff_time.has_value(),
          fmt("max |dV| %.2e over %ld samples to the 3.0 V cutoff (<= %.0e)", diff, static_cast<long>(va.size()),
              tol::zero_aging)};
}

Outcome lam_closed_form() {
  Model m = nmc();
  AgingParameters a;
  a.beta_prime_n = 2e-6;
  a.beta_prime_p = 1e-6;
  m.aging = a;
  SimulationOptions o;
  o.dt = 600;
  o.initial_soc = 0.5;
  const SimulationResult r = simulate(m, constant_current_profile(0.0, 100 * 3600), o);
  const Vector t = r.series.time(), an = r.series.column("a_t_n"), ap = r.series.column("a_t_p");
  double worst = 0;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    worst = std::max(worst, std::abs(an[k] / (an[0] * std::exp(-a.beta_prime_n * t[k])) - 1.0));
    worst = std::max(worst, std::abs(ap[k] / (ap[0] * std::exp(-a.beta_prime_p * t[k])) - 1.0));
  }
  return {worst <= tol::lam_relative, fmt("max relative deviation %.2e over 100 h (<= %.0e), a_t_n fell to %.3f of start",
                                          worst, tol::lam_relative, an[an.size() - 1] / an[0])};
}

Outcome fade_monotone() {
  Model m = nmc();
  AgingParameters a;
  a.k_f_ref = 5e-11;
  a.c_solv_surf = 4500;
  a.i_0_lpl = 2e-5;
  a.beta_lpl = 0.4;
  m.aging = a;
  const double I = m.cell.window_capacity_ah() / 2;
  SimulationOptions o;
  o.dt = 20;
  o.v_min = 3.0;
  o.v_max = 4.17;
  o.internal_columns = false;
  CellState s = initial_state(m, 1.0);
  std::vector<double> q;
  for (int cycle = 0; cycle < 10; ++cycle) {
    const SimulationResult d = simulate(m, constant_current_profile(I, 4 * 3600), o, s);
    q.push_back(charge_throughput_ah(d));
    const SimulationResult c = simulate(m, constant_current_profile(-I, 4 * 3600), o, d.final_state);
    s = c.final_state;
  }
  bool monotone = true;
  for (std::size_t k = 1; k < q.size(); ++k) monotone = monotone && q[k] <= q[k - 1];
  return {monotone && q.back() < q.front(),
          fmt("discharge capacity %.5f -> %.5f Ah over 10 cycles, monotone %s", q.front(), q.back(),
              monotone ? "yes" : "no")};
}

TimeSeries pulse_profile() {
  const Vector t = Vector::LinSpaced(601, 0, 1200);
  Vector I(601);
  for (int k = 0; k < 601; ++k) {
    const double s = t[k];
    I[k] = s < 200 ? 12 : s < 400 ? 0 : s < 600 ? 25 : s < 800 ? 0 : s < 1000 ? -8 : 0;
  }
  TimeSeries p(t);
  p.set_column("I", I);
  return p;
}

Outcome identification() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model truth = nmc();
  SimulationOptions sim;
  sim.dt = 2;
  sim.initial_soc = 0.9;
  sim.internal_columns = false;
  const IdentificationDataset data = synthetic_dataset(truth, pulse_profile(), sim);
  const std::vector<std::string> names{"R_l", "D_s_p_ref", "D_s_n_ref", "theta_n_100"};
  const ParameterSpec spec = relative_spec(names, truth.cell, 0.3);
  Vector x_true(4);
  for (int k = 0; k < 4; ++k) x_true[k] = parameter_value(names[static_cast<std::size_t>(k)], truth.cell);
  const double at_truth = cost_fresh(truth, spec, x_true, data, {}, sim);

  IdentificationOptions opt;
  opt.sim = sim;
  opt.de.budget = 20000;
  opt.de.seed = 1;
  const IdentificationResult r = identify(truth, spec, data, opt);
  const Vector rel = ((r.best - x_true).array() / x_true.array()).abs();
  const double elapsed = seconds_since(t0);
  return {at_truth < tol::truth_cost && rel.maxCoeff() <= tol::recovery_relative &&
              elapsed < tol::identification_runtime_s,
          fmt("cost at truth %.1e; relative errors R_l %.2e D_s_p %.2e D_s_n %.2e theta_n_100 %.2e (<= %.2f); "
              "%d evaluations, %.0f s",
              at_truth, rel[0], rel[1], rel[2], rel[3], tol::recovery_relative, r.evaluations, elapsed)};
}

Outcome ocv_constraints() {
  // Worked value.
  const OcpSet ocp = nmc().ocp;
  OcvDataset worked;
  worked.capacity_ah = Vector::LinSpaced(50, 0.0, 10.0);
  OcvWindow probe;
  probe.theta_p_100 = 0.3;
  probe.theta_n_100 = 0.85;
  probe.Q_n = 12.5;
  probe.Q_p = 16.0;
  worked.volts = simulated_ocv(probe, worked.capacity_ah, ocp);
  const OcvWindow w = resolve_ocv_window((Vector(4) << 0.3, 0.85, 12.5, 16.0).finished(), worked, ocp, 0.05, 0.6);
  const double worked_err = std::abs(w.theta_n_0 - 0.05);

  // Every evaluated candidate of a fit.
  OcvWindow truth;
  truth.theta_p_100 = 0.28;
  truth.theta_n_100 = 0.82;
  truth.Q_n = 13.0;
  truth.Q_p = 15.0;
  OcvDataset d;
  d.capacity_ah = Vector::LinSpaced(120, 0.0, 10.5);
  d.volts = simulated_ocv(truth, d.capacity_ah, ocp);
  const ParameterSpec spec{{{"theta_p_100", 0.1, 0.6, Scale::linear},
                            {"theta_n_100", 0.7, 1.0, Scale::linear},
                            {"Q_n", 10.0, 16.0, Scale::linear},
                            {"Q_p", 10.0, 20.0, Scale::linear}}};
  DEOptions opt;
  opt.budget = 4000;
  double worst = 0;
  long seen = 0;
  const double Q = d.discharged();
  identify_ocv(d, ocp, spec, opt, [&](const OcvWindow& c) {
    ++seen;
    worst = std::max(worst, std::abs(c.theta_n_0 - (c.theta_n_100 - Q / c.Q_n)));
    worst = std::max(worst, std::abs(c.theta_p_0 - (c.theta_p_100 + Q / c.Q_p)));
  });
  return {worst <= tol::ocv_identity && worked_err <= tol::ocv_identity && seen > 0,
          fmt("0.85 - 10/12.5 = %.17g; max identity residual %.1e over %ld candidates (<= %.1e)", w.theta_n_0, worst,
              seen, tol::ocv_identity)};
}

Outcome gp_oracle() {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0, interp = 0, reversion = 0;
  for (int n = 2; n <= 5; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const int dim = 1 + trial % 3;
      Matrix X(n, dim);
      Vector y(n);
      for (auto& v : X.reshaped()) v = u(rng);
      for (auto& v : y) v = u(rng);
      GPHyperparameters h;
      h.signal_variance = 0.5 + std::abs(u(rng));
      h.length_scales = Vector::Constant(dim, 0.8 + 0.3 * std::abs(u(rng)));
      h.noise_variance = 1e-3;
      const GaussianProcess gp = GaussianProcess::condition(X, y, h);
      Matrix Q(7, dim);
      for (auto& v : Q.reshaped()) v = u(rng);
      const GPPrediction p = gp.predict(Q);

      // Dense oracle with the same plug-in constant mean and jitter.
      const Matrix K = se_kernel(X, X, h) + (h.noise_variance + gp.jitter()) * Matrix::Identity(n, n);
      const Matrix Ks = se_kernel(Q, X, h);
      const Matrix Kinv = K.inverse();
      const double mu = gp.mean_coefficients()[0];
      const Vector mean = Vector::Constant(7, mu) + Ks * Kinv * (y.array() - mu).matrix();
      const Vector var = Vector::Constant(7, h.signal_variance) - (Ks * Kinv * Ks.transpose()).diagonal();
      worst = std::max({worst, (p.mean - mean).cwiseAbs().maxCoeff(), (p.variance - var).cwiseAbs().maxCoeff()});

      // Near-noiseless interpolation and reversion far away.
      GPHyperparameters quiet = h;
      quiet.noise_variance = 1e-10;
      const GaussianProcess g0 = GaussianProcess::condition(X, y, quiet);
      interp = std::max(interp, (g0.predict(X).mean - y).cwiseAbs().maxCoeff());
      const GPPrediction far = g0.predict(Matrix::Constant(1, dim, 1e3));
      reversion = std::max({reversion, std::abs(far.mean[0] - mu), std::abs(far.variance[0] - h.signal_variance)});
    }
  }
  return {worst <= tol::gp_oracle && interp <= tol::gp_interpolation && reversion <= tol::gp_reversion,
          fmt("oracle gap %.1e (<= %.0e), interpolation %.1e (<= %.0e), prior reversion %.1e (<= %.0e), n = 2..5",
              worst, tol::gp_oracle, interp, tol::gp_interpolation, reversion, tol::gp_reversion)};
}

Outcome bagging_variance() {
  // Noisy knee-shaped fade curve: SOH over 300 cycles with 1 % noise.
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int n = 80, n_train = 30, n_query = 25, splits = 50;
  Matrix X(n, 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    const double c = i / (n - 1.0);
    X(i, 0) = 300 * c;
    y[i] = 100 - 12 * c - 8 * c * c - 60 * std::pow(std::max(0.0, c - 0.7), 2) + noise(rng);
  }
  Matrix Q(n_query, 1);
  for (int i = 0; i < n_query; ++i) Q(i, 0) = 300 * (0.02 + 0.96 * i / (n_query - 1.0));

  Matrix single(splits, n_query), bagged(splits, n_query);
  std::vector<int> idx(n);
  for (int r = 0; r < splits; ++r) {
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix Xt(n_train, 1);
    Vector yt(n_train);
    for (int i = 0; i < n_train; ++i) {
      Xt(i, 0) = X(idx[static_cast<std::size_t>(i)], 0);
      yt[i] = y[idx[static_cast<std::size_t>(i)]];
    }
    BagOptions one;
    one.bags = 1;
    one.seed = static_cast<std::uint64_t>(r);
    BagOptions ten = one;
    ten.bags = 10;
    single.row(r) = bag_predict(bag_fit(Xt, yt, one), Q).mean.transpose();
    bagged.row(r) = bag_predict(bag_fit(Xt, yt, ten), Q).mean.transpose();
  }
  auto split_variance = [&](const Matrix& m) {
    const Matrix c = m.rowwise() - m.colwise().mean();
    return c.array().square().sum() / (splits - 1) / n_query;
  };
  const double vs = split_variance(single), vb = split_variance(bagged);
  return {vb <= vs, fmt("mean split variance of the prediction: bagged %.4f vs single %.4f (ratio %.2f, need <= 1)", vb,
                        vs, vb / vs)};
}

Outcome hybrid_improvement() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = lfp_coreshell();
  SimulationOptions sim;
  sim.dt = 2;
  sim.initial_soc = 0.9;
  auto record = [&](std::uint64_t drive_seed, std::uint64_t noise_seed) {
    DriveCycleOptions d;
    d.seed = drive_seed;
    d.dt = 2;
    const TimeSeries s = simulate(m, synthetic_drive_cycle(d), sim).series;
    HysteresisInjection h;
    h.seed = noise_seed;
    return build_residual_dataset(inject_hysteresis(s, h), s);
  };
  const ResidualDataset train = record(1, 11), test = record(2, 12);
  ForestOptions fo;
  fo.trees = 30;
  const RandomForest f = RandomForest::fit(train.features, train.target, fo);
  const Vector V = test.V_cs + test.target;
  const double physics = rmse(test.V_cs, V), hybrid = rmse(test.V_cs + f.predict(test.features), V);
  const double gain = 1.0 - hybrid / physics;
  const double elapsed = seconds_since(t0);
  return {gain >= tol::hybrid_improvement && elapsed < tol::hybrid_runtime_s,
          fmt("held-out RMSE physics %.2f mV, hybrid %.2f mV: %.1f %% lower (>= %.0f %%), %.1f s", 1e3 * physics,
              1e3 * hybrid, 100 * gain, 100 * tol::hybrid_improvement, elapsed)};
}

Outcome coreshell_checks() {
  constexpr double R = 0.5e-6, D = 2e-15, cmax = 22806;
  CoreShellParameters p;
  p.c_alpha = 0.03 * cmax;
  p.c_beta = 0.97 * cmax;

  PhaseBoundaryState s = coreshell_initial(0.5 * cmax, R, PhaseOrientation::discharge, p);
  for (Eigen::Index k = 0; k < s.shell.size(); ++k) s.shell[k] += 150.0 * static_cast<double>(k) / 19.0;
  const double li0 = coreshell_lithium(s, R);
  double drift = 0;
  for (int k = 0; k < 500; ++k) {
    s = coreshell_step(s, R, D, 0.0, 0.0, 5.0, p);
    drift = std::max(drift, std::abs(coreshell_lithium(s, R) - li0) / li0);
  }

  const double flux = 0.3 * (0.97 - 0.03) * cmax * R / 3.0 / 3600.0;
  PhaseBoundaryState b = coreshell_initial(0.2 * cmax, R, PhaseOrientation::charge, p);
  const double r0 = b.r_p;
  for (int k = 0; k < 600; ++k) b = coreshell_step(b, R, D, flux, 1.0, 10.0, p);
  const double r_mid = b.r_p;
  for (int k = 0; k < 600; ++k) b = coreshell_step(b, R, D, -flux, -1.0, 10.0, p);
  const double back = std::abs(b.r_p - r0) / R;
  return {drift <= tol::coreshell_conservation && back <= tol::boundary_return,
          fmt("zero-flux drift %.1e (<= %.0e); boundary %.3f -> %.3f -> %.3f R_p, return error %.2f %% (<= %.0f %%)",
              drift, tol::coreshell_conservation, r0 / R, r_mid / R, b.r_p / R, 100 * back,
              100 * tol::boundary_return)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("ionbench-acceptance-" + std::to_string(std::random_device{}()));
  nlohmann::json doc = nlohmann::json::parse(R"({
    "seed": 17,
    "cell": {"preset": "lfp"},
    "coreshell": {},
    "simulate": {"drive_cycle": {"duration": 1200, "dt": 2}, "dt": 2, "initial_soc": 0.9},
    "soh": {"bags": 4, "gp_restarts": 1, "synthetic": {"cycles": 30}},
    "hybrid": {"trees": 10, "grid": {"max_depth": [4, 8], "min_leaf": [5], "feature_rate": [1.0], "trees": [10]}}
  })");
  const WorkbenchConfig cfg = parse_config(doc, IONBENCH_SOURCE_DIR);
  int compared = 0;
  std::vector<std::string> differing;
  for (Command c : {Command::simulate, Command::hybrid_train, Command::soh_eval}) {
    const fs::path a = root / ("a-" + std::to_string(static_cast<int>(c)));
    const fs::path b = root / ("b-" + std::to_string(static_cast<int>(c)));
    run(c, cfg, a);
    run(c, cfg, b);
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(e.path()) != slurp(b / e.path().filename())) differing.push_back(e.path().filename().string());
    }
  }
  fs::remove_all(root);
  std::string diff;
  for (const auto& d : differing) diff += " " + d;
  return {differing.empty() && compared > 0,
          fmt("%d result CSVs compared across two runs, %zu differ%s", compared, differing.size(), diff.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 12));
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"conservation", conservation},
      {"grid convergence", grid_convergence},
      {"zero-aging degeneracy", zero_aging},
      {"LAM closed form", lam_closed_form},
      {"capacity-fade monotonicity", fade_monotone},
      {"synthetic-truth identification", identification},
      {"OCV constraint exactness", ocv_constraints},
      {"GP oracle equivalence", gp_oracle},
      {"bagging variance reduction", bagging_variance},
      {"hybrid improvement", hybrid_improvement},
      {"core-shell conservation and reversibility", coreshell_checks},
      {"end-to-end determinism", determinism},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("%s  %2d  %-42s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }

  if (app.count("--expect-fail")) {
    std::set<int> expected(expect_fail.begin(), expect_fail.end());
    if (!only.empty()) {
      std::erase_if(expected, [&](int id) { return std::find(only.begin(), only.end(), id) == only.end(); });
    }
    if (failed != expected) {
      std::printf("failing set differs from the expected one\n");
      return 1;
    }
    return 0;
  }
  return failed.empty() ? 0 : 1;
}
