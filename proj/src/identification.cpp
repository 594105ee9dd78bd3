#include "ionbench/identification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ionbench {

namespace {

constexpr const char* kFilmRatio = "L_SEI/kappa_SEI";

using Field = double CellParameters::*;

const std::map<std::string, Field>& cell_fields() {
  static const std::map<std::string, Field> fields = {
      {"A_cell", &CellParameters::A_cell},         {"L_p", &CellParameters::L_p},
      {"L_s", &CellParameters::L_s},               {"L_n", &CellParameters::L_n},
      {"R_p", &CellParameters::R_p},               {"R_n", &CellParameters::R_n},
      {"eps_p", &CellParameters::eps_p},           {"eps_s", &CellParameters::eps_s},
      {"eps_n", &CellParameters::eps_n},           {"nu_p", &CellParameters::nu_p},
      {"nu_n", &CellParameters::nu_n},             {"D_s_p_ref", &CellParameters::D_s_p_ref},
      {"D_s_n_ref", &CellParameters::D_s_n_ref},   {"k_p", &CellParameters::k_p},
      {"k_n", &CellParameters::k_n},               {"c_s_max_p", &CellParameters::c_s_max_p},
      {"c_s_max_n", &CellParameters::c_s_max_n},   {"theta_p_0", &CellParameters::theta_p_0},
      {"theta_p_100", &CellParameters::theta_p_100}, {"theta_n_0", &CellParameters::theta_n_0},
      {"theta_n_100", &CellParameters::theta_n_100}, {"R_l", &CellParameters::R_l},
      {"R_el", &CellParameters::R_el},             {"t_plus", &CellParameters::t_plus},
  };
  return fields;
}

bool spans_decades(const std::string& name) {
  return name.rfind("D_s_", 0) == 0 || name == "k_p" || name == "k_n" || name == kFilmRatio;
}

double film_ratio(const AgingState& aging, const AgingParameters& params) {
  return aging.L_SEI / params.kappa_SEI;
}

double rmse(const Vector& a, const Vector& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

// Linear interpolation of (x, y) at the points xq; x strictly increasing.
Vector interpolate(const Vector& x, const Vector& y, const Vector& xq) {
  Vector out(xq.size());
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < xq.size(); ++i) {
    while (j + 2 < x.size() && x[j + 1] < xq[i]) ++j;
    if (x.size() == 1 || xq[i] <= x[0]) {
      out[i] = y[0];
    } else if (xq[i] >= x[x.size() - 1]) {
      out[i] = y[y.size() - 1];
    } else {
      const double w = (xq[i] - x[j]) / (x[j + 1] - x[j]);
      out[i] = (1 - w) * y[j] + w * y[j + 1];
    }
  }
  return out;
}

}  // namespace

std::vector<Bound> ParameterSpec::bounds() const {
  std::vector<Bound> out;
  for (const auto& r : ranges) out.push_back({r.lower, r.upper, r.scale});
  return out;
}

std::vector<std::string> ParameterSpec::names() const {
  std::vector<std::string> out;
  for (const auto& r : ranges) out.push_back(r.name);
  return out;
}

void ParameterSpec::validate() const {
  if (ranges.empty()) throw Error(Errc::validation, "parameter spec is empty");
  const auto& known = identifiable_names();
  for (const auto& r : ranges) {
    if (std::find(known.begin(), known.end(), r.name) == known.end()) {
      throw Error(Errc::validation, "unknown parameter '" + r.name + "'");
    }
    if (!std::isfinite(r.lower) || !std::isfinite(r.upper) || !(r.lower < r.upper)) {
      throw Error(Errc::validation, "parameter '" + r.name + "': need finite lower < upper");
    }
    if (r.scale == Scale::log && !(r.lower > 0)) {
      throw Error(Errc::validation, "parameter '" + r.name + "': log scale needs positive bounds");
    }
  }
}

const std::vector<std::string>& identifiable_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : cell_fields()) n.push_back(k);
    n.push_back(kFilmRatio);
    n.push_back("Q_n");
    n.push_back("Q_p");
    return n;
  }();
  return names;
}

double parameter_value(const std::string& name, const CellParameters& cell, const AgingState* aging,
                       const AgingParameters* aging_params) {
  if (name == kFilmRatio) {
    if (!aging) return 0.0;
    const AgingParameters defaults{};
    return film_ratio(*aging, aging_params ? *aging_params : defaults);
  }
  if (name == "Q_n") return cell.capacity_n_ah();
  if (name == "Q_p") return cell.capacity_p_ah();
  const auto it = cell_fields().find(name);
  if (it == cell_fields().end()) throw Error(Errc::validation, "unknown parameter '" + name + "'");
  return cell.*(it->second);
}

ParameterSpec relative_spec(const std::vector<std::string>& names, const CellParameters& cell, double relative,
                            const AgingState* aging, const AgingParameters* aging_params) {
  if (!(relative > 0 && relative < 1)) throw Error(Errc::domain, "relative bound must lie in (0, 1)");
  ParameterSpec spec;
  for (const auto& name : names) {
    const double v = parameter_value(name, cell, aging, aging_params);
    if (!(v > 0)) {
      throw Error(Errc::validation, "parameter '" + name + "' is zero; give explicit bounds");
    }
    ParameterRange r{name, v * (1 - relative), v * (1 + relative),
                     spans_decades(name) ? Scale::log : Scale::linear};
    if (name.rfind("theta_", 0) == 0) r.upper = std::min(r.upper, 1.0);
    spec.ranges.push_back(r);
  }
  return spec;
}

std::vector<std::string> preset_theta1() {
  return {"A_cell", "R_l", "nu_n", "R_p", "R_n", "D_s_p_ref", "D_s_n_ref", "theta_p_100", "theta_n_100"};
}
std::vector<std::string> preset_theta2() { return {kFilmRatio, "theta_p_0", "theta_n_100"}; }
std::vector<std::string> preset_vartheta() { return {"theta_p_100", "theta_n_100", "Q_n", "Q_p"}; }

std::vector<std::string> preset_names(const std::string& preset) {
  if (preset == "THETA1") return preset_theta1();
  if (preset == "THETA2") return preset_theta2();
  if (preset == "VARTHETA") return preset_vartheta();
  throw Error(Errc::validation, "unknown preset '" + preset + "' (THETA1, THETA2, VARTHETA)");
}

Vector IdentificationDataset::soc_cc() const {
  if (record.has("SOC_CC")) return record.column("SOC_CC");
  if (!(capacity_ah > 0)) throw Error(Errc::validation, "dataset: SOC_CC missing and capacity not given");
  const Vector& t = record.time();
  const Vector I = record.column("I");
  Vector soc(t.size());
  soc[0] = initial_soc;
  for (Eigen::Index k = 1; k < t.size(); ++k) {
    soc[k] = soc[k - 1] - I[k - 1] * (t[k] - t[k - 1]) / (3600.0 * capacity_ah);
  }
  return soc;
}

void IdentificationDataset::validate() const {
  if (record.size() < 2) throw Error(Errc::validation, "dataset: need at least two samples");
  if (!record.has("I") || !record.has("V")) throw Error(Errc::schema_mismatch, "dataset: needs I and V columns");
  const Vector& t = record.time();
  for (Eigen::Index k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw Error(Errc::non_monotone_time, "dataset: time must increase");
  }
  const Vector soc = soc_cc();
  if (soc.minCoeff() < -0.05 || soc.maxCoeff() > 1.05) {
    throw Error(Errc::validation, "dataset: SOC_CC outside [-0.05, 1.05]");
  }
}

Candidate apply_parameters(const Model& base, const ParameterSpec& spec, const Vector& values,
                           const IdentificationDataset& data, const AgingState* base_aging) {
  if (static_cast<std::size_t>(values.size()) != spec.size()) {
    throw Error(Errc::domain, "candidate length does not match the parameter spec");
  }
  Candidate c{base, {}};
  std::optional<double> ratio;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const std::string& name = spec.ranges[i].name;
    const double v = values[static_cast<Eigen::Index>(i)];
    if (name == kFilmRatio) {
      ratio = v;
    } else if (name == "Q_n" || name == "Q_p") {
      throw Error(Errc::validation, "'" + name + "' only applies to the OCV fit");
    } else {
      c.model.cell.*(cell_fields().at(name)) = v;
    }
  }
  c.model.cell.validate();
  c.initial = initial_state(c.model, data.initial_soc, data.temperature);
  if (base_aging) {
    c.initial.aging = *base_aging;
  }
  if (ratio) {
    const AgingParameters& ap = c.model.aging_or_inert();
    AgingState& a = c.initial.aging;
    a.L_SEI = *ratio * ap.kappa_SEI;
    a.L_film = a.L_SEI + a.L_Li;
    a.R_film = film_resistance(a.L_SEI, a.a_t_n, ap.kappa_SEI, c.model.cell.A_cell, c.model.cell.L_n);
  }
  return c;
}

double cost_fresh(const Model& base, const ParameterSpec& spec, const Vector& values,
                  const IdentificationDataset& data, const CostWeights& weights, const SimulationOptions& sim,
                  const AgingState* base_aging) {
  const Vector& t = data.record.time();
  const double t0 = t[0], t_end = t[t.size() - 1];
  auto penalty = [&](double reached) {
    const double missing = std::clamp((t_end - reached) / (t_end - t0), 0.0, 1.0);
    return kFailurePenalty * (1.0 + missing);
  };
  try {
    const Candidate c = apply_parameters(base, spec, values, data, base_aging);
    TimeSeries profile(t);
    profile.set_column("I", data.record.column("I"));
    SimulationOptions opt = sim;
    opt.internal_columns = false;
    opt.temperature = data.temperature;
    const SimulationResult r = simulate(c.model, profile, opt, c.initial);
    if (r.cutoff_time) return penalty(*r.cutoff_time);
    const Vector& ts = r.series.time();
    const bool aligned = ts.size() == t.size() && (ts - t).cwiseAbs().maxCoeff() == 0.0;
    auto at_data = [&](const char* col) {
      const Vector y = r.series.column(col);
      return aligned ? y : interpolate(ts, y, t);
    };
    double J = 0.0;
    if (weights.voltage != 0) J += weights.voltage * rmse(data.record.column("V"), at_data("V"));
    if (weights.soc_n != 0 || weights.soc_p != 0) {
      const Vector soc = data.soc_cc();
      if (weights.soc_n != 0) J += weights.soc_n * rmse(soc, at_data("SOC_n"));
      if (weights.soc_p != 0) J += weights.soc_p * rmse(soc, at_data("SOC_p"));
    }
    return std::isfinite(J) ? J : penalty(t0);
  } catch (const SimulationError& e) {
    return penalty(e.time());
  } catch (const Error&) {
    return penalty(t0);
  }
}

// ---------------------------------------------------------------------------

void OcvDataset::validate() const {
  if (capacity_ah.size() < 2 || capacity_ah.size() != volts.size()) {
    throw Error(Errc::validation, "pseudo-OCV: need at least two (capacity, voltage) pairs");
  }
  for (Eigen::Index k = 1; k < capacity_ah.size(); ++k) {
    if (!(capacity_ah[k] > capacity_ah[k - 1])) {
      throw Error(Errc::validation, "pseudo-OCV: capacity must increase");
    }
  }
}

OcvWindow resolve_ocv_window(const Vector& candidate, const OcvDataset& data, const OcpSet& ocp,
                             double theta_p_lo, double theta_p_hi) {
  if (candidate.size() != 4) throw Error(Errc::domain, "OCV candidate needs four entries");
  OcvWindow w;
  w.theta_n_100 = candidate[1];
  w.Q_n = candidate[2];
  w.Q_p = candidate[3];
  if (!(w.Q_n > 0 && w.Q_p > 0)) throw Error(Errc::infeasible_window, "electrode capacities must be positive");
  const double Q = data.discharged();
  w.theta_n_0 = w.theta_n_100 - Q / w.Q_n;
  if (!(w.theta_n_0 >= 0 && w.theta_n_100 <= 1)) {
    throw Error(Errc::infeasible_window, "negative stoichiometry window leaves [0, 1]");
  }

  const double target = data.volts[0] + ocp.negative_potential(w.theta_n_100);
  auto f = [&](double th) { return ocp.positive_potential(th) - target; };
  double lo = std::max(theta_p_lo, 0.0), hi = std::min(theta_p_hi, 1.0);
  double flo = f(lo), fhi = f(hi);
  if (flo == 0) {
    hi = lo;
  } else if (fhi == 0) {
    lo = hi;
  } else if ((flo > 0) == (fhi > 0)) {
    throw Error(Errc::infeasible_window, "no theta_p_100 in range reproduces the first OCV sample");
  }
  for (int it = 0; it < 200 && lo < hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0) {
      lo = hi = mid;
    } else if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  w.theta_p_100 = std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
  w.theta_p_0 = w.theta_p_100 + Q / w.Q_p;
  if (!(w.theta_p_0 <= 1)) throw Error(Errc::infeasible_window, "positive stoichiometry window leaves [0, 1]");
  w.start_voltage = ocp.positive_potential(w.theta_p_100) - ocp.negative_potential(w.theta_n_100);
  return w;
}

Vector simulated_ocv(const OcvWindow& w, const Vector& capacity_ah, const OcpSet& ocp) {
  Vector v(capacity_ah.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double q = capacity_ah[k];
    v[k] = ocp.positive_potential(w.theta_p_100 + q / w.Q_p) - ocp.negative_potential(w.theta_n_100 - q / w.Q_n);
  }
  return v;
}

double cost_ocv(const Vector& candidate, const OcvDataset& data, const OcpSet& ocp, double theta_p_lo,
                double theta_p_hi, OcvWindow* window) {
  const OcvWindow w = resolve_ocv_window(candidate, data, ocp, theta_p_lo, theta_p_hi);
  if (window) *window = w;
  return rmse(simulated_ocv(w, data.capacity_ah, ocp), data.volts);
}

// ---------------------------------------------------------------------------

IdentificationResult identify(const Model& base, const ParameterSpec& spec, const IdentificationDataset& data,
                              const IdentificationOptions& options, const AgingState* base_aging) {
  spec.validate();
  data.validate();
  const Objective cost = [&](const Vector& x) {
    return cost_fresh(base, spec, x, data, options.weights, options.sim, base_aging);
  };
  const OptimizationResult r = differential_evolution(cost, spec.bounds(), options.de);
  return {spec, r.best, r.best_cost, r.history, r.evaluations};
}

OcvResult identify_ocv(const OcvDataset& data, const OcpSet& ocp, const ParameterSpec& spec,
                       const DEOptions& options, const std::function<void(const OcvWindow&)>& observer) {
  data.validate();
  spec.validate();
  if (spec.names() != preset_vartheta()) {
    throw Error(Errc::validation, "OCV fit needs the parameters theta_p_100, theta_n_100, Q_n, Q_p in order");
  }
  const double lo = spec.ranges[0].lower, hi = spec.ranges[0].upper;
  const std::vector<Bound> all = spec.bounds();
  const std::vector<Bound> free(all.begin() + 1, all.end());
  auto full = [](const Vector& x) {
    Vector c(4);
    c << std::numeric_limits<double>::quiet_NaN(), x[0], x[1], x[2];
    return c;
  };
  const Objective cost = [&](const Vector& x) {
    try {
      OcvWindow w;
      const double J = cost_ocv(full(x), data, ocp, lo, hi, &w);
      if (observer) observer(w);
      return J;
    } catch (const Error&) {
      const double Q = data.discharged();
      const double overshoot = std::max(0.0, Q / x[1] - x[0]) + std::max(0.0, x[0] - 1.0);
      return kFailurePenalty + overshoot;
    }
  };
  const OptimizationResult r = differential_evolution(cost, free, options);
  OcvResult out;
  out.best_cost = cost_ocv(full(r.best), data, ocp, lo, hi, &out.window);
  out.history = r.history;
  return out;
}

StagedResult identify_two_stage(const Model& base, const ParameterSpec& theta1, const ParameterSpec& theta2,
                                const IdentificationDataset& fresh,
                                const std::vector<IdentificationDataset>& aged,
                                const IdentificationOptions& options) {
  StagedResult out;
  out.stage1 = identify(base, theta1, fresh, options);
  out.fresh = apply_parameters(base, theta1, out.stage1.best, fresh).model;
  const double theta_n_stage1 = out.fresh.cell.theta_n_100;
  const auto names = theta2.names();
  const auto theta_idx = std::find(names.begin(), names.end(), "theta_n_100");
  const auto film_idx = std::find(names.begin(), names.end(), kFilmRatio);
  for (std::size_t k = 0; k < aged.size(); ++k) {
    IdentificationOptions opt = options;
    opt.de.seed = split_seed(options.de.seed, k + 1);
    IdentificationResult r = identify(out.fresh, theta2, aged[k], opt);
    out.theta_n_100_drift.push_back(
        theta_idx == names.end() ? 0.0 : r.best[theta_idx - names.begin()] - theta_n_stage1);
    out.film_ratio_drift.push_back(film_idx == names.end() ? 0.0 : r.best[film_idx - names.begin()]);
    out.stage2.push_back(std::move(r));
  }
  return out;
}

RestartSpread restart_spread(const Model& base, const ParameterSpec& spec, const IdentificationDataset& data,
                             const IdentificationOptions& options, int restarts) {
  if (restarts < 2) throw Error(Errc::domain, "restart spread needs at least two restarts");
  RestartSpread out;
  for (int k = 0; k < restarts; ++k) {
    IdentificationOptions opt = options;
    opt.de.seed = split_seed(options.de.seed, static_cast<std::uint64_t>(k));
    out.bests.push_back(identify(base, spec, data, opt).best);
  }
  const Eigen::Index d = static_cast<Eigen::Index>(spec.size());
  out.mean = Vector::Zero(d);
  for (const auto& b : out.bests) out.mean += b;
  out.mean /= restarts;
  Vector var = Vector::Zero(d);
  for (const auto& b : out.bests) var += (b - out.mean).cwiseAbs2();
  var /= (restarts - 1);
  out.relative_spread = var.cwiseSqrt().cwiseQuotient(out.mean.cwiseAbs());
  return out;
}

IdentificationDataset synthetic_dataset(const Model& truth, const TimeSeries& profile,
                                        const SimulationOptions& sim, const CellState* initial) {
  SimulationOptions opt = sim;
  opt.internal_columns = false;
  const SimulationResult r = initial ? simulate(truth, profile, opt, *initial) : simulate(truth, profile, opt);
  if (r.cutoff_time) throw Error(Errc::validation, "synthetic dataset hit a voltage cutoff");
  IdentificationDataset d;
  const Vector& t = r.series.time();
  const Vector I_profile = profile.column("I");
  Vector I(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) I[k] = sample_and_hold(profile.time(), I_profile, t[k]);
  d.record = TimeSeries(t);
  d.record.set_column("I", I);
  d.record.set_column("V", r.series.column("V"));
  d.initial_soc = initial ? soc(particle_average(initial->c_s_n, truth.cell.R_n) / truth.cell.c_s_max_n,
                                truth.cell, Electrode::negative)
                          : sim.initial_soc;
  d.capacity_ah = truth.cell.window_capacity_ah();
  d.temperature = sim.temperature;
  d.record.set_column("SOC_CC", d.soc_cc());
  return d;
}

}  // namespace ionbench
