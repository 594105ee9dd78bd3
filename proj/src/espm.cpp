#include "ionbench/espm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace ionbench {

void Model::validate() const {
  cell.validate();
  grid.validate();
  if (aging) aging->validate();
  if (coreshell) coreshell->validate(cell.c_s_max_p);
}

const AgingParameters& Model::aging_or_inert() const {
  static const AgingParameters inert{};
  return aging ? *aging : inert;
}

CellState initial_state(const Model& model, double soc_value, double temperature,
                        PhaseOrientation orientation) {
  const CellParameters& c = model.cell;
  const double theta_n = c.theta_n_0 + soc_value * (c.theta_n_100 - c.theta_n_0);
  const double theta_p = c.theta_p_0 - soc_value * (c.theta_p_0 - c.theta_p_100);
  CellState s;
  s.c_s_n = Vector::Constant(model.grid.n_r, theta_n * c.c_s_max_n);
  s.c_s_p = Vector::Constant(model.grid.n_r, theta_p * c.c_s_max_p);
  s.c_e = Vector::Constant(model.grid.n_x(), c.c_e_init);
  s.phi_e = Vector::Zero(model.grid.n_x());
  s.T = temperature;
  s.aging = AgingState::fresh(c, model.aging_or_inert());
  if (model.coreshell) {
    s.coreshell = coreshell_initial(theta_p * c.c_s_max_p, c.R_p, orientation, *model.coreshell);
  }
  return s;
}

namespace {

struct ElectrodeSurface {
  double theta_avg = 0;
  double theta_surf = 0;
};

ElectrodeSurface positive_surface(const CellState& s, const Model& m) {
  const CellParameters& c = m.cell;
  const double current = s.current;
  const double D = c.D_s_p(s.T);
  const double flux = positive_surface_flux(current, s.aging.a_t_p, c);
  if (s.coreshell) {
    const double avg = 3.0 * coreshell_lithium(*s.coreshell, c.R_p) / (c.R_p * c.R_p * c.R_p);
    return {avg / c.c_s_max_p, coreshell_surface(*s.coreshell, c.R_p, D, flux) / c.c_s_max_p};
  }
  return {particle_average(s.c_s_p, c.R_p) / c.c_s_max_p,
          surface_concentration(s.c_s_p, c.R_p, D, flux) / c.c_s_max_p};
}

ElectrodeSurface negative_surface(const CellState& s, const Model& m) {
  const CellParameters& c = m.cell;
  const double current = s.current;
  const double flux = negative_surface_flux(current, s.aging.j_SEI + s.aging.j_lpl, s.aging.a_t_n, c);
  return {particle_average(s.c_s_n, c.R_n) / c.c_s_max_n,
          surface_concentration(s.c_s_n, c.R_n, c.D_s_n(s.T), flux) / c.c_s_max_n};
}

double clamp_unit(double theta) { return std::clamp(theta, 0.0, 1.0); }

double electrode_overpotential(double current, double theta_surf, double c_e, double c_max, double k,
                               double a_t, double thickness, const CellParameters& c, double T,
                               Electrode e) {
  const double i0 = exchange_current_density(c_e, clamp_unit(theta_surf) * c_max, c_max, k, c.i0_floor);
  return overpotential(current, i0, a_t, thickness, c.A_cell, T, e);
}

}  // namespace

Observation observe(const CellState& s, double current, const Model& m) {
  const CellParameters& c = m.cell;
  Observation o;
  const ElectrodeSurface pos = positive_surface(s, m);
  const ElectrodeSurface neg = negative_surface(s, m);
  o.theta_p = pos.theta_avg;
  o.theta_n = neg.theta_avg;
  o.theta_p_surf = pos.theta_surf;
  o.theta_n_surf = neg.theta_surf;
  o.soc_p = soc(o.theta_p, c, Electrode::positive);
  o.soc_n = soc(o.theta_n, c, Electrode::negative);

  bool ext_p = false, ext_n = false;
  // A two-phase particle sits on the flat plateau regardless of its surface
  // value, so its potential follows the particle average.
  o.U_p = m.ocp.positive_potential(s.coreshell ? o.theta_p : o.theta_p_surf, &ext_p);
  o.U_n = m.ocp.negative_potential(o.theta_n_surf, &ext_n);
  o.extrapolated = ext_p || ext_n;

  const RegionPorosity porosity = s.porosity(c);
  const ElectrolyteLayout layout(c, m.grid, porosity);
  const auto c_e_avg = region_averages(s.c_e, layout);
  o.eta_p = electrode_overpotential(current, o.theta_p_surf, c_e_avg[0], c.c_s_max_p, c.k_p, s.aging.a_t_p,
                                    c.L_p, c, s.T, Electrode::positive);
  o.eta_n = electrode_overpotential(current, o.theta_n_surf, c_e_avg[2], c.c_s_max_n, c.k_n, s.aging.a_t_n,
                                    c.L_n, c, s.T, Electrode::negative);
  ElectrolytePotential pot = electrolyte_potential_solve(s.c_e, current, s.T, c, m.grid, porosity);
  o.delta_phi_e = pot.delta_phi;
  o.phi_e = std::move(pot.phi);
  o.R_contact = c.contact_resistance(o.soc_n, current);
  if (s.coreshell) o.r_p_norm = s.coreshell->r_p / c.R_p;

  o.V = o.U_p - o.U_n + o.eta_p - o.eta_n + o.delta_phi_e -
        current * (o.R_contact + c.R_el + s.aging.R_film);
  return o;
}

CellState espm_step(const CellState& s, double current, double dt, const Model& m) {
  const CellParameters& c = m.cell;
  CellState next = s;

  if (m.aging) {
    const ElectrodeSurface neg = negative_surface(s, m);
    const RegionPorosity porosity = s.porosity(c);
    const ElectrolyteLayout layout(c, m.grid, porosity);
    const double c_e_n = region_averages(s.c_e, layout)[2];
    bool ext = false;
    const double U_n = m.ocp.negative_potential(neg.theta_surf, &ext);
    const double eta_n = electrode_overpotential(current, neg.theta_surf, c_e_n, c.c_s_max_n, c.k_n,
                                                 s.aging.a_t_n, c.L_n, c, s.T, Electrode::negative);
    const double phi = negative_solid_potential(U_n, eta_n, s.aging.R_film, current);
    const SideCurrents j = side_currents(s.aging.a_t_n, phi, s.aging.R_film, current, s.T, *m.aging);
    next.aging.j_SEI = j.j_SEI;
    next.aging.j_lpl = j.j_lpl;
  }

  const double flux_n = negative_surface_flux(current, next.aging.j_SEI + next.aging.j_lpl,
                                              next.aging.a_t_n, c);
  next.c_s_n = solid_diffusion_step(s.c_s_n, c.R_n, c.D_s_n(s.T), flux_n, dt, c.c_s_max_n);

  const double flux_p = positive_surface_flux(current, s.aging.a_t_p, c);
  if (s.coreshell) {
    next.coreshell = coreshell_step(*s.coreshell, c.R_p, c.D_s_p(s.T), flux_p, current, dt, *m.coreshell);
  } else {
    next.c_s_p = solid_diffusion_step(s.c_s_p, c.R_p, c.D_s_p(s.T), flux_p, dt, c.c_s_max_p);
  }

  next.c_e = electrolyte_mass_step(s.c_e, current, dt, s.T, c, m.grid, s.porosity(c));
  if (m.aging) next.aging = aging_advance(next.aging, dt, c, *m.aging);
  next.t = s.t + dt;
  next.current = current;
  return next;
}

const std::vector<std::string>& internal_signal_names() {
  static const std::vector<std::string> names = {"theta_p_surf", "theta_n_surf", "eta_p",
                                                 "eta_n",        "delta_phi_e",  "U_p",
                                                 "U_n",          "r_p_norm",     "extrapolated"};
  return names;
}

namespace {

const std::vector<std::string>& aging_signal_names() {
  static const std::vector<std::string> names = {"c_SEI", "c_Li",  "L_film", "L_SEI", "L_Li",  "R_film",
                                                 "a_t_p", "a_t_n", "eps_p",  "eps_n", "j_SEI", "j_lpl"};
  return names;
}

bool retryable(Errc code) {
  return code == Errc::instability || code == Errc::saturation || code == Errc::negative_concentration ||
         code == Errc::singular_system;
}

CellState advance(const CellState& s, double current, double dt, const Model& m, int halvings_left) {
  try {
    return espm_step(s, current, dt, m);
  } catch (const Error& e) {
    if (!retryable(e.code()) || halvings_left == 0) throw;
    const CellState mid = advance(s, current, 0.5 * dt, m, halvings_left - 1);
    return advance(mid, current, 0.5 * dt, m, halvings_left - 1);
  }
}

}  // namespace

SimulationResult simulate(const Model& model, const TimeSeries& profile, const SimulationOptions& opt,
                          std::optional<CellState> initial) {
  model.validate();
  if (!(opt.dt > 0)) throw Error(Errc::domain, "simulate: dt must be positive");
  if (profile.size() < 2) throw Error(Errc::domain, "simulate: profile needs at least two rows");
  const Vector& time = profile.time();
  for (Eigen::Index i = 1; i < time.size(); ++i) {
    if (!(time[i] > time[i - 1])) throw Error(Errc::non_monotone_time, "simulate: profile time must increase");
  }
  const Vector current = profile.column("I");
  const std::optional<Vector> temperature =
      profile.has("T") ? std::optional<Vector>(profile.column("T")) : std::nullopt;
  auto temperature_at = [&](Eigen::Index row) { return temperature ? (*temperature)[row] : opt.temperature; };

  CellState state = initial ? std::move(*initial)
                            : initial_state(model, opt.initial_soc, temperature_at(0), opt.initial_orientation);
  state.t = time[0];
  state.T = temperature_at(0);

  std::vector<std::string> names = {"I", "V", "SOC_n", "SOC_p", "T"};
  if (opt.internal_columns) {
    names.insert(names.end(), internal_signal_names().begin(), internal_signal_names().end());
    if (model.aging) names.insert(names.end(), aging_signal_names().begin(), aging_signal_names().end());
  }
  std::vector<double> t_out;
  std::vector<std::vector<double>> rows;
  SimulationResult result;

  auto record = [&](double I) {
    Observation o = observe(state, I, model);
    state.phi_e = std::move(o.phi_e);
    if (o.extrapolated && !result.extrapolated) {
      spdlog::warn("OCP lookup left its table at t = {} s", state.t);
    }
    result.extrapolated = result.extrapolated || o.extrapolated;
    std::vector<double> row = {I, o.V, o.soc_n, o.soc_p, state.T};
    if (opt.internal_columns) {
      row.insert(row.end(), {o.theta_p_surf, o.theta_n_surf, o.eta_p, o.eta_n, o.delta_phi_e, o.U_p, o.U_n,
                             o.r_p_norm, o.extrapolated ? 1.0 : 0.0});
      if (model.aging) {
        const AgingState& a = state.aging;
        row.insert(row.end(), {a.c_SEI, a.c_Li, a.L_film, a.L_SEI, a.L_Li, a.R_film, a.a_t_p, a.a_t_n, a.eps_p,
                               a.eps_n, a.j_SEI, a.j_lpl});
      }
    }
    t_out.push_back(state.t);
    rows.push_back(std::move(row));
    return o.V;
  };

  double v_prev = record(current[0]);
  Eigen::Index seg = 0;
  const double t_end = time[time.size() - 1];
  const double snap = 1e-9 * std::max(1.0, std::abs(t_end));
  while (state.t < t_end - snap) {
    while (seg + 1 < time.size() && time[seg + 1] <= state.t + snap) ++seg;
    const double boundary = time[std::min<Eigen::Index>(seg + 1, time.size() - 1)];
    double h = std::min(opt.dt, boundary - state.t);
    const bool lands = boundary - (state.t + h) <= snap;
    const double I = current[seg];
    const double t_prev = state.t;
    state.T = temperature_at(seg);
    try {
      state = advance(state, I, h, model, opt.max_halvings);
    } catch (const SimulationError&) {
      throw;
    } catch (const Error& e) {
      throw SimulationError(e.code(), t_prev, e.what());
    }
    if (lands) state.t = boundary;
    const double v = record(I);
    const bool low = opt.v_min && v < *opt.v_min;
    const bool high = opt.v_max && v > *opt.v_max;
    if (low || high) {
      const double limit = low ? *opt.v_min : *opt.v_max;
      const double w = v == v_prev ? 1.0 : std::clamp((limit - v_prev) / (v - v_prev), 0.0, 1.0);
      result.cutoff_time = t_prev + w * (state.t - t_prev);
      break;
    }
    v_prev = v;
  }

  const Eigen::Index n = static_cast<Eigen::Index>(t_out.size());
  TimeSeries series(Eigen::Map<const Vector>(t_out.data(), n));
  for (std::size_t j = 0; j < names.size(); ++j) {
    Vector col(n);
    for (Eigen::Index i = 0; i < n; ++i) col[i] = rows[static_cast<std::size_t>(i)][j];
    series.set_column(names[j], col);
  }
  result.series = std::move(series);
  result.final_state = std::move(state);
  return result;
}

double charge_throughput_ah(const SimulationResult& r) {
  const Vector& t = r.series.time();
  const Vector I = r.series.column("I");
  double total = 0.0;
  for (Eigen::Index k = 1; k < t.size(); ++k) {
    double t_hi = t[k];
    if (r.cutoff_time && k == t.size() - 1) t_hi = *r.cutoff_time;
    total += I[k] * (t_hi - t[k - 1]);
  }
  return total / 3600.0;
}

TimeSeries constant_current_profile(double current, double duration) {
  TimeSeries p(Vector::LinSpaced(2, 0.0, duration));
  p.set_column("I", Vector::Constant(2, current));
  return p;
}

}  // namespace ionbench
