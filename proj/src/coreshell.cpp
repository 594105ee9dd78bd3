#include "ionbench/coreshell.hpp"

#include "ionbench/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ionbench {

void CoreShellParameters::validate(double c_s_max) const {
  if (c_alpha == c_beta) throw Error(Errc::degenerate_phase, "core-shell: c_alpha equals c_beta");
  if (!(c_alpha >= 0 && c_alpha < c_beta && c_beta <= c_s_max)) {
    throw Error(Errc::domain, "core-shell: need 0 <= c_alpha < c_beta <= c_s_max");
  }
  if (n_shell < 3) throw Error(Errc::domain, "core-shell: n_shell must be >= 3");
  if (!(guard_fraction > 0 && guard_fraction < 0.5)) {
    throw Error(Errc::domain, "core-shell: guard fraction must lie in (0, 0.5)");
  }
}

namespace {

double cube(double x) { return x * x * x; }

double sign_of(PhaseOrientation o) { return o == PhaseOrientation::discharge ? 1.0 : -1.0; }

// Boundary radius that stores `moles` (per 1/(4 pi)) with a core at c_core and
// a uniform shell at c_shell.
double radius_for(double moles, double radius, double c_core, double c_shell,
                  const CoreShellParameters& params) {
  const double r3 = (3.0 * moles - c_shell * cube(radius)) / (c_core - c_shell);
  const double lo = params.guard_fraction * radius;
  const double hi = radius - lo;
  if (!(r3 >= cube(lo) && r3 <= cube(hi))) {
    throw Error(Errc::boundary_collision, "core-shell: phase boundary outside the guard band");
  }
  return std::cbrt(r3);
}

struct ShellSolve {
  Vector c;
  double residual = 0;  // discrete Stefan residual
  double scale = 0;     // magnitude of its terms, for a round-off test
};

// Shell concentrations at the new time for a trial boundary position, plus the
// Stefan residual that the boundary must zero.
ShellSolve solve_shell(const PhaseBoundaryState& s, double r_new, double radius, double diffusivity,
                       double flux_in, double dt) {
  const Eigen::Index n = s.shell.size();
  const double nd = static_cast<double>(n);
  const double h_old = (radius - s.r_p) / nd;
  const double h = (radius - r_new) / nd;
  auto face_old = [&](Eigen::Index f) { return s.r_p + h_old * static_cast<double>(f); };
  auto face = [&](Eigen::Index f) { return r_new + h * static_cast<double>(f); };
  const double c_int = s.interface_concentration();

  Vector lower = Vector::Zero(n), diag(n), upper = Vector::Zero(n), rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v_old = (cube(face_old(k + 1)) - cube(face_old(k))) / 3.0;
    diag[k] = (cube(face(k + 1)) - cube(face(k))) / 3.0;
    rhs[k] = v_old * s.shell[k];
  }
  // Interior faces: diffusion plus upwinded transport across the moving face.
  for (Eigen::Index f = 1; f < n; ++f) {
    const double rf = face(f);
    const double g = dt * diffusivity * rf * rf / h;
    const double swept = (cube(rf) - cube(face_old(f))) / 3.0;  // > 0 when the face moves out
    const Eigen::Index left = f - 1, right = f;
    diag[left] += g;
    diag[right] += g;
    upper[left] -= g;
    lower[right] -= g;
    if (swept > 0) {
      // left cell takes over volume that held right-cell material
      upper[left] -= swept;
      diag[right] += swept;
    } else {
      diag[left] -= swept;
      lower[right] += swept;
    }
  }
  // Interface face: Dirichlet value c_int at half a cell, transport at c_int.
  const double swept0 = (cube(r_new) - cube(s.r_p)) / 3.0;
  const double g0 = dt * diffusivity * r_new * r_new / (0.5 * h);
  diag[0] += g0;
  rhs[0] += g0 * c_int - swept0 * c_int;
  rhs[n - 1] += dt * radius * radius * flux_in;

  ShellSolve out;
  out.c = solve_tridiagonal<double>(lower, diag, upper, rhs);
  out.residual = swept0 * (s.core_concentration() - c_int) - g0 * (out.c[0] - c_int);
  out.scale = g0 * std::max(std::abs(c_int), std::abs(out.c[0]));
  return out;
}

}  // namespace

PhaseBoundaryState coreshell_initial(double c_mean, double radius, PhaseOrientation orientation,
                                     const CoreShellParameters& params) {
  PhaseBoundaryState s;
  s.c_alpha = params.c_alpha;
  s.c_beta = params.c_beta;
  s.orientation = orientation;
  s.r_p = radius_for(c_mean * cube(radius) / 3.0, radius, s.core_concentration(),
                     s.interface_concentration(), params);
  s.shell = Vector::Constant(params.n_shell, s.interface_concentration());
  return s;
}

double coreshell_lithium(const PhaseBoundaryState& s, double radius) {
  const Eigen::Index n = s.shell.size();
  const double h = (radius - s.r_p) / static_cast<double>(n);
  double total = s.core_concentration() * cube(s.r_p) / 3.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r0 = s.r_p + h * static_cast<double>(k);
    total += s.shell[k] * (cube(r0 + h) - cube(r0)) / 3.0;
  }
  return total;
}

double coreshell_surface(const PhaseBoundaryState& s, double radius, double diffusivity, double flux_in) {
  const double h = (radius - s.r_p) / static_cast<double>(s.shell.size());
  return s.shell[s.shell.size() - 1] + 0.5 * h * flux_in / diffusivity;
}

double boundary_velocity(double gradient_at_rp, double current, const PhaseBoundaryState& state,
                         double diffusivity) {
  if (state.c_alpha == state.c_beta) {
    throw Error(Errc::degenerate_phase, "boundary_velocity: c_alpha equals c_beta");
  }
  const double s = current > 0 ? 1.0 : current < 0 ? -1.0 : sign_of(state.orientation);
  return s * diffusivity * gradient_at_rp / (state.c_alpha - state.c_beta);
}

PhaseBoundaryState coreshell_reorient(const PhaseBoundaryState& state, double radius,
                                      PhaseOrientation orientation, const CoreShellParameters& params) {
  if (orientation == state.orientation) return state;
  PhaseBoundaryState next = state;
  next.orientation = orientation;
  next.r_p = radius_for(coreshell_lithium(state, radius), radius, next.core_concentration(),
                        next.interface_concentration(), params);
  next.shell = Vector::Constant(state.shell.size(), next.interface_concentration());
  return next;
}

PhaseBoundaryState coreshell_step(const PhaseBoundaryState& state, double radius, double diffusivity,
                                  double flux_in, double current, double dt,
                                  const CoreShellParameters& params) {
  if (!(dt > 0) || !std::isfinite(dt)) {
    throw Error(Errc::instability, "core-shell: time step must be positive and finite");
  }
  if (state.c_alpha == state.c_beta) throw Error(Errc::degenerate_phase, "core-shell: c_alpha equals c_beta");
  PhaseBoundaryState s = state;
  if (current > 0 && s.orientation != PhaseOrientation::discharge) {
    s = coreshell_reorient(s, radius, PhaseOrientation::discharge, params);
  } else if (current < 0 && s.orientation != PhaseOrientation::charge) {
    s = coreshell_reorient(s, radius, PhaseOrientation::charge, params);
  }

  const double lo = params.guard_fraction * radius;
  const double hi = radius - lo;
  auto residual = [&](double r) { return solve_shell(s, r, radius, diffusivity, flux_in, dt).residual; };

  // Bracket the root by walking away from the old position.
  const ShellSolve at_rest = solve_shell(s, s.r_p, radius, diffusivity, flux_in, dt);
  double a = s.r_p, fa = at_rest.residual;
  double b = a, fb = fa;
  if (std::abs(fa) > 1e-13 * at_rest.scale) {
    const double span = hi - lo;
    // The residual falls with r when the core is lithium-poor and rises otherwise.
    const bool rising = s.core_concentration() > s.interface_concentration();
    const double direction = (fa > 0 ? 1.0 : -1.0) * (rising ? -1.0 : 1.0);
    double step = 1e-6 * span;
    for (;;) {
      double trial = a + direction * step;
      trial = std::clamp(trial, lo, hi);
      const double ft = residual(trial);
      if ((ft > 0) != (fa > 0) || ft == 0.0) {
        b = trial;
        fb = ft;
        break;
      }
      if (trial == lo || trial == hi) {
        throw Error(Errc::boundary_collision, "core-shell: phase boundary reached the guard");
      }
      a = trial;
      fa = ft;
      step *= 4.0;
    }
    // Bisection safeguarded secant (Illinois variant).
    int side = 0;
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * radius; ++it) {
      const double c = (a * fb - b * fa) / (fb - fa);
      const double fc = residual(c);
      if (fc == 0.0) {
        a = b = c;
        fa = fb = 0.0;
        break;
      }
      if ((fc > 0) == (fb > 0)) {
        b = c;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      } else {
        a = c;
        fa = fc;
        if (side == 1) fb *= 0.5;
        side = 1;
      }
    }
  }
  const double r_new = std::abs(fa) < std::abs(fb) ? a : b;
  PhaseBoundaryState next = s;
  next.shell = solve_shell(s, r_new, radius, diffusivity, flux_in, dt).c;
  next.r_p = r_new;
  return next;
}

}  // namespace ionbench
