#include "ionbench/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace ionbench {

Vector from_unit(const Vector& u, const std::vector<Bound>& bounds) {
  Vector x(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Bound& b = bounds[static_cast<std::size_t>(i)];
    if (b.scale == Scale::log) {
      x[i] = std::exp(std::log(b.lower) + u[i] * (std::log(b.upper) - std::log(b.lower)));
    } else {
      x[i] = b.lower + u[i] * (b.upper - b.lower);
    }
    x[i] = std::clamp(x[i], b.lower, b.upper);
  }
  return x;
}

Vector to_unit(const Vector& x, const std::vector<Bound>& bounds) {
  Vector u(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Bound& b = bounds[static_cast<std::size_t>(i)];
    u[i] = b.scale == Scale::log ? (std::log(x[i]) - std::log(b.lower)) / (std::log(b.upper) - std::log(b.lower))
                                 : (x[i] - b.lower) / (b.upper - b.lower);
  }
  return u;
}

namespace {

void validate_bounds(const std::vector<Bound>& bounds) {
  if (bounds.empty()) throw Error(Errc::domain, "optimizer: empty search space");
  for (const Bound& b : bounds) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
      throw Error(Errc::domain, "optimizer: bounds must be finite with lower < upper");
    }
    if (b.scale == Scale::log && !(b.lower > 0)) {
      throw Error(Errc::domain, "optimizer: log-scaled bounds must be positive");
    }
  }
}

// Evaluates cost on every column of `points`, splitting the work over threads.
Vector evaluate_all(const Objective& cost, const std::vector<Vector>& points, int threads) {
  const std::size_t n = points.size();
  Vector out(static_cast<Eigen::Index>(n));
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = cost(points[i]);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) out[static_cast<Eigen::Index>(i)] = cost(points[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

OptimizationResult differential_evolution(const Objective& cost, const std::vector<Bound>& bounds,
                                          const DEOptions& opt) {
  validate_bounds(bounds);
  const int dim = static_cast<int>(bounds.size());
  const int np = opt.population > 0 ? opt.population : 15 * dim;
  if (!(opt.F > 0 && opt.F <= 2)) throw Error(Errc::domain, "differential evolution: F must lie in (0, 2]");
  if (!(opt.CR >= 0 && opt.CR <= 1)) throw Error(Errc::domain, "differential evolution: CR must lie in [0, 1]");
  if (np < 4) throw Error(Errc::domain, "differential evolution: population must be at least 4");
  if (opt.budget < np) throw Error(Errc::domain, "differential evolution: budget below population size");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, np - 1);
  std::uniform_int_distribution<int> pick_dim(0, dim - 1);

  std::vector<Vector> pop(static_cast<std::size_t>(np), Vector(dim));
  for (auto& member : pop) {
    for (int j = 0; j < dim; ++j) member[j] = unit(rng);
  }
  std::vector<Vector> mapped(pop.size());
  std::transform(pop.begin(), pop.end(), mapped.begin(), [&](const Vector& u) { return from_unit(u, bounds); });
  Vector fitness = evaluate_all(cost, mapped, opt.threads);

  OptimizationResult result;
  result.evaluations = np;
  Eigen::Index best = 0;
  fitness.minCoeff(&best);
  result.history.push_back(fitness[best]);

  std::vector<Vector> trials(pop.size(), Vector(dim));
  while (result.evaluations + np <= opt.budget && fitness[best] > opt.target) {
    for (int i = 0; i < np; ++i) {
      int a, b, c;
      do a = pick(rng); while (a == i);
      do b = pick(rng); while (b == i || b == a);
      do c = pick(rng); while (c == i || c == a || c == b);
      const int forced = pick_dim(rng);
      Vector& trial = trials[static_cast<std::size_t>(i)];
      const Vector& base = pop[static_cast<std::size_t>(a)];
      for (int j = 0; j < dim; ++j) {
        if (j == forced || unit(rng) < opt.CR) {
          double v = base[j] + opt.F * (pop[static_cast<std::size_t>(b)][j] - pop[static_cast<std::size_t>(c)][j]);
          if (v < 0.0) v = 0.5 * base[j];
          if (v > 1.0) v = 0.5 * (base[j] + 1.0);
          trial[j] = v;
        } else {
          trial[j] = pop[static_cast<std::size_t>(i)][j];
        }
      }
    }
    std::transform(trials.begin(), trials.end(), mapped.begin(), [&](const Vector& u) { return from_unit(u, bounds); });
    const Vector trial_fitness = evaluate_all(cost, mapped, opt.threads);
    result.evaluations += np;
    for (int i = 0; i < np; ++i) {
      if (trial_fitness[i] <= fitness[i]) {
        pop[static_cast<std::size_t>(i)] = trials[static_cast<std::size_t>(i)];
        fitness[i] = trial_fitness[i];
      }
    }
    fitness.minCoeff(&best);
    result.history.push_back(fitness[best]);
  }
  result.best = from_unit(pop[static_cast<std::size_t>(best)], bounds);
  result.best_cost = fitness[best];
  return result;
}

OptimizationResult nelder_mead(const Objective& cost, const Vector& start, const Vector& lower,
                               const Vector& upper, const NelderMeadOptions& opt) {
  const Eigen::Index n = start.size();
  auto project = [&](Vector x) { return Vector(x.cwiseMax(lower).cwiseMin(upper)); };
  OptimizationResult result;
  auto f = [&](const Vector& x) {
    ++result.evaluations;
    const double v = cost(x);
    return std::isfinite(v) ? v : 1e300;
  };

  std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), project(start));
  Vector values(n + 1);
  values[0] = f(simplex[0]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector x = simplex[0];
    const double span = upper[i] - lower[i];
    x[i] += opt.initial_step * span;
    if (x[i] > upper[i]) x[i] = simplex[0][i] - opt.initial_step * span;
    simplex[static_cast<std::size_t>(i + 1)] = project(x);
    values[i + 1] = f(simplex[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<int> order(static_cast<std::size_t>(n + 1));
  while (result.evaluations < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int lo = order.front(), hi = order.back(), second = order[order.size() - 2];
    result.history.push_back(values[lo]);
    if (values[hi] - values[lo] <= opt.tolerance * (std::abs(values[lo]) + opt.tolerance)) break;

    Vector centroid = Vector::Zero(n);
    for (int k : order) {
      if (k != hi) centroid += simplex[static_cast<std::size_t>(k)];
    }
    centroid /= static_cast<double>(n);
    const Vector& worst = simplex[static_cast<std::size_t>(hi)];

    const Vector reflected = project(centroid + (centroid - worst));
    const double fr = f(reflected);
    if (fr < values[lo]) {
      const Vector expanded = project(centroid + 2.0 * (centroid - worst));
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[static_cast<std::size_t>(hi)] = expanded;
        values[hi] = fe;
      } else {
        simplex[static_cast<std::size_t>(hi)] = reflected;
        values[hi] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[static_cast<std::size_t>(hi)] = reflected;
      values[hi] = fr;
      continue;
    }
    const bool outside = fr < values[hi];
    const Vector contracted = project(outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                              : Vector(centroid + 0.5 * (worst - centroid)));
    const double fc = f(contracted);
    if (fc < std::min(fr, values[hi])) {
      simplex[static_cast<std::size_t>(hi)] = contracted;
      values[hi] = fc;
      continue;
    }
    for (int k : order) {
      if (k == lo) continue;
      simplex[static_cast<std::size_t>(k)] =
          project(simplex[static_cast<std::size_t>(lo)] + 0.5 * (simplex[static_cast<std::size_t>(k)] - simplex[static_cast<std::size_t>(lo)]));
      values[k] = f(simplex[static_cast<std::size_t>(k)]);
    }
  }
  Eigen::Index best = 0;
  values.minCoeff(&best);
  result.best = simplex[static_cast<std::size_t>(best)];
  result.best_cost = values[best];
  return result;
}

}  // namespace ionbench
