#include "doctest.h"

#include "ionbench/optimize.hpp"

#include <algorithm>
#include <cmath>

using namespace ionbench;

namespace {

double sphere(const Vector& x) { return x.squaredNorm(); }

double rosenbrock(const Vector& x) {
  double s = 0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    s += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
  }
  return s;
}

}  // namespace

TEST_CASE("unit-cube maps round-trip on both scales") {
  const std::vector<Bound> b{{-2, 3, Scale::linear}, {1e-14, 1e-12, Scale::log}};
  Vector x(2);
  x << 0.7, 3e-13;
  const Vector u = to_unit(x, b);
  CHECK(u[0] == doctest::Approx(0.54));
  CHECK(u[1] == doctest::Approx(std::log10(30.0) / 2));
  const Vector back = from_unit(u, b);
  CHECK(back[0] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(back[1] == doctest::Approx(3e-13).epsilon(1e-12));
}

TEST_CASE("differential evolution finds the sphere minimum") {
  const std::vector<Bound> b(5, Bound{-5, 5, Scale::linear});
  std::vector<double> costs;
  for (std::uint64_t seed = 1; seed <= 9; ++seed) {
    DEOptions opt;
    opt.budget = 5000;
    opt.seed = seed;
    const auto r = differential_evolution(sphere, b, opt);
    CHECK(r.evaluations <= 5000);
    CHECK(r.best_cost < 1e-2);
    for (std::size_t g = 1; g < r.history.size(); ++g) CHECK(r.history[g] <= r.history[g - 1]);
    costs.push_back(r.best_cost);
  }
  std::nth_element(costs.begin(), costs.begin() + 4, costs.end());
  CHECK(costs[4] < 1e-3);

  // With a larger budget the minimiser itself is pinned down.
  DEOptions opt;
  opt.budget = 12000;
  const auto r = differential_evolution(sphere, b, opt);
  CHECK(r.best.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("same seed, same result; thread count does not matter") {
  const std::vector<Bound> b(3, Bound{-2, 2, Scale::linear});
  DEOptions opt;
  opt.budget = 1500;
  opt.seed = 99;
  const auto a = differential_evolution(rosenbrock, b, opt);
  opt.threads = 3;
  const auto c = differential_evolution(rosenbrock, b, opt);
  CHECK(a.best_cost == c.best_cost);
  CHECK((a.best - c.best).norm() == 0.0);
  opt.seed = 100;
  const auto d = differential_evolution(rosenbrock, b, opt);
  CHECK((a.best - d.best).norm() > 0.0);
}

TEST_CASE("every evaluated candidate lies inside the bounds") {
  const std::vector<Bound> b{{1, 2, Scale::linear}, {1e-3, 1e2, Scale::log}};
  bool inside = true;
  // Optimum sits outside the box, so mutants keep pushing through the faces.
  const Objective cost = [&](const Vector& x) {
    inside = inside && x[0] >= 1 && x[0] <= 2 && x[1] >= 1e-3 && x[1] <= 1e2;
    return std::pow(x[0] + 4, 2) + std::pow(std::log10(x[1]) - 5, 2);
  };
  DEOptions opt;
  opt.budget = 2000;
  const auto r = differential_evolution(cost, b, opt);
  CHECK(inside);
  CHECK(r.best[0] == doctest::Approx(1).epsilon(1e-6));
  CHECK(r.best[1] == doctest::Approx(1e2).epsilon(1e-6));
}

TEST_CASE("target stops the search early") {
  const std::vector<Bound> b(2, Bound{-5, 5, Scale::linear});
  DEOptions opt;
  opt.budget = 20000;
  opt.target = 1e-2;
  const auto r = differential_evolution(sphere, b, opt);
  CHECK(r.best_cost <= 1e-2);
  CHECK(r.evaluations < 20000);
}

TEST_CASE("bad options are rejected") {
  const std::vector<Bound> b(2, Bound{-5, 5, Scale::linear});
  DEOptions opt;
  opt.F = 0;
  CHECK_THROWS_AS(differential_evolution(sphere, b, opt), Error);
  CHECK_THROWS_AS(differential_evolution(sphere, {Bound{1, 0, Scale::linear}}, DEOptions{}), Error);
  CHECK_THROWS_AS(differential_evolution(sphere, {Bound{0, 1, Scale::log}}, DEOptions{}), Error);
}

TEST_CASE("Nelder-Mead converges inside a box and respects it") {
  Vector start(2), lo(2), hi(2);
  start << -1.2, 1.0;
  lo << -2, -2;
  hi << 2, 2;
  NelderMeadOptions opt;
  opt.max_evaluations = 4000;
  opt.tolerance = 1e-16;
  const auto r = nelder_mead(rosenbrock, start, lo, hi, opt);
  CHECK(r.best[0] == doctest::Approx(1).epsilon(1e-3));
  CHECK(r.best[1] == doctest::Approx(1).epsilon(1e-3));

  lo << 1.5, 1.5;
  hi << 2, 3;
  start << 1.8, 2.5;
  const auto c = nelder_mead(sphere, start, lo, hi, opt);
  CHECK(c.best[0] == doctest::Approx(1.5));
  CHECK(c.best[1] == doctest::Approx(1.5));
}
