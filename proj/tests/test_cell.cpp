#include "doctest.h"

#include "ionbench/cell.hpp"

#include <cmath>

using namespace ionbench;

TEST_CASE("effective transport scales by eps^brugg") {
  CHECK(effective_transport(1.0, 1.5, 2.0e-10) == doctest::Approx(2.0e-10).epsilon(1e-15));
  CHECK(effective_transport(0.3, 1.5, 2.0e-10) == doctest::Approx(3.2863353450309965e-11).epsilon(1e-12));
  CHECK(effective_transport(0.3, 1.5, 1.0) == doctest::Approx(0.1643167672515498).epsilon(1e-12));
  CHECK_THROWS_AS(effective_transport(0.0, 1.5, 1.0), Error);
  CHECK_THROWS_AS(effective_transport(0.3, 1.5, -1.0), Error);
}

TEST_CASE("exchange current density") {
  const double floor = 1e-8;
  CHECK(exchange_current_density(1000.0, 0.0, 5e4, 2e-11, floor) == floor);
  CHECK(exchange_current_density(1000.0, 5e4, 5e4, 2e-11, floor) == floor);
  CHECK(exchange_current_density(1000.0, 2.5e4, 5e4, 2e-11, floor) ==
        doctest::Approx(1.5255618002067306).epsilon(1e-12));
  CHECK_THROWS_AS(exchange_current_density(1000.0, 6e4, 5e4, 2e-11, floor), Error);
  CHECK_THROWS_AS(exchange_current_density(0.0, 1e4, 5e4, 2e-11, floor), Error);
}

TEST_CASE("overpotential") {
  const double A = 0.4, a = 3e5, L = 7e-5, T = 298.15;
  CHECK(overpotential(0.0, 1.0, a, L, A, T, Electrode::negative) == 0.0);
  // asinh argument of exactly one
  const double i0 = 2.0;
  const double I = 2.0 * A * a * L * i0;
  CHECK(overpotential(I, i0, a, L, A, T, Electrode::negative) ==
        doctest::Approx(0.04528715721074893).epsilon(1e-12));
  CHECK(overpotential(I, i0, a, L, A, T, Electrode::positive) ==
        doctest::Approx(-0.04528715721074893).epsilon(1e-12));
  for (double x : {0.1, 3.0, 50.0}) {
    for (auto e : {Electrode::positive, Electrode::negative}) {
      CHECK(overpotential(-x, i0, a, L, A, T, e) == -overpotential(x, i0, a, L, A, T, e));
    }
  }
  CHECK_THROWS_AS(overpotential(1.0, 0.0, a, L, A, T, Electrode::positive), Error);
}

TEST_CASE("electrode state of charge") {
  CellParameters c = reference_nmc_cell();
  c.theta_n_0 = 0.03;
  c.theta_n_100 = 0.85;
  CHECK(soc(0.85, c, Electrode::negative) == doctest::Approx(1.0));
  CHECK(soc(0.44, c, Electrode::negative) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(soc(c.theta_p_0, c, Electrode::positive) == 0.0);
  CHECK(soc(1.0, c, Electrode::negative) > 1.0);  // not clamped
}

TEST_CASE("reference cells validate and balance") {
  const CellParameters nmc = reference_nmc_cell();
  CHECK_NOTHROW(nmc.validate());
  CHECK(nmc.capacity_p_ah() * (nmc.theta_p_0 - nmc.theta_p_100) ==
        doctest::Approx(nmc.window_capacity_ah()).epsilon(1e-12));
  const CellParameters lfp = reference_lfp_cell();
  CHECK_NOTHROW(lfp.validate());
  CHECK(lfp.capacity_p_ah() * (lfp.theta_p_0 - lfp.theta_p_100) ==
        doctest::Approx(lfp.window_capacity_ah()).epsilon(1e-12));
}

TEST_CASE("cell parameter invariants are enforced") {
  CellParameters c = reference_nmc_cell();
  c.eps_p = 1.2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = reference_nmc_cell();
  c.theta_n_0 = 0.9;
  CHECK_THROWS_AS(c.validate(), Error);
  c = reference_nmc_cell();
  c.L_s = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  SpatialGrid g;
  g.n_r = 2;
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("arrhenius law for solid diffusivity") {
  const CellParameters c = reference_nmc_cell();
  CHECK(c.D_s_p(kReferenceTemperature) == c.D_s_p_ref);
  CHECK(c.D_s_p(318.15) > c.D_s_p_ref);
  CHECK(c.D_s_p(318.15) == doctest::Approx(c.D_s_p_ref * std::exp(-25000.0 / 8.314 * (1 / 318.15 - 1 / 298.15))));
}

TEST_CASE("contact resistance map") {
  CellParameters c = reference_nmc_cell();
  CHECK(c.contact_resistance(0.5, 3.0) == c.R_l);
  ResistanceMap map;
  map.soc = Vector::LinSpaced(2, 0.0, 1.0);
  map.current = Vector::LinSpaced(2, -10.0, 10.0);
  map.ohms.resize(2, 2);
  map.ohms << 1.0, 2.0, 3.0, 4.0;
  c.R_l_map = map;
  CHECK(c.contact_resistance(0.5, 0.0) == doctest::Approx(2.5));
  CHECK(c.contact_resistance(0.0, -10.0) == doctest::Approx(1.0));
  CHECK(c.contact_resistance(2.0, 20.0) == doctest::Approx(4.0));  // held at the edges
}

TEST_CASE("ocp tables") {
  const OcpSet lfp = reference_lfp_ocp();
  REQUIRE(lfp.has_branches());
  for (double th : {0.1, 0.5, 0.9}) {
    const double avg = lfp.positive_potential(th);
    CHECK(avg == doctest::Approx(0.5 * ((*lfp.positive_charge)(th) + (*lfp.positive_discharge)(th))));
    CHECK(avg <= (*lfp.positive_charge)(th));
    CHECK(avg >= (*lfp.positive_discharge)(th));
  }
  bool ext = false;
  lfp.negative(0.0001, &ext);
  CHECK(ext);
  CHECK_THROWS_AS(OcpTable(Vector::LinSpaced(2, 1.0, 0.0), Vector::Zero(2)), Error);
}
