#include "doctest.h"

#include "ionbench/soh.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace ionbench;

namespace {

// Rest, CC at -1 A for `cc` seconds, CV at 4.1 V with a 200 s exponential
// current decay for `cv` seconds, sampled every 2 s.
TimeSeries cc_cv_trace(double cc, double cv) {
  std::vector<double> t, I, V;
  double clock = 0;
  for (; clock < 100; clock += 2) {
    t.push_back(clock);
    I.push_back(0.0);
    V.push_back(3.5);
  }
  const double start = clock;
  for (; clock < start + cc; clock += 2) {
    t.push_back(clock);
    I.push_back(-1.0);
    V.push_back(3.6 + 0.5 * (clock - start) / cc);
  }
  const double sw = clock;
  for (; clock < sw + cv; clock += 2) {
    t.push_back(clock);
    I.push_back(-std::exp(-(clock - sw + 2) / 200.0));
    V.push_back(4.1);
  }
  for (int k = 0; k < 20; ++k, clock += 2) {
    t.push_back(clock);
    I.push_back(0.0);
    V.push_back(4.0);
  }
  auto col = [](const std::vector<double>& v) { return Vector::Map(v.data(), static_cast<Eigen::Index>(v.size())); };
  TimeSeries s{Vector(col(t))};
  s.set_column("I", col(I));
  s.set_column("V", col(V));
  return s;
}

}  // namespace

TEST_CASE("segmentation finds the CC-CV switch") {
  const TimeSeries trace = cc_cv_trace(1200, 700);
  const ChargeSegment seg = segment_charge(trace);
  CHECK(seg.cv_present);
  CHECK(std::abs(seg.switch_time - 1300.0) <= 2.0);
  CHECK(seg.cc_time[seg.cc_time.size() - 1] == doctest::Approx(600.0));
  CHECK(seg.cv_time[seg.cv_time.size() - 1] == doctest::Approx(300.0));
  CHECK(seg.cc_time[0] == 0.0);
  CHECK(seg.cv_time[0] == 0.0);
}

TEST_CASE("pure CC charge leaves the CV window empty") {
  TimeSeries trace = cc_cv_trace(1200, 0);
  const ChargeSegment seg = segment_charge(trace);
  CHECK_FALSE(seg.cv_present);
  CHECK(seg.cv_time.size() == 0);
  const Vector f = extract_features(seg);
  CHECK(f.head(6).allFinite());
  CHECK(f.tail(6).array().isNaN().all());
}

TEST_CASE("segmentation errors") {
  TimeSeries rest(Vector::LinSpaced(50, 0, 98));
  rest.set_column("I", Vector::Zero(50));
  rest.set_column("V", Vector::Constant(50, 3.7));
  try {
    segment_charge(rest);
    FAIL("expected no_charge_event");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_charge_event);
  }
  try {
    segment_charge(cc_cv_trace(300, 700));
    FAIL("expected window_too_short");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::window_too_short);
  }
  CHECK_THROWS_AS(segment_charge(cc_cv_trace(1200, 100)), Error);
}

TEST_CASE("window statistics") {
  const Vector t = Vector::LinSpaced(61, 0, 300);
  const Vector flat = Vector::Constant(61, 3.6);
  const Vector f = window_features(t, flat);
  CHECK(f[0] == doctest::Approx(3.6));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[4] == 0.0);
  CHECK(f[3] == 0.0);
  CHECK(f[5] == doctest::Approx(3.6 * 300));

  const Vector ramp = 3.2 + 0.0015 * t.array();
  const Vector g = window_features(t, ramp);
  CHECK(std::abs(g[1] - 0.0015) < 1e-9);
  CHECK(std::abs(g[2]) < 1e-12);
  CHECK(g[4] == doctest::Approx(0.45));
  CHECK(g[3] == doctest::Approx(0.225));  // middle half of a uniform ramp

  // CV-style decay 2 exp(-t/120): area 240 (1 - exp(-2.5)).
  const Vector decay = 2.0 * (-t.array() / 120.0).exp();
  const double area = 240.0 * (1 - std::exp(-2.5));
  CHECK(window_features(t, decay)[5] == doctest::Approx(area).epsilon(1e-3));
  CHECK(window_features(t, decay)[2] > 0.0);
}

TEST_CASE("feature names follow the schema") {
  CHECK(soh_feature_names().size() == 12);
  CHECK(soh_feature_names()[0] == "cc_voltage_mean");
  CHECK(soh_feature_names()[11] == "cv_current_integral");
}

TEST_CASE("mRMR ranking") {
  Vector y(6);
  y << 1, 2, 3, 4, 5, 6;
  Matrix F(6, 3);
  F.col(0) << 1, 2, 3, 4, 6, 5;
  F.col(1) = F.col(0);
  F.col(2) << 3, 1, 2, 5, 4, 6;
  // Relevance 33/35, 33/35, 27/35; redundancy of column 2 with column 0 is
  // 23/35, so its second-round score 4/35 beats the duplicate's -2/35.
  CHECK(mrmr_rank(F, y, 3) == std::vector<int>{0, 2, 1});

  Matrix G(6, 3);
  G.col(0) << 5, 1, 4, 2, 6, 3;
  G.col(1) = y;
  G.col(2) << 2, 1, 3, 5, 4, 6;
  CHECK(mrmr_rank(G, y, 1) == std::vector<int>{1});
  std::vector<int> all = mrmr_rank(G, y, 3);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<int>{0, 1, 2});

  G.col(2).setConstant(1.0);
  try {
    mrmr_rank(G, y, 2);
    FAIL("expected degenerate_feature");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_feature);
  }
}

TEST_CASE("mRMR first pick maximises relevance on random data") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix F(30, 5);
    for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = g(rng);
    Vector y(30);
    for (Eigen::Index i = 0; i < 30; ++i) y[i] = 0.5 * F(i, trial % 5) + g(rng);
    const int first = mrmr_rank(F, y, 2)[0];
    for (int j = 0; j < 5; ++j) {
      auto corr = [&](int c) {
        const Eigen::ArrayXd a = F.col(c).array() - F.col(c).mean(), b = y.array() - y.mean();
        return std::abs((a * b).sum()) / std::sqrt((a * a).sum() * (b * b).sum());
      };
      CHECK(corr(first) >= corr(j));
    }
  }
}

TEST_CASE("bagging: single bag is the plain GP, unresampled bags collapse to it") {
  const Matrix X = Vector::LinSpaced(25, 0, 10);
  const Vector y = (X.col(0).array() * 0.4).sin() + 0.05 * (X.col(0).array() * 7.0).cos();
  const Matrix Xs = Vector::LinSpaced(40, -1, 11);

  BagOptions one;
  one.bags = 1;
  const BaggedEnsemble e1 = bag_fit(X, y, one);
  const GaussianProcess plain = GaussianProcess::fit(e1.normalize(X), (y.array() - e1.y_mean) / e1.y_scale, one.gp);
  const GPPrediction p1 = bag_predict(e1, Xs);
  const GPPrediction pp = plain.predict(e1.normalize(Xs));
  CHECK(((pp.mean.array() * e1.y_scale + e1.y_mean).matrix() - p1.mean).norm() == 0.0);

  BagOptions same = one;
  same.bags = 4;
  same.bootstrap = false;
  const GPPrediction p4 = bag_predict(bag_fit(X, y, same), Xs);
  CHECK((p4.mean - p1.mean).cwiseAbs().maxCoeff() < 1e-12);

  BagOptions boot;
  boot.bags = 6;
  const BaggedEnsemble eb = bag_fit(X, y, boot);
  const GPPrediction pb = bag_predict(eb, Xs);
  Vector avg_var = Vector::Zero(Xs.rows());
  for (const auto& m : eb.members) avg_var += m.predict(eb.normalize(Xs)).variance;
  avg_var *= eb.y_scale * eb.y_scale / 6.0;
  CHECK(((pb.variance - avg_var).array() >= -1e-12).all());

  const GPPrediction again = bag_predict(bag_fit(X, y, boot), Xs);
  CHECK((again.mean - pb.mean).norm() == 0.0);
  CHECK((again.variance - pb.variance).norm() == 0.0);
}

TEST_CASE("SOH arithmetic and metrics") {
  CHECK(soh(0.74, 0.74) == doctest::Approx(100.0));
  CHECK(soh(0.37, 0.74) == doctest::Approx(50.0));
  CHECK_THROWS_AS(soh(0.5, 0.0), Error);
  Vector y(4), yhat(4);
  y << 100, 95, 90, 80;
  const ErrorMetrics zero = error_metrics(y, y);
  CHECK(zero.rmse == 0.0);
  CHECK(zero.rmspe == 0.0);
  CHECK(zero.mape == 0.0);
  yhat << 101, 95, 90, 78;
  const ErrorMetrics m = error_metrics(y, yhat);
  CHECK(m.rmse == doctest::Approx(std::sqrt(5.0 / 4.0)));
  CHECK(m.mape == doctest::Approx(2.5));
  CHECK(m.mean_ape == doctest::Approx((1.0 + 2.5) / 4.0));
  CHECK(m.rmspe == doctest::Approx(std::sqrt((1.0 + 6.25) / 4.0)));
  y[0] = 0;
  CHECK_THROWS_AS(error_metrics(y, yhat), Error);
}

TEST_CASE("SOH pipeline on synthetic cycling data") {
  SyntheticCyclingOptions gen;
  gen.cycles = 48;
  gen.fade_per_cycle = 4e-3;
  const std::vector<CycleRecord> cycles = split_cycles(synthetic_cycling(gen));
  REQUIRE(cycles.size() == 48);
  CHECK(cycles[10].q_measured == doctest::Approx(0.74 * (1 - 0.04 - 1.5e-5 * 100)).epsilon(0.02));

  std::vector<CycleRecord> train, test;
  for (std::size_t i = 0; i < cycles.size(); ++i) (i % 4 == 2 ? test : train).push_back(cycles[i]);
  SohOptions opt;
  opt.features = 4;
  opt.bagging.bags = 4;
  const SohModel model = soh_train(train, opt);
  CHECK(model.selected.size() == 4);
  CHECK(model.training_digest.size() == 64);

  const SohEstimate est = soh_predict(model, test);
  Vector truth(static_cast<Eigen::Index>(test.size()));
  for (std::size_t i = 0; i < test.size(); ++i) truth[static_cast<Eigen::Index>(i)] = soh(test[i].q_measured, 0.74);
  const ErrorMetrics m = error_metrics(truth, est.mean);
  CHECK(m.rmspe < 2.0);
  CHECK(est.variance.minCoeff() > 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "ionbench_soh_test";
  std::filesystem::create_directories(dir);
  save_soh_model(model, dir / "model.json");
  const SohModel loaded = load_soh_model(dir / "model.json");
  const SohEstimate again = soh_predict(loaded, test);
  CHECK((again.mean - est.mean).norm() == 0.0);
  CHECK((again.variance - est.variance).norm() == 0.0);
  CHECK(loaded.training_digest == model.training_digest);
  std::filesystem::remove_all(dir);
}
