#pragma once

#include "ionbench/gp.hpp"
#include "ionbench/timeseries.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ionbench {

// ---------------------------------------------------------------------------
// Charge segmentation and features

struct SegmentOptions {
  double cc_window = 600;            // s of CC voltage, ending at the CC-CV switch
  double cv_window = 300;            // s of CV current, starting at the switch
  double min_current = 0.01;         // A; smaller magnitudes count as rest
  double current_tolerance = 0.005;  // relative band around the CC current
  double voltage_tolerance = 5e-3;   // V band around the CV voltage
};

/// Cropped CC voltage and CV current windows of one charge. Times are elapsed
/// seconds from each window's start. Charging current is negative.
struct ChargeSegment {
  Vector cc_time, cc_voltage;
  Vector cv_time, cv_current;
  bool cv_present = false;
  double switch_time = 0;            // record time of the first CV sample
  Eigen::Index switch_index = 0;
  std::string cell_id;
  int cycle_index = 0;
  double temperature = kReferenceTemperature;
};

/// Finds the first charge event of a record (columns I and V; cycle_index and
/// T are read when present). A charge with no CV tail yields an empty, flagged
/// CV window. Throws Errc::no_charge_event or Errc::window_too_short.
ChargeSegment segment_charge(const TimeSeries& record, const SegmentOptions& options = {},
                             const std::string& cell_id = {});

/// Six statistics of one window: mean, least-squares slope, mean second
/// divided difference, interquartile range, last minus first, trapezoid integral.
Vector window_features(const Vector& t, const Vector& y);

inline constexpr int kFeatureSchemaVersion = 1;
const std::vector<std::string>& soh_feature_names();

/// 12 features, CC window then CV window. A missing CV window gives NaN for
/// its six entries.
Vector extract_features(const ChargeSegment& segment);

/// Greedy minimum-redundancy maximum-relevance ranking with |Pearson r| for
/// both terms (relevance minus mean redundancy). Returns k column indices in
/// selection order. Throws Errc::degenerate_feature on a constant column.
std::vector<int> mrmr_rank(const Matrix& features, const Vector& target, int k);

// ---------------------------------------------------------------------------
// Bagged GP

struct BagOptions {
  int bags = 10;
  std::uint64_t seed = 1;
  bool bootstrap = true;  // false trains every member on the full set
  bool collapse_duplicates = true;
  GPOptions gp;
};

struct BaggedEnsemble {
  std::vector<GaussianProcess> members;
  std::vector<std::uint64_t> seeds;   // resampling seed per member
  Vector x_mean, x_scale;             // z-score statistics of the inputs
  double y_mean = 0, y_scale = 1;

  Matrix normalize(const Matrix& X) const;
};

/// One GP per bootstrap resample of the z-scored data. With a single bag the
/// member is trained on the data as given, so B = 1 is the plain GP.
BaggedEnsemble bag_fit(const Matrix& X, const Vector& y, const BagOptions& options = {});

/// Mean of member means; variance by the law of total variance (spread of
/// member means plus average member variance), in target units.
GPPrediction bag_predict(const BaggedEnsemble& ensemble, const Matrix& Xs);

// ---------------------------------------------------------------------------
// SOH pipeline

inline double soh(double capacity_ah, double nominal_ah) {
  if (!(nominal_ah > 0)) throw Error(Errc::domain, "nominal capacity must be positive");
  return 100.0 * capacity_ah / nominal_ah;
}

struct ErrorMetrics {
  double rmse = 0;
  double rmspe = 0;  // percent
  double mape = 0;   // maximum absolute percentage error, percent
  double mean_ape = 0;
};
ErrorMetrics error_metrics(const Vector& y, const Vector& yhat);

struct CycleRecord {
  int cycle_index = 0;
  std::string cell_id;
  TimeSeries record;
  double q_measured = std::numeric_limits<double>::quiet_NaN();
};

/// Splits a cycling CSV record (t, I, V, T, cycle_index, Q_measured) by cycle
/// index. Q_measured is the last finite value within each cycle, if any.
std::vector<CycleRecord> split_cycles(const TimeSeries& data, const std::string& cell_id = {});

/// One feature row per cycle (12 columns).
Matrix feature_matrix(const std::vector<CycleRecord>& cycles, const SegmentOptions& options);

struct SohOptions {
  SegmentOptions segment;
  int features = 6;            // mRMR picks, at most 12
  BagOptions bagging;
  double nominal_ah = 0.74;
};

struct SohModel {
  int schema_version = kFeatureSchemaVersion;
  SegmentOptions segment;
  std::vector<int> selected;   // indices into soh_feature_names()
  double nominal_ah = 0;
  BaggedEnsemble ensemble;
  std::string training_digest; // SHA-256 of the training matrix and targets
};

SohModel soh_train(const std::vector<CycleRecord>& cycles, const SohOptions& options);

struct SohEstimate {
  Vector mean;       // SOH, percent
  Vector variance;   // percent^2
};
SohEstimate soh_predict(const SohModel& model, const std::vector<CycleRecord>& cycles);

/// Writes `path` (JSON: settings, hyperparameters, normalisation, digest) and
/// a sibling `.bin` blob holding the member training matrices.
void save_soh_model(const SohModel& model, const std::filesystem::path& path);
SohModel load_soh_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic cycling data

struct SyntheticCyclingOptions {
  int cycles = 80;
  double nominal_ah = 0.74;
  double fade_per_cycle = 2.5e-3;     // linear capacity fade, fraction of nominal
  double fade_curvature = 1.5e-5;     // quadratic term
  double resistance = 0.08;           // Ohm, fresh
  double resistance_growth = 4e-3;    // fraction per cycle
  double c_rate = 1.0;
  double v_max = 4.1;
  double cutoff_c_rate = 0.02;
  double dt = 5.0;
  double rest = 60.0;
  double start_soc = 0.05;
  double voltage_noise = 1e-3;        // V, standard deviation
  double capacity_noise = 2e-3;       // Ah, on Q_measured
  double temperature = kReferenceTemperature;
  std::uint64_t seed = 1;
};

/// CC-CV charges of a fading cell: columns I, V, T, cycle_index, Q_measured.
TimeSeries synthetic_cycling(const SyntheticCyclingOptions& options);

}  // namespace ionbench
