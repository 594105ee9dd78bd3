#include "ionbench/soh.hpp"

#include "ionbench/digest.hpp"

#include "json.hpp"
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <cstring>
#include <random>

namespace ionbench {

namespace {

double quantile(Vector v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const auto hi = std::min<Eigen::Index>(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double abs_correlation(const Vector& a, const Vector& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double den = std::sqrt((da * da).sum() * (db * db).sum());
  return den > 0 ? std::abs((da * db).sum()) / den : 0.0;
}

double population_std(const Vector& v) {
  return std::sqrt((v.array() - v.mean()).square().mean());
}

}  // namespace

// ---------------------------------------------------------------------------

ChargeSegment segment_charge(const TimeSeries& record, const SegmentOptions& opt, const std::string& cell_id) {
  const Vector& t = record.time();
  const Vector I = record.column("I");
  const Vector V = record.column("V");
  const Eigen::Index n = t.size();

  Eigen::Index start = 0;
  while (start < n && !(I[start] < -opt.min_current)) ++start;
  if (start == n) throw Error(Errc::no_charge_event, "record contains no charge event");

  const double I_cc = I[start];
  Eigen::Index cc_end = start;  // last CC sample
  while (cc_end + 1 < n && std::abs(I[cc_end + 1] - I_cc) <= opt.current_tolerance * std::abs(I_cc)) ++cc_end;

  ChargeSegment seg;
  seg.cell_id = cell_id;
  if (record.has("cycle_index")) seg.cycle_index = static_cast<int>(record.at("cycle_index", start));
  if (record.has("T")) seg.temperature = record.at("T", start);

  if (t[cc_end] - t[start] < opt.cc_window) {
    throw Error(Errc::window_too_short, "CC phase shorter than the " + std::to_string(opt.cc_window) + " s window");
  }
  Eigen::Index cc_first = cc_end;
  while (cc_first > start && t[cc_end] - t[cc_first - 1] <= opt.cc_window) --cc_first;
  const Eigen::Index m = cc_end - cc_first + 1;
  seg.cc_time = t.segment(cc_first, m).array() - t[cc_first];
  seg.cc_voltage = V.segment(cc_first, m);

  seg.switch_index = cc_end + 1;
  seg.switch_time = cc_end + 1 < n ? t[cc_end + 1] : t[cc_end];
  Eigen::Index cv_end = cc_end;  // last CV sample
  if (cc_end + 1 < n) {
    // Reference CV voltage: median over the charging samples that follow, so
    // one noisy sample cannot set the band.
    Eigen::Index tail = cc_end + 1;
    while (tail < n && I[tail] < -opt.min_current) ++tail;
    const double V_cv = tail > cc_end + 1 ? quantile(V.segment(cc_end + 1, tail - cc_end - 1), 0.5) : 0.0;
    while (cv_end + 1 < n && I[cv_end + 1] < -opt.min_current &&
           std::abs(V[cv_end + 1] - V_cv) <= opt.voltage_tolerance) {
      ++cv_end;
    }
  }
  if (cv_end == cc_end) return seg;

  const Eigen::Index cv_first = cc_end + 1;
  if (t[cv_end] - t[cv_first] < opt.cv_window) {
    throw Error(Errc::window_too_short, "CV phase shorter than the " + std::to_string(opt.cv_window) + " s window");
  }
  Eigen::Index last = cv_first;
  while (last + 1 <= cv_end && t[last + 1] - t[cv_first] <= opt.cv_window) ++last;
  seg.cv_time = t.segment(cv_first, last - cv_first + 1).array() - t[cv_first];
  seg.cv_current = I.segment(cv_first, last - cv_first + 1);
  seg.cv_present = true;
  return seg;
}

Vector window_features(const Vector& t, const Vector& y) {
  if (t.size() == 0 || t.size() != y.size()) throw Error(Errc::domain, "feature window is empty");
  const Eigen::Index n = y.size();
  Vector f = Vector::Zero(6);
  f[0] = y.mean();
  if (n >= 2) {
    const Eigen::ArrayXd dt = t.array() - t.mean();
    f[1] = (dt * (y.array() - f[0])).sum() / (dt * dt).sum();
  }
  if (n >= 3) {
    double acc = 0;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const double right = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
      const double left = (y[i] - y[i - 1]) / (t[i] - t[i - 1]);
      acc += 2.0 * (right - left) / (t[i + 1] - t[i - 1]);
    }
    f[2] = acc / static_cast<double>(n - 2);
  }
  f[3] = quantile(y, 0.75) - quantile(y, 0.25);
  f[4] = y[n - 1] - y[0];
  for (Eigen::Index i = 1; i < n; ++i) f[5] += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
  return f;
}

const std::vector<std::string>& soh_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const char* w : {"cc_voltage", "cv_current"}) {
      for (const char* s : {"mean", "slope", "curvature", "iqr", "delta", "integral"}) {
        out.push_back(std::string(w) + "_" + s);
      }
    }
    return out;
  }();
  return names;
}

Vector extract_features(const ChargeSegment& seg) {
  Vector f(12);
  f.head(6) = window_features(seg.cc_time, seg.cc_voltage);
  if (seg.cv_present) {
    f.tail(6) = window_features(seg.cv_time, seg.cv_current);
  } else {
    f.tail(6).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return f;
}

std::vector<int> mrmr_rank(const Matrix& F, const Vector& y, int k) {
  const int p = static_cast<int>(F.cols());
  if (p < 2) throw Error(Errc::domain, "mRMR needs at least two candidate features");
  if (F.rows() != y.size()) throw Error(Errc::domain, "mRMR: features and target differ in length");
  if (k < 1 || k > p) throw Error(Errc::domain, "mRMR: k must lie in [1, number of features]");
  if (!F.allFinite() || !y.allFinite()) throw Error(Errc::degenerate_feature, "mRMR: missing feature values");
  for (int j = 0; j < p; ++j) {
    if (population_std(F.col(j)) == 0) {
      throw Error(Errc::degenerate_feature, "mRMR: feature " + std::to_string(j) + " has zero variance");
    }
  }
  Vector relevance(p);
  for (int j = 0; j < p; ++j) relevance[j] = abs_correlation(F.col(j), y);

  std::vector<int> selected;
  std::vector<bool> used(static_cast<std::size_t>(p), false);
  Vector redundancy = Vector::Zero(p);  // running sum over the selected set
  while (static_cast<int>(selected.size()) < k) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < p; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double score =
          selected.empty() ? relevance[j] : relevance[j] - redundancy[j] / static_cast<double>(selected.size());
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    selected.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
    for (int j = 0; j < p; ++j) redundancy[j] += abs_correlation(F.col(j), F.col(best));
  }
  return selected;
}

// ---------------------------------------------------------------------------

Matrix BaggedEnsemble::normalize(const Matrix& X) const {
  return (X.rowwise() - x_mean.transpose()).array().rowwise() / x_scale.transpose().array();
}

BaggedEnsemble bag_fit(const Matrix& X, const Vector& y, const BagOptions& opt) {
  if (opt.bags < 1) throw Error(Errc::domain, "bagging needs at least one member");
  if (X.rows() != y.size() || X.rows() < 2) throw Error(Errc::domain, "bagging: need matching X and y, n >= 2");
  BaggedEnsemble ens;
  ens.x_mean = X.colwise().mean().transpose();
  ens.x_scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double s = population_std(X.col(j));
    ens.x_scale[j] = s > 0 ? s : 1.0;
  }
  ens.y_mean = y.mean();
  const double sy = population_std(y);
  ens.y_scale = sy > 0 ? sy : 1.0;
  const Matrix Z = ens.normalize(X);
  const Vector yz = (y.array() - ens.y_mean) / ens.y_scale;

  const Eigen::Index n = X.rows();
  const bool resample = opt.bootstrap && opt.bags > 1;
  for (int b = 0; b < opt.bags; ++b) {
    const std::uint64_t seed = split_seed(opt.seed, static_cast<std::uint64_t>(b));
    ens.seeds.push_back(seed);
    Matrix Zb = Z;
    Vector yb = yz;
    if (resample) {
      // Repeated draws are collapsed: a duplicated point with a duplicated
      // target lets the likelihood drive the noise variance to its floor and
      // the member interpolates wildly.
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      std::vector<bool> drawn(static_cast<std::size_t>(n), false);
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r = pick(rng);
        drawn[static_cast<std::size_t>(r)] = true;
        if (!opt.collapse_duplicates) rows.push_back(r);
      }
      for (Eigen::Index i = 0; opt.collapse_duplicates && i < n; ++i) {
        if (drawn[static_cast<std::size_t>(i)]) rows.push_back(i);
      }
      if (rows.size() < 2) rows = {0, n - 1};
      Zb = Z(rows, Eigen::all);
      yb = yz(rows);
    }
    try {
      ens.members.push_back(GaussianProcess::fit(Zb, yb, opt.gp));
    } catch (const Error& e) {
      throw Error(e.code(), "bag member " + std::to_string(b) + ": " + e.what());
    }
  }
  return ens;
}

GPPrediction bag_predict(const BaggedEnsemble& ens, const Matrix& Xs) {
  const Matrix Z = ens.normalize(Xs);
  const auto B = static_cast<double>(ens.members.size());
  Vector sum = Vector::Zero(Xs.rows()), sum_sq = Vector::Zero(Xs.rows()), var = Vector::Zero(Xs.rows());
  for (const auto& m : ens.members) {
    const GPPrediction p = m.predict(Z);
    sum += p.mean;
    sum_sq += p.mean.cwiseAbs2();
    var += p.variance;
  }
  const Vector mean = sum / B;
  const Vector spread = (sum_sq / B - mean.cwiseAbs2()).cwiseMax(0.0);
  GPPrediction out;
  out.mean = mean.array() * ens.y_scale + ens.y_mean;
  out.variance = (spread + var / B) * (ens.y_scale * ens.y_scale);
  return out;
}

// ---------------------------------------------------------------------------

ErrorMetrics error_metrics(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size() || y.size() == 0) throw Error(Errc::domain, "metrics need equal, non-empty vectors");
  if ((y.array() == 0).any()) throw Error(Errc::domain, "percentage metrics undefined for a zero target");
  const Eigen::ArrayXd e = yhat.array() - y.array();
  const Eigen::ArrayXd pe = 100.0 * e / y.array();
  ErrorMetrics m;
  m.rmse = std::sqrt(e.square().mean());
  m.rmspe = std::sqrt(pe.square().mean());
  m.mape = pe.abs().maxCoeff();
  m.mean_ape = pe.abs().mean();
  return m;
}

std::vector<CycleRecord> split_cycles(const TimeSeries& data, const std::string& cell_id) {
  if (!data.has("cycle_index")) throw Error(Errc::schema_mismatch, "cycling data needs a cycle_index column");
  const Vector idx = data.column("cycle_index");
  const bool has_q = data.has("Q_measured");
  const Vector q = has_q ? data.column("Q_measured") : Vector();
  std::vector<CycleRecord> out;
  Eigen::Index first = 0;
  for (Eigen::Index i = 1; i <= idx.size(); ++i) {
    if (i < idx.size() && idx[i] == idx[first]) continue;
    CycleRecord c;
    c.cycle_index = static_cast<int>(idx[first]);
    c.cell_id = cell_id;
    c.record = data.slice(first, i - first);
    if (has_q) {
      for (Eigen::Index k = i - 1; k >= first; --k) {
        if (std::isfinite(q[k])) {
          c.q_measured = q[k];
          break;
        }
      }
    }
    out.push_back(std::move(c));
    first = i;
  }
  return out;
}

Matrix feature_matrix(const std::vector<CycleRecord>& cycles, const SegmentOptions& options) {
  Matrix F(static_cast<Eigen::Index>(cycles.size()), 12);
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    try {
      F.row(static_cast<Eigen::Index>(i)) = extract_features(segment_charge(cycles[i].record, options, cycles[i].cell_id));
    } catch (const Error& e) {
      throw Error(e.code(), "cycle " + std::to_string(cycles[i].cycle_index) + ": " + e.what());
    }
  }
  return F;
}

namespace {

std::string matrix_bytes(const Matrix& M) {
  return {reinterpret_cast<const char*>(M.data()), static_cast<std::size_t>(M.size()) * sizeof(double)};
}

}  // namespace

SohModel soh_train(const std::vector<CycleRecord>& cycles, const SohOptions& opt) {
  if (cycles.size() < 3) throw Error(Errc::validation, "SOH training needs at least three cycles");
  const Matrix F = feature_matrix(cycles, opt.segment);
  Vector y(F.rows());
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    const auto& c = cycles[static_cast<std::size_t>(i)];
    if (!F.row(i).allFinite()) {
      throw Error(Errc::validation, "cycle " + std::to_string(c.cycle_index) + " has missing features (no CV window?)");
    }
    if (!std::isfinite(c.q_measured)) {
      throw Error(Errc::validation, "cycle " + std::to_string(c.cycle_index) + " has no measured capacity");
    }
    y[i] = soh(c.q_measured, opt.nominal_ah);
  }
  SohModel model;
  model.segment = opt.segment;
  model.nominal_ah = opt.nominal_ah;
  model.selected = mrmr_rank(F, y, std::min(opt.features, 12));
  Matrix X(F.rows(), static_cast<Eigen::Index>(model.selected.size()));
  for (std::size_t j = 0; j < model.selected.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = F.col(model.selected[j]);
  model.training_digest = sha256_hex(matrix_bytes(F) + matrix_bytes(y));
  spdlog::info("SOH: {} cycles, features [{}], {} bags", F.rows(),
               [&] {
                 std::string s;
                 for (int j : model.selected) s += (s.empty() ? "" : ", ") + soh_feature_names()[static_cast<std::size_t>(j)];
                 return s;
               }(),
               opt.bagging.bags);
  model.ensemble = bag_fit(X, y, opt.bagging);
  return model;
}

SohEstimate soh_predict(const SohModel& model, const std::vector<CycleRecord>& cycles) {
  const Matrix F = feature_matrix(cycles, model.segment);
  Matrix X(F.rows(), static_cast<Eigen::Index>(model.selected.size()));
  for (std::size_t j = 0; j < model.selected.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = F.col(model.selected[j]);
  if (!X.allFinite()) throw Error(Errc::validation, "a cycle lacks one of the selected features");
  const GPPrediction p = bag_predict(model.ensemble, X);
  return {p.mean, p.variance};
}

// ---------------------------------------------------------------------------

void save_soh_model(const SohModel& model, const std::filesystem::path& path) {
  using nlohmann::json;
  std::filesystem::path blob_path = path;
  blob_path.replace_extension(".bin");
  std::string blob;
  json members = json::array();
  for (std::size_t b = 0; b < model.ensemble.members.size(); ++b) {
    const auto& m = model.ensemble.members[b];
    const auto& h = m.hyperparameters();
    members.push_back({{"seed", model.ensemble.seeds[b]},
                       {"signal_variance", h.signal_variance},
                       {"length_scales", std::vector<double>(h.length_scales.begin(), h.length_scales.end())},
                       {"noise_variance", h.noise_variance},
                       {"rows", m.inputs().rows()},
                       {"cols", m.inputs().cols()},
                       {"offset", blob.size()}});
    blob += matrix_bytes(m.inputs()) + matrix_bytes(m.targets());
  }
  const auto& e = model.ensemble;
  json j = {{"format", "ionbench-soh-model"},
            {"schema_version", model.schema_version},
            {"feature_names", soh_feature_names()},
            {"selected", model.selected},
            {"nominal_ah", model.nominal_ah},
            {"segment",
             {{"cc_window", model.segment.cc_window},
              {"cv_window", model.segment.cv_window},
              {"min_current", model.segment.min_current},
              {"current_tolerance", model.segment.current_tolerance},
              {"voltage_tolerance", model.segment.voltage_tolerance}}},
            {"normalization",
             {{"x_mean", std::vector<double>(e.x_mean.begin(), e.x_mean.end())},
              {"x_scale", std::vector<double>(e.x_scale.begin(), e.x_scale.end())},
              {"y_mean", e.y_mean},
              {"y_scale", e.y_scale}}},
            {"members", members},
            {"training_digest", model.training_digest},
            {"blob", blob_path.filename().string()},
            {"blob_sha256", sha256_hex(blob)},
            {"blob_byte_order", "little-endian float64, column-major X then y per member"}};
  std::ofstream(blob_path, std::ios::binary).write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
}

SohModel load_soh_model(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::schema_mismatch, path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "ionbench-soh-model" || j.value("schema_version", 0) != kFeatureSchemaVersion) {
    throw Error(Errc::schema_mismatch, path.string() + ": not a version-1 SOH model");
  }
  const std::filesystem::path blob_path = path.parent_path() / j.at("blob").get<std::string>();
  std::ifstream bin(blob_path, std::ios::binary);
  const std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (sha256_hex(blob) != j.at("blob_sha256").get<std::string>()) {
    throw Error(Errc::schema_mismatch, blob_path.string() + ": blob digest mismatch");
  }
  SohModel m;
  m.nominal_ah = j.at("nominal_ah");
  m.selected = j.at("selected").get<std::vector<int>>();
  m.training_digest = j.at("training_digest");
  const json& s = j.at("segment");
  m.segment = {s.at("cc_window"), s.at("cv_window"), s.at("min_current"), s.at("current_tolerance"),
               s.at("voltage_tolerance")};
  const json& nrm = j.at("normalization");
  auto vec = [](const json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  m.ensemble.x_mean = vec(nrm.at("x_mean"));
  m.ensemble.x_scale = vec(nrm.at("x_scale"));
  m.ensemble.y_mean = nrm.at("y_mean");
  m.ensemble.y_scale = nrm.at("y_scale");
  for (const json& mem : j.at("members")) {
    const auto rows = mem.at("rows").get<Eigen::Index>(), cols = mem.at("cols").get<Eigen::Index>();
    const auto offset = mem.at("offset").get<std::size_t>();
    const std::size_t bytes = static_cast<std::size_t>(rows * (cols + 1)) * sizeof(double);
    if (offset + bytes > blob.size()) throw Error(Errc::schema_mismatch, "SOH blob is truncated");
    Matrix X(rows, cols);
    Vector y(rows);
    std::memcpy(X.data(), blob.data() + offset, static_cast<std::size_t>(X.size()) * sizeof(double));
    std::memcpy(y.data(), blob.data() + offset + static_cast<std::size_t>(X.size()) * sizeof(double),
                static_cast<std::size_t>(rows) * sizeof(double));
    GPHyperparameters h{mem.at("signal_variance"), vec(mem.at("length_scales")), mem.at("noise_variance")};
    m.ensemble.members.push_back(GaussianProcess::condition(X, y, h));
    m.ensemble.seeds.push_back(mem.at("seed"));
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

double synthetic_ocv(double soc) {
  return 3.35 + 0.6 * soc + 0.2 * soc * soc * soc - 0.25 * std::exp(-25.0 * soc);
}

}  // namespace

TimeSeries synthetic_cycling(const SyntheticCyclingOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> t, I, V, T, cyc, Q;
  double clock = 0;
  auto push = [&](double current, double volts, int k, double q) {
    t.push_back(clock);
    I.push_back(current);
    V.push_back(volts + o.voltage_noise * gauss(rng));
    T.push_back(o.temperature);
    cyc.push_back(k);
    Q.push_back(q);
    clock += o.dt;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < o.cycles; ++k) {
    const double fade = o.fade_per_cycle * k + o.fade_curvature * k * k;
    const double cap = o.nominal_ah * std::max(0.05, 1.0 - fade);
    const double R = o.resistance * (1.0 + o.resistance_growth * k);
    const double I_cc = -o.c_rate * o.nominal_ah;
    double soc = o.start_soc;
    for (double s = 0; s < o.rest; s += o.dt) push(0.0, synthetic_ocv(soc), k, nan);
    // CC until the terminal voltage reaches v_max.
    double v = synthetic_ocv(soc) - R * I_cc;
    while (v < o.v_max && soc < 1.2) {
      push(I_cc, v, k, nan);
      soc -= I_cc * o.dt / (3600.0 * cap);
      v = synthetic_ocv(soc) - R * I_cc;
    }
    // CV: the current is whatever holds the terminal voltage at v_max.
    while (true) {
      const double current = -(o.v_max - synthetic_ocv(soc)) / R;
      if (-current < o.cutoff_c_rate * o.nominal_ah) break;
      push(current, o.v_max, k, nan);
      soc -= current * o.dt / (3600.0 * cap);
    }
    const double q_meas = cap + o.capacity_noise * gauss(rng);
    for (double s = 0; s < o.rest; s += o.dt) push(0.0, synthetic_ocv(soc), k, s + o.dt >= o.rest ? q_meas : nan);
  }
  auto col = [](const std::vector<double>& v) { return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))); };
  TimeSeries out(col(t));
  out.set_column("I", col(I));
  out.set_column("V", col(V));
  out.set_column("T", col(T));
  out.set_column("cycle_index", col(cyc));
  out.set_column("Q_measured", col(Q));
  return out;
}

}  // namespace ionbench
