#include "ionbench/workbench.hpp"

#include "ionbench/digest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace ionbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.4.0";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double rmse(const Vector& a, const Vector& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace

// ---------------------------------------------------------------------------

OutputDirectory::OutputDirectory(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) throw Error(Errc::io, "cannot create output directory " + root_.string());
  root_ = fs::canonical(root_);
}

void OutputDirectory::produce(const std::function<void(const fs::path&)>& writer) {
  const fs::path stage = root_ / (".staging-" + std::to_string(stage_counter_++));
  fs::remove_all(stage);
  fs::create_directory(stage);
  try {
    writer(stage);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(stage)) {
      if (!entry.is_regular_file()) throw Error(Errc::io, "unexpected non-file output " + entry.path().string());
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      fs::rename(f, root_ / f.filename());
      produced_.push_back(f.filename().string());
    }
  } catch (...) {
    fs::remove_all(stage);
    throw;
  }
  fs::remove_all(stage);
}

void OutputDirectory::write_text(const std::string& name, const std::string& text) {
  if (fs::path(name).filename() != fs::path(name) || name.empty() || name == "." || name == "..") {
    throw Error(Errc::validation, "output name must be a plain file name: " + name);
  }
  produce([&](const fs::path& stage) {
    std::ofstream out(stage / name, std::ios::binary);
    out << text;
    if (!out) throw Error(Errc::io, "cannot write " + name);
  });
}

json RunManifest::to_json() const {
  return {{"run_id", run_id},           {"command", command},   {"config_digest", config_digest},
          {"seed", seed},               {"inputs", inputs},     {"outputs", outputs},
          {"versions", versions},       {"started_utc", started_utc}, {"wall_seconds", wall_seconds}};
}

// ---------------------------------------------------------------------------
// Plot exports

std::string tidy_csv(const Figure& figure) {
  std::ostringstream out;
  out << "series,x,y\n";
  for (const auto& s : figure.series) {
    if (s.x.size() != s.y.size()) throw Error(Errc::domain, "plot series '" + s.name + "' has unequal x and y");
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out << s.name << ',' << num(s.x[i]) << ',' << num(s.y[i]) << '\n';
  }
  return out.str();
}

std::string svg_chart(const Figure& figure) {
  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : figure.series) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (figure.bars) y0 = std::min(y0, 0.0);
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= figure.bars ? 0.0 : pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(figure.title)
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">" << short_num(xv)
        << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << short_num(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << xml_escape(figure.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << (top + H - bottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(figure.y_label) << "</text>\n";

  for (std::size_t k = 0; k < figure.series.size(); ++k) {
    const auto& s = figure.series[k];
    const char* colour = colours[k % 6];
    if (figure.bars) {
      const double width = s.x.size() > 1 ? (px(s.x[1]) - px(s.x[0])) / static_cast<double>(figure.series.size())
                                          : (W - left - right) / 4;
      for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        const double xl = px(s.x[i]) - width * (static_cast<double>(figure.series.size()) / 2 - static_cast<double>(k));
        svg << "<rect x=\"" << xl << "\" y=\"" << py(s.y[i]) << "\" width=\"" << width << "\" height=\""
            << py(y0) - py(s.y[i]) << "\" fill=\"" << colour << "\" fill-opacity=\"0.7\"/>\n";
      }
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
      for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) svg << short_num(px(s.x[i])) << ',' << short_num(py(s.y[i])) << ' ';
      }
      svg << "\"/>\n";
    }
    const double ly = top + 4 + 16 * static_cast<double>(k);
    svg << "<rect x=\"" << W - right - 150 << "\" y=\"" << ly << "\" width=\"12\" height=\"10\" fill=\"" << colour
        << "\"/>\n";
    svg << "<text x=\"" << W - right - 132 << "\" y=\"" << ly + 9 << "\">" << xml_escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void export_figure(OutputDirectory& out, const Figure& figure) {
  const std::string csv = tidy_csv(figure);
  const std::string svg = svg_chart(figure);
  out.produce([&](const fs::path& stage) {
    std::ofstream(stage / (figure.name + ".csv"), std::ios::binary) << csv;
    std::ofstream(stage / (figure.name + ".svg"), std::ios::binary) << svg;
  });
}

Vector Histogram::centers() const {
  const Eigen::Index n = counts.size();
  return 0.5 * (edges.head(n) + edges.tail(n));
}

Histogram histogram(const Vector& values, int bins) {
  if (bins < 1) throw Error(Errc::domain, "histogram needs at least one bin");
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi == lo) lo -= 0.5, hi += 0.5;
  Histogram h;
  h.edges = Vector::LinSpaced(bins + 1, lo, hi);
  h.counts = Vector::Zero(bins);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const int k = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
    h.counts[k] += 1;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Workflows

Command parse_command(const std::string& name) {
  static const std::map<std::string, Command> names = {
      {"simulate", Command::simulate},         {"identify", Command::identify},
      {"soh train", Command::soh_train},       {"soh predict", Command::soh_predict},
      {"soh eval", Command::soh_eval},         {"hybrid train", Command::hybrid_train},
      {"hybrid simulate", Command::hybrid_simulate},
  };
  const auto it = names.find(name);
  if (it == names.end()) throw Error(Errc::validation, "unknown command '" + name + "'");
  return it->second;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::identify: return "identify";
    case Command::soh_train: return "soh train";
    case Command::soh_predict: return "soh predict";
    case Command::soh_eval: return "soh eval";
    case Command::hybrid_train: return "hybrid train";
    case Command::hybrid_simulate: return "hybrid simulate";
  }
  return "unknown";
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::validation:
    case Errc::schema_mismatch:
    case Errc::empty_file:
    case Errc::non_monotone_time:
    case Errc::misalignment:
    case Errc::infeasible_window:
      return 2;
    default:
      return 3;
  }
}

json error_record(const std::string& command, Errc code, const std::string& message) {
  return {{"status", "error"}, {"command", command}, {"code", to_string(code)},
          {"exit_code", exit_code_for(code)}, {"message", message}};
}

TimeSeries load_profile(const WorkbenchConfig& cfg) {
  if (cfg.simulate.profile) {
    IngestSchema schema;
    schema.required = {"I"};
    schema.optional = {"T"};
    const IngestReport r = ingest_timeseries(*cfg.simulate.profile, schema);
    if (r.series.size() < 2) throw Error(Errc::validation, "profile needs at least two samples");
    return r.series;
  }
  if (cfg.simulate.drive_cycle) return synthetic_drive_cycle(*cfg.simulate.drive_cycle);
  throw Error(Errc::validation, "config: simulate: needs a profile file or a drive_cycle section");
}

namespace {

TimeSeries load_record(const fs::path& path, std::vector<std::string> optional = {}) {
  IngestSchema schema;
  schema.required = {"I", "V"};
  schema.optional = std::move(optional);
  return ingest_timeseries(path, schema).series;
}

void write_series(OutputDirectory& out, const std::string& name, const TimeSeries& series,
                  const std::vector<std::string>& columns = {}) {
  out.produce([&](const fs::path& stage) { write_csv(stage / name, series, columns); });
}

void write_json(OutputDirectory& out, const std::string& name, const json& j) { out.write_text(name, j.dump(2) + "\n"); }

json metrics_json(const ErrorMetrics& m) {
  return {{"rmse", m.rmse}, {"rmspe", m.rmspe}, {"mape", m.mape}, {"mean_ape", m.mean_ape}};
}

void run_simulate(const WorkbenchConfig& cfg, OutputDirectory& out) {
  const TimeSeries profile = load_profile(cfg);
  const SimulationResult r = simulate(cfg.model, profile, cfg.simulate.options);
  write_series(out, "simulation.csv", r.series);
  export_figure(out, {"voltage", "Terminal voltage", "time [s]", "voltage [V]",
                      {{"V", r.series.time(), r.series.column("V")}}});
  json summary = {{"samples", r.series.size()},
                  {"throughput_ah", charge_throughput_ah(r)},
                  {"extrapolated", r.extrapolated}};
  if (r.cutoff_time) summary["cutoff_time"] = *r.cutoff_time;
  write_json(out, "summary.json", summary);
}

void run_identify(const WorkbenchConfig& cfg, OutputDirectory& out) {
  const IdentifySection& id = cfg.identify;
  if (id.spec.size() == 0) throw Error(Errc::validation, "config: identify: needs a preset or a parameter list");

  IdentificationDataset data;
  if (id.dataset) {
    data.record = load_record(*id.dataset, {"SOC_CC"});
    data.initial_soc = id.initial_soc;
    data.temperature = id.options.sim.temperature;
  } else {
    SimulationOptions sim = id.options.sim;
    data = synthetic_dataset(cfg.model, load_profile(cfg), sim);
  }
  data.capacity_ah = id.capacity_ah > 0 ? id.capacity_ah : cfg.model.cell.window_capacity_ah();
  data.validate();

  const IdentificationResult r = identify(cfg.model, id.spec, data, id.options);
  json params = json::object();
  json bounds = json::object();
  for (std::size_t k = 0; k < r.spec.size(); ++k) {
    const auto& range = r.spec.ranges[k];
    params[range.name] = r.best[static_cast<Eigen::Index>(k)];
    bounds[range.name] = {range.lower, range.upper, range.scale == Scale::log ? "log" : "linear"};
  }
  write_json(out, "identification.json",
             {{"parameters", params}, {"bounds", bounds}, {"cost", r.best_cost}, {"evaluations", r.evaluations}});

  Vector gen(static_cast<Eigen::Index>(r.history.size())), hist(gen.size());
  for (Eigen::Index g = 0; g < gen.size(); ++g) {
    gen[g] = static_cast<double>(g);
    hist[g] = r.history[static_cast<std::size_t>(g)];
  }
  export_figure(out, {"convergence", "Best cost per generation", "generation", "cost", {{"best_cost", gen, hist}}});

  const Candidate fitted = apply_parameters(cfg.model, r.spec, r.best, data);
  SimulationOptions sim = id.options.sim;
  sim.initial_soc = data.initial_soc;
  sim.temperature = data.temperature;
  const SimulationResult s = simulate(fitted.model, data.record, sim, fitted.initial);
  const Eigen::Index n = std::min(s.series.size(), data.record.size());
  TimeSeries fit(data.record.time().head(n));
  fit.set_column("V_measured", data.record.column("V").head(n));
  fit.set_column("V_fit", s.series.column("V").head(n));
  write_series(out, "fit.csv", fit);
}

std::vector<CycleRecord> load_cycles(const WorkbenchConfig& cfg) {
  const TimeSeries data = cfg.soh.cycles ? read_csv(*cfg.soh.cycles) : synthetic_cycling(cfg.soh.synthetic);
  for (const char* c : {"I", "V", "cycle_index"}) {
    if (!data.has(c)) throw Error(Errc::schema_mismatch, std::string("cycling data lacks column '") + c + "'");
  }
  return split_cycles(data, cfg.soh.cycles ? cfg.soh.cycles->stem().string() : "synthetic");
}

Vector measured_soh(const std::vector<CycleRecord>& cycles, double nominal) {
  Vector y(static_cast<Eigen::Index>(cycles.size()));
  for (std::size_t i = 0; i < cycles.size(); ++i) y[static_cast<Eigen::Index>(i)] = soh(cycles[i].q_measured, nominal);
  return y;
}

Vector cycle_axis(const std::vector<CycleRecord>& cycles) {
  Vector x(static_cast<Eigen::Index>(cycles.size()));
  for (std::size_t i = 0; i < cycles.size(); ++i) x[static_cast<Eigen::Index>(i)] = cycles[i].cycle_index;
  return x;
}

TimeSeries soh_table(const std::vector<CycleRecord>& cycles, const SohEstimate& est, double nominal) {
  TimeSeries t(cycle_axis(cycles));
  t.set_column("soh_measured", measured_soh(cycles, nominal));
  t.set_column("soh_predicted", est.mean);
  t.set_column("soh_variance", est.variance);
  return t;
}

void save_model(OutputDirectory& out, const SohModel& model) {
  out.produce([&](const fs::path& stage) { save_soh_model(model, stage / "soh_model.json"); });
}

void run_soh_train(const WorkbenchConfig& cfg, OutputDirectory& out) {
  const auto cycles = load_cycles(cfg);
  const SohModel model = soh_train(cycles, cfg.soh.options);
  save_model(out, model);
  const SohEstimate est = soh_predict(model, cycles);
  const TimeSeries table = soh_table(cycles, est, model.nominal_ah);
  out.produce([&](const fs::path& stage) { write_csv(stage / "training.csv", table, {}, "cycle_index"); });
  write_json(out, "metrics.json", {{"train", metrics_json(error_metrics(measured_soh(cycles, model.nominal_ah), est.mean))}});
}

void run_soh_predict(const WorkbenchConfig& cfg, OutputDirectory& out) {
  if (!cfg.soh.model || !fs::is_regular_file(*cfg.soh.model)) {
    throw Error(Errc::validation, "config: soh.model: a trained model file is required for prediction");
  }
  const SohModel model = load_soh_model(*cfg.soh.model);
  const auto cycles = load_cycles(cfg);
  const SohEstimate est = soh_predict(model, cycles);
  TimeSeries t(cycle_axis(cycles));
  t.set_column("soh_predicted", est.mean);
  t.set_column("soh_variance", est.variance);
  out.produce([&](const fs::path& stage) { write_csv(stage / "predictions.csv", t, {}, "cycle_index"); });
}

void run_soh_eval(const WorkbenchConfig& cfg, OutputDirectory& out) {
  const auto cycles = load_cycles(cfg);
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.soh.train_fraction * static_cast<double>(cycles.size())));
  if (n_train < 3 || n_train >= cycles.size()) {
    throw Error(Errc::validation, "soh eval: the split leaves fewer than three training or no test cycles");
  }
  const std::vector<CycleRecord> train(cycles.begin(), cycles.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<CycleRecord> test(cycles.begin() + static_cast<std::ptrdiff_t>(n_train), cycles.end());
  const SohModel model = soh_train(train, cfg.soh.options);
  save_model(out, model);

  const double nominal = model.nominal_ah;
  const SohEstimate e_train = soh_predict(model, train), e_test = soh_predict(model, test);
  const Vector y_train = measured_soh(train, nominal), y_test = measured_soh(test, nominal);
  write_json(out, "metrics.json", {{"train", metrics_json(error_metrics(y_train, e_train.mean))},
                                   {"test", metrics_json(error_metrics(y_test, e_test.mean))},
                                   {"train_cycles", train.size()},
                                   {"test_cycles", test.size()}});

  const TimeSeries train_table = soh_table(train, e_train, nominal);
  const TimeSeries test_table = soh_table(test, e_test, nominal);
  auto stack = [](const Vector& a, const Vector& b) {
    Vector v(a.size() + b.size());
    v << a, b;
    return v;
  };
  TimeSeries all(stack(train_table.time(), test_table.time()));
  for (const auto& c : train_table.names()) all.set_column(c, stack(train_table.column(c), test_table.column(c)));
  all.set_column("test", stack(Vector::Zero(train_table.size()), Vector::Ones(test_table.size())));
  out.produce([&](const fs::path& stage) { write_csv(stage / "predictions.csv", all, {}, "cycle_index"); });

  export_figure(out, {"soh_trajectory", "SOH estimate", "cycle", "SOH [%]",
                      {{"measured", all.time(), all.column("soh_measured")},
                       {"predicted", all.time(), all.column("soh_predicted")}}});

  const Vector err_train = e_train.mean - y_train, err_test = e_test.mean - y_test;
  Vector pooled(err_train.size() + err_test.size());
  pooled << err_train, err_test;
  const Histogram whole = histogram(pooled, cfg.soh.histogram_bins);
  auto counts_on = [&](const Vector& errs) {
    Vector c = Vector::Zero(whole.counts.size());
    const double lo = whole.edges[0], hi = whole.edges[whole.edges.size() - 1];
    const auto bins = static_cast<int>(whole.counts.size());
    for (double v : errs) c[std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins))] += 1;
    return c;
  };
  export_figure(out, {"error_histogram", "SOH error distribution", "error [SOH %]", "count",
                      {{"train", whole.centers(), counts_on(err_train)}, {"test", whole.centers(), counts_on(err_test)}},
                      true});
}

struct HybridData {
  TimeSeries simulation;
  TimeSeries experiment;
};

HybridData hybrid_data(const WorkbenchConfig& cfg, const TimeSeries& profile, const std::optional<fs::path>& file) {
  HybridData d;
  if (file) {
    d.experiment = load_record(*file);
    TimeSeries p(d.experiment.time());
    p.set_column("I", d.experiment.column("I"));
    d.simulation = simulate(cfg.model, p, cfg.simulate.options).series;
  } else {
    d.simulation = simulate(cfg.model, profile, cfg.simulate.options).series;
    d.experiment = inject_hysteresis(d.simulation, cfg.hybrid.injection);
  }
  return d;
}

void run_hybrid_train(const WorkbenchConfig& cfg, OutputDirectory& out) {
  if (!cfg.simulate.options.internal_columns) {
    throw Error(Errc::validation, "config: simulate.internal_columns must be true for hybrid workflows");
  }
  const TimeSeries profile = cfg.hybrid.experiment ? TimeSeries{} : load_profile(cfg);
  const HybridData train = hybrid_data(cfg, profile, cfg.hybrid.experiment);
  const ResidualDataset rd = build_residual_dataset(train.experiment, train.simulation);

  ForestOptions options = cfg.hybrid.forest_options;
  json report = json::object();
  if (cfg.hybrid.grid) {
    std::optional<HybridData> val;
    if (cfg.hybrid.validation) {
      val = hybrid_data(cfg, {}, cfg.hybrid.validation);
    } else if (cfg.simulate.drive_cycle) {
      DriveCycleOptions d = *cfg.simulate.drive_cycle;
      d.seed = cfg.hybrid.validation_drive_seed;
      HysteresisInjection h = cfg.hybrid.injection;
      h.seed = split_seed(h.seed, 1);
      val = HybridData{simulate(cfg.model, synthetic_drive_cycle(d), cfg.simulate.options).series, {}};
      val->experiment = inject_hysteresis(val->simulation, h);
    } else {
      throw Error(Errc::validation, "config: hybrid.grid needs hybrid.validation or a synthetic drive cycle");
    }
    const ResidualDataset vd = build_residual_dataset(val->experiment, val->simulation);
    const GridSearchResult g = grid_search_forest(rd, vd, *cfg.hybrid.grid, options);
    options = g.best;
    CsvTable table;
    table.header = {"trees", "max_depth", "min_leaf", "feature_rate", "validation_rmse"};
    for (const auto& [o, e] : g.table) {
      table.rows.push_back({static_cast<double>(o.trees), static_cast<double>(o.tree.max_depth),
                            static_cast<double>(o.tree.min_leaf), o.tree.feature_rate, e});
    }
    out.produce([&](const fs::path& stage) { write_csv_table(stage / "grid.csv", table); });
    report["validation_rmse"] = g.best_rmse;
  }

  const RandomForest forest = RandomForest::fit(rd.features, rd.target, options);
  out.produce([&](const fs::path& stage) { save_forest(forest, stage / "forest.json"); });

  const Vector V_exp = rd.V_cs + rd.target;
  const Vector fitted = forest.predict(rd.features);
  const double physics = rmse(rd.V_cs, V_exp), hybrid = rmse(rd.V_cs + fitted, V_exp);
  report["physics_rmse"] = physics;
  report["hybrid_rmse"] = hybrid;
  report["improvement"] = physics > 0 ? 1.0 - hybrid / physics : 0.0;
  report["samples"] = rd.target.size();
  report["dropped_extrapolated"] = rd.dropped_extrapolated;
  report["forest"] = {{"trees", options.trees},
                      {"max_depth", options.tree.max_depth},
                      {"min_leaf", options.tree.min_leaf},
                      {"feature_rate", options.tree.feature_rate}};
  write_json(out, "metrics.json", report);

  TimeSeries residual(rd.time);
  residual.set_column("V_h_target", rd.target);
  residual.set_column("V_h_fit", fitted);
  write_series(out, "residual.csv", residual);
}

void run_hybrid_simulate(const WorkbenchConfig& cfg, OutputDirectory& out) {
  if (!cfg.hybrid.forest || !fs::is_regular_file(*cfg.hybrid.forest)) {
    throw Error(Errc::validation, "config: hybrid.forest: a trained forest file is required");
  }
  if (!cfg.simulate.options.internal_columns) {
    throw Error(Errc::validation, "config: simulate.internal_columns must be true for hybrid workflows");
  }
  const RandomForest forest = load_forest(*cfg.hybrid.forest);
  const TimeSeries profile = load_profile(cfg);
  const TimeSeries h = hybrid_simulate(cfg.model, profile, cfg.simulate.options, &forest);
  write_series(out, "hybrid.csv", h);
  export_figure(out, {"overlay", "Physics-only and hybrid voltage", "time [s]", "voltage [V]",
                      {{"physics", h.time(), h.column("V_cs")}, {"hybrid", h.time(), h.column("V")}}});
}

}  // namespace

RunManifest run(Command command, const WorkbenchConfig& cfg, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.command = to_string(command);
  m.config_digest = cfg.digest();
  m.seed = cfg.seed;
  m.run_id = sha256_hex(m.config_digest + "|" + m.command).substr(0, 16);
  m.started_utc = utc_now();
  m.versions = {{"ionbench", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"compiler", __VERSION__}};
  for (const auto& p : cfg.input_files()) m.inputs[p.string()] = sha256_file(p);

  OutputDirectory out(out_dir);
  spdlog::info("{}: run {} into {}", m.command, m.run_id, out.root().string());
  switch (command) {
    case Command::simulate: run_simulate(cfg, out); break;
    case Command::identify: run_identify(cfg, out); break;
    case Command::soh_train: run_soh_train(cfg, out); break;
    case Command::soh_predict: run_soh_predict(cfg, out); break;
    case Command::soh_eval: run_soh_eval(cfg, out); break;
    case Command::hybrid_train: run_hybrid_train(cfg, out); break;
    case Command::hybrid_simulate: run_hybrid_simulate(cfg, out); break;
  }
  for (const auto& name : out.produced()) m.outputs[name] = sha256_file(out.root() / name);
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.write_text("manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

}  // namespace ionbench
