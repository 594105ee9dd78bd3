#include "ionbench/config.hpp"

#include "ionbench/digest.hpp"

#include <fstream>
#include <map>
#include <set>

namespace ionbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(Errc::validation, "config: " + where + ": " + what);
}

// Typed access to one JSON object that remembers which keys were read, so
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string where, fs::path base) : j_(j), where_(std::move(where)), base_(std::move(base)) {
    if (!j_.is_object()) invalid(where_, "expected an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) invalid(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) invalid(path(key), "must be finite");
    return x;
  }

  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0)) invalid(path(key), "must be positive");
    return x;
  }

  double fraction(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x >= 0 && x <= 1)) invalid(path(key), "must lie in [0, 1]");
    return x;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key, 0);
  }

  int integer(const std::string& key, int fallback, int min_value) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) invalid(path(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value || x > 1'000'000'000) invalid(path(key), "must be at least " + std::to_string(min_value));
    return static_cast<int>(x);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) invalid(path(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) invalid(path(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::optional<fs::path> file(const std::string& key, bool must_exist = true) {
    if (!has(key)) return std::nullopt;
    fs::path p = string(key, "");
    if (p.empty()) invalid(path(key), "empty path");
    if (p.is_relative()) p = base_ / p;
    p = p.lexically_normal();
    if (must_exist && !fs::is_regular_file(p)) invalid(path(key), "file not found: " + p.string());
    return p;
  }

  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), path(key), base_);
  }

  const json& raw(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> fallback, int min_value) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) invalid(path(key), "expected a non-empty array");
    std::vector<int> out;
    for (const json& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < min_value) {
        invalid(path(key), "entries must be integers >= " + std::to_string(min_value));
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<double> number_list(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) invalid(path(key), "expected a non-empty array");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) invalid(path(key), "entries must be numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }
  const std::string& where() const { return where_; }
  const json& object() const { return j_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) invalid(path(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string where_;
  fs::path base_;
  std::set<std::string> known_;
};

using CellField = double CellParameters::*;

const std::map<std::string, CellField>& cell_fields() {
  static const std::map<std::string, CellField> fields = {
      {"A_cell", &CellParameters::A_cell},       {"L_p", &CellParameters::L_p},
      {"L_s", &CellParameters::L_s},             {"L_n", &CellParameters::L_n},
      {"R_p", &CellParameters::R_p},             {"R_n", &CellParameters::R_n},
      {"eps_p", &CellParameters::eps_p},         {"eps_s", &CellParameters::eps_s},
      {"eps_n", &CellParameters::eps_n},         {"nu_p", &CellParameters::nu_p},
      {"nu_n", &CellParameters::nu_n},           {"D_s_p_ref", &CellParameters::D_s_p_ref},
      {"D_s_n_ref", &CellParameters::D_s_n_ref}, {"Ea_D_s_p", &CellParameters::Ea_D_s_p},
      {"Ea_D_s_n", &CellParameters::Ea_D_s_n},   {"t_plus", &CellParameters::t_plus},
      {"brugg", &CellParameters::brugg},         {"v_td", &CellParameters::v_td},
      {"k_p", &CellParameters::k_p},             {"k_n", &CellParameters::k_n},
      {"c_s_max_p", &CellParameters::c_s_max_p}, {"c_s_max_n", &CellParameters::c_s_max_n},
      {"c_e_init", &CellParameters::c_e_init},   {"theta_p_0", &CellParameters::theta_p_0},
      {"theta_p_100", &CellParameters::theta_p_100}, {"theta_n_0", &CellParameters::theta_n_0},
      {"theta_n_100", &CellParameters::theta_n_100}, {"R_l", &CellParameters::R_l},
      {"R_el", &CellParameters::R_el},           {"i0_floor", &CellParameters::i0_floor},
  };
  return fields;
}

using AgingField = double AgingParameters::*;

const std::map<std::string, AgingField>& aging_fields() {
  static const std::map<std::string, AgingField> fields = {
      {"k_f_ref", &AgingParameters::k_f_ref},         {"Ea_k_f", &AgingParameters::Ea_k_f},
      {"c_solv_surf", &AgingParameters::c_solv_surf}, {"alpha_s", &AgingParameters::alpha_s},
      {"i_0_lpl", &AgingParameters::i_0_lpl},         {"beta_lpl", &AgingParameters::beta_lpl},
      {"M_SEI", &AgingParameters::M_SEI},             {"M_Li", &AgingParameters::M_Li},
      {"rho_SEI", &AgingParameters::rho_SEI},         {"rho_Li", &AgingParameters::rho_Li},
      {"kappa_SEI", &AgingParameters::kappa_SEI},     {"beta_prime_p", &AgingParameters::beta_prime_p},
      {"beta_prime_n", &AgingParameters::beta_prime_n}, {"a_f_p", &AgingParameters::a_f_p},
      {"a_f_n", &AgingParameters::a_f_n},
  };
  return fields;
}

void read_cell(Section& s, WorkbenchConfig& cfg) {
  const std::string preset = s.string("preset", "nmc");
  if (preset == "nmc") {
    cfg.model.cell = reference_nmc_cell();
    cfg.model.ocp = reference_nmc_ocp();
  } else if (preset == "lfp") {
    cfg.model.cell = reference_lfp_cell();
    cfg.model.ocp = reference_lfp_ocp();
  } else {
    invalid(s.path("preset"), "expected \"nmc\" or \"lfp\"");
  }

  if (auto params = s.child("parameters")) {
    for (const auto& [key, value] : params->object().items()) {
      const auto it = cell_fields().find(key);
      if (it == cell_fields().end()) invalid(params->path(key), "unknown cell parameter");
      cfg.model.cell.*(it->second) = params->number(key, 0);
    }
    params->finish();
  }

  if (auto ocp = s.child("ocp")) {
    auto load = [&](const std::string& key) -> std::optional<OcpTable> {
      const auto p = ocp->file(key);
      if (!p) return std::nullopt;
      cfg.ocp_files.push_back(*p);
      try {
        return OcpTable::from_csv(*p);
      } catch (const Error& e) {
        invalid(ocp->path(key), e.what());
      }
    };
    if (auto t = load("positive")) cfg.model.ocp.positive = *t;
    if (auto t = load("negative")) cfg.model.ocp.negative = *t;
    auto charge = load("positive_charge");
    auto discharge = load("positive_discharge");
    if (charge.has_value() != discharge.has_value()) {
      invalid(ocp->where(), "positive_charge and positive_discharge must be given together");
    }
    if (charge) {
      cfg.model.ocp.positive_charge = charge;
      cfg.model.ocp.positive_discharge = discharge;
    } else if (ocp->has("positive")) {
      cfg.model.ocp.positive_charge.reset();
      cfg.model.ocp.positive_discharge.reset();
    }
    ocp->finish();
  }
  s.finish();
}

void read_grid(Section& s, SpatialGrid& g) {
  g.n_r = s.integer("n_r", g.n_r, 2);
  g.n_x_p = s.integer("n_x_p", g.n_x_p, 1);
  g.n_x_s = s.integer("n_x_s", g.n_x_s, 1);
  g.n_x_n = s.integer("n_x_n", g.n_x_n, 1);
  s.finish();
}

void read_aging(Section& s, AgingParameters& a) {
  for (const auto& [key, value] : s.object().items()) {
    const auto it = aging_fields().find(key);
    if (it == aging_fields().end()) invalid(s.path(key), "unknown aging parameter");
    a.*(it->second) = s.number(key, 0);
  }
  s.finish();
}

void read_coreshell(Section& s, WorkbenchConfig& cfg) {
  CoreShellParameters cs;
  const double cmax = cfg.model.cell.c_s_max_p;
  cs.c_alpha = s.fraction("alpha_fraction", 0.03) * cmax;
  cs.c_beta = s.fraction("beta_fraction", 0.97) * cmax;
  cs.n_shell = s.integer("n_shell", cs.n_shell, 2);
  cs.guard_fraction = s.fraction("guard_fraction", cs.guard_fraction);
  s.finish();
  cfg.model.coreshell = cs;
}

DriveCycleOptions read_drive(Section& s, std::uint64_t seed) {
  DriveCycleOptions d;
  d.seed = seed;
  d.duration = s.positive("duration", d.duration);
  d.dt = s.positive("dt", d.dt);
  d.mean_current = s.number("mean_current", d.mean_current);
  d.peak_current = s.positive("peak_current", d.peak_current);
  d.regen_fraction = s.fraction("regen_fraction", d.regen_fraction);
  d.rest_fraction = s.fraction("rest_fraction", d.rest_fraction);
  d.min_pulse = s.positive("min_pulse", d.min_pulse);
  d.max_pulse = s.positive("max_pulse", d.max_pulse);
  if (d.max_pulse < d.min_pulse) invalid(s.path("max_pulse"), "must be at least min_pulse");
  s.finish();
  return d;
}

void read_simulate(Section& s, WorkbenchConfig& cfg) {
  SimulateSection& out = cfg.simulate;
  out.profile = s.file("profile");
  if (auto d = s.child("drive_cycle")) {
    if (out.profile) invalid(s.path("drive_cycle"), "give either profile or drive_cycle, not both");
    out.drive_cycle = read_drive(*d, split_seed(cfg.seed, 7));
  }
  SimulationOptions& o = out.options;
  o.dt = s.positive("dt", o.dt);
  o.initial_soc = s.fraction("initial_soc", o.initial_soc);
  o.temperature = s.positive("temperature", o.temperature);
  o.max_halvings = s.integer("max_halvings", o.max_halvings, 0);
  o.v_min = s.optional_number("v_min");
  o.v_max = s.optional_number("v_max");
  o.internal_columns = s.boolean("internal_columns", o.internal_columns);
  s.finish();
}

DEOptions read_de(std::optional<Section> s, const WorkbenchConfig& cfg) {
  DEOptions de;
  de.seed = split_seed(cfg.seed, 1);
  de.threads = cfg.threads;
  if (!s) return de;
  de.budget = s->integer("budget", de.budget, 1);
  de.population = s->integer("population", de.population, 0);
  de.F = s->number("F", de.F);
  de.CR = s->number("CR", de.CR);
  de.target = s->number("target", de.target);
  if (!(de.F > 0 && de.F <= 2)) invalid(s->path("F"), "must lie in (0, 2]");
  if (!(de.CR >= 0 && de.CR <= 1)) invalid(s->path("CR"), "must lie in [0, 1]");
  s->finish();
  return de;
}

void read_identify(Section& s, WorkbenchConfig& cfg) {
  IdentifySection& out = cfg.identify;
  out.dataset = s.file("dataset");
  out.initial_soc = s.fraction("initial_soc", cfg.simulate.options.initial_soc);
  out.capacity_ah = s.number("capacity_ah", 0);
  if (out.capacity_ah < 0) invalid(s.path("capacity_ah"), "must not be negative");

  std::vector<std::string> names;
  if (s.has("preset")) {
    try {
      names = preset_names(s.string("preset", ""));
    } catch (const Error& e) {
      invalid(s.path("preset"), e.what());
    }
  }
  if (s.has("parameters")) {
    if (!names.empty()) invalid(s.path("parameters"), "give either preset or parameters, not both");
    const json& list = s.raw("parameters");
    if (!list.is_array() || list.empty()) invalid(s.path("parameters"), "expected a non-empty array of names");
    for (const json& n : list) {
      if (!n.is_string()) invalid(s.path("parameters"), "expected parameter names");
      names.push_back(n.get<std::string>());
    }
  }
  const double relative = s.number("relative_bounds", 0.3);
  if (!(relative > 0 && relative < 1)) invalid(s.path("relative_bounds"), "must lie in (0, 1)");
  if (!names.empty()) {
    try {
      out.spec = relative_spec(names, cfg.model.cell, relative);
    } catch (const Error& e) {
      invalid(s.path("parameters"), e.what());
    }
  }
  // Explicit ranges override the relative bounds of the same name, or add new ones.
  if (s.has("ranges")) {
    const json& list = s.raw("ranges");
    if (!list.is_array()) invalid(s.path("ranges"), "expected an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      Section r(list[k], s.path("ranges") + "[" + std::to_string(k) + "]", {});
      ParameterRange range;
      range.name = r.string("name", "");
      range.lower = r.number("lower", 0);
      range.upper = r.number("upper", 0);
      const std::string scale = r.string("scale", "linear");
      if (scale != "linear" && scale != "log") invalid(r.path("scale"), "expected \"linear\" or \"log\"");
      range.scale = scale == "log" ? Scale::log : Scale::linear;
      r.finish();
      auto it = std::find_if(out.spec.ranges.begin(), out.spec.ranges.end(),
                             [&](const ParameterRange& p) { return p.name == range.name; });
      if (it != out.spec.ranges.end()) {
        *it = range;
      } else {
        out.spec.ranges.push_back(range);
      }
    }
  }
  if (out.spec.size() > 0) {
    try {
      out.spec.validate();
    } catch (const Error& e) {
      invalid(s.where(), e.what());
    }
  }

  out.options.sim = cfg.simulate.options;
  out.options.sim.internal_columns = false;
  out.options.sim.initial_soc = out.initial_soc;
  out.options.de = read_de(s.child("de"), cfg);
  if (auto w = s.child("weights")) {
    out.options.weights.voltage = w->number("voltage", 1.0);
    out.options.weights.soc_n = w->number("soc_n", 1.0);
    out.options.weights.soc_p = w->number("soc_p", 1.0);
    w->finish();
  }
  s.finish();
}

void read_soh(Section& s, WorkbenchConfig& cfg) {
  SohSection& out = cfg.soh;
  out.cycles = s.file("cycles");
  out.model = s.file("model", false);
  SohOptions& o = out.options;
  o.nominal_ah = s.positive("nominal_ah", o.nominal_ah);
  o.features = s.integer("features", o.features, 1);
  if (o.features > static_cast<int>(soh_feature_names().size())) invalid(s.path("features"), "at most 12");
  o.segment.cc_window = s.positive("cc_window", o.segment.cc_window);
  o.segment.cv_window = s.positive("cv_window", o.segment.cv_window);
  o.bagging.bags = s.integer("bags", o.bagging.bags, 1);
  o.bagging.bootstrap = s.boolean("bootstrap", o.bagging.bootstrap);
  o.bagging.seed = split_seed(cfg.seed, 2);
  o.bagging.gp.seed = split_seed(cfg.seed, 3);
  o.bagging.gp.restarts = s.integer("gp_restarts", o.bagging.gp.restarts, 0);
  out.train_fraction = s.number("train_fraction", out.train_fraction);
  if (!(out.train_fraction > 0 && out.train_fraction < 1)) invalid(s.path("train_fraction"), "must lie in (0, 1)");
  out.histogram_bins = s.integer("histogram_bins", out.histogram_bins, 1);

  SyntheticCyclingOptions& syn = out.synthetic;
  syn.seed = split_seed(cfg.seed, 5);
  syn.nominal_ah = o.nominal_ah;
  if (auto g = s.child("synthetic")) {
    syn.cycles = g->integer("cycles", syn.cycles, 2);
    syn.fade_per_cycle = g->number("fade_per_cycle", syn.fade_per_cycle);
    syn.fade_curvature = g->number("fade_curvature", syn.fade_curvature);
    syn.resistance = g->positive("resistance", syn.resistance);
    syn.resistance_growth = g->number("resistance_growth", syn.resistance_growth);
    syn.voltage_noise = g->number("voltage_noise", syn.voltage_noise);
    syn.capacity_noise = g->number("capacity_noise", syn.capacity_noise);
    syn.dt = g->positive("dt", syn.dt);
    g->finish();
  }
  s.finish();
}

void read_hybrid(Section& s, WorkbenchConfig& cfg) {
  HybridSection& out = cfg.hybrid;
  out.experiment = s.file("experiment");
  out.validation = s.file("validation");
  out.forest = s.file("forest", false);
  out.injection.seed = split_seed(cfg.seed, 6);
  out.validation_drive_seed = split_seed(cfg.seed, 8);
  if (auto h = s.child("injection")) {
    out.injection.amplitude = h->number("amplitude", out.injection.amplitude);
    out.injection.soc_gain = h->number("soc_gain", out.injection.soc_gain);
    out.injection.current_scale = h->positive("current_scale", out.injection.current_scale);
    out.injection.noise = h->number("noise", out.injection.noise);
    if (out.injection.noise < 0) invalid(h->path("noise"), "must not be negative");
    h->finish();
  }
  ForestOptions& f = out.forest_options;
  f.seed = split_seed(cfg.seed, 4);
  f.threads = cfg.threads;
  f.trees = s.integer("trees", 30, 1);
  f.tree.max_depth = s.integer("max_depth", f.tree.max_depth, 0);
  f.tree.min_leaf = s.integer("min_leaf", f.tree.min_leaf, 1);
  f.tree.feature_rate = s.number("feature_rate", f.tree.feature_rate);
  if (!(f.tree.feature_rate > 0 && f.tree.feature_rate <= 1)) invalid(s.path("feature_rate"), "must lie in (0, 1]");
  if (auto g = s.child("grid")) {
    ForestGrid grid;
    grid.max_depth = g->int_list("max_depth", grid.max_depth, 0);
    grid.min_leaf = g->int_list("min_leaf", grid.min_leaf, 1);
    grid.feature_rate = g->number_list("feature_rate", grid.feature_rate);
    grid.trees = g->int_list("trees", grid.trees, 1);
    for (double r : grid.feature_rate) {
      if (!(r > 0 && r <= 1)) invalid(g->path("feature_rate"), "entries must lie in (0, 1]");
    }
    g->finish();
    out.grid = grid;
  }
  s.finish();
}

}  // namespace

std::string WorkbenchConfig::digest() const { return sha256_hex(document.dump()); }

std::vector<fs::path> WorkbenchConfig::input_files() const {
  std::vector<fs::path> files = ocp_files;
  for (const auto& p : {simulate.profile, identify.dataset, soh.cycles, hybrid.experiment, hybrid.validation}) {
    if (p) files.push_back(*p);
  }
  for (const auto& p : {soh.model, hybrid.forest}) {
    if (p && fs::is_regular_file(*p)) files.push_back(*p);
  }
  return files;
}

WorkbenchConfig parse_config(const json& document, const fs::path& base_dir,
                             std::optional<std::uint64_t> seed_override) {
  WorkbenchConfig cfg;
  Section root(document, "", base_dir);
  if (root.has("seed") && !document.at("seed").is_number_unsigned()) invalid("seed", "expected a non-negative integer");
  cfg.seed = seed_override ? *seed_override : document.value("seed", std::uint64_t{1});
  cfg.threads = root.integer("threads", 1, 1);
  cfg.output = root.file("output", false);

  if (auto s = root.child("cell")) {
    read_cell(*s, cfg);
  } else {
    invalid("cell", "section is required");
  }
  if (auto s = root.child("grid")) read_grid(*s, cfg.model.grid);
  if (auto s = root.child("aging")) {
    AgingParameters a;
    read_aging(*s, a);
    cfg.model.aging = a;
  }
  if (auto s = root.child("coreshell")) read_coreshell(*s, cfg);
  try {
    cfg.model.validate();
  } catch (const Error& e) {
    invalid("cell", e.what());
  }

  if (auto s = root.child("simulate")) {
    read_simulate(*s, cfg);
  }
  const json empty = json::object();
  auto section_or_empty = [&](const std::string& key) {
    return root.has(key) ? Section(root.raw(key), key, base_dir) : Section(empty, key, base_dir);
  };
  {
    Section s = section_or_empty("identify");
    read_identify(s, cfg);
  }
  {
    Section s = section_or_empty("soh");
    read_soh(s, cfg);
  }
  {
    Section s = section_or_empty("hybrid");
    read_hybrid(s, cfg);
  }
  root.finish();

  cfg.document = document;
  cfg.document["seed"] = cfg.seed;
  return cfg;
}

WorkbenchConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::validation, "config: cannot open " + path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::validation, "config: " + path.string() + ": " + e.what());
  }
  WorkbenchConfig cfg = parse_config(document, path.parent_path().empty() ? fs::path(".") : path.parent_path(),
                                     seed_override);
  cfg.source = path;
  return cfg;
}

}  // namespace ionbench
