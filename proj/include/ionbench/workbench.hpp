#pragma once

#include "ionbench/config.hpp"

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ionbench {

/// A run's output directory. Files are staged in a hidden subdirectory and
/// renamed into place, so a reader never sees a half-written file, and
/// nothing is written outside the root.
class OutputDirectory {
 public:
  explicit OutputDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// The writer receives a staging directory and creates files directly
  /// inside it; each one is then moved into the root and recorded.
  void produce(const std::function<void(const std::filesystem::path& stage)>& writer);
  void write_text(const std::string& name, const std::string& text);

  /// Output file names, in the order they were produced.
  const std::vector<std::string>& produced() const { return produced_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> produced_;
  int stage_counter_ = 0;
};

struct RunManifest {
  std::string run_id;
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> SHA-256
  std::map<std::string, std::string> outputs;  // file name -> SHA-256
  std::map<std::string, std::string> versions;
  std::string started_utc;
  double wall_seconds = 0;

  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Plot-ready exports

struct PlotSeries {
  std::string name;
  Vector x;
  Vector y;
};

struct Figure {
  std::string name;  // file stem
  std::string title;
  std::string x_label, y_label;
  std::vector<PlotSeries> series;
  bool bars = false;  // draw as a histogram (x holds bin centres)
};

/// Long-format table with columns series, x, y.
std::string tidy_csv(const Figure& figure);
/// Self-contained SVG line (or bar) chart with axes and a legend.
std::string svg_chart(const Figure& figure);
/// Writes <name>.csv and <name>.svg.
void export_figure(OutputDirectory& out, const Figure& figure);

struct Histogram {
  Vector edges;   // bins + 1 increasing edges
  Vector counts;  // sums to the number of finite values
  Vector centers() const;
};
/// Equal-width bins over [min, max]; the top edge is inclusive.
Histogram histogram(const Vector& values, int bins);

// ---------------------------------------------------------------------------
// Orchestration

enum class Command { simulate, identify, soh_train, soh_predict, soh_eval, hybrid_train, hybrid_simulate };

Command parse_command(const std::string& name);
std::string to_string(Command command);

/// Runs one workflow, writes its outputs and the manifest into `out`.
RunManifest run(Command command, const WorkbenchConfig& config, const std::filesystem::path& out);

/// 2 for configuration and input validation failures, 3 for everything else.
int exit_code_for(Errc code);
nlohmann::json error_record(const std::string& command, Errc code, const std::string& message);

/// Simulation input profile from the config (file or synthetic drive cycle).
TimeSeries load_profile(const WorkbenchConfig& config);

}  // namespace ionbench
