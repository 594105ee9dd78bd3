// ionbench: batch front door for the simulation, identification, SOH and
// hybrid workflows. See README.md for the config format.

#include "ionbench/workbench.hpp"

#include "CLI11.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ionbench;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

json read_document(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::validation, "config: cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::validation, "config: " + path.string() + ": " + e.what());
  }
}

fs::path config_path(const Globals& g) {
  if (!g.config.empty()) return g.config;
  if (const char* env = std::getenv("IONBENCH_CONFIG"); env && *env) return env;
  throw Error(Errc::validation, "no config given (use --config or IONBENCH_CONFIG)");
}

int report_error(const std::string& command, Errc code, const std::string& message, const fs::path& out) {
  const json record = error_record(command, code, message);
  std::cerr << record.dump() << '\n';
  if (!out.empty()) {
    try {
      OutputDirectory(out).write_text("error.json", record.dump(2) + "\n");
    } catch (...) {
      // The record on stderr is authoritative; the file copy is best effort.
    }
  }
  return exit_code_for(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ionbench: battery modelling workbench"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration (default: $IONBENCH_CONFIG)");
  app.add_option("--out", g.out, "output directory (default: config 'output' or ./out)");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  std::string command;
  std::optional<double> window, cv_window;
  std::optional<int> bags;

  auto* simulate = app.add_subcommand("simulate", "simulate a current profile");
  auto* identify = app.add_subcommand("identify", "fit cell parameters to a measured record");
  auto* validate = app.add_subcommand("validate-config", "check a config and print its digest");
  auto* soh = app.add_subcommand("soh", "state-of-health estimation");
  soh->require_subcommand(1);
  auto* hybrid = app.add_subcommand("hybrid", "physics plus learned hysteresis");
  hybrid->require_subcommand(1);

  for (const char* name : {"train", "predict", "eval"}) {
    auto* sub = soh->add_subcommand(name);
    sub->add_option("--window", window, "CC voltage window, s");
    sub->add_option("--cv-window", cv_window, "CV current window, s");
    sub->add_option("--bags", bags, "ensemble size");
    sub->add_option("--seed", g.seed, "override the config seed");
    sub->callback([&command, name] { command = std::string("soh ") + name; });
  }
  for (const char* name : {"train", "simulate"}) {
    hybrid->add_subcommand(name)->callback([&command, name] { command = std::string("hybrid ") + name; });
  }
  simulate->callback([&] { command = "simulate"; });
  identify->callback([&] { command = "identify"; });
  validate->callback([&] { command = "validate-config"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  fs::path out = g.out;
  try {
    const fs::path path = config_path(g);
    json document = read_document(path);
    if (document.is_object()) {
      json& s = document["soh"];
      if (s.is_null()) s = json::object();
      if (window) s["cc_window"] = *window;
      if (cv_window) s["cv_window"] = *cv_window;
      if (bags) s["bags"] = *bags;
      if (s.empty()) document.erase("soh");
    }
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    WorkbenchConfig cfg = parse_config(document, base, g.seed);
    cfg.source = path;

    if (command == "validate-config") {
      std::cout << json{{"status", "ok"}, {"config_digest", cfg.digest()}, {"seed", cfg.seed}}.dump() << '\n';
      return 0;
    }
    if (out.empty()) out = cfg.output.value_or("out");
    const RunManifest m = run(parse_command(command), cfg, out);
    std::cout << json{{"status", "ok"}, {"run_id", m.run_id}, {"outputs", m.outputs}}.dump() << '\n';
    return 0;
  } catch (const Error& e) {
    return report_error(command, e.code(), e.what(), out);
  } catch (const std::exception& e) {
    return report_error(command, Errc::io, e.what(), out);
  }
}
