#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/analysis.hpp"
#include "strata/build_engine.hpp"
#include "strata/info.hpp"

namespace strata::pipeline {

namespace fs = std::filesystem;

inline const ModuleId kStdModule = "lib/std";

// Task kinds.
inline constexpr const char* kFrontEnd = "frontEnd";
inline constexpr const char* kSubFrontEnd = "subFrontEnd";
inline constexpr const char* kFrontEndLib = "frontEndLib";
inline constexpr const char* kMain = "main";
inline constexpr const char* kBackEnd = "backEnd";
inline constexpr const char* kBackEndCong = "backEndCong";
inline constexpr const char* kBackEndDR = "backEndDR";

struct Config {
  fs::path src;
  std::vector<fs::path> libs;
  fs::path out;
  /// Where `lib/std.str` and other shipped sources live.
  fs::path std_root;
};

Term to_term(const Config& c);
Config config_from_term(const Term& t);

/// Installed stdlib source root.
fs::path default_std_root();

/// Measurements the task bodies report outside the engine.
struct Telemetry {
  double static_ms = 0;
};

build::Registry make_registry(Telemetry* telemetry = nullptr);

build::TaskKey main_key(const ModuleId& main, const Config& cfg);

/// Decoded output of the main task.
struct Report {
  std::vector<StaticError> errors;
  int units = 0;
  std::vector<std::string> warnings;
};

Term to_term(const Report& r);
Report report_from_term(const Term& t);

struct StageTimes {
  double fe_ms = 0;
  double static_ms = 0;
  double be_ms = 0;
  double orch_ms = 0;
  double total_ms = 0;
};

struct TaskCounts {
  int fe_exec = 0, fe_cached = 0;
  int sfe_exec = 0, sfe_cached = 0;
  int be_exec = 0, be_cached = 0;
};

TaskCounts count_tasks(const build::ExecTrace& trace);

/// Short human-readable identity of a task for trace files.
std::string describe(const build::TaskKey& key);

struct CompileOptions {
  ModuleId main;
  Config config;
  fs::path store;
  /// Start from an empty store and remove previous outputs.
  bool clean = false;
};

struct CompileResult {
  Report report;
  build::ExecTrace trace;
  StageTimes times;
  std::vector<std::string> deleted;
};

/// One locked build session. Persists the store; garbage-collects only after
/// an error-free compile. Engine and I/O failures propagate as exceptions.
CompileResult compile(const CompileOptions& opts);

/// Removes unit files and the manifest from `out`.
void remove_outputs(const fs::path& out);

/// Front ends plus static analysis, no code emitted; uses a private in-memory
/// store.
struct Collected {
  StaticInfo info;
  analysis::AnalysisResult analysis;
  std::vector<StaticError> errors;
  std::vector<ModuleId> modules;
};

Collected collect(const ModuleId& main, const Config& cfg);

struct ProgramStats {
  int modules = 0;
  int libraries = 0;
  int strategy_keys = 0;
  int congruences = 0;
  int dyn_rule_names = 0;
  /// contributions -> number of names
  std::map<int, int> dyn_rule_contributions;
  /// defining modules -> number of keys
  std::map<int, int> modules_per_strategy;
  int ambiguous_sites = 0;
  int overlays = 0;
  /// using modules -> number of overlays
  std::map<int, int> overlay_users;
};

ProgramStats compute_stats(const Collected& c);
std::string render_stats(const ProgramStats& s);

}  // namespace strata::pipeline
