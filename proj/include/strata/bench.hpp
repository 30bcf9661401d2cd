#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/pipeline.hpp"

namespace strata::bench {

namespace fs = std::filesystem;

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EditStep {
  std::string name;
  /// Paths relative to the source root, with their new content.
  std::vector<std::pair<fs::path, std::string>> files;
  std::vector<fs::path> deleted;
};

/// On disk: `steps.list` naming one directory per step; each holds the files
/// to overlay plus an optional `deleted.list`.
struct EditScript {
  std::vector<EditStep> steps;
};

EditScript load_script(const fs::path& dir);
void write_script(const fs::path& dir, const EditScript& script);
void apply_step(const fs::path& src_root, const EditStep& step);

struct BenchOptions {
  ModuleId main;
  /// `src` is the pristine tree; it is copied, never modified.
  pipeline::Config config;
  fs::path store;
  int repeat = 1;
  int warmup = 0;
  bool verify = false;
};

struct BenchRow {
  std::string step;
  int files_changed = 0;
  pipeline::TaskCounts counts;
  pipeline::StageTimes times;
  /// ok / fail / skipped
  std::string verify = "skipped";
  bool errors = false;
  std::vector<std::string> mismatches;
};

/// Clean build, then the script's steps, once per repeat. Progress and
/// problems go to `log` when given.
std::vector<BenchRow> run_bench(const BenchOptions& opts, const EditScript& script, std::ostream* log = nullptr);

std::string csv_header();
std::string csv_row(const BenchRow& r);

/// Paths (relative to the two output dirs) whose compiled outputs differ.
std::vector<std::string> compare_outputs(const fs::path& a, const fs::path& b);

}  // namespace strata::bench
