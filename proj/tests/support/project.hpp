#pragma once

#include <map>
#include <string>
#include <vector>

#include "fs_util.hpp"
#include "strata/pipeline.hpp"
#include "strata/runtime.hpp"

namespace strata::testing {

/// A throwaway source tree plus output dir and store.
class Project {
 public:
  explicit Project(const std::string& tag = "proj");

  fs::path src() const { return dir_ / "src"; }
  fs::path out() const { return dir_ / "out"; }
  fs::path store() const { return dir_ / "store"; }
  fs::path root() const { return dir_.path(); }

  /// Writes `<src>/<id>.str`.
  void module(const std::string& id, const std::string& text) const;
  void remove(const std::string& id) const;
  /// Makes a library `<root>/libs/<id>` from (key, body) pairs given as core
  /// text, and adds the dir to the library path.
  void library(const std::string& id, const std::map<syntax::StrategyKey, std::string>& units,
               const std::vector<syntax::ConstructorKey>& cons = {});

  pipeline::Config config() const;
  pipeline::CompileResult compile(const std::string& main, bool clean = false) const;
  pipeline::Collected collect(const std::string& main) const;
  runtime::Program load() const;

  std::vector<fs::path> libs;

 private:
  TempDir dir_;
};

std::vector<std::string> error_kinds(const std::vector<StaticError>& errors);

}  // namespace strata::testing
