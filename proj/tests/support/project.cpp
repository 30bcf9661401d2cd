#include "project.hpp"

#include <algorithm>

#include "strata/backend.hpp"

namespace strata::testing {

Project::Project(const std::string& tag) : dir_(tag) { fs::create_directories(src()); }

void Project::module(const std::string& id, const std::string& text) const {
  write_text(src() / (id + ".str"), text);
}

void Project::remove(const std::string& id) const { fs::remove(src() / (id + ".str")); }

void Project::library(const std::string& id, const std::map<syntax::StrategyKey, std::string>& units,
                      const std::vector<syntax::ConstructorKey>& cons) {
  fs::path libs_root = dir_ / "libs";
  fs::path d = libs_root / id;
  std::vector<Term> exts, cs;
  for (const auto& [key, core] : units) {
    write_text(d / backend::unit_file_name(key), "Unit(" + print_term(to_term(key)) + "," + core + ")\n");
    exts.push_back(Term::appl("Ext", {Term::string(key.name), Term::integer(key.sarity), Term::integer(key.tarity)}));
  }
  for (const auto& c : cons) cs.push_back(Term::appl("Con", {Term::string(c.name), Term::integer(c.arity)}));
  write_text(d / "lib.manifest", print_term(Term::appl("Library", {Term::list(exts), Term::list(cs)})) + "\n");
  if (std::find(libs.begin(), libs.end(), libs_root) == libs.end()) libs.push_back(libs_root);
}

pipeline::Config Project::config() const {
  pipeline::Config c;
  c.src = src();
  c.libs = libs;
  c.out = out();
  c.std_root = pipeline::default_std_root();
  return c;
}

pipeline::CompileResult Project::compile(const std::string& main, bool clean) const {
  pipeline::CompileOptions o;
  o.main = main;
  o.config = config();
  o.store = store();
  o.clean = clean;
  return pipeline::compile(o);
}

pipeline::Collected Project::collect(const std::string& main) const { return pipeline::collect(main, config()); }

runtime::Program Project::load() const { return runtime::load_program(out(), libs); }

std::vector<std::string> error_kinds(const std::vector<StaticError>& errors) {
  std::vector<std::string> kinds;
  for (const auto& e : errors) kinds.push_back(e.kind);
  return kinds;
}

}  // namespace strata::testing
