#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "strata/syntax.hpp"
#include "strata/term.hpp"

namespace strata {

using syntax::ConstructorKey;
using syntax::CoreDef;
using syntax::ModuleId;
using syntax::OverlayDef;
using syntax::StrategyKey;

/// Compile diagnostic. Front-end problems (ParseError, DesugarError,
/// ModuleNotFound, LibraryError) share the format with static errors.
struct StaticError {
  std::string kind;
  std::string subject;
  ModuleId module;
  std::string detail;

  auto operator<=>(const StaticError&) const = default;
};

/// `error: <kind>: <subject> in <module> — <detail>`
std::string render(const StaticError& e);
void sort_errors(std::vector<StaticError>& errors);
Term to_term(const StaticError& e);
StaticError static_error_from_term(const Term& t);

/// One definition occurrence of a strategy key.
struct StrDef {
  int index = 0;
  CoreDef def;
  bool operator==(const StrDef&) const = default;
};

struct FrontInfo {
  std::set<ModuleId> imps;
  std::set<StrategyKey> def_strs;
  std::set<ConstructorKey> def_cons;
  std::set<StrategyKey> used_strs;
  std::set<ConstructorKey> used_cons;
  std::map<StrategyKey, std::set<ConstructorKey>> str_used_cons;
  std::map<StrategyKey, std::vector<StrDef>> str_asts;
  std::map<ConstructorKey, std::vector<OverlayDef>> olay_asts;
  std::set<std::string> dyn_rules;
  std::map<StrategyKey, std::set<std::string>> amb_sites;
  std::vector<StaticError> errors;
  std::vector<std::string> warnings;

  bool operator==(const FrontInfo&) const = default;
};

/// Adds a sub-front-end fragment into a module's FrontInfo.
void merge_fragment(FrontInfo& into, const FrontInfo& fragment);

Term to_term(const FrontInfo& fi);
FrontInfo front_info_from_term(const Term& t);

struct LibInfo {
  std::set<StrategyKey> def_strs;
  std::set<ConstructorKey> def_cons;
  std::string unit_dir;
  bool operator==(const LibInfo&) const = default;
};

Term to_term(const LibInfo& li);
LibInfo lib_info_from_term(const Term& t);
/// Parses `Library([Ext("name",s,t)...],[Con("name",a)...])`.
LibInfo parse_lib_manifest(std::string_view text, const std::string& unit_dir);

/// One definition in the whole program.
struct ModDef {
  ModuleId module;
  int index = 0;
  CoreDef def;
  bool operator==(const ModDef&) const = default;
};

/// Site of a bare strategy name: (module, enclosing key, name).
using AmbSite = std::tuple<ModuleId, StrategyKey, std::string>;

struct StaticInfo {
  std::map<ModuleId, std::set<ModuleId>> imps;
  std::map<ModuleId, std::set<StrategyKey>> def_strs;
  std::map<ModuleId, std::set<ConstructorKey>> def_cons;
  std::map<ModuleId, std::set<StrategyKey>> used_strs;
  std::map<ModuleId, std::set<ConstructorKey>> used_cons;
  std::map<StrategyKey, std::set<ConstructorKey>> str_used_cons;
  std::map<StrategyKey, std::vector<ModDef>> str_asts;
  std::map<ConstructorKey, std::vector<std::pair<ModuleId, OverlayDef>>> olay_asts;
  std::set<std::string> dyn_rules;
  std::set<StrategyKey> externals;
  /// External key -> unit directory of the first combined library declaring it.
  std::map<StrategyKey, std::string> external_dirs;
  std::map<std::pair<ModuleId, StrategyKey>, std::set<std::string>> amb_sites;
  std::set<ModuleId> lib_modules;
  std::vector<std::string> warnings;
};

void combine_info(StaticInfo& si, const ModuleId& mod, const FrontInfo& fi, const std::set<ModuleId>& default_imps);
void combine_info_lib(StaticInfo& si, const ModuleId& mod, const LibInfo& li);

// Generic term encodings shared by the task layer.
Term keys_to_term(const std::set<StrategyKey>& ks);
Term cons_to_term(const std::set<ConstructorKey>& cs);
Term strings_to_term(const std::set<std::string>& ss);
std::set<StrategyKey> keys_from_term(const Term& t);
std::set<ConstructorKey> cons_from_term(const Term& t);
std::set<std::string> strings_from_term(const Term& t);
Term to_term(const CoreDef& d);
CoreDef core_def_from_term(const Term& t);

}  // namespace strata
