#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/info.hpp"

namespace strata::backend {

using syntax::Strategy;

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `$s<i>` / `$t<i>`: canonical formal parameter names of compiled units.
std::string sparam_name(int i);
std::string tparam_name(int i);

/// `<name>.<s>.<t>.unit`
std::string unit_file_name(const StrategyKey& key);

/// Replaces every AmbRef by a call to its resolved key.
Strategy resolve_refs(const Strategy& body, const std::map<std::string, StrategyKey>& resolutions,
                      const StrategyKey& enclosing);

/// Body of `d` with its formals renamed to the canonical names. Scopes that
/// rebind a term parameter's name shadow the renaming.
Strategy canonical_body(const CoreDef& d);

/// Orders by (module, index), canonicalizes parameters and folds the bodies
/// into a right-nested left choice.
Strategy merge_definitions(const StrategyKey& key, std::vector<ModDef> defs);

/// Greedy overlay expansion in every pattern position, to a fixpoint.
Strategy expand_overlays(const Strategy& body, const std::map<ConstructorKey, OverlayDef>& overlays);
syntax::Pattern expand_overlays(const syntax::Pattern& p, const std::map<ConstructorKey, OverlayDef>& overlays);

Strategy gen_congruence(const ConstructorKey& c);
Strategy gen_dynrule_support(const std::string& name);

/// Canonical unit file content, newline-terminated.
std::string unit_text(const StrategyKey& key, const Strategy& body);

struct BackEndDef {
  ModuleId module;
  int index = 0;
  CoreDef def;
  std::map<std::string, StrategyKey> resolutions;
  bool operator==(const BackEndDef&) const = default;
};

/// Everything the back-end task for one key needs.
struct BackEndInput {
  StrategyKey key;
  std::vector<BackEndDef> defs;
  std::vector<OverlayDef> overlays;
  bool operator==(const BackEndInput&) const = default;
};

Term to_term(const BackEndInput& in);
BackEndInput back_end_input_from_term(const Term& t);

/// resolve -> merge -> expand, then a closedness check.
Strategy compile_strategy(const BackEndInput& in);

struct ManifestExternal {
  StrategyKey key;
  std::string dir;
};

struct Manifest {
  std::map<StrategyKey, std::string> units;
  std::set<ConstructorKey> constructors;
  std::set<std::string> dyn_rules;
  std::vector<ManifestExternal> externals;
};

Term to_term(const Manifest& m);
Manifest manifest_from_term(const Term& t);
/// Canonical manifest file content, newline-terminated.
std::string manifest_text(const Manifest& m);

inline constexpr std::string_view kManifestFile = "program.manifest";

}  // namespace strata::backend
