#pragma once

#include <map>
#include <set>
#include <vector>

#include "strata/info.hpp"

namespace strata::analysis {

struct AnalysisResult {
  std::map<ModuleId, std::set<StrategyKey>> vis_strs;
  std::map<ModuleId, std::set<ConstructorKey>> vis_cons;
  /// Bare-name site -> resolved key (a strategy, a congruence `c/0-0`, or a
  /// dynamic-rule applicator `N/0-0`).
  std::map<AmbSite, StrategyKey> resolutions;
  std::set<ConstructorKey> congruences;
  std::vector<StaticError> errors;
};

/// Strongly connected components of the modules reachable from `main`,
/// dependencies first; independent components ordered by smallest member.
std::vector<std::vector<ModuleId>> topo_sccs(const ModuleId& main,
                                             const std::map<ModuleId, std::set<ModuleId>>& imps);

/// Never throws; all problems end up in `errors`, sorted.
AnalysisResult static_checks(const ModuleId& main, const StaticInfo& si);

/// Resolves every bare-name site against the visibility in `r`, adding
/// resolutions and AmbiguousReference errors to `r`.
void resolve_ambiguous(const StaticInfo& si, AnalysisResult& r);

std::vector<StaticError> check_extend_override(const StaticInfo& si);

std::vector<StaticError> check_overlay_cycles(
    const std::map<ConstructorKey, std::vector<std::pair<ModuleId, OverlayDef>>>& olay_asts);

/// Constructor keys occurring in a pattern (used for overlay graphs and closures).
std::set<ConstructorKey> pattern_constructors(const syntax::Pattern& p);

}  // namespace strata::analysis
