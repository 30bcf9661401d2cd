#include "strata/analysis.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace strata::analysis {

using namespace syntax;

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void pattern_cons_rec(const Pattern& p, std::set<ConstructorKey>& out) {
  std::visit(overloaded{
                 [&](const PAppl& a) {
                   out.insert({a.ctor, static_cast<int>(a.args.size())});
                   for (const auto& c : a.args) pattern_cons_rec(c, out);
                 },
                 [&](const PList& l) {
                   for (const auto& c : l.items) pattern_cons_rec(c, out);
                   if (l.tail) pattern_cons_rec(**l.tail, out);
                 },
                 [&](const PTuple& t) {
                   for (const auto& c : t.items) pattern_cons_rec(c, out);
                 },
                 [&](const PAs& a) { pattern_cons_rec(*a.pattern, out); },
                 [&](const PGeneric& g) {
                   pattern_cons_rec(*g.fun, out);
                   pattern_cons_rec(*g.args, out);
                 },
                 [](const auto&) {},
             },
             p.node);
}

/// Tarjan over an explicit graph; components come out dependencies first.
template <class Node>
std::vector<std::vector<Node>> tarjan(const std::vector<Node>& nodes, const std::map<Node, std::set<Node>>& edges) {
  std::map<Node, int> index, low;
  std::set<Node> on_stack;
  std::vector<Node> stack;
  std::vector<std::vector<Node>> out;
  int counter = 0;
  std::function<void(const Node&)> visit = [&](const Node& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    if (auto it = edges.find(v); it != edges.end()) {
      for (const auto& w : it->second) {
        if (!index.count(w)) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.count(w)) {
          low[v] = std::min(low[v], index[w]);
        }
      }
    }
    if (low[v] == index[v]) {
      std::vector<Node> comp;
      Node w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp.push_back(w);
      } while (!(w == v));
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (const auto& n : nodes)
    if (!index.count(n)) visit(n);
  return out;
}

std::string join_keys(const std::set<StrategyKey>& ks) {
  std::string out;
  for (const auto& k : ks) out += (out.empty() ? "" : ", ") + k.text();
  return out;
}

}  // namespace

std::set<ConstructorKey> pattern_constructors(const Pattern& p) {
  std::set<ConstructorKey> out;
  pattern_cons_rec(p, out);
  return out;
}

std::vector<std::vector<ModuleId>> topo_sccs(const ModuleId& main,
                                             const std::map<ModuleId, std::set<ModuleId>>& imps) {
  // Reachable modules, restricted to those with known imports.
  std::set<ModuleId> reach;
  std::vector<ModuleId> todo{main};
  while (!todo.empty()) {
    ModuleId m = todo.back();
    todo.pop_back();
    if (!reach.insert(m).second) continue;
    if (auto it = imps.find(m); it != imps.end())
      for (const auto& i : it->second) todo.push_back(i);
  }
  std::map<ModuleId, std::set<ModuleId>> edges;
  for (const auto& m : reach)
    if (auto it = imps.find(m); it != imps.end()) edges[m] = it->second;

  auto comps = tarjan(std::vector<ModuleId>(reach.begin(), reach.end()), edges);

  // Kahn over the condensation, always taking the ready component with the
  // smallest member, so the order does not depend on DFS order.
  std::map<ModuleId, std::size_t> comp_of;
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (const auto& m : comps[i]) comp_of[m] = i;
  std::vector<std::set<std::size_t>> deps(comps.size()), users(comps.size());
  for (const auto& [m, is] : edges)
    for (const auto& i : is) {
      std::size_t a = comp_of[m], b = comp_of[i];
      if (a != b) {
        deps[a].insert(b);
        users[b].insert(a);
      }
    }
  using Entry = std::pair<ModuleId, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> ready;
  std::vector<std::size_t> pending(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    pending[i] = deps[i].size();
    if (pending[i] == 0) ready.push({comps[i].front(), i});
  }
  std::vector<std::vector<ModuleId>> out;
  while (!ready.empty()) {
    std::size_t c = ready.top().second;
    ready.pop();
    out.push_back(comps[c]);
    for (auto u : users[c])
      if (--pending[u] == 0) ready.push({comps[u].front(), u});
  }
  return out;
}

namespace {

std::set<StrategyKey> program_strategies(const StaticInfo& si) {
  std::set<StrategyKey> out = si.externals;
  for (const auto& [m, ks] : si.def_strs)
    if (!si.lib_modules.count(m)) out.insert(ks.begin(), ks.end());
  return out;
}

}  // namespace

void resolve_ambiguous(const StaticInfo& si, AnalysisResult& r) {
  std::set<StrategyKey> defined = program_strategies(si);
  for (const auto& [site, names] : si.amb_sites) {
    const auto& [mod, key] = site;
    const auto& vis = r.vis_strs[mod];
    const auto& vcons = r.vis_cons[mod];
    for (const auto& name : names) {
      std::set<StrategyKey> candidates;
      for (auto it = vis.lower_bound(StrategyKey{name, 0, 0}); it != vis.end() && it->name == name; ++it)
        candidates.insert(*it);
      StrategyKey zero{name, 0, 0};
      bool congruence = false;
      if (si.dyn_rules.count(name)) {
        candidates.insert(zero);
      } else if (vcons.count(ConstructorKey{name, 0}) && !defined.count(zero)) {
        candidates.insert(zero);
        congruence = true;
      }
      AmbSite where{mod, key, name};
      if (candidates.count(zero)) {
        r.resolutions[where] = zero;
        if (congruence) r.congruences.insert(ConstructorKey{name, 0});
      } else if (candidates.size() == 1) {
        r.resolutions[where] = *candidates.begin();
      } else {
        std::string detail = "bare reference in " + key.text() + " ";
        detail += candidates.empty() ? "matches no visible strategy"
                                     : "matches several arities: " + join_keys(candidates);
        r.errors.push_back({"AmbiguousReference", name, mod, detail});
      }
    }
  }
}

std::vector<StaticError> check_extend_override(const StaticInfo& si) {
  std::vector<StaticError> out;
  for (const auto& [key, defs] : si.str_asts) {
    std::vector<const ModDef*> plain, extend, override_;
    for (const auto& d : defs) {
      switch (d.def.modifier) {
        case Modifier::Plain: plain.push_back(&d); break;
        case Modifier::Extend: extend.push_back(&d); break;
        case Modifier::Override: override_.push_back(&d); break;
      }
    }
    bool external = si.externals.count(key) > 0;
    std::size_t modified = extend.size() + override_.size();
    const ModuleId& first_mod = modified ? (extend.empty() ? override_ : extend).front()->module : ModuleId{};
    if (modified && !external)
      out.push_back({"ExtendOverrideViolation", key.text(), first_mod,
                     "(a) extend/override of a strategy that no library defines"});
    if (!extend.empty() && !override_.empty()) {
      out.push_back({"ExtendOverrideViolation", key.text(), override_.front()->module,
                     "(d) both extended (in " + extend.front()->module + ") and overridden"});
    } else if (modified > 1) {
      const auto& group = extend.empty() ? override_ : extend;
      out.push_back({"ExtendOverrideViolation", key.text(), group[1]->module,
                     "(b) more than one extend/override definition (also in " + group[0]->module + ")"});
    }
    if (!plain.empty() && external)
      out.push_back({"ExtendOverrideViolation", key.text(), plain.front()->module,
                     "(c) plain definition of a library strategy; use extend or override"});
  }
  return out;
}

std::vector<StaticError> check_overlay_cycles(
    const std::map<ConstructorKey, std::vector<std::pair<ModuleId, OverlayDef>>>& olay_asts) {
  std::vector<StaticError> out;
  std::map<ConstructorKey, std::set<ConstructorKey>> edges;
  std::vector<ConstructorKey> nodes;
  for (const auto& [key, defs] : olay_asts) {
    if (defs.empty()) continue;
    std::vector<std::pair<ModuleId, OverlayDef>> sorted = defs;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      out.push_back({"DuplicateOverlay", key.text(), sorted[i].first, "also defined in " + sorted[0].first});
    nodes.push_back(key);
    for (const auto& [_, o] : sorted)
      for (const auto& c : pattern_constructors(o.body))
        if (olay_asts.count(c)) edges[key].insert(c);
  }
  for (const auto& comp : tarjan(nodes, edges)) {
    bool self = comp.size() == 1 && edges[comp[0]].count(comp[0]);
    if (comp.size() < 2 && !self) continue;
    std::string members;
    for (const auto& c : comp) members += (members.empty() ? "" : ", ") + c.text();
    auto defs = olay_asts.at(comp.front());
    std::sort(defs.begin(), defs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out.push_back({"OverlayCycle", "{" + members + "}", defs.front().first, "overlay expansion would not terminate"});
  }
  return out;
}

AnalysisResult static_checks(const ModuleId& main, const StaticInfo& si) {
  AnalysisResult r;
  for (const auto& scc : topo_sccs(main, si.imps)) {
    std::set<StrategyKey> strs;
    std::set<ConstructorKey> cons;
    std::set<ModuleId> members(scc.begin(), scc.end());
    for (const auto& m : scc) {
      if (auto it = si.def_strs.find(m); it != si.def_strs.end()) strs.insert(it->second.begin(), it->second.end());
      if (auto it = si.def_cons.find(m); it != si.def_cons.end()) cons.insert(it->second.begin(), it->second.end());
      auto imps = si.imps.find(m);
      if (imps == si.imps.end()) continue;
      for (const auto& i : imps->second) {
        if (members.count(i)) continue;
        const auto& vs = r.vis_strs[i];
        const auto& vc = r.vis_cons[i];
        strs.insert(vs.begin(), vs.end());
        cons.insert(vc.begin(), vc.end());
      }
    }
    for (const auto& m : scc) {
      r.vis_strs[m] = strs;
      r.vis_cons[m] = cons;
    }
  }

  std::set<StrategyKey> defined = program_strategies(si);
  for (const auto& [mod, used] : si.used_strs) {
    if (si.lib_modules.count(mod)) continue;
    const auto& vis = r.vis_strs[mod];
    const auto& vcons = r.vis_cons[mod];
    for (const auto& k : used) {
      if (vis.count(k)) continue;
      if (k.sarity == 0 && k.tarity == 0 && si.dyn_rules.count(k.name)) continue;
      ConstructorKey c{k.name, k.sarity};
      if (k.tarity == 0 && si.olay_asts.count(c)) {
        r.errors.push_back({"OverlayAsStrategy", k.text(), mod, "overlay " + c.text() + " used as a strategy"});
      } else if (k.tarity == 0 && vcons.count(c) && !defined.count(k)) {
        r.congruences.insert(c);
      } else {
        r.errors.push_back({"UnresolvedStrategy", k.text(), mod, "no visible definition"});
      }
    }
  }
  for (const auto& [mod, used] : si.used_cons) {
    if (si.lib_modules.count(mod)) continue;
    const auto& vcons = r.vis_cons[mod];
    for (const auto& c : used)
      if (!vcons.count(c) && !si.olay_asts.count(c))
        r.errors.push_back({"UnresolvedConstructor", c.text(), mod, "no visible constructor or overlay"});
  }

  for (const auto& n : si.dyn_rules) {
    StrategyKey k{n, 0, 0};
    if (!defined.count(k)) continue;
    ModuleId where = "<library>";
    for (const auto& [m, ks] : si.def_strs)
      if (!si.lib_modules.count(m) && ks.count(k)) {
        where = m;
        break;
      }
    r.errors.push_back({"DynamicRuleClash", k.text(), where, "dynamic rule " + n + " needs this key for its applicator"});
  }

  resolve_ambiguous(si, r);
  auto eo = check_extend_override(si);
  r.errors.insert(r.errors.end(), eo.begin(), eo.end());
  auto oc = check_overlay_cycles(si.olay_asts);
  r.errors.insert(r.errors.end(), oc.begin(), oc.end());
  sort_errors(r.errors);
  return r;
}

}  // namespace strata::analysis
