#include "strata/build_engine.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "strata/digest.hpp"

namespace strata::build {

namespace {

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw BuildError("cannot write " + p.string());
}

char dep_code(Dep::Kind k) {
  switch (k) {
    case Dep::Kind::Task: return 'T';
    case Dep::Kind::Require: return 'Q';
    case Dep::Kind::Provide: return 'P';
  }
  throw BuildError("bad dependency kind");
}

// Store file: a header line, then length-prefixed fields. `R` records,
// `V` providers, `E` ends the file so truncation is detected.
void put_str(std::string& out, std::string_view s) {
  out += std::to_string(s.size());
  out += ':';
  out += s;
}

class StoreReader {
 public:
  explicit StoreReader(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  char tag() {
    if (at_end()) throw StoreCorrupt("unexpected end of store");
    return text_[pos_++];
  }
  std::size_t num(char stop) {
    std::size_t n = 0;
    bool any = false;
    while (!at_end() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      n = n * 10 + static_cast<std::size_t>(text_[pos_++] - '0');
      any = true;
      if (n > text_.size()) throw StoreCorrupt("bad length in store");
    }
    if (!any || at_end() || text_[pos_] != stop) throw StoreCorrupt("malformed store field");
    ++pos_;
    return n;
  }
  std::string str() {
    std::size_t n = num(':');
    if (text_.size() - pos_ < n) throw StoreCorrupt("unexpected end of store");
    std::string s(text_.substr(pos_, n));
    pos_ += n;
    return s;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Term TaskKey::to_term() const { return Term::appl("Key", {Term::string(kind), input}); }

std::string TaskKey::text() const { return print_term(to_term()); }

TaskKey TaskKey::from_term(const Term& t) {
  expect_appl(t, "Key", 2);
  return TaskKey{expect_str(t[0]), t[1]};
}

TaskKey TaskKey::from_text(std::string_view text) { return from_term(parse_term(text)); }

Stamp stamp_bytes(std::string_view bytes) { return digest_hex(bytes); }

Stamp stamp_term(const Term& t) { return digest_hex(print_term(t)); }

Stamp stamp_file(const fs::path& p) {
  auto bytes = read_file(p);
  return bytes ? stamp_bytes(*bytes) : kAbsent;
}

// ---- Store ----

const TaskRecord* Store::find(const std::string& key_text) const {
  auto it = records_.find(key_text);
  return it == records_.end() ? nullptr : &it->second;
}

void Store::put(const std::string& key_text, TaskRecord r) { records_.insert_or_assign(key_text, std::move(r)); }

void Store::erase(const std::string& key_text) { records_.erase(key_text); }

Store Store::open(const fs::path& path) {
  auto bytes = read_file(path);
  if (!bytes) {
    if (fs::exists(path)) throw StoreCorrupt("cannot read store " + path.string());
    return Store{};
  }
  std::string_view text = *bytes;
  auto nl = text.find('\n');
  std::istringstream header(std::string(text.substr(0, nl == std::string_view::npos ? 0 : nl)));
  std::string magic, algorithm;
  int version = 0;
  header >> magic >> version >> algorithm;
  if (magic != kStoreMagic) {
    if (text.substr(0, 6) == "Store(") {
      std::cerr << "warning: store " << path.string() << " has an older format; rebuilding from scratch\n";
      return Store{};
    }
    throw StoreCorrupt("not a store file: " + path.string());
  }
  if (version != kStoreVersion || algorithm != kDigestAlgorithm) {
    std::cerr << "warning: store " << path.string() << " has an incompatible format; rebuilding from scratch\n";
    return Store{};
  }
  try {
    Store s;
    StoreReader in(text.substr(nl + 1));
    for (;;) {
      char tag = in.tag();
      if (tag == '\n') continue;
      if (tag == 'E') break;
      if (tag == 'R') {
        std::string key = in.str();
        TaskRecord rec;
        rec.kind = in.str();
        rec.output = in.str();
        rec.output_stamp = in.str();
        std::size_t n = in.num(';');
        rec.deps.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          char code = in.tag();
          Dep d{code == 'T' ? Dep::Kind::Task : code == 'Q' ? Dep::Kind::Require : Dep::Kind::Provide, {}, {}};
          if (code != 'T' && code != 'Q' && code != 'P') throw StoreCorrupt("unknown dependency tag");
          d.target = in.str();
          d.stamp = in.str();
          rec.deps.push_back(std::move(d));
        }
        s.records_.emplace(std::move(key), std::move(rec));
      } else if (tag == 'V') {
        std::string p = in.str();
        s.providers_[p] = in.str();
      } else {
        throw StoreCorrupt("unknown entry tag");
      }
    }
    return s;
  } catch (const StoreCorrupt& e) {
    throw StoreCorrupt("corrupt store " + path.string() + ": " + e.what());
  }
}

void Store::persist(const fs::path& path) const {
  std::vector<const std::pair<const std::string, TaskRecord>*> sorted;
  for (const auto& e : records_) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->first < b->first; });

  std::string out = std::string(kStoreMagic) + " " + std::to_string(kStoreVersion) + " " +
                    std::string(kDigestAlgorithm) + "\n";
  for (const auto* e : sorted) {
    const TaskRecord& r = e->second;
    out += 'R';
    put_str(out, e->first);
    put_str(out, r.kind);
    put_str(out, r.output);
    put_str(out, r.output_stamp);
    out += std::to_string(r.deps.size());
    out += ';';
    for (const auto& d : r.deps) {
      out += dep_code(d.kind);
      put_str(out, d.target);
      put_str(out, d.stamp);
    }
    out += '\n';
  }
  for (const auto& [p, key] : providers_) {
    if (!records_.count(key)) continue;
    out += 'V';
    put_str(out, p);
    put_str(out, key);
    out += '\n';
  }
  out += "E\n";
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, out);
  fs::rename(tmp, path);
}

bool operator==(const Store& a, const Store& b) { return a.records_ == b.records_ && a.providers_ == b.providers_; }

StoreLock::StoreLock(const fs::path& store_path) {
  fs::path lock = store_path;
  lock += ".lock";
  if (lock.has_parent_path()) fs::create_directories(lock.parent_path());
  fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw BuildError("cannot open lock file " + lock.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw StoreLocked("store " + store_path.string() + " is in use by another build");
  }
}

StoreLock::~StoreLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// ---- Context ----

Term Context::require_task(const TaskKey& callee) {
  std::string text = callee.text();
  auto& visit = session_.require_visit(&callee, text);
  deps_.push_back(Dep{Dep::Kind::Task, std::move(text), visit.stamp});
  return visit.term();
}

FileRead Context::require_file(const fs::path& path) {
  std::string p = path.string();
  FileRead r{read_file(path), {}};
  r.stamp = r.bytes ? stamp_bytes(*r.bytes) : kAbsent;
  session_.note_require(p, key_text_);
  deps_.push_back(Dep{Dep::Kind::Require, p, r.stamp});
  return r;
}

Stamp Context::provide_file(const fs::path& path, std::string_view bytes) {
  std::string p = path.string();
  session_.note_provide(p, key_text_);
  write_file(path, bytes);
  Stamp s = stamp_bytes(bytes);
  deps_.push_back(Dep{Dep::Kind::Provide, p, s});
  return s;
}

// ---- Session ----

const Term& Session::Visit::term() {
  if (!output) output = parse_term(output_text);
  return *output;
}

Session::Session(Store& store, const Registry& registry)
    : store_(store), registry_(registry), mark_(Clock::now()) {}

Term Session::require(const TaskKey& key) { return require_visit(&key, key.text()).term(); }

void Session::switch_timer() {
  auto now = Clock::now();
  if (!stack_.empty()) kind_time_[stack_.back().second] += now - mark_;
  mark_ = now;
}

std::map<std::string, double> Session::kind_millis() const {
  std::map<std::string, double> out;
  for (const auto& [k, d] : kind_time_) out[k] = std::chrono::duration<double, std::milli>(d).count();
  return out;
}

Session::Visit& Session::require_visit(const TaskKey* key, const std::string& text) {
  if (auto it = visited_.find(text); it != visited_.end()) return it->second;
  if (in_progress_.count(text)) {
    std::string cycle;
    bool on = false;
    for (const auto& [k, kind] : stack_) {
      if (k == text) on = true;
      if (on) cycle += k + " -> ";
    }
    throw CycleError("task cycle: " + cycle + text);
  }

  const TaskRecord* rec = store_.find(text);
  std::optional<TaskKey> parsed;
  if (!key && !rec) key = &parsed.emplace(TaskKey::from_text(text));
  std::string kind = key ? key->kind : rec->kind;

  switch_timer();
  stack_.emplace_back(text, kind);
  in_progress_.insert(text);
  try {
    Visit* result = nullptr;
    // Records are never erased during a session and map nodes are stable, so
    // `rec` stays valid while dependencies are validated.
    if (rec && validate(*rec, text)) {
      result = &visited_.emplace(text, Visit{rec->output, rec->output_stamp, std::nullopt}).first->second;
      trace_.push_back({kind, text, Outcome::Cached});
    } else {
      if (!key) key = &parsed.emplace(TaskKey::from_text(text));
      result = &execute(*key, text);
    }
    switch_timer();
    stack_.pop_back();
    in_progress_.erase(text);
    return *result;
  } catch (...) {
    switch_timer();
    stack_.pop_back();
    in_progress_.erase(text);
    throw;
  }
}

bool Session::validate(const TaskRecord& rec, const std::string& text) {
  for (const auto& d : rec.deps) {
    switch (d.kind) {
      case Dep::Kind::Task:
        if (require_visit(nullptr, d.target).stamp != d.stamp) return false;
        break;
      case Dep::Kind::Require:
        if (stamp_file(d.target) != d.stamp) return false;
        note_require(d.target, text);
        break;
      case Dep::Kind::Provide:
        if (stamp_file(d.target) != d.stamp) return false;
        note_provide(d.target, text);
        break;
    }
  }
  return true;
}

Session::Visit& Session::execute(const TaskKey& key, const std::string& text) {
  const TaskFn* fn = registry_.find(key.kind);
  if (!fn) throw BuildError("no implementation for task kind '" + key.kind + "'");
  Context ctx(*this, key, text);
  partial_deps_[text] = &ctx.deps_;
  Term output = Term::integer(0);
  try {
    output = (*fn)(ctx, key.input);
  } catch (...) {
    partial_deps_.erase(text);
    throw;
  }
  partial_deps_.erase(text);

  // Paths this task provided last time but not now lose their provider.
  if (const TaskRecord* old = store_.find(text)) {
    for (const auto& d : old->deps) {
      if (d.kind != Dep::Kind::Provide) continue;
      bool still = std::any_of(ctx.deps_.begin(), ctx.deps_.end(),
                               [&](const Dep& n) { return n.kind == Dep::Kind::Provide && n.target == d.target; });
      auto it = store_.providers().find(d.target);
      if (!still && it != store_.providers().end() && it->second == text) store_.providers().erase(it);
    }
  }
  std::string printed = print_term(output);
  Stamp stamp = stamp_bytes(printed);
  store_.put(text, TaskRecord{key.kind, printed, stamp, std::move(ctx.deps_)});
  trace_.push_back({key.kind, text, Outcome::Executed});
  return visited_.emplace(text, Visit{std::move(printed), std::move(stamp), std::move(output)}).first->second;
}

bool Session::depends_on(const std::string& from, const std::string& target) const {
  std::vector<std::string> todo{from};
  std::unordered_set<std::string> seen;
  while (!todo.empty()) {
    std::string k = std::move(todo.back());
    todo.pop_back();
    if (k == target) return true;
    if (!seen.insert(k).second) continue;
    const std::vector<Dep>* deps = nullptr;
    if (auto it = partial_deps_.find(k); it != partial_deps_.end()) {
      deps = it->second;
    } else if (const TaskRecord* r = store_.find(k)) {
      deps = &r->deps;
    }
    if (!deps) continue;
    for (const auto& d : *deps)
      if (d.kind == Dep::Kind::Task) todo.push_back(d.target);
  }
  return false;
}

void Session::note_require(const std::string& path, const std::string& requirer) {
  auto it = store_.providers().find(path);
  if (it != store_.providers().end() && it->second != requirer && !depends_on(requirer, it->second))
    throw HiddenDependency("task " + requirer + " reads " + path + " generated by " + it->second +
                           " without requiring it");
  requirers_[path].push_back(requirer);
}

void Session::note_provide(const std::string& path, const std::string& provider) {
  auto it = store_.providers().find(path);
  if (it != store_.providers().end() && it->second != provider &&
      (visited_.count(it->second) || in_progress_.count(it->second)))
    throw OverlappingProvider("file " + path + " provided by both " + it->second + " and " + provider);
  if (auto r = requirers_.find(path); r != requirers_.end()) {
    for (const auto& req : r->second)
      if (req != provider && !depends_on(req, provider))
        throw HiddenDependency("task " + req + " read " + path + " before its generator " + provider + " ran");
  }
  store_.providers()[path] = provider;
}

std::vector<std::string> Session::collect_garbage() {
  std::set<std::string> candidates;
  std::vector<std::string> dead;
  for (const auto& [k, r] : store_.records()) {
    if (visited_.count(k)) continue;
    dead.push_back(k);
    for (const auto& d : r.deps)
      if (d.kind == Dep::Kind::Provide) candidates.insert(d.target);
  }
  for (const auto& [path, k] : store_.providers())
    if (!visited_.count(k)) candidates.insert(path);
  for (const auto& k : dead) store_.erase(k);

  std::vector<std::string> deleted;
  for (const auto& path : candidates) {
    auto it = store_.providers().find(path);
    if (it != store_.providers().end() && visited_.count(it->second)) continue;
    if (it != store_.providers().end()) store_.providers().erase(it);
    std::error_code ec;
    if (fs::remove(path, ec)) deleted.push_back(path);
  }
  return deleted;
}

BuildResult build(Store& store, const TaskKey& root, const Registry& registry) {
  Session s(store, registry);
  Term out = s.require(root);
  return {out, s.trace()};
}

}  // namespace strata::build
