#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "strata/term.hpp"

namespace strata::build {

namespace fs = std::filesystem;

struct TaskKey {
  std::string kind;
  Term input;

  /// Canonical `Key("kind",input)` text; identity of the task.
  std::string text() const;
  Term to_term() const;
  static TaskKey from_term(const Term& t);
  static TaskKey from_text(std::string_view text);
  friend bool operator==(const TaskKey& a, const TaskKey& b) { return a.kind == b.kind && a.input == b.input; }
};

/// Hex content digest, or `kAbsent` for a missing file.
using Stamp = std::string;
inline const Stamp kAbsent = "absent";

Stamp stamp_bytes(std::string_view bytes);
Stamp stamp_term(const Term& t);
Stamp stamp_file(const fs::path& p);

struct Dep {
  enum class Kind { Task, Require, Provide };
  Kind kind;
  /// Key text of the callee for Kind::Task, the file path otherwise.
  std::string target;
  Stamp stamp;
  bool operator==(const Dep&) const = default;
};

/// Records keep outputs in printed form; terms are parsed only when a caller
/// actually consumes them.
struct TaskRecord {
  std::string kind;
  std::string output;
  Stamp output_stamp;
  std::vector<Dep> deps;
  bool operator==(const TaskRecord&) const = default;
};

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CycleError : public BuildError {
 public:
  using BuildError::BuildError;
};
class HiddenDependency : public BuildError {
 public:
  using BuildError::BuildError;
};
class OverlappingProvider : public BuildError {
 public:
  using BuildError::BuildError;
};
class StoreCorrupt : public BuildError {
 public:
  using BuildError::BuildError;
};
class StoreLocked : public BuildError {
 public:
  using BuildError::BuildError;
};

inline constexpr std::string_view kStoreMagic = "strata-store";
inline constexpr int kStoreVersion = 2;

class Store {
 public:
  /// Missing file gives an empty store; a different version gives an empty
  /// store and a warning on stderr; anything unreadable throws StoreCorrupt.
  static Store open(const fs::path& path);
  /// Atomic replace via a temporary file.
  void persist(const fs::path& path) const;

  const TaskRecord* find(const std::string& key_text) const;
  void put(const std::string& key_text, TaskRecord r);
  void erase(const std::string& key_text);
  std::size_t size() const { return records_.size(); }
  const std::unordered_map<std::string, TaskRecord>& records() const { return records_; }

  /// path -> key text of its provider
  std::map<std::string, std::string>& providers() { return providers_; }
  const std::map<std::string, std::string>& providers() const { return providers_; }

  friend bool operator==(const Store& a, const Store& b);

 private:
  std::unordered_map<std::string, TaskRecord> records_;
  std::map<std::string, std::string> providers_;
};

/// Exclusive advisory lock on `<store>.lock`, held for the object's lifetime.
class StoreLock {
 public:
  explicit StoreLock(const fs::path& store_path);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_ = -1;
};

enum class Outcome { Executed, Cached };

struct TraceEntry {
  std::string kind;
  /// Key text; `key()` parses it.
  std::string text;
  Outcome outcome;
  TaskKey key() const { return TaskKey::from_text(text); }
};
using ExecTrace = std::vector<TraceEntry>;

class Context;
using TaskFn = std::function<Term(Context&, const Term& input)>;

class Registry {
 public:
  void add(std::string kind, TaskFn fn) { fns_[std::move(kind)] = std::move(fn); }
  const TaskFn* find(const std::string& kind) const {
    auto it = fns_.find(kind);
    return it == fns_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, TaskFn, std::less<>> fns_;
};

struct FileRead {
  std::optional<std::string> bytes;
  Stamp stamp;
};

class Session;

/// Handle given to an executing task for recording its dependencies.
class Context {
 public:
  Term require_task(const TaskKey& callee);
  FileRead require_file(const fs::path& path);
  Stamp provide_file(const fs::path& path, std::string_view bytes);
  Session& session() { return session_; }
  const TaskKey& key() const { return key_; }

 private:
  friend class Session;
  Context(Session& s, const TaskKey& key, const std::string& key_text)
      : session_(s), key_(key), key_text_(key_text) {}
  Session& session_;
  const TaskKey& key_;
  const std::string& key_text_;
  std::vector<Dep> deps_;
};

/// One build session over a store: top-down validation, each task at most
/// once, dependencies recorded in execution order.
class Session {
 public:
  Session(Store& store, const Registry& registry);

  Term require(const TaskKey& key);

  const ExecTrace& trace() const { return trace_; }
  /// Exclusive wall time per task kind (nested task time is not counted in
  /// the caller's kind).
  std::map<std::string, double> kind_millis() const;

  /// Drops records not visited in this session and deletes the files that only
  /// they provided. Returns the deleted paths.
  std::vector<std::string> collect_garbage();

 private:
  friend class Context;
  using Clock = std::chrono::steady_clock;

  struct Visit {
    std::string output_text;
    Stamp stamp;
    std::optional<Term> output;
    const Term& term();
  };

  /// `key` may be null when only the text is known (validation of a stored
  /// dependency); it is parsed from the text if the task has to run.
  Visit& require_visit(const TaskKey* key, const std::string& text);
  bool validate(const TaskRecord& rec, const std::string& text);
  Visit& execute(const TaskKey& key, const std::string& text);
  void note_require(const std::string& path, const std::string& requirer);
  void note_provide(const std::string& path, const std::string& provider);
  bool depends_on(const std::string& from, const std::string& target) const;
  void switch_timer();

  Store& store_;
  const Registry& registry_;
  std::unordered_map<std::string, Visit> visited_;
  /// (key text, kind) of tasks being validated or executed, outermost first.
  std::vector<std::pair<std::string, std::string>> stack_;
  std::unordered_set<std::string> in_progress_;
  std::map<std::string, std::vector<std::string>> requirers_;
  /// Deps recorded so far by tasks currently executing, keyed by key text.
  std::unordered_map<std::string, const std::vector<Dep>*> partial_deps_;
  ExecTrace trace_;
  std::map<std::string, Clock::duration> kind_time_;
  Clock::time_point mark_;
};

struct BuildResult {
  Term output;
  ExecTrace trace;
};

/// Convenience wrapper: one session, one root.
BuildResult build(Store& store, const TaskKey& root, const Registry& registry);

}  // namespace strata::build
