#pragma once

#include <coroutine>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyrun/attacker.hpp"
#include "dyrun/deduction.hpp"
#include "dyrun/task.hpp"
#include "dyrun/term.hpp"
#include "dyrun/trace.hpp"

namespace dyrun::sim {

inline constexpr std::uint64_t kDefaultStepBudget = 100'000;

enum class RunStatus : std::uint8_t { ok, assert_failed, budget_exhausted };
std::string_view to_string(RunStatus status);

/// Raised when the simulator itself breaks an invariant (for instance an
/// attacker delivery that is not derivable). Never a game outcome.
class SimulatorError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Context;
class Runtime;
using ProcessBody = std::function<Task<void>(Context&)>;
using RecvFilter = std::function<bool(const Term&)>;

/// Mutual exclusion between cooperatively scheduled processes.
class Lock {
 public:
  bool held() const noexcept { return holder_.has_value(); }
  std::optional<Pid> holder() const noexcept { return holder_; }

 private:
  friend class Runtime;
  friend class Context;
  std::optional<Pid> holder_;
};

/// Shared mutable cell. Reads and writes are not yield points.
template <class T>
class Cell {
 public:
  explicit Cell(T initial = T{}) : value_(std::move(initial)) {}
  const T& read() const noexcept { return value_; }
  T& get() noexcept { return value_; }
  void write(T v) { value_ = std::move(v); }

 private:
  T value_;
};

template <class T>
std::shared_ptr<Cell<T>> new_cell(T initial = T{}) {
  return std::make_shared<Cell<T>>(std::move(initial));
}
inline std::shared_ptr<Lock> new_lock() { return std::make_shared<Lock>(); }

/// Per-process handle through which role code reaches the network and the
/// scheduler. Yield points are send, recv, fork, acquire, wait_until and
/// yield; a failed check halts the run at the check.
class Context {
 public:
  Pid pid() const noexcept;
  Runtime& runtime() noexcept { return *rt_; }

  /// Fresh honest nonce, traced.
  Term mk_nonce();

  struct SendAwaiter {
    Context* ctx;
    Term term;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  struct RecvAwaiter {
    Context* ctx;
    RecvFilter filter;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    Term await_resume();
  };
  struct ForkAwaiter {
    Context* ctx;
    ProcessBody body;
    bool daemon;
    Pid child = kAttackerPid;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    Pid await_resume() const noexcept { return child; }
  };
  struct YieldAwaiter {
    Context* ctx;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  struct CheckAwaiter {
    Context* ctx;
    bool ok;
    bool await_ready() const noexcept { return ok; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  struct AcquireAwaiter {
    Context* ctx;
    Lock* lock;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };
  struct WaitAwaiter {
    Context* ctx;
    std::function<bool()> predicate;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };

  SendAwaiter send(Term t) { return {this, std::move(t)}; }
  RecvAwaiter recv(RecvFilter filter = {}) { return {this, std::move(filter)}; }
  ForkAwaiter fork(ProcessBody body) { return {this, std::move(body), false}; }
  /// A daemon does not keep the run alive: the run ends ok once every
  /// non-daemon process has returned.
  ForkAwaiter fork_daemon(ProcessBody body) { return {this, std::move(body), true}; }
  YieldAwaiter yield() { return {this}; }
  /// Records assert_ok or assert_fail. Awaiting a failed check never resumes.
  CheckAwaiter check(std::string label, bool ok, std::string detail = {});
  AcquireAwaiter acquire(Lock& lock) { return {this, &lock}; }
  /// Throws std::logic_error when the lock is not held. Ownership may be
  /// handed to a forked process, so any process may release.
  void release(Lock& lock);
  /// Blocks until the predicate holds; it is evaluated by the scheduler.
  WaitAwaiter wait_until(std::function<bool()> predicate) { return {this, std::move(predicate)}; }

 private:
  friend class Runtime;
  Context(Runtime* rt, Pid pid) : rt_(rt), pid_(pid) {}
  Runtime* rt_;
  Pid pid_;
};

struct RunResult {
  RunStatus status = RunStatus::ok;
  Trace trace;
  std::uint64_t steps = 0;
  /// True when the run stopped because no process could make progress.
  bool deadlocked = false;
};

/// Cooperative, seed-deterministic scheduler with an attacker-controlled
/// network. At every step one candidate is drawn uniformly from the runnable
/// processes, the receivers the attacker can serve, lock waiters whose lock is
/// free, and waiters whose predicate holds.
class Runtime {
 public:
  Runtime(std::uint64_t seed, AttackerStrategy strategy, std::uint64_t step_budget = kDefaultStepBudget);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Replaces the attacker before the run starts; scripted initial knowledge
  /// is leaked immediately. Lets scripts refer to keys minted by this runtime.
  void set_strategy(AttackerStrategy strategy);

  /// Adds a top-level process; pids are assigned in spawn order from 0.
  Pid spawn(ProcessBody body, bool daemon = false);

  /// Fresh nonce created outside any process (setup code), traced with the
  /// attacker pid as owner.
  Term fresh_nonce(NonceOrigin origin);
  /// Gives a term to the attacker without sending it.
  void leak(const Term& t);
  /// Sends on behalf of setup code.
  void send(const Term& t, Pid sender = kAttackerPid);

  /// Runs to completion, deadlock, assertion failure or budget exhaustion.
  RunStatus run();

  const Trace& trace() const noexcept { return trace_; }
  Trace& trace() noexcept { return trace_; }
  Trace take_trace() { return std::move(trace_); }
  const Knowledge& knowledge() const noexcept { return knowledge_; }
  const NonceRegistry& nonces() const noexcept { return registry_; }
  const std::vector<PoolEntry>& pool() const noexcept { return pool_; }
  std::uint64_t steps() const noexcept { return steps_; }
  bool deadlocked() const noexcept { return deadlocked_; }
  /// Number of deliveries that did not come verbatim from the pool.
  std::uint64_t injections() const noexcept { return injections_; }
  Rng& rng() noexcept { return rng_; }

 private:
  friend class Context;
  struct Process;
  enum class Wait : std::uint8_t { runnable, recv, lock, until, halted, done };

  Process& proc(Pid pid);
  Term new_nonce(Pid owner, NonceOrigin origin);
  void do_send(Pid pid, Term t);
  void park(Pid pid, std::coroutine_handle<> h, Wait wait);
  bool can_deliver(Process& p);
  Term deliver(Process& p);
  void step(Process& p);
  AttackerView view();

  std::uint64_t budget_;
  Rng rng_;
  AttackerStrategy strategy_;
  std::size_t script_pos_ = 0;
  std::optional<Term> script_pending_;
  NonceRegistry registry_;
  Knowledge knowledge_;
  std::vector<PoolEntry> pool_;
  Trace trace_;
  std::vector<std::unique_ptr<Process>> procs_;
  std::uint64_t steps_ = 0;
  std::uint64_t injections_ = 0;
  bool halted_ = false;
  bool deadlocked_ = false;
};

/// Convenience wrapper: spawns `program` in order and runs it.
RunResult run(std::vector<ProcessBody> program, std::uint64_t seed, AttackerStrategy strategy,
              std::uint64_t step_budget = kDefaultStepBudget);

}  // namespace dyrun::sim
