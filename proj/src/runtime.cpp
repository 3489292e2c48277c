#include "dyrun/runtime.hpp"

#include <algorithm>

namespace dyrun::sim {

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::assert_failed: return "assert_failed";
    case RunStatus::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

struct Runtime::Process {
  Process(Runtime* rt, Pid id, ProcessBody b, bool d) : pid(id), daemon(d), body(std::move(b)), ctx(rt, id) {}

  Pid pid;
  bool daemon;
  ProcessBody body;  // owns the lambda captures the coroutine frame refers to
  Context ctx;
  Task<void> root;
  std::coroutine_handle<> resume_at;
  Wait wait = Wait::runnable;

  RecvFilter filter;
  std::vector<std::size_t> accepted;  // pool indices the filter accepts
  std::size_t scanned = 0;
  std::optional<Term> delivered;

  Lock* lock = nullptr;
  std::function<bool()> until;
};

// --- Context ------------------------------------------------------------------

Pid Context::pid() const noexcept { return pid_; }

Term Context::mk_nonce() { return rt_->new_nonce(pid_, NonceOrigin::honest); }

void Context::SendAwaiter::await_suspend(std::coroutine_handle<> h) {
  ctx->rt_->do_send(ctx->pid_, std::move(term));
  ctx->rt_->park(ctx->pid_, h, Runtime::Wait::runnable);
}

void Context::RecvAwaiter::await_suspend(std::coroutine_handle<> h) {
  auto& p = ctx->rt_->proc(ctx->pid_);
  p.filter = std::move(filter);
  p.accepted.clear();
  p.scanned = 0;
  p.delivered.reset();
  ctx->rt_->park(ctx->pid_, h, Runtime::Wait::recv);
}

Term Context::RecvAwaiter::await_resume() {
  auto& p = ctx->rt_->proc(ctx->pid_);
  Term t = std::move(*p.delivered);
  p.delivered.reset();
  p.filter = nullptr;
  return t;
}

void Context::ForkAwaiter::await_suspend(std::coroutine_handle<> h) {
  Runtime& rt = *ctx->rt_;
  child = rt.spawn(std::move(body), daemon);
  TraceEvent e;
  e.kind = EventKind::fork;
  e.pid = ctx->pid_;
  e.child = child;
  rt.trace_.append(std::move(e));
  rt.park(ctx->pid_, h, Runtime::Wait::runnable);
}

void Context::YieldAwaiter::await_suspend(std::coroutine_handle<> h) {
  ctx->rt_->park(ctx->pid_, h, Runtime::Wait::runnable);
}

Context::CheckAwaiter Context::check(std::string label, bool ok, std::string detail) {
  TraceEvent e;
  e.kind = ok ? EventKind::assert_ok : EventKind::assert_fail;
  e.pid = pid_;
  e.label = std::move(label);
  if (!ok) {
    e.detail = std::move(detail);
    rt_->halted_ = true;
  }
  rt_->trace_.append(std::move(e));
  return {this, ok};
}

void Context::CheckAwaiter::await_suspend(std::coroutine_handle<> h) {
  ctx->rt_->park(ctx->pid_, h, Runtime::Wait::halted);
}

void Context::AcquireAwaiter::await_suspend(std::coroutine_handle<> h) {
  auto& p = ctx->rt_->proc(ctx->pid_);
  p.lock = lock;
  ctx->rt_->park(ctx->pid_, h, Runtime::Wait::lock);
}

void Context::release(Lock& lock) {
  if (!lock.held()) throw std::logic_error("release of a lock that is not held");
  lock.holder_.reset();
}

void Context::WaitAwaiter::await_suspend(std::coroutine_handle<> h) {
  auto& p = ctx->rt_->proc(ctx->pid_);
  p.until = std::move(predicate);
  ctx->rt_->park(ctx->pid_, h, Runtime::Wait::until);
}

// --- Runtime ------------------------------------------------------------------

Runtime::Runtime(std::uint64_t seed, AttackerStrategy strategy, std::uint64_t step_budget)
    : budget_(step_budget), rng_(seed), knowledge_(registry_) {
  set_strategy(std::move(strategy));
}

void Runtime::set_strategy(AttackerStrategy strategy) {
  strategy_ = std::move(strategy);
  script_pos_ = 0;
  script_pending_.reset();
  if (auto* s = std::get_if<Scripted>(&strategy_)) {
    for (const auto& t : s->initial_knowledge) leak(t);
  }
}

Runtime::~Runtime() = default;

Runtime::Process& Runtime::proc(Pid pid) { return *procs_.at(static_cast<std::size_t>(pid)); }

Pid Runtime::spawn(ProcessBody body, bool daemon) {
  auto pid = static_cast<Pid>(procs_.size());
  procs_.push_back(std::make_unique<Process>(this, pid, std::move(body), daemon));
  Process& p = *procs_.back();
  p.root = p.body(p.ctx);
  p.resume_at = p.root.handle();
  return pid;
}

Term Runtime::new_nonce(Pid owner, NonceOrigin origin) {
  Term n = registry_.mk_nonce(origin);
  TraceEvent e;
  e.kind = EventKind::nonce_created;
  e.pid = owner;
  e.term = n;
  e.origin = origin;
  trace_.append(std::move(e));
  return n;
}

Term Runtime::fresh_nonce(NonceOrigin origin) { return new_nonce(kAttackerPid, origin); }

void Runtime::leak(const Term& t) {
  TraceEvent e;
  e.kind = EventKind::leak;
  e.term = t;
  trace_.append(std::move(e));
  knowledge_.add(t);
}

void Runtime::send(const Term& t, Pid sender) { do_send(sender, t); }

void Runtime::do_send(Pid pid, Term t) {
  TraceEvent e;
  e.kind = EventKind::send;
  e.pid = pid;
  e.term = t;
  const auto& ev = trace_.append(std::move(e));
  knowledge_.add(t);
  pool_.push_back({std::move(t), pid, ev.step});
}

void Runtime::park(Pid pid, std::coroutine_handle<> h, Wait wait) {
  auto& p = proc(pid);
  p.resume_at = h;
  p.wait = wait;
}

AttackerView Runtime::view() {
  return AttackerView(knowledge_, pool_, rng_, [this] { return new_nonce(kAttackerPid, NonceOrigin::attacker); });
}

bool Runtime::can_deliver(Process& p) {
  if (auto* s = std::get_if<Scripted>(&strategy_)) {
    script_pending_.reset();
    if (script_pos_ >= s->steps.size()) return false;
    const auto& st = s->steps[script_pos_];
    if (st.target != p.pid) return false;
    script_pending_ = st.produce(view());
    return script_pending_.has_value();
  }
  for (; p.scanned < pool_.size(); ++p.scanned) {
    if (!p.filter || p.filter(pool_[p.scanned].term)) p.accepted.push_back(p.scanned);
  }
  return !p.accepted.empty();
}

Term Runtime::deliver(Process& p) {
  Term t = std::visit(
      [&](auto& s) -> Term {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Scripted>) {
          ++script_pos_;
          ++injections_;
          return *std::exchange(script_pending_, std::nullopt);
        } else {
          if constexpr (std::is_same_v<S, Mutating>) {
            if (rng_.chance(s.probability)) {
              ++injections_;
              return mutate(view(), s);
            }
          }
          return pool_[p.accepted[rng_.below(p.accepted.size())]].term;
        }
      },
      strategy_);
  if (!knowledge_.derivable(t)) throw SimulatorError("attacker delivered an underivable term: " + std::to_string(p.pid));
  TraceEvent e;
  e.kind = EventKind::recv;
  e.pid = p.pid;
  e.term = t;
  trace_.append(std::move(e));
  return t;
}

void Runtime::step(Process& p) {
  switch (p.wait) {
    case Wait::recv: p.delivered = deliver(p); break;
    case Wait::lock: p.lock->holder_ = p.pid; p.lock = nullptr; break;
    case Wait::until: p.until = nullptr; break;
    default: break;
  }
  p.wait = Wait::runnable;
  p.resume_at.resume();
  if (p.root.done()) {
    p.wait = Wait::done;
    if (auto err = p.root.error()) std::rethrow_exception(err);
  }
}

RunStatus Runtime::run() {
  std::vector<Process*> candidates;
  for (;;) {
    if (halted_) return RunStatus::assert_failed;
    bool live = std::any_of(procs_.begin(), procs_.end(),
                            [](const auto& p) { return !p->daemon && p->wait != Wait::done; });
    if (!live) return RunStatus::ok;
    if (steps_ >= budget_) return RunStatus::budget_exhausted;

    candidates.clear();
    for (auto& up : procs_) {
      Process& p = *up;
      bool ready = false;
      switch (p.wait) {
        case Wait::runnable: ready = true; break;
        case Wait::recv: ready = can_deliver(p); break;
        case Wait::lock: ready = !p.lock->held(); break;
        case Wait::until: ready = p.until(); break;
        default: break;
      }
      if (ready) candidates.push_back(&p);
    }
    if (candidates.empty()) {
      deadlocked_ = true;
      return RunStatus::budget_exhausted;
    }
    Process& pick = *candidates[rng_.below(candidates.size())];
    // The scripted producer is evaluated per candidate; refresh it for the pick.
    if (pick.wait == Wait::recv && std::holds_alternative<Scripted>(strategy_)) can_deliver(pick);
    ++steps_;
    step(pick);
  }
}

RunResult run(std::vector<ProcessBody> program, std::uint64_t seed, AttackerStrategy strategy,
              std::uint64_t step_budget) {
  Runtime rt(seed, std::move(strategy), step_budget);
  for (auto& body : program) rt.spawn(std::move(body));
  RunResult r;
  r.status = rt.run();
  r.steps = rt.steps();
  r.deadlocked = rt.deadlocked();
  r.trace = rt.take_trace();
  return r;
}

}  // namespace dyrun::sim
