#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "dyrun/deduction.hpp"
#include "dyrun/games.hpp"
#include "dyrun/runtime.hpp"

using namespace dyrun;
using namespace dyrun::sim;

// Coroutine bodies below bind lambdas and braced lists to locals before any
// co_await; see task.hpp.

namespace {

Term tag(const char* s) { return Term::tag(s); }

}  // namespace

TEST_CASE("empty program") {
  auto r = run({}, 1, Passive{});
  CHECK(r.status == RunStatus::ok);
  CHECK(r.trace.empty());
}

TEST_CASE("send and receive") {
  auto got = std::make_shared<std::optional<Term>>();
  std::vector<ProcessBody> program;
  program.push_back([](Context& c) -> Task<void> { co_await c.send(Term::tag("hello")); });
  program.push_back([got](Context& c) -> Task<void> { *got = co_await c.recv(); });
  auto r = run(std::move(program), 3, Passive{});
  CHECK(r.status == RunStatus::ok);
  REQUIRE(got->has_value());
  CHECK(**got == tag("hello"));
  int sends = 0, recvs = 0;
  for (const auto& e : r.trace.events()) {
    sends += e.kind == EventKind::send;
    recvs += e.kind == EventKind::recv;
  }
  CHECK(sends == 1);
  CHECK(recvs == 1);
}

TEST_CASE("filters select among pool messages") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto got = std::make_shared<Term>(Term::integer(0));
    std::vector<ProcessBody> program;
    program.push_back([](Context& c) -> Task<void> {
      co_await c.send(Term::integer(1));
      co_await c.send(Term::integer(2));
      co_await c.send(Term::integer(3));
    });
    program.push_back([got](Context& c) -> Task<void> {
      RecvFilter even = [](const Term& t) { return t.is(TermKind::integer) && t.int_value() % 2 == 0; };
      *got = co_await c.recv(std::move(even));
    });
    auto r = run(std::move(program), seed, Passive{});
    CHECK(r.status == RunStatus::ok);
    CHECK(*got == Term::integer(2));
  }
}

TEST_CASE("blocked receivers end the run as budget exhausted") {
  std::vector<ProcessBody> program;
  program.push_back([](Context& c) -> Task<void> {
    RecvFilter never = [](const Term&) { return false; };
    co_await c.recv(std::move(never));
  });
  auto r = run(std::move(program), 0, Passive{}, 50);
  CHECK(r.status == RunStatus::budget_exhausted);
  CHECK(r.deadlocked);

  std::vector<ProcessBody> spin;
  spin.push_back([](Context& c) -> Task<void> {
    for (;;) co_await c.yield();
  });
  auto r2 = run(std::move(spin), 0, Passive{}, 50);
  CHECK(r2.status == RunStatus::budget_exhausted);
  CHECK_FALSE(r2.deadlocked);
  CHECK(r2.steps == 50);
}

TEST_CASE("assertions") {
  std::vector<ProcessBody> ok;
  ok.push_back([](Context& c) -> Task<void> { co_await c.check("fine", true); });
  auto r = run(std::move(ok), 0, Passive{});
  CHECK(r.status == RunStatus::ok);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace.events()[0].kind == EventKind::assert_ok);
  CHECK(r.trace.events()[0].label == "fine");

  auto after = std::make_shared<bool>(false);
  std::vector<ProcessBody> bad;
  bad.push_back([after](Context& c) -> Task<void> {
    co_await c.check("broken", false, "why");
    *after = true;
  });
  auto r2 = run(std::move(bad), 0, Passive{});
  CHECK(r2.status == RunStatus::assert_failed);
  CHECK_FALSE(*after);
  CHECK(r2.trace.events().back().kind == EventKind::assert_fail);
  CHECK(r2.trace.events().back().detail == "why");
}

TEST_CASE("fork runs parent and child") {
  auto done = std::make_shared<std::vector<std::string>>();
  std::vector<ProcessBody> program;
  program.push_back([done](Context& c) -> Task<void> {
    ProcessBody child = [done](Context&) -> Task<void> {
      done->push_back("child");
      co_return;
    };
    Pid p = co_await c.fork(std::move(child));
    CHECK(p == 1);
    done->push_back("parent");
  });
  auto r = run(std::move(program), 5, Passive{});
  CHECK(r.status == RunStatus::ok);
  CHECK(done->size() == 2);
  CHECK(r.trace.events().front().kind == EventKind::fork);
  CHECK(r.trace.events().front().child == 1);
}

TEST_CASE("daemons do not keep a run alive") {
  std::vector<ProcessBody> program;
  program.push_back([](Context& c) -> Task<void> {
    ProcessBody server = [](Context& cc) -> Task<void> {
      for (;;) co_await cc.recv();
    };
    co_await c.fork_daemon(std::move(server));
    co_await c.send(Term::integer(1));
  });
  auto r = run(std::move(program), 2, Passive{});
  CHECK(r.status == RunStatus::ok);
}

TEST_CASE("identical inputs give identical traces") {
  games::GameConfig cfg;
  cfg.attacker = games::AttackerKind::mutating;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = games::nsl_run(cfg, seed);
    auto b = games::nsl_run(cfg, seed);
    CHECK(a.trace.to_jsonl() == b.trace.to_jsonl());
  }
  auto x = games::nsl_run(cfg, 1);
  auto y = games::nsl_run(cfg, 2);
  CHECK(x.trace.to_jsonl() != y.trace.to_jsonl());
}

TEST_CASE("locks exclude critical sections") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto lock = new_lock();
    auto log = std::make_shared<std::vector<int>>();
    std::vector<ProcessBody> program;
    for (int id = 0; id < 3; ++id) {
      program.push_back([lock, log, id](Context& c) -> Task<void> {
        for (int round = 0; round < 2; ++round) {
          co_await c.acquire(*lock);
          CHECK(lock->holder() == c.pid());
          for (int i = 0; i < 3; ++i) {
            log->push_back(id);
            co_await c.yield();
          }
          c.release(*lock);
          co_await c.yield();
        }
      });
    }
    auto r = run(std::move(program), seed, Passive{});
    REQUIRE(r.status == RunStatus::ok);
    REQUIRE(log->size() == 18);
    for (std::size_t i = 0; i < log->size(); i += 3) {
      CHECK((*log)[i] == (*log)[i + 1]);
      CHECK((*log)[i] == (*log)[i + 2]);
    }
    CHECK_FALSE(lock->held());
  }
}

TEST_CASE("releasing a free lock is an error") {
  auto lock = new_lock();
  std::vector<ProcessBody> program;
  program.push_back([lock](Context& c) -> Task<void> {
    c.release(*lock);
    co_return;
  });
  CHECK_THROWS_AS(run(std::move(program), 0, Passive{}), std::logic_error);
}

TEST_CASE("cells and wait_until") {
  auto flag = new_cell<bool>(false);
  auto seen = std::make_shared<bool>(false);
  CHECK_FALSE(flag->read());
  std::vector<ProcessBody> program;
  program.push_back([flag, seen](Context& c) -> Task<void> {
    std::function<bool()> set = [flag] { return flag->read(); };
    co_await c.wait_until(std::move(set));
    *seen = flag->read();
  });
  program.push_back([flag](Context& c) -> Task<void> {
    co_await c.yield();
    flag->write(true);
  });
  auto r = run(std::move(program), 4, Passive{});
  CHECK(r.status == RunStatus::ok);
  CHECK(*seen);
}

TEST_CASE("every runnable process is eventually scheduled") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto hits = std::make_shared<std::vector<int>>(4, 0);
    std::vector<ProcessBody> program;
    for (int id = 0; id < 4; ++id) {
      program.push_back([hits, id](Context& c) -> Task<void> {
        for (int i = 0; i < 5; ++i) {
          ++(*hits)[static_cast<std::size_t>(id)];
          co_await c.yield();
        }
      });
    }
    auto r = run(std::move(program), seed, Passive{});
    REQUIRE(r.status == RunStatus::ok);
    for (int h : *hits) CHECK(h == 5);
  }
}

TEST_CASE("nonces created by processes are traced with their origin") {
  std::vector<ProcessBody> program;
  program.push_back([](Context& c) -> Task<void> {
    Term a = c.mk_nonce();
    co_await c.send(a);
  });
  Runtime rt(0, Passive{});
  rt.spawn(std::move(program[0]));
  Term mine = rt.fresh_nonce(NonceOrigin::attacker);
  rt.run();
  CHECK(rt.nonces().is_attacker_nonce(mine));
  CHECK(rt.knowledge().derivable(mine));
  int created = 0;
  for (const auto& e : rt.trace().events()) created += e.kind == EventKind::nonce_created;
  CHECK(created == 2);
}

TEST_CASE("scripted deliveries must be derivable") {
  Runtime rt(0, Passive{});
  Term secret = rt.fresh_nonce(NonceOrigin::honest);
  rt.spawn([](Context& c) -> Task<void> { co_await c.recv(); });
  Scripted s;
  s.steps.push_back({"forge", 0, [secret](const AttackerView&) -> std::optional<Term> { return secret; }});
  rt.set_strategy(std::move(s));
  CHECK_THROWS_AS(rt.run(), SimulatorError);
}

TEST_CASE("mutating deliveries are derivable when replayed from the trace") {
  games::GameConfig cfg;
  cfg.attacker = games::AttackerKind::mutating;
  cfg.mutation.probability = 0.6;
  std::uint64_t injections = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto r = games::iso_run(cfg, seed);
    injections += static_cast<std::uint64_t>(r.counters["injections"]);
    CHECK_FALSE(first_unsound_delivery(r.trace).has_value());
    auto k = games::kv_run(cfg, seed);
    CHECK_FALSE(first_unsound_delivery(k.trace).has_value());
  }
  CHECK(injections > 100);
}

TEST_CASE("trace jsonl round trip") {
  games::GameConfig cfg;
  auto r = games::kv_run(cfg, 7);
  std::string text = r.trace.to_jsonl();
  Trace back = Trace::from_jsonl(text);
  CHECK(back.events() == r.trace.events());
  CHECK(back.to_jsonl() == text);
  for (std::size_t i = 1; i < back.size(); ++i) CHECK(back.events()[i].step > back.events()[i - 1].step);
}
