#include <memory>
#include <optional>
#include <vector>

#include "doctest.h"

#include "dyrun/deduction.hpp"
#include "dyrun/stack.hpp"
#include "dyrun/text.hpp"

using namespace dyrun;
using namespace dyrun::sim;
using namespace dyrun::stack;

namespace {

// Both ends of a connection over a fresh honest session key, skipping the
// handshake.
std::pair<std::shared_ptr<Connection>, std::shared_ptr<Connection>> linked(Runtime& rt) {
  Term k = Term::key(KeyType::senc, rt.fresh_nonce(NonceOrigin::honest));
  Term pk = Term::key(KeyType::verify, rt.fresh_nonce(NonceOrigin::honest));
  proto::Session s{pk, pk, pk, pk, std::nullopt, k};
  auto a = std::make_shared<Connection>(Connection{k, 0, 0, Role::init, s, {}, {}});
  auto b = std::make_shared<Connection>(Connection{k, 0, 0, Role::resp, s, {}, {}});
  return {a, b};
}

Term i(std::int64_t v) { return Term::integer(v); }

struct Keys {
  Term skc, sks;
};

Keys sign_keys(Runtime& rt) {
  return {Term::key(KeyType::sign, rt.fresh_nonce(NonceOrigin::honest)),
          Term::key(KeyType::sign, rt.fresh_nonce(NonceOrigin::honest))};
}

}  // namespace

TEST_CASE("wire format and counters") {
  Runtime rt(0, Passive{});
  auto [a, b] = linked(rt);
  std::vector<Term> payload{i(5)};
  Term w = conn_wrap(*a, "db.load", payload);
  CHECK(w == seal(a->session_key, Term::list({Term::tag("db.load"), i(0), Term::list({i(5)})})));
  rt.spawn([a = a](Context& c) -> Task<void> {
    co_await conn_send(c, *a, "x", {});
    co_await conn_send(c, *a, "x", {});
  });
  rt.run();
  CHECK(a->sent == 2);
  std::vector<Term> sent;
  for (const auto& e : rt.trace().events()) {
    if (e.kind == EventKind::send) sent.push_back(*e.term);
  }
  REQUIRE(sent.size() == 2);
  CHECK(open(a->session_key, sent[0])->items()[1] == i(0));
  CHECK(open(a->session_key, sent[1])->items()[1] == i(1));
  // Payloads stay secret until the key leaks.
  Term secret = Term::nonce(0);
  CHECK(derivability_oracle(rt.trace(), secret) == Verdict::underivable);
}

TEST_CASE("in-order delivery across tags") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Runtime rt(seed, Passive{});
    auto [a, b] = linked(rt);
    auto got = std::make_shared<std::vector<std::pair<std::string, Term>>>();
    rt.spawn([a = a](Context& c) -> Task<void> {
      for (int k = 0; k < 6; ++k) {
        std::vector<Term> p{i(k)};
        co_await conn_send(c, *a, k % 3 == 0 ? "t.a" : "t.b", std::move(p));
      }
    });
    rt.spawn([b = b, got](Context& c) -> Task<void> {
      std::function<bool(const std::string&)> any = [](const std::string&) { return true; };
      for (int k = 0; k < 6; ++k) {
        Incoming in = co_await conn_recv_where(c, *b, any);
        got->emplace_back(in.tag, in.payload.at(0));
      }
    });
    REQUIRE(rt.run() == RunStatus::ok);
    REQUIRE(got->size() == 6);
    for (int k = 0; k < 6; ++k) {
      CHECK((*got)[static_cast<std::size_t>(k)].first == (k % 3 == 0 ? "t.a" : "t.b"));
      CHECK((*got)[static_cast<std::size_t>(k)].second == i(k));
    }
  }
}

TEST_CASE("replays, future frames and forgeries are skipped") {
  Runtime rt(0, Passive{});
  auto [a, b] = linked(rt);
  const Pid tx = rt.spawn([a = a](Context& c) -> Task<void> {
    for (int k = 0; k < 3; ++k) {
      std::vector<Term> p{i(k)};
      co_await conn_send(c, *a, "t", std::move(p));
    }
  });
  auto got = std::make_shared<std::vector<Term>>();
  const Pid rx = rt.spawn([b = b, got](Context& c) -> Task<void> {
    for (int k = 0; k < 3; ++k) {
      auto p = co_await conn_recv(c, *b, "t");
      got->push_back(p.at(0));
    }
  });
  auto frame = [tx](std::size_t n) {
    return [tx, n](const AttackerView& v) { return v.nth_sent_by(tx, n); };
  };
  Scripted s;
  s.steps.push_back({"first", rx, frame(0)});
  s.steps.push_back({"replay", rx, frame(0)});
  s.steps.push_back({"ahead", rx, frame(2)});
  s.steps.push_back({"forged", rx, [](const AttackerView& v) -> std::optional<Term> {
                       Term k = Term::key(KeyType::senc, v.fresh_nonce());
                       return seal(k, Term::list({Term::tag("t"), i(1), Term::list({i(99)})}));
                     }});
  s.steps.push_back({"wrong tag", rx, [](const AttackerView& v) -> std::optional<Term> {
                       return v.find_list_with_head("m1");
                     }});
  s.steps.push_back({"second", rx, frame(1)});
  s.steps.push_back({"replay again", rx, frame(1)});
  s.steps.push_back({"third", rx, frame(2)});
  rt.set_strategy(std::move(s));
  rt.send(Term::list({Term::tag("m1")}));
  CHECK(rt.run() == RunStatus::ok);
  REQUIRE(got->size() == 3);
  CHECK((*got)[0] == i(0));
  CHECK((*got)[1] == i(1));
  CHECK((*got)[2] == i(2));
  CHECK(b->stats.replays == 2);
  CHECK(b->stats.ahead == 1);
  CHECK(b->stats.rejected == 2);
  CHECK(b->accepted.size() == 3);
  CHECK(b->received == 3);
}

TEST_CASE("handshake yields equal keys; reconnecting yields a new one") {
  int completed = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Runtime rt(seed, Passive{});
    auto [skc, sks] = sign_keys(rt);
    auto keys = std::make_shared<std::vector<Term>>();
    auto server_keys = std::make_shared<std::vector<Term>>();
    rt.spawn([skc = skc, pks = pkey(sks), keys](Context& c) -> Task<void> {
      for (int k = 0; k < 2; ++k) {
        auto conn = co_await conn_connect(c, skc, pks);
        if (!conn) co_return;
        keys->push_back(conn->session_key);
      }
    });
    rt.spawn([sks = sks, server_keys](Context& c) -> Task<void> {
      for (int k = 0; k < 2; ++k) {
        auto req = co_await conn_listen(c);
        if (!req) continue;
        auto conn = co_await conn_confirm(c, sks, *req);
        if (conn) server_keys->push_back(conn->session_key);
      }
    });
    if (rt.run() != RunStatus::ok || keys->size() != 2) continue;
    ++completed;
    CHECK((*keys)[0] != (*keys)[1]);
    CHECK(*keys == *server_keys);
  }
  CHECK(completed > 5);
}

TEST_CASE("rpc echo, unknown op and close") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Runtime rt(seed, Passive{});
    auto [a, b] = linked(rt);
    auto served = std::make_shared<bool>(false);
    auto results = std::make_shared<std::vector<std::vector<Term>>>();
    auto closed_key = std::make_shared<std::optional<Term>>();
    rt.spawn([b = b, served](Context& c) -> Task<void> {
      Handlers h;
      h["echo"] = [](const std::vector<Term>& args) { return std::optional<std::vector<Term>>(args); };
      co_await rpc_serve(c, *b, std::move(h));
      *served = true;
    });
    rt.spawn([a = a, results, closed_key](Context& c) -> Task<void> {
      std::vector<Term> args{i(1), i(2)};
      results->push_back(co_await rpc_call(c, *a, "echo", args));
      results->push_back(co_await rpc_call(c, *a, "nope", args));
      results->push_back(co_await rpc_call(c, *a, "echo", {}));
      *closed_key = co_await rpc_close(c, *a);
    });
    REQUIRE(rt.run() == RunStatus::ok);
    CHECK(*served);
    REQUIRE(results->size() == 3);
    CHECK((*results)[0] == std::vector<Term>{i(1), i(2)});
    CHECK(is_rpc_error((*results)[1]));
    CHECK((*results)[2].empty());
    CHECK(*closed_key == a->session_key);
    CHECK(a->sent == 4);
    CHECK(a->received == 4);
    CHECK(b->sent == 4);
    CHECK(b->received == 4);
  }
}

TEST_CASE("two connections never cross-deliver") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Runtime rt(seed, Passive{});
    auto [a1, b1] = linked(rt);
    auto [a2, b2] = linked(rt);
    Handlers h;
    h["id"] = [](const std::vector<Term>& args) { return std::optional<std::vector<Term>>(args); };
    auto got = std::make_shared<std::vector<std::int64_t>>(2, -1);
    for (auto& [a, b, tag] : {std::tuple{a1, b1, 10}, std::tuple{a2, b2, 20}}) {
      rt.spawn([b = b, h](Context& c) -> Task<void> { co_await rpc_serve(c, *b, h); });
      rt.spawn([a = a, got, tag = tag](Context& c) -> Task<void> {
        std::vector<Term> args{i(tag)};
        auto r = co_await rpc_call(c, *a, "id", std::move(args));
        (*got)[tag / 10 - 1] = r.at(0).int_value();
        co_await rpc_close(c, *a);
      });
    }
    REQUIRE(rt.run() == RunStatus::ok);
    CHECK((*got)[0] == 10);
    CHECK((*got)[1] == 20);
  }
}

TEST_CASE("kv handlers") {
  auto acct = std::make_shared<KvAccount>(i(0));
  auto h = kv_handlers(acct);
  Term k = Term::tag("k"), v = i(1), v2 = i(2);
  CHECK_FALSE(h["db.load"]({k}));
  CHECK_FALSE(h["db.store"]({k, v}));
  CHECK(h["db.create"]({k, v}) == std::vector<Term>{});
  CHECK_FALSE(h["db.create"]({k, v2}));
  CHECK(h["db.load"]({k}) == std::vector<Term>{v});
  CHECK(h["db.store"]({k, v2}) == std::vector<Term>{});
  CHECK(h["db.load"]({k}) == std::vector<Term>{v2});
  CHECK(acct->db.size() == 1);
  CHECK_FALSE(h["db.load"]({k, k}));
  CHECK(h["db.close"]({}) == std::vector<Term>{});
}

TEST_CASE("kv client against the server") {
  int completed = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Runtime rt(seed, Passive{});
    auto [skc, sks] = sign_keys(rt);
    auto server = std::make_shared<KvServer>();
    auto log = std::make_shared<std::vector<Term>>();
    rt.spawn([sks = sks, server](Context& c) -> Task<void> { co_await kv_server_start(c, sks, server); }, true);
    rt.spawn([skc = skc, pks = pkey(sks), log](Context& c) -> Task<void> {
      Term k = Term::tag("k");
      auto c1 = co_await kv_connect(c, skc, pks);
      if (!c1) co_return;
      bool created = co_await kv_create(c, *c1, k, i(1));
      bool again = co_await kv_create(c, *c1, k, i(3));
      bool stored = co_await kv_store(c, *c1, k, i(2));
      Term missing = co_await kv_load(c, *c1, Term::tag("other"));
      co_await kv_close(c, *c1);
      auto c2 = co_await kv_connect(c, skc, pks);
      if (!c2) co_return;
      Term v = co_await kv_load(c, *c2, k);
      co_await kv_close(c, *c2);
      log->push_back(i(created));
      log->push_back(i(again));
      log->push_back(i(stored));
      log->push_back(missing);
      log->push_back(v);
    });
    if (rt.run() != RunStatus::ok || log->size() != 5) continue;
    ++completed;
    CHECK((*log)[0] == i(1));
    CHECK((*log)[1] == i(0));
    CHECK((*log)[2] == i(1));
    CHECK((*log)[3] == Term::tag("rpc.error"));
    CHECK((*log)[4] == i(2));
    CHECK(server->accounts.size() == 1);
  }
  CHECK(completed > 20);
}

TEST_CASE("separate accounts per client and one connection per account") {
  int completed = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Runtime rt(seed, Passive{});
    Term sks = Term::key(KeyType::sign, rt.fresh_nonce(NonceOrigin::honest));
    Term ska = Term::key(KeyType::sign, rt.fresh_nonce(NonceOrigin::honest));
    Term skb = Term::key(KeyType::sign, rt.fresh_nonce(NonceOrigin::honest));
    auto server = std::make_shared<KvServer>();
    auto seen = std::make_shared<std::vector<Term>>();
    rt.spawn([sks, server](Context& c) -> Task<void> { co_await kv_server_start(c, sks, server); }, true);
    for (const auto& [sk, val] : {std::pair{ska, i(1)}, std::pair{skb, i(2)}}) {
      rt.spawn([sk = sk, val = val, pks = pkey(sks), seen](Context& c) -> Task<void> {
        auto conn = co_await kv_connect(c, sk, pks);
        if (!conn) co_return;
        co_await kv_create(c, *conn, Term::tag("k"), val);
        Term v = co_await kv_load(c, *conn, Term::tag("k"));
        seen->push_back(v == val ? i(1) : i(0));
        co_await kv_close(c, *conn);
      });
    }
    if (rt.run() != RunStatus::ok || seen->size() != 2) continue;
    ++completed;
    CHECK((*seen)[0] == i(1));
    CHECK((*seen)[1] == i(1));
    CHECK(server->accounts.size() == 2);
  }
  CHECK(completed > 10);

  // A second connection for the same identity waits for the first to close.
  int blocked = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Runtime rt(seed, Passive{});
    auto [skc, sks] = sign_keys(rt);
    auto server = std::make_shared<KvServer>();
    auto order = std::make_shared<std::vector<int>>();
    rt.spawn([sks = sks, server](Context& c) -> Task<void> { co_await kv_server_start(c, sks, server); }, true);
    rt.spawn([skc = skc, pks = pkey(sks), order](Context& c) -> Task<void> {
      auto first = co_await kv_connect(c, skc, pks);
      if (!first) co_return;
      co_await kv_create(c, *first, Term::tag("k"), i(1));
      order->push_back(1);
      ProcessBody second = [skc, pks, order](Context& cc) -> Task<void> {
        auto conn = co_await kv_connect(cc, skc, pks);
        if (!conn) co_return;
        co_await kv_load(cc, *conn, Term::tag("k"));
        order->push_back(3);
      };
      co_await c.fork(std::move(second));
      for (int k = 0; k < 20; ++k) co_await c.yield();
      order->push_back(2);
      co_await kv_close(c, *first);
    });
    if (rt.run() != RunStatus::ok || order->size() != 3) continue;
    ++blocked;
    CHECK(*order == std::vector<int>{1, 2, 3});
  }
  CHECK(blocked > 5);
}
