#include "dyrun/games.hpp"

#include <algorithm>
#include <exception>
#include <memory>
#include <stdexcept>

#include "json.hpp"

#include "dyrun/deduction.hpp"
#include "dyrun/stack.hpp"
#include "dyrun/text.hpp"

namespace dyrun::games {

using sim::Context;
using sim::Task;

std::string_view to_string(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::passive: return "passive";
    case AttackerKind::mutating: return "mutating";
    case AttackerKind::mixed: return "mixed";
  }
  return "?";
}

std::optional<AttackerKind> attacker_kind_from_string(std::string_view name) {
  if (name == "passive") return AttackerKind::passive;
  if (name == "mutating") return AttackerKind::mutating;
  if (name == "mixed") return AttackerKind::mixed;
  return std::nullopt;
}

void validate(const GameConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("run count must be at least 1");
  if (cfg.max_sessions < 1) throw std::invalid_argument("max sessions must be at least 1");
  if (cfg.step_budget < 1) throw std::invalid_argument("step budget must be positive");
}

sim::AttackerStrategy strategy_for(const GameConfig& cfg, std::uint64_t seed) {
  bool mutating = cfg.attacker == AttackerKind::mutating || (cfg.attacker == AttackerKind::mixed && seed % 2 == 1);
  if (mutating) return cfg.mutation;
  return sim::Passive{};
}

// --- Records -------------------------------------------------------------------

bool RunRecord::pass() const {
  return status != sim::RunStatus::assert_failed && failures.empty() &&
         std::all_of(oracles.begin(), oracles.end(), [](const OracleCheck& o) { return o.ok(); });
}

std::string RunRecord::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["attacker"] = attacker;
  j["status"] = sim::to_string(status);
  j["pass"] = pass();
  j["steps"] = steps;
  j["deadlocked"] = deadlocked;
  j["asserts_ok"] = asserts_ok;
  j["failures"] = failures;
  auto oracle = nlohmann::ordered_json::array();
  for (const auto& o : oracles) {
    oracle.push_back({{"label", o.label},
                      {"target", to_text(o.target)},
                      {"expected", dyrun::to_string(o.expected)},
                      {"verdict", dyrun::to_string(o.actual)}});
  }
  j["oracle"] = std::move(oracle);
  for (const auto& [k, v] : counters) j[k] = v;
  return j.dump();
}

bool GameResult::pass() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.pass(); });
}

std::int64_t GameResult::total(const std::string& counter) const {
  std::int64_t sum = 0;
  for (const auto& r : runs) {
    if (auto it = r.counters.find(counter); it != r.counters.end()) sum += it->second;
  }
  return sum;
}

OracleCheck check_secrecy(sim::Runtime& rt, std::string label, const Term& target, Verdict expected) {
  Verdict actual = derivability_oracle(rt.trace(), target);
  TraceEvent e;
  e.kind = EventKind::oracle_verdict;
  e.term = target;
  e.label = label;
  e.verdict = actual;
  rt.trace().append(std::move(e));
  return {std::move(label), target, expected, actual};
}

namespace {

RunRecord record(sim::Runtime& rt, std::uint64_t seed, std::string attacker, sim::RunStatus status) {
  RunRecord r;
  r.seed = seed;
  r.attacker = std::move(attacker);
  r.status = status;
  r.steps = rt.steps();
  r.deadlocked = rt.deadlocked();
  for (const auto& e : rt.trace().events()) {
    if (e.kind == EventKind::assert_ok) ++r.asserts_ok;
    if (e.kind == EventKind::assert_fail) r.failures.push_back(e.label + ": " + e.detail);
  }
  return r;
}

sim::RecvFilter key_of_type(KeyType type) {
  return [type](const Term& t) { return t.is_key(type); };
}

bool contains(const std::vector<Term>& v, const Term& t) { return std::find(v.begin(), v.end(), t) != v.end(); }

Task<void> check_key_secrecy(Context& ctx, Term key, std::string label) {
  Term guess = co_await ctx.recv();
  co_await ctx.check(label + ".guess", guess != key, "attacker guessed the session key");
}

// --- NSL ------------------------------------------------------------------------

struct NslState {
  proto::NsVariant variant;
  unsigned max_sessions;
  std::vector<Term> keys_init;
  std::vector<Term> keys_resp;
  std::vector<std::pair<std::string, Term>> honest;  // sessions with the honest peer
};

Task<void> nsl_do_init(Context& ctx, std::shared_ptr<NslState> st, Term sk, Term pk_peer, unsigned n) {
  if (n + 1 < st->max_sessions) {
    {
      sim::ProcessBody body = [st, sk, pk_peer, n](Context& c) { return nsl_do_init(c, st, sk, pk_peer, n + 1); };
      co_await ctx.fork(std::move(body));
    }
  }
  // The attacker chooses the responder.
  Term pk = co_await ctx.recv(key_of_type(KeyType::aenc));
  auto s = co_await proto::ns_initiator(ctx, sk, pk, st->variant);
  if (!s) co_return;
  bool fresh = !contains(st->keys_init, s->key);
  st->keys_init.push_back(s->key);
  co_await ctx.check("nsl.init.fresh", fresh, to_text(s->key));
  if (pk == pk_peer) {
    std::string label = "nsl.init." + std::to_string(n);
    st->honest.emplace_back(label, s->key);
    co_await check_key_secrecy(ctx, s->key, label);
  }
}

Task<void> nsl_do_resp(Context& ctx, std::shared_ptr<NslState> st, Term sk, Term pk_peer, unsigned n) {
  if (n + 1 < st->max_sessions) {
    {
      sim::ProcessBody body = [st, sk, pk_peer, n](Context& c) { return nsl_do_resp(c, st, sk, pk_peer, n + 1); };
      co_await ctx.fork(std::move(body));
    }
  }
  auto s = co_await proto::ns_responder(ctx, sk, st->variant);
  if (!s) co_return;
  bool fresh = !contains(st->keys_resp, s->key);
  st->keys_resp.push_back(s->key);
  co_await ctx.check("nsl.resp.fresh", fresh, to_text(s->key));
  if (s->init_pk == pk_peer) {
    std::string label = "nsl.resp." + std::to_string(n);
    st->honest.emplace_back(label, s->key);
    co_await check_key_secrecy(ctx, s->key, label);
  }
}

// --- ISO -------------------------------------------------------------------------

struct IsoState {
  unsigned max_sessions;
  bool compromised = false;
  std::vector<Term> keys_init;
  std::vector<Term> keys_resp;
  std::vector<std::pair<std::string, Term>> before;  // honest sessions completed before the compromise
  std::int64_t after = 0;                            // honest sessions completed after it
};

Task<void> iso_check_key_secrecy(Context& ctx, std::shared_ptr<IsoState> st, Term key, std::string label) {
  if (st->compromised) {
    ++st->after;
    co_return;
  }
  st->before.emplace_back(label, key);
  std::function<bool()> ready = [st] { return st->compromised; };
  co_await ctx.wait_until(std::move(ready));
  co_await check_key_secrecy(ctx, key, label);
}

Task<void> iso_do_init(Context& ctx, std::shared_ptr<IsoState> st, Term sk, Term pk_peer, unsigned n) {
  if (n + 1 < st->max_sessions) {
    {
      sim::ProcessBody body = [st, sk, pk_peer, n](Context& c) { return iso_do_init(c, st, sk, pk_peer, n + 1); };
      co_await ctx.fork(std::move(body));
    }
  }
  Term pk = co_await ctx.recv(key_of_type(KeyType::verify));
  auto s = co_await proto::iso_initiator(ctx, sk, pk);
  if (!s) co_return;
  bool fresh = !contains(st->keys_init, s->key);
  st->keys_init.push_back(s->key);
  co_await ctx.check("iso.init.fresh", fresh, to_text(s->key));
  if (pk == pk_peer) co_await iso_check_key_secrecy(ctx, st, s->key, "iso.init." + std::to_string(n));
}

Task<void> iso_do_resp(Context& ctx, std::shared_ptr<IsoState> st, Term sk, Term pk_peer, unsigned n) {
  if (n + 1 < st->max_sessions) {
    {
      sim::ProcessBody body = [st, sk, pk_peer, n](Context& c) { return iso_do_resp(c, st, sk, pk_peer, n + 1); };
      co_await ctx.fork(std::move(body));
    }
  }
  auto s = co_await proto::iso_responder(ctx, sk);
  if (!s) co_return;
  bool fresh = !contains(st->keys_resp, s->key);
  st->keys_resp.push_back(s->key);
  co_await ctx.check("iso.resp.fresh", fresh, to_text(s->key));
  if (s->init_pk == pk_peer) co_await iso_check_key_secrecy(ctx, st, s->key, "iso.resp." + std::to_string(n));
}

Task<void> iso_compromise(Context& ctx, std::shared_ptr<IsoState> st, Term sk_init, Term sk_resp) {
  std::function<bool()> ready = [st] { return !st->before.empty(); };
  co_await ctx.wait_until(std::move(ready));
  st->compromised = true;
  co_await ctx.send(sk_init);
  co_await ctx.send(sk_resp);
}

// --- KV ---------------------------------------------------------------------------

struct KvState {
  std::int64_t reached = 0;
  std::int64_t created = 0;
  std::int64_t connect_failed = 0;
};

Task<void> kv_client(Context& ctx, std::shared_ptr<KvState> st, Term sk_client, Term sk_server) {
  const Term pk_server = pkey(sk_server);
  auto c1 = co_await stack::kv_connect(ctx, sk_client, pk_server);
  if (!c1) {
    ++st->connect_failed;
    co_return;
  }
  Term key = co_await ctx.recv();
  Term val = co_await ctx.recv();
  if (co_await stack::kv_create(ctx, *c1, key, val)) ++st->created;
  Term k1 = co_await stack::kv_close(ctx, *c1);
  co_await ctx.send(k1);

  auto c2 = co_await stack::kv_connect(ctx, sk_client, pk_server);
  if (!c2) {
    ++st->connect_failed;
    co_return;
  }
  co_await ctx.send(sk_client);
  co_await ctx.send(sk_server);
  Term val2 = co_await stack::kv_load(ctx, *c2, key);
  ++st->reached;
  co_await ctx.check("kv.read_back", val == val2, to_text(val) + " != " + to_text(val2));
}

// --- Channel ----------------------------------------------------------------------

struct ChannelState {
  unsigned messages;
  Pid receiver = kAttackerPid;
  bool connected = false;
  std::vector<std::pair<std::string, std::int64_t>> sent;
  std::int64_t received = 0;
  std::optional<stack::Connection> rx;  // receiver's end once the run is over
};

Task<void> channel_sender(Context& ctx, std::shared_ptr<ChannelState> st, Term sk, Term pk_peer) {
  auto c = co_await stack::conn_connect(ctx, sk, pk_peer);
  if (!c) co_return;
  for (unsigned i = 0; i < st->messages; ++i) {
    std::string tag = ctx.runtime().rng().chance(0.5) ? "ch.a" : "ch.b";
    st->sent.emplace_back(tag, i);
    std::vector<Term> payload{Term::integer(i)};
    co_await stack::conn_send(ctx, *c, std::move(tag), std::move(payload));
  }
}

Task<void> channel_receiver(Context& ctx, std::shared_ptr<ChannelState> st, Term sk, Term pk_peer) {
  st->receiver = ctx.pid();
  std::optional<stack::Connection> c;
  // Handshakes with anyone but the expected peer are abandoned.
  for (unsigned attempt = 0; attempt < 4 && !c; ++attempt) {
    sim::RecvFilter from_peer = [pk_peer](const Term& m) { return m.items()[2] == pk_peer; };
    auto request = co_await stack::conn_listen(ctx, std::move(from_peer));
    if (!request || request->pk_init != pk_peer) continue;
    c = co_await stack::conn_confirm(ctx, sk, std::move(*request));
  }
  if (!c) co_return;
  st->connected = true;
  st->rx = std::move(c);
  const std::function<bool(const std::string&)> any = [](const std::string&) { return true; };
  for (unsigned i = 0; i < st->messages; ++i) {
    stack::Incoming in = co_await stack::conn_recv_where(ctx, *st->rx, any);
    const auto k = static_cast<std::size_t>(st->received++);
    bool ok = k < st->sent.size() && in.tag == st->sent[k].first && in.payload.size() == 1 &&
              in.payload[0] == Term::integer(st->sent[k].second);
    co_await ctx.check("channel.order", ok, "frame " + std::to_string(k) + " out of order");
  }
}

}  // namespace

RunRecord nsl_run(const GameConfig& cfg, std::uint64_t seed, NslOptions opts) {
  validate(cfg);
  auto strategy = strategy_for(cfg, seed);
  std::string name(sim::strategy_name(strategy));
  sim::Runtime rt(seed, std::move(strategy), cfg.step_budget);
  auto st = std::make_shared<NslState>(NslState{opts.variant, cfg.max_sessions, {}, {}, {}});
  std::optional<Term> sk_init, sk_resp;

  rt.spawn([st, &sk_init, &sk_resp](Context& c) -> Task<void> {
    Term ski = Term::key(KeyType::adec, c.mk_nonce());
    Term skr = Term::key(KeyType::adec, c.mk_nonce());
    sk_init = ski;
    sk_resp = skr;
    Term pki = pkey(ski);
    Term pkr = pkey(skr);
    co_await c.send(pki);
    co_await c.send(pkr);
    {
      sim::ProcessBody body = [st, ski, pkr](Context& cc) { return nsl_do_init(cc, st, ski, pkr, 0); };
      co_await c.fork(std::move(body));
    }
    {
      sim::ProcessBody body = [st, skr, pki](Context& cc) { return nsl_do_resp(cc, st, skr, pki, 0); };
      co_await c.fork(std::move(body));
    }
  });
  auto status = rt.run();

  if (opts.leak == NslLeak::init || opts.leak == NslLeak::both) rt.leak(*sk_init);
  if (opts.leak == NslLeak::resp || opts.leak == NslLeak::both) rt.leak(*sk_resp);
  Verdict expected = opts.leak == NslLeak::none ? Verdict::underivable : Verdict::derivable;

  std::vector<OracleCheck> checks;
  for (const auto& [label, key] : st->honest) checks.push_back(check_secrecy(rt, label, key, expected));

  RunRecord r = record(rt, seed, std::move(name), status);
  r.oracles = std::move(checks);
  r.counters["sessions"] = static_cast<std::int64_t>(st->keys_init.size() + st->keys_resp.size());
  r.counters["honest_sessions"] = static_cast<std::int64_t>(st->honest.size());
  r.counters["injections"] = static_cast<std::int64_t>(rt.injections());
  r.trace = rt.take_trace();
  return r;
}

RunRecord iso_run(const GameConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  auto strategy = strategy_for(cfg, seed);
  std::string name(sim::strategy_name(strategy));
  sim::Runtime rt(seed, std::move(strategy), cfg.step_budget);
  auto st = std::make_shared<IsoState>();
  st->max_sessions = cfg.max_sessions;

  rt.spawn([st](Context& c) -> Task<void> {
    Term ski = Term::key(KeyType::sign, c.mk_nonce());
    Term skr = Term::key(KeyType::sign, c.mk_nonce());
    Term pki = pkey(ski);
    Term pkr = pkey(skr);
    co_await c.send(pki);
    co_await c.send(pkr);
    {
      sim::ProcessBody body = [st, ski, pkr](Context& cc) { return iso_do_init(cc, st, ski, pkr, 0); };
      co_await c.fork(std::move(body));
    }
    {
      sim::ProcessBody body = [st, skr, pki](Context& cc) { return iso_do_resp(cc, st, skr, pki, 0); };
      co_await c.fork(std::move(body));
    }
    {
      sim::ProcessBody body = [st, ski, skr](Context& cc) { return iso_compromise(cc, st, ski, skr); };
      co_await c.fork(std::move(body));
    }
  });
  auto status = rt.run();

  std::vector<OracleCheck> checks;
  for (const auto& [label, key] : st->before) checks.push_back(check_secrecy(rt, label, key, Verdict::underivable));

  RunRecord r = record(rt, seed, std::move(name), status);
  r.oracles = std::move(checks);
  r.counters["sessions"] = static_cast<std::int64_t>(st->keys_init.size() + st->keys_resp.size());
  r.counters["pre_compromise_sessions"] = static_cast<std::int64_t>(st->before.size());
  r.counters["post_compromise_sessions"] = st->after;
  r.counters["compromised"] = st->compromised;
  r.counters["injections"] = static_cast<std::int64_t>(rt.injections());
  r.trace = rt.take_trace();
  return r;
}

RunRecord kv_run(const GameConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  auto strategy = strategy_for(cfg, seed);
  std::string name(sim::strategy_name(strategy));
  sim::Runtime rt(seed, std::move(strategy), cfg.step_budget);
  auto st = std::make_shared<KvState>();
  auto server = std::make_shared<stack::KvServer>();

  rt.spawn([st, server](Context& c) -> Task<void> {
    Term skc = Term::key(KeyType::sign, c.mk_nonce());
    Term sks = Term::key(KeyType::sign, c.mk_nonce());
    co_await c.send(pkey(skc));
    co_await c.send(pkey(sks));
    {
      sim::ProcessBody body = [sks, server](Context& cc) { return stack::kv_server_start(cc, sks, server); };
      co_await c.fork_daemon(std::move(body));
    }
    {
      sim::ProcessBody body = [st, skc, sks](Context& cc) { return kv_client(cc, st, skc, sks); };
      co_await c.fork(std::move(body));
    }
  });
  auto status = rt.run();

  RunRecord r = record(rt, seed, std::move(name), status);
  r.counters["reached_assert"] = st->reached;
  r.counters["created"] = st->created;
  r.counters["connect_failed"] = st->connect_failed;
  r.counters["accounts"] = static_cast<std::int64_t>(server->accounts.size());
  r.counters["handshakes_dropped"] = static_cast<std::int64_t>(server->handshakes_dropped);
  r.counters["injections"] = static_cast<std::int64_t>(rt.injections());
  r.trace = rt.take_trace();
  return r;
}

RunRecord channel_run(const GameConfig& cfg, std::uint64_t seed, unsigned messages) {
  validate(cfg);
  auto strategy = strategy_for(cfg, seed);
  std::string name(sim::strategy_name(strategy));
  sim::Runtime rt(seed, std::move(strategy), cfg.step_budget);
  auto st = std::make_shared<ChannelState>();
  st->messages = messages;

  rt.spawn([st](Context& c) -> Task<void> {
    Term ski = Term::key(KeyType::sign, c.mk_nonce());
    Term skr = Term::key(KeyType::sign, c.mk_nonce());
    Term pki = pkey(ski);
    Term pkr = pkey(skr);
    co_await c.send(pki);
    co_await c.send(pkr);
    {
      sim::ProcessBody body = [st, skr, pki](Context& cc) { return channel_receiver(cc, st, skr, pki); };
      co_await c.fork(std::move(body));
    }
    {
      sim::ProcessBody body = [st, ski, pkr](Context& cc) { return channel_sender(cc, st, ski, pkr); };
      co_await c.fork(std::move(body));
    }
  });
  auto status = rt.run();

  RunRecord r = record(rt, seed, std::move(name), status);
  std::int64_t replay_deliveries = 0;
  if (st->rx) {
    const auto& accepted = st->rx->accepted;
    if (static_cast<std::int64_t>(accepted.size()) != st->received) r.failures.push_back("channel.accepted: count mismatch");
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      if (std::find(accepted.begin(), accepted.begin() + static_cast<std::ptrdiff_t>(i), accepted[i]) !=
          accepted.begin() + static_cast<std::ptrdiff_t>(i)) {
        r.failures.push_back("channel.duplicate: frame " + std::to_string(i));
      }
    }
    // Walk the receiver's deliveries: a term equal to a frame it already took
    // is a replay and must have been counted as skipped.
    std::size_t taken = 0;
    for (const auto& e : rt.trace().events()) {
      if (e.kind != EventKind::recv || e.pid != st->receiver || !e.term) continue;
      if (std::find(accepted.begin(), accepted.begin() + static_cast<std::ptrdiff_t>(taken), *e.term) !=
          accepted.begin() + static_cast<std::ptrdiff_t>(taken)) {
        ++replay_deliveries;
      } else if (taken < accepted.size() && *e.term == accepted[taken]) {
        ++taken;
      }
    }
    if (taken != accepted.size()) r.failures.push_back("channel.trace: accepted frames missing from the trace");
    if (static_cast<std::uint64_t>(replay_deliveries) != st->rx->stats.replays) {
      r.failures.push_back("channel.replays: " + std::to_string(replay_deliveries) + " delivered, " +
                           std::to_string(st->rx->stats.replays) + " skipped");
    }
    r.counters["replays_skipped"] = static_cast<std::int64_t>(st->rx->stats.replays);
    r.counters["ahead_skipped"] = static_cast<std::int64_t>(st->rx->stats.ahead);
    r.counters["rejected"] = static_cast<std::int64_t>(st->rx->stats.rejected);
  }
  r.counters["connected"] = st->connected;
  r.counters["sent"] = static_cast<std::int64_t>(st->sent.size());
  r.counters["delivered"] = st->received;
  r.counters["replay_deliveries"] = replay_deliveries;
  r.counters["injections"] = static_cast<std::int64_t>(rt.injections());
  r.trace = rt.take_trace();
  return r;
}

RunRecord lowe_run(std::uint64_t seed, LoweOptions opts, std::uint64_t step_budget) {
  sim::Runtime rt(seed, sim::Passive{}, step_budget);
  const Term sk_init = Term::key(KeyType::adec, rt.fresh_nonce(NonceOrigin::honest));
  const Term sk_resp = Term::key(KeyType::adec, rt.fresh_nonce(NonceOrigin::honest));
  const Term sk_m = opts.degenerate ? sk_resp : Term::key(KeyType::adec, rt.fresh_nonce(NonceOrigin::attacker));
  const Term pk_init = pkey(sk_init);
  const Term pk_resp = pkey(sk_resp);

  std::optional<proto::Session> s_init, s_resp;
  const Pid pid_init = rt.spawn([&, pk_m = pkey(sk_m)](Context& c) -> Task<void> {
    s_init = co_await proto::ns_initiator(c, sk_init, pk_m, opts.variant);
  });
  const Pid pid_resp = rt.spawn([&](Context& c) -> Task<void> {
    s_resp = co_await proto::ns_responder(c, sk_resp, opts.variant);
  });
  rt.set_strategy(proto::lowe_attack(sk_m, pk_init, pk_resp, pid_init, pid_resp));
  auto status = rt.run();

  std::optional<Term> a, b;
  for (const auto& e : rt.trace().events()) {
    if (e.kind != EventKind::nonce_created) continue;
    if (e.pid == pid_init && !a) a = e.term;
    if (e.pid == pid_resp && !b) b = e.term;
  }

  const bool mitm = !opts.degenerate && s_resp && s_resp->init_pk == pk_init;
  std::vector<OracleCheck> checks;
  if (a && b) {
    Verdict expected = opts.variant == proto::NsVariant::ns_original && !opts.degenerate ? Verdict::derivable
                                                                                         : Verdict::underivable;
    checks.push_back(check_secrecy(rt, "lowe.resp_key", proto::nsl_session_key(pk_init, pk_resp, *a, *b), expected));
  }

  RunRecord r = record(rt, seed, "scripted", status);
  r.oracles = std::move(checks);
  r.counters["initiator_completed"] = s_init.has_value();
  r.counters["responder_completed"] = s_resp.has_value();
  r.counters["mitm_completed"] = mitm;
  r.counters["target_formed"] = a && b;
  r.trace = rt.take_trace();
  return r;
}

// --- Sweeps -------------------------------------------------------------------------

GameResult sweep_serial(const GameConfig& cfg, const RunFn& fn) {
  validate(cfg);
  GameResult out;
  out.runs.reserve(cfg.runs);
  for (std::uint64_t i = 0; i < cfg.runs; ++i) {
    out.runs.push_back(fn(cfg.seed + i));
    if (!cfg.keep_traces) out.runs.back().trace = Trace{};
  }
  return out;
}

GameResult sweep_parallel(const GameConfig& cfg, const RunFn& fn) {
  validate(cfg);
  GameResult out;
  out.runs.resize(cfg.runs);
  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(cfg.runs);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      RunRecord r = fn(cfg.seed + static_cast<std::uint64_t>(i));
      if (!cfg.keep_traces) r.trace = Trace{};
      out.runs[static_cast<std::size_t>(i)] = std::move(r);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace dyrun::games
