#include "dyrun/stack.hpp"

#include <algorithm>

namespace dyrun::stack {

namespace {

struct Frame {
  std::string tag;
  std::int64_t seq;
  std::vector<Term> payload;
};

std::optional<Frame> unwrap(const Term& key, const Term& m) {
  auto body = open(key, m);
  if (!body || !body->is(TermKind::list)) return std::nullopt;
  auto items = body->items();
  if (items.size() != 3 || !items[0].is(TermKind::tag) || !items[1].is(TermKind::integer) ||
      !items[2].is(TermKind::list)) {
    return std::nullopt;
  }
  auto payload = items[2].items();
  return Frame{items[0].tag_name(), items[1].int_value(), {payload.begin(), payload.end()}};
}

Connection make_connection(proto::Session session, Role role) {
  Term key = session.key;
  return Connection{std::move(key), 0, 0, role, std::move(session), {}, {}};
}

std::optional<Connection> wrap_session(std::optional<proto::Session> s, Role role) {
  if (!s) return std::nullopt;
  return make_connection(std::move(*s), role);
}

}  // namespace

Task<std::optional<Connection>> conn_connect(Context& ctx, Term sk, Term pk_server) {
  auto s = co_await proto::iso_initiator(ctx, std::move(sk), std::move(pk_server));
  co_return wrap_session(std::move(s), Role::init);
}

Task<std::optional<proto::IsoRequest>> conn_listen(Context& ctx, sim::RecvFilter prefer) {
  return proto::iso_listen(ctx, std::move(prefer));
}

Task<std::optional<Connection>> conn_confirm(Context& ctx, Term sk, proto::IsoRequest request) {
  auto s = co_await proto::iso_confirm(ctx, std::move(sk), std::move(request));
  co_return wrap_session(std::move(s), Role::resp);
}

Term conn_wrap(const Connection& c, const std::string& tag, std::vector<Term> payload) {
  return seal(c.session_key, Term::list({Term::tag(tag), Term::integer(c.sent), Term::list(std::move(payload))}));
}

Task<void> conn_send(Context& ctx, Connection& c, std::string tag, std::vector<Term> payload) {
  Term ciphertext = conn_wrap(c, tag, std::move(payload));
  ++c.sent;
  co_await ctx.send(std::move(ciphertext));
}

Task<Incoming> conn_recv_where(Context& ctx, Connection& c, std::function<bool(const std::string&)> accept) {
  for (;;) {
    // The filter only steers benign delivery; the checks below are what count.
    sim::RecvFilter hint = [&c, &accept](const Term& m) {
      auto f = unwrap(c.session_key, m);
      return f && accept(f->tag) && f->seq == c.received;
    };
    Term m = co_await ctx.recv(std::move(hint));
    auto f = unwrap(c.session_key, m);
    if (!f || !accept(f->tag)) {
      ++c.stats.rejected;
      continue;
    }
    if (f->seq != c.received) {
      ++(f->seq < c.received ? c.stats.replays : c.stats.ahead);
      continue;
    }
    ++c.received;
    c.accepted.push_back(m);
    co_return Incoming{std::move(f->tag), std::move(f->payload)};
  }
}

Task<std::vector<Term>> conn_recv(Context& ctx, Connection& c, std::string tag) {
  std::function<bool(const std::string&)> accept = [tag](const std::string& t) { return t == tag; };
  auto in = co_await conn_recv_where(ctx, c, std::move(accept));
  co_return std::move(in.payload);
}

// --- RPC ----------------------------------------------------------------------

bool is_rpc_error(const std::vector<Term>& response) {
  return response.size() == 1 && response[0].is(TermKind::tag) && response[0].tag_name() == kRpcError;
}

Task<std::vector<Term>> rpc_call(Context& ctx, Connection& c, std::string op, std::vector<Term> args) {
  co_await conn_send(ctx, c, std::move(op), std::move(args));
  co_return co_await conn_recv(ctx, c, kRpcResp);
}

Task<void> rpc_serve(Context& ctx, Connection& c, Handlers handlers) {
  // Responses travel on the same key; never take one back as a request.
  const std::function<bool(const std::string&)> is_request = [](const std::string& t) { return t != kRpcResp; };
  for (;;) {
    Incoming req = co_await conn_recv_where(ctx, c, is_request);
    if (req.tag == kRpcClose) {
      co_await conn_send(ctx, c, kRpcResp, {});
      co_return;
    }
    std::optional<std::vector<Term>> result;
    if (auto it = handlers.find(req.tag); it != handlers.end()) result = it->second(req.payload);
    std::vector<Term> reply;
    if (result) {
      reply = std::move(*result);
    } else {
      reply.push_back(Term::tag(kRpcError));
    }
    co_await conn_send(ctx, c, kRpcResp, std::move(reply));
  }
}

Task<Term> rpc_close(Context& ctx, Connection& c) {
  co_await conn_send(ctx, c, kRpcClose, {});
  co_await conn_recv(ctx, c, kRpcResp);
  co_return c.session_key;
}

// --- Key-value store ----------------------------------------------------------------

std::shared_ptr<KvAccount> KvServer::account(const Term& client) {
  for (const auto& a : accounts) {
    if (a->client == client) return a;
  }
  accounts.push_back(std::make_shared<KvAccount>(client));
  return accounts.back();
}

Handlers kv_handlers(std::shared_ptr<KvAccount> account) {
  auto find = [account](const Term& k) -> std::pair<Term, Term>* {
    for (auto& kv : account->db) {
      if (kv.first == k) return &kv;
    }
    return nullptr;
  };
  using Reply = std::optional<std::vector<Term>>;
  Handlers h;
  h[kDbLoad] = [find](const std::vector<Term>& args) -> Reply {
    if (args.size() != 1) return std::nullopt;
    auto* kv = find(args[0]);
    if (!kv) return std::nullopt;
    return std::vector<Term>{kv->second};
  };
  h[kDbCreate] = [find, account](const std::vector<Term>& args) -> Reply {
    if (args.size() != 2 || find(args[0])) return std::nullopt;
    account->db.emplace_back(args[0], args[1]);
    return std::vector<Term>{};
  };
  h[kDbStore] = [find](const std::vector<Term>& args) -> Reply {
    if (args.size() != 2) return std::nullopt;
    auto* kv = find(args[0]);
    if (!kv) return std::nullopt;
    kv->second = args[1];
    return std::vector<Term>{};
  };
  h[kDbClose] = [](const std::vector<Term>& args) -> Reply {
    if (!args.empty()) return std::nullopt;
    return std::vector<Term>{};
  };
  return h;
}

Task<void> kv_server_start(Context& ctx, Term sk_server, std::shared_ptr<KvServer> state) {
  for (;;) {
    // Benign delivery skips requests already taken; a replayed one would stall
    // the loop in confirm.
    sim::RecvFilter fresh = [state](const Term& t) {
      return std::find(state->served.begin(), state->served.end(), t) == state->served.end();
    };
    auto request = co_await conn_listen(ctx, std::move(fresh));
    if (!request) {
      ++state->handshakes_dropped;
      continue;
    }
    state->served.push_back(Term::list({Term::tag("m1"), request->ga, request->pk_init}));
    auto conn = co_await conn_confirm(ctx, sk_server, std::move(*request));
    if (!conn) {
      ++state->handshakes_dropped;
      continue;
    }
    auto account = state->account(conn->session.init_pk);
    co_await ctx.acquire(account->lock);
    auto shared = std::make_shared<Connection>(std::move(*conn));
    sim::ProcessBody handler = [shared, account](Context& c) -> Task<void> {
      co_await rpc_serve(c, *shared, kv_handlers(account));
      c.release(account->lock);
    };
    co_await ctx.fork_daemon(std::move(handler));
  }
}

Task<std::optional<Connection>> kv_connect(Context& ctx, Term sk_client, Term pk_server) {
  return conn_connect(ctx, std::move(sk_client), std::move(pk_server));
}

Task<bool> kv_create(Context& ctx, Connection& c, Term key, Term value) {
  std::vector<Term> args{std::move(key), std::move(value)};
  auto r = co_await rpc_call(ctx, c, kDbCreate, std::move(args));
  co_return r.empty();
}

Task<bool> kv_store(Context& ctx, Connection& c, Term key, Term value) {
  std::vector<Term> args{std::move(key), std::move(value)};
  auto r = co_await rpc_call(ctx, c, kDbStore, std::move(args));
  co_return r.empty();
}

Task<Term> kv_load(Context& ctx, Connection& c, Term key) {
  std::vector<Term> args{std::move(key)};
  auto r = co_await rpc_call(ctx, c, kDbLoad, std::move(args));
  if (r.size() != 1) co_return Term::tag(kRpcError);
  co_return r[0];
}

Task<Term> kv_close(Context& ctx, Connection& c) {
  co_await rpc_call(ctx, c, kDbClose, {});
  co_return co_await rpc_close(ctx, c);
}

}  // namespace dyrun::stack
