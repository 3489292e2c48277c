#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyrun/protocols.hpp"
#include "dyrun/runtime.hpp"

namespace dyrun::stack {

using sim::Context;
using sim::Task;

inline constexpr const char* kRpcResp = "rpc.resp";
inline constexpr const char* kRpcClose = "rpc.close";
inline constexpr const char* kRpcError = "rpc.error";
inline constexpr const char* kDbLoad = "db.load";
inline constexpr const char* kDbCreate = "db.create";
inline constexpr const char* kDbStore = "db.store";
inline constexpr const char* kDbClose = "db.close";

enum class Role : std::uint8_t { init, resp };

/// Messages conn_recv looked at and dropped.
struct ConnStats {
  std::uint64_t replays = 0;    // right key and tag, sequence number already consumed
  std::uint64_t ahead = 0;      // right key and tag, sequence number in the future
  std::uint64_t rejected = 0;   // could not be opened or did not match the wire format or tag
};

/// Authenticated, ordered channel over an ISO session key. Every message is
/// Seal(key, [tag, Int seq, List payload]); the two directions keep separate
/// counters.
struct Connection {
  Term session_key;
  std::int64_t sent = 0;
  std::int64_t received = 0;
  Role role = Role::init;
  proto::Session session;
  ConnStats stats;
  std::vector<Term> accepted;  // ciphertexts conn_recv returned, in order
};

Task<std::optional<Connection>> conn_connect(Context& ctx, Term sk, Term pk_server);
Task<std::optional<proto::IsoRequest>> conn_listen(Context& ctx, sim::RecvFilter prefer = {});
Task<std::optional<Connection>> conn_confirm(Context& ctx, Term sk, proto::IsoRequest request);

/// The ciphertext conn_send would produce next, without sending it.
Term conn_wrap(const Connection& c, const std::string& tag, std::vector<Term> payload);
Task<void> conn_send(Context& ctx, Connection& c, std::string tag, std::vector<Term> payload);

/// Polls the network until a message with the expected tag and the next
/// sequence number arrives; anything else is counted and skipped.
Task<std::vector<Term>> conn_recv(Context& ctx, Connection& c, std::string tag);

struct Incoming {
  std::string tag;
  std::vector<Term> payload;
};
/// Like conn_recv but accepts any tag for which `accept` holds.
Task<Incoming> conn_recv_where(Context& ctx, Connection& c, std::function<bool(const std::string&)> accept);

// --- RPC --------------------------------------------------------------------

/// Server-side operation. nullopt makes the server answer [rpc.error].
using Handler = std::function<std::optional<std::vector<Term>>(const std::vector<Term>& args)>;
using Handlers = std::map<std::string, Handler>;

bool is_rpc_error(const std::vector<Term>& response);

Task<std::vector<Term>> rpc_call(Context& ctx, Connection& c, std::string op, std::vector<Term> args);
/// Serves requests until rpc.close, which is acknowledged before returning.
/// Unknown operations get an error reply and the loop continues.
Task<void> rpc_serve(Context& ctx, Connection& c, Handlers handlers);
/// Sends rpc.close, waits for the acknowledgement and hands back the session
/// key so the caller may publish it.
Task<Term> rpc_close(Context& ctx, Connection& c);

// --- Key-value store --------------------------------------------------------

struct KvAccount {
  explicit KvAccount(Term id) : client(std::move(id)) {}
  Term client;                              // the client's verify key
  std::vector<std::pair<Term, Term>> db;    // association list
  sim::Lock lock;
};

struct KvServer {
  std::vector<std::shared_ptr<KvAccount>> accounts;
  std::vector<Term> served;  // connection requests already taken by the accept loop
  std::uint64_t handshakes_dropped = 0;

  /// Existing account for `client`, or a fresh empty one.
  std::shared_ptr<KvAccount> account(const Term& client);
};

Handlers kv_handlers(std::shared_ptr<KvAccount> account);

/// Accept loop: listen, confirm, look up the account, take its lock and fork
/// a daemon that serves the connection and releases the lock. Never returns.
/// Confirmation stays in the loop so that no other handshake can finish
/// between a client's confirmation and the lock acquisition for it.
Task<void> kv_server_start(Context& ctx, Term sk_server, std::shared_ptr<KvServer> state);

Task<std::optional<Connection>> kv_connect(Context& ctx, Term sk_client, Term pk_server);
/// True on acknowledgement, false on an error reply.
Task<bool> kv_create(Context& ctx, Connection& c, Term key, Term value);
Task<bool> kv_store(Context& ctx, Connection& c, Term key, Term value);
/// The stored value, or Tag rpc.error when the key is missing. A stored value
/// that is itself Tag rpc.error is indistinguishable from a miss.
Task<Term> kv_load(Context& ctx, Connection& c, Term key);
/// db.close followed by rpc_close; returns the session key.
Task<Term> kv_close(Context& ctx, Connection& c);

}  // namespace dyrun::stack
