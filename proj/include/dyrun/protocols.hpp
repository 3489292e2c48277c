#pragma once

#include <optional>
#include <vector>

#include "dyrun/runtime.hpp"
#include "dyrun/term.hpp"

namespace dyrun::proto {

using sim::Context;
using sim::Task;

/// Outcome of a completed handshake, as seen by one role.
struct Session {
  Term init_pk;
  Term resp_pk;
  Term init_share;  // a for NS/NSL, g^a for ISO
  Term resp_share;  // b for NS/NSL, g^b for ISO
  std::optional<Term> secret;  // g^ab, ISO only
  Term key;
};

enum class NsVariant : std::uint8_t { ns_original, nsl };

/// Public DH generator.
Term dh_generator();

Term nsl_session_key(const Term& pk_init, const Term& pk_resp, const Term& a, const Term& b);
Term iso_session_key(const Term& pk_init, const Term& pk_resp, const Term& ga, const Term& gb, const Term& gab);

/// Receive filter accepting terms that open under `opener` to a list matching
/// `pattern`. With no opener the list itself is matched.
sim::RecvFilter sealed_filter(std::optional<Term> opener, std::vector<PatternItem> pattern);

// Needham-Schroeder. The original variant leaves the responder identity out
// of m2; the Lowe fix puts it in and the initiator checks it.
//   I -> R : {m1, a, pkI}_pkR
//   R -> I : {m2, a, b, pkR}_pkI
//   I -> R : {m3, b}_pkR
// Roles return nullopt on any open or pattern failure and on wrong key types.

Task<std::optional<Session>> ns_initiator(Context& ctx, Term sk_init, Term pk_resp, NsVariant variant);
Task<std::optional<Session>> ns_responder(Context& ctx, Term sk_resp, NsVariant variant);

inline Task<std::optional<Session>> nsl_initiator(Context& ctx, Term sk, Term pk_resp) {
  return ns_initiator(ctx, std::move(sk), std::move(pk_resp), NsVariant::nsl);
}
inline Task<std::optional<Session>> nsl_responder(Context& ctx, Term sk) {
  return ns_responder(ctx, std::move(sk), NsVariant::nsl);
}

// ISO signed Diffie-Hellman.
//   I -> R : [m1, g^a, pkI]
//   R -> I : sign_skR [m2, g^a, g^b, pkI]
//   I -> R : sign_skI [m3, g^a, g^b, pkR]

struct IsoRequest {
  Term ga;
  Term pk_init;
};

Task<std::optional<Session>> iso_initiator(Context& ctx, Term sk_init, Term pk_resp);
/// Waits for an m1 and destructures it. `prefer` narrows the receive filter
/// further (a delivery hint only; any m1 that arrives is processed).
Task<std::optional<IsoRequest>> iso_listen(Context& ctx, sim::RecvFilter prefer = {});
/// Completes the responder side for a request obtained from iso_listen.
Task<std::optional<Session>> iso_confirm(Context& ctx, Term sk_resp, IsoRequest request);
/// iso_listen followed by iso_confirm.
Task<std::optional<Session>> iso_responder(Context& ctx, Term sk_resp);

/// The man-in-the-middle relay against the original protocol. The initiator
/// (pid `initiator`) is assumed to talk to M = pkey(sk_attacker); M re-seals
/// m1 and m3 for the responder and forwards m2 untouched. When M is the
/// responder itself every step is a plain forward.
sim::Scripted lowe_attack(const Term& sk_attacker, const Term& pk_init, const Term& pk_resp, Pid initiator,
                          Pid responder);

}  // namespace dyrun::proto
