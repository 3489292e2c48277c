#include "dyrun/protocols.hpp"

namespace dyrun::proto {

namespace {

Term list(std::vector<Term> items) { return Term::list(std::move(items)); }
Term tag(const char* name) { return Term::tag(name); }

std::optional<Bindings> open_match(const std::optional<Term>& opener, const std::vector<PatternItem>& pattern,
                                   const Term& t) {
  if (!opener) return match_pattern(pattern, t);
  auto body = open(*opener, t);
  if (!body) return std::nullopt;
  return match_pattern(pattern, *body);
}

std::optional<Session> nsl_session(Term pk_init, Term pk_resp, Term a, Term b) {
  Term key = nsl_session_key(pk_init, pk_resp, a, b);
  return Session{std::move(pk_init), std::move(pk_resp), std::move(a), std::move(b), std::nullopt, std::move(key)};
}

std::optional<Session> iso_session(Term pk_init, Term pk_resp, Term ga, Term gb, Term gab) {
  Term key = iso_session_key(pk_init, pk_resp, ga, gb, gab);
  return Session{std::move(pk_init), std::move(pk_resp), std::move(ga), std::move(gb), std::move(gab), std::move(key)};
}

}  // namespace

Term dh_generator() { return Term::tag("dh.g"); }

Term nsl_session_key(const Term& pk_init, const Term& pk_resp, const Term& a, const Term& b) {
  return Term::key(KeyType::senc, list({pk_init, pk_resp, a, b}));
}

Term iso_session_key(const Term& pk_init, const Term& pk_resp, const Term& ga, const Term& gb, const Term& gab) {
  return Term::key(KeyType::senc, list({pk_init, pk_resp, ga, gb, gab}));
}

sim::RecvFilter sealed_filter(std::optional<Term> opener, std::vector<PatternItem> pattern) {
  return [opener = std::move(opener), pattern = std::move(pattern)](const Term& t) {
    return open_match(opener, pattern, t).has_value();
  };
}

// --- Needham-Schroeder ---------------------------------------------------------

Task<std::optional<Session>> ns_initiator(Context& ctx, Term sk_init, Term pk_resp, NsVariant variant) {
  if (!sk_init.is_key(KeyType::adec) || !pk_resp.is_key(KeyType::aenc)) co_return std::nullopt;
  const Term pk_init = pkey(sk_init);
  const Term a = ctx.mk_nonce();
  Term m1 = seal(pk_resp, list({tag("m1"), a, pk_init}));
  co_await ctx.send(std::move(m1));

  std::vector<PatternItem> m2{TagLit{"m2"}, Exact{a}, Bind{"b"}};
  if (variant == NsVariant::nsl) m2.push_back(Exact{pk_resp});
  Term msg = co_await ctx.recv(sealed_filter(sk_init, m2));
  auto got = open_match(sk_init, m2, msg);
  if (!got) co_return std::nullopt;
  const Term b = got->at("b");

  Term m3 = seal(pk_resp, list({tag("m3"), b}));
  co_await ctx.send(std::move(m3));
  co_return nsl_session(pk_init, pk_resp, a, b);
}

Task<std::optional<Session>> ns_responder(Context& ctx, Term sk_resp, NsVariant variant) {
  if (!sk_resp.is_key(KeyType::adec)) co_return std::nullopt;
  const Term pk_resp = pkey(sk_resp);

  const std::vector<PatternItem> m1{TagLit{"m1"}, Bind{"a"}, Bind{"pk"}};
  Term msg = co_await ctx.recv(sealed_filter(sk_resp, m1));
  auto got = open_match(sk_resp, m1, msg);
  if (!got) co_return std::nullopt;
  const Term a = got->at("a");
  const Term pk_init = got->at("pk");
  if (!pk_init.is_key(KeyType::aenc)) co_return std::nullopt;

  const Term b = ctx.mk_nonce();
  std::vector<Term> m2{tag("m2"), a, b};
  if (variant == NsVariant::nsl) m2.push_back(pk_resp);
  co_await ctx.send(seal(pk_init, list(std::move(m2))));

  const std::vector<PatternItem> m3{TagLit{"m3"}, Exact{b}};
  msg = co_await ctx.recv(sealed_filter(sk_resp, m3));
  if (!open_match(sk_resp, m3, msg)) co_return std::nullopt;
  co_return nsl_session(pk_init, pk_resp, a, b);
}

// --- ISO ------------------------------------------------------------------------

Task<std::optional<Session>> iso_initiator(Context& ctx, Term sk_init, Term pk_resp) {
  if (!sk_init.is_key(KeyType::sign) || !pk_resp.is_key(KeyType::verify)) co_return std::nullopt;
  const Term pk_init = pkey(sk_init);
  const Term a = ctx.mk_nonce();
  const Term ga = dh_exp(dh_generator(), a);
  Term m1 = list({tag("m1"), ga, pk_init});
  co_await ctx.send(std::move(m1));

  const std::vector<PatternItem> m2{TagLit{"m2"}, Exact{ga}, Bind{"gb"}, Exact{pk_init}};
  Term msg = co_await ctx.recv(sealed_filter(pk_resp, m2));
  auto got = open_match(pk_resp, m2, msg);
  if (!got) co_return std::nullopt;
  const Term gb = got->at("gb");

  Term m3 = seal(sk_init, list({tag("m3"), ga, gb, pk_resp}));
  co_await ctx.send(std::move(m3));
  const Term gab = dh_exp(gb, a);
  co_return iso_session(pk_init, pk_resp, ga, gb, gab);
}

Task<std::optional<IsoRequest>> iso_listen(Context& ctx, sim::RecvFilter prefer) {
  const std::vector<PatternItem> m1{TagLit{"m1"}, Bind{"ga"}, Bind{"pk"}};
  sim::RecvFilter filter = sealed_filter(std::nullopt, m1);
  if (prefer) {
    filter = [shape = std::move(filter), prefer = std::move(prefer)](const Term& t) { return shape(t) && prefer(t); };
  }
  Term msg = co_await ctx.recv(std::move(filter));
  auto got = match_pattern(m1, msg);
  if (!got) co_return std::nullopt;
  co_return std::make_optional<IsoRequest>(got->at("ga"), got->at("pk"));
}

Task<std::optional<Session>> iso_confirm(Context& ctx, Term sk_resp, IsoRequest request) {
  if (!sk_resp.is_key(KeyType::sign) || !request.pk_init.is_key(KeyType::verify)) co_return std::nullopt;
  const Term pk_resp = pkey(sk_resp);
  const Term& ga = request.ga;
  const Term& pk_init = request.pk_init;
  const Term b = ctx.mk_nonce();
  const Term gb = dh_exp(dh_generator(), b);
  Term m2 = seal(sk_resp, list({tag("m2"), ga, gb, pk_init}));
  co_await ctx.send(std::move(m2));

  const std::vector<PatternItem> m3{TagLit{"m3"}, Exact{ga}, Exact{gb}, Exact{pk_resp}};
  Term msg = co_await ctx.recv(sealed_filter(pk_init, m3));
  if (!open_match(pk_init, m3, msg)) co_return std::nullopt;
  const Term gab = dh_exp(ga, b);
  co_return iso_session(pk_init, pk_resp, ga, gb, gab);
}

Task<std::optional<Session>> iso_responder(Context& ctx, Term sk_resp) {
  auto request = co_await iso_listen(ctx);
  if (!request) co_return std::nullopt;
  co_return co_await iso_confirm(ctx, std::move(sk_resp), std::move(*request));
}

// --- Lowe's attack ------------------------------------------------------------------

sim::Scripted lowe_attack(const Term& sk_attacker, const Term& pk_init, const Term& pk_resp, Pid initiator,
                          Pid responder) {
  sim::Scripted s;
  s.initial_knowledge = {pk_init, pk_resp};
  auto forward = [](Pid from, std::size_t n) {
    return [from, n](const sim::AttackerView& v) { return v.nth_sent_by(from, n); };
  };
  if (pkey(sk_attacker) == pk_resp) {
    s.steps = {{"forward m1", responder, forward(initiator, 0)},
               {"forward m2", initiator, forward(responder, 0)},
               {"forward m3", responder, forward(initiator, 1)}};
    return s;
  }
  s.initial_knowledge.push_back(sk_attacker);
  auto reseal = [pk_resp](const char* head) {
    return [pk_resp, head](const sim::AttackerView& v) -> std::optional<Term> {
      auto body = v.find_list_with_head(head);
      if (!body) return std::nullopt;
      return seal(pk_resp, *body);
    };
  };
  s.steps = {{"reseal m1", responder, reseal("m1")},
             {"forward m2", initiator, forward(responder, 0)},
             {"reseal m3", responder, reseal("m3")}};
  return s;
}

}  // namespace dyrun::proto
