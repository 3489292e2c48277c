#include "dyrun/attacker.hpp"

#include <limits>

namespace dyrun::sim {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

bool Rng::chance(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p;
}

std::optional<Term> AttackerView::last_sent_by(Pid pid) const {
  for (auto it = pool_.rbegin(); it != pool_.rend(); ++it) {
    if (it->sender == pid) return it->term;
  }
  return std::nullopt;
}

std::optional<Term> AttackerView::nth_sent_by(Pid pid, std::size_t n) const {
  for (const auto& e : pool_) {
    if (e.sender == pid && n-- == 0) return e.term;
  }
  return std::nullopt;
}

std::optional<Term> AttackerView::find_list_with_head(std::string_view tag) const {
  for (const auto& t : knowledge_.saturated()) {
    if (!t.is(TermKind::list) || t.items().empty()) continue;
    const Term& head = t.items().front();
    if (head.is(TermKind::tag) && head.tag_name() == tag) return t;
  }
  return std::nullopt;
}

std::string_view strategy_name(const AttackerStrategy& s) {
  switch (s.index()) {
    case 0: return "passive";
    case 1: return "mutating";
    default: return "scripted";
  }
}

namespace {

class Mutator {
 public:
  Mutator(const AttackerView& view, const Mutating& config) : view_(view), cfg_(config) {}

  Term build(unsigned depth) {
    Rng& rng = view_.rng();
    const unsigned ops = depth == 0 ? 3 : 9;
    switch (rng.below(ops)) {
      case 0: return replay();
      case 1: return known();
      case 2: return atom();
      case 3: return tagged_list(depth);
      case 4: return substitute(depth);
      case 5: return reseal(depth);
      case 6: return share();
      case 7: return Term::pair(build(depth - 1), build(depth - 1));
      default: return replay();
    }
  }

 private:
  Term replay() {
    const auto& pool = view_.pool();
    if (pool.empty()) return atom();
    return pool[view_.rng().below(pool.size())].term;
  }

  Term known() {
    const auto& sat = view_.knowledge().saturated();
    if (sat.empty()) return atom();
    return sat[view_.rng().below(sat.size())];
  }

  Term tag() {
    const auto& tags = cfg_.tags;
    if (tags.empty()) return Term::tag("x");
    return Term::tag(tags[view_.rng().below(tags.size())]);
  }

  Term atom() {
    switch (view_.rng().below(3)) {
      case 0: return view_.fresh_nonce();
      case 1: return Term::integer(static_cast<std::int64_t>(view_.rng().below(4)));
      default: return tag();
    }
  }

  Term tagged_list(unsigned depth) {
    std::vector<Term> items{tag()};
    auto n = view_.rng().below(5);
    for (std::uint64_t i = 0; i < n; ++i) items.push_back(build(depth - 1));
    return Term::list(std::move(items));
  }

  // Takes an observed list and swaps one element for something else.
  Term substitute(unsigned depth) {
    std::vector<Term> lists;
    for (const auto& t : view_.knowledge().saturated()) {
      if (t.is(TermKind::list) && !t.items().empty()) lists.push_back(t);
    }
    if (lists.empty()) return tagged_list(depth);
    const Term& pick = lists[view_.rng().below(lists.size())];
    std::vector<Term> items(pick.items().begin(), pick.items().end());
    items[view_.rng().below(items.size())] = build(depth - 1);
    return Term::list(std::move(items));
  }

  Term sealing_key() {
    std::vector<Term> keys;
    for (const auto& t : view_.knowledge().saturated()) {
      if (t.is(TermKind::key) && is_sealing_type(t.key_type())) keys.push_back(t);
    }
    // Public encryption keys can be formed for any seed; symmetric keys only
    // from attacker material.
    if (keys.empty() || view_.rng().chance(0.2)) {
      return view_.rng().chance(0.5) ? Term::key(KeyType::aenc, view_.fresh_nonce())
                                     : Term::key(KeyType::senc, view_.fresh_nonce());
    }
    return keys[view_.rng().below(keys.size())];
  }

  Term reseal(unsigned depth) {
    Term k = sealing_key();
    Term body = view_.rng().chance(0.5) ? substitute(depth) : build(depth - 1);
    return seal(k, std::move(body));
  }

  Term share() {
    std::vector<Term> shares;
    for (const auto& t : view_.knowledge().saturated()) {
      if (t.is(TermKind::exp)) shares.push_back(t);
    }
    Term e = view_.fresh_nonce();
    if (shares.empty() || view_.rng().chance(0.5)) return dh_exp(Term::tag("dh.g"), std::move(e));
    return dh_exp(shares[view_.rng().below(shares.size())], std::move(e));
  }

  const AttackerView& view_;
  const Mutating& cfg_;
};

}  // namespace

Term mutate(const AttackerView& view, const Mutating& config) {
  return Mutator(view, config).build(config.depth);
}

}  // namespace dyrun::sim
