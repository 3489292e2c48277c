#include "dyrun/deduction.hpp"

#include <algorithm>

namespace dyrun {

bool Knowledge::add(const Term& t) {
  if (!base_set_.insert(t).second) return false;
  base_.push_back(t);
  dirty_ = true;
  return true;
}

bool Knowledge::insert_saturated(const Term& t) const {
  if (!sat_set_.insert(t).second) return false;
  sat_.push_back(t);
  return true;
}

void Knowledge::saturate() const {
  if (!dirty_) return;
  std::vector<Term> work(base_.begin() + static_cast<std::ptrdiff_t>(base_consumed_), base_.end());
  base_consumed_ = base_.size();

  bool grew = false;
  for (;;) {
    while (!work.empty()) {
      Term t = std::move(work.back());
      work.pop_back();
      if (!insert_saturated(t)) continue;
      grew = true;
      switch (t.kind()) {
        case TermKind::pair:
          work.push_back(t.left());
          work.push_back(t.right());
          break;
        case TermKind::list:
          for (const auto& e : t.items()) work.push_back(e);
          break;
        case TermKind::seal: unopened_.push_back(t); break;
        default: break;
      }
    }
    // Opening keys may only have become derivable through the terms just added.
    memo_.clear();
    bool opened = false;
    auto still = std::stable_partition(unopened_.begin(), unopened_.end(), [&](const Term& s) {
      const Term& k = s.seal_key();
      auto opening = opening_type(k.key_type());
      if (!opening || !synth(Term::key(*opening, k.seed()))) return true;
      work.push_back(s.payload());
      opened = true;
      return false;
    });
    unopened_.erase(still, unopened_.end());
    if (!opened) break;
  }
  if (grew) ++version_;
  dirty_ = false;
}

bool Knowledge::in_saturated(const Term& t) const {
  saturate();
  return sat_set_.contains(t);
}

const std::vector<Term>& Knowledge::saturated() const {
  saturate();
  return sat_;
}

bool Knowledge::derivable(const Term& t) const {
  saturate();
  if (registry_->recorded() != memo_nonces_) {
    memo_.clear();
    memo_nonces_ = registry_->recorded();
  }
  return synth(t);
}

bool Knowledge::synth(const Term& t) const {
  if (sat_set_.contains(t)) return true;
  if (auto it = memo_.find(t); it != memo_.end()) return it->second;

  bool result = false;
  switch (t.kind()) {
    case TermKind::integer:
    case TermKind::tag: result = true; break;
    case TermKind::nonce: result = registry_->is_attacker_nonce(t); break;
    case TermKind::pair: result = synth(t.left()) && synth(t.right()); break;
    case TermKind::list:
      result = std::all_of(t.items().begin(), t.items().end(), [&](const Term& e) { return synth(e); });
      break;
    case TermKind::key: {
      KeyType kt = t.key_type();
      result = kt == KeyType::aenc || kt == KeyType::verify || synth(t.seed());
      break;
    }
    case TermKind::seal: result = synth(t.seal_key()) && synth(t.payload()); break;
    case TermKind::exp: {
      auto es = t.exponents();
      if (es.size() == 1) {
        result = true;
        break;
      }
      for (std::size_t i = 0; i < es.size() && !result; ++i) {
        if (i > 0 && es[i] == es[i - 1]) continue;
        if (!synth(es[i])) continue;
        std::vector<Term> rest;
        rest.reserve(es.size() - 1);
        for (std::size_t j = 0; j < es.size(); ++j) {
          if (j != i) rest.push_back(es[j]);
        }
        result = synth(Term::exp(t.exp_base(), std::move(rest)));
      }
      break;
    }
  }
  memo_.emplace(t, result);
  return result;
}

Knowledge knowledge_add(Knowledge k, const Term& t) {
  k.add(t);
  return k;
}

Knowledge saturate(Knowledge k) {
  k.saturate();
  return k;
}

// --- Trace oracle ------------------------------------------------------------------

TraceKnowledge::TraceKnowledge(const Trace& trace)
    : registry_(std::make_unique<NonceRegistry>()), knowledge_(*registry_) {
  for (const auto& e : trace.events()) {
    switch (e.kind) {
      case EventKind::nonce_created: registry_->record(e.term->nonce_id(), e.origin); break;
      case EventKind::send:
      case EventKind::leak: knowledge_.add(*e.term); break;
      default: break;
    }
  }
}

Verdict TraceKnowledge::verdict(const Term& target) const {
  return knowledge_.derivable(target) ? Verdict::derivable : Verdict::underivable;
}

Verdict derivability_oracle(const Trace& trace, const Term& target) { return TraceKnowledge(trace).verdict(target); }

std::optional<std::uint64_t> first_unsound_delivery(const Trace& trace) {
  NonceRegistry registry;
  Knowledge k(registry);
  for (const auto& e : trace.events()) {
    switch (e.kind) {
      case EventKind::nonce_created: registry.record(e.term->nonce_id(), e.origin); break;
      case EventKind::send:
      case EventKind::leak: k.add(*e.term); break;
      case EventKind::recv:
        if (!k.derivable(*e.term)) return e.step;
        break;
      default: break;
    }
  }
  return std::nullopt;
}

}  // namespace dyrun
