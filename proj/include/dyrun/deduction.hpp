#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dyrun/term.hpp"
#include "dyrun/trace.hpp"

namespace dyrun {

/// Attacker knowledge: the observed base terms and their decomposition
/// closure.
///
/// Saturation applies, to a fixpoint:
///   (a) a pair releases both components,
///   (b) a list releases every element,
///   (c) a sealed term releases its payload once the matching opening key is
///       derivable.
/// Keys and DH terms never decompose. Derivability then synthesizes the target
/// top-down from the saturated set; results are memoized until the saturated
/// set grows.
///
/// The registry is borrowed and must outlive the knowledge. Queries saturate
/// lazily, so const member functions may update internal caches; a Knowledge
/// object must not be shared between threads.
class Knowledge {
 public:
  explicit Knowledge(const NonceRegistry& registry) : registry_(&registry) {}

  /// Returns true when `t` was not already in the base.
  bool add(const Term& t);

  /// Brings the saturated set up to date. Idempotent.
  void saturate() const;

  bool derivable(const Term& t) const;

  bool in_base(const Term& t) const { return base_set_.contains(t); }
  bool in_saturated(const Term& t) const;

  /// Base terms in insertion order.
  const std::vector<Term>& base() const noexcept { return base_; }
  /// Saturated terms in discovery order.
  const std::vector<Term>& saturated() const;

  bool dirty() const noexcept { return dirty_; }
  std::uint64_t version() const noexcept { return version_; }
  const NonceRegistry& registry() const noexcept { return *registry_; }

 private:
  bool synth(const Term& t) const;
  bool insert_saturated(const Term& t) const;

  const NonceRegistry* registry_;
  std::vector<Term> base_;
  std::unordered_set<Term, TermHash> base_set_;

  mutable std::size_t base_consumed_ = 0;  // prefix of base_ already fed to saturation
  mutable std::vector<Term> sat_;
  mutable std::unordered_set<Term, TermHash> sat_set_;
  mutable std::vector<Term> unopened_;  // sealed terms in sat_ whose payload is not released yet
  mutable std::unordered_map<Term, bool, TermHash> memo_;
  mutable std::size_t memo_nonces_ = 0;  // registry size the memo was computed against
  mutable bool dirty_ = false;
  mutable std::uint64_t version_ = 0;
};

Knowledge knowledge_add(Knowledge k, const Term& t);
Knowledge saturate(Knowledge k);

/// Knowledge reconstructed from a trace: every sent or leaked term joins the
/// base, and nonce origins come from the nonce_created events.
class TraceKnowledge {
 public:
  explicit TraceKnowledge(const Trace& trace);
  TraceKnowledge(const TraceKnowledge&) = delete;
  TraceKnowledge& operator=(const TraceKnowledge&) = delete;

  Verdict verdict(const Term& target) const;
  const Knowledge& knowledge() const { return knowledge_; }

 private:
  std::unique_ptr<NonceRegistry> registry_;
  Knowledge knowledge_;
};

Verdict derivability_oracle(const Trace& trace, const Term& target);

/// Replays the trace and checks that every delivered message was derivable
/// from what the attacker had seen just before delivery. Returns the step of
/// the first violation, if any.
std::optional<std::uint64_t> first_unsound_delivery(const Trace& trace);

}  // namespace dyrun
