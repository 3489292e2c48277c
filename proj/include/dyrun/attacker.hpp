#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dyrun/deduction.hpp"
#include "dyrun/term.hpp"
#include "dyrun/trace.hpp"

namespace dyrun::sim {

/// Seeded source of all nondeterminism in a run. Draws are implemented on top
/// of the raw engine output so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// True with probability p.
  bool chance(double p);
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct PoolEntry {
  Term term;
  Pid sender = kAttackerPid;
  std::uint64_t step = 0;  // trace step of the Send event
};

/// What the attacker may look at when choosing a message: everything sent so
/// far, its own knowledge, and a way to mint attacker nonces.
class AttackerView {
 public:
  AttackerView(const Knowledge& knowledge, const std::vector<PoolEntry>& pool, Rng& rng,
               std::function<Term()> fresh_nonce)
      : knowledge_(knowledge), pool_(pool), rng_(rng), fresh_nonce_(std::move(fresh_nonce)) {}

  const Knowledge& knowledge() const { return knowledge_; }
  const std::vector<PoolEntry>& pool() const { return pool_; }
  Rng& rng() const { return rng_; }
  Term fresh_nonce() const { return fresh_nonce_(); }

  /// Most recent pool entry sent by `pid`, if any.
  std::optional<Term> last_sent_by(Pid pid) const;
  /// The n-th (from 0) pool entry sent by `pid`, if it exists yet.
  std::optional<Term> nth_sent_by(Pid pid, std::size_t n) const;
  /// First saturated list whose head is the given tag.
  std::optional<Term> find_list_with_head(std::string_view tag) const;

 private:
  const Knowledge& knowledge_;
  const std::vector<PoolEntry>& pool_;
  Rng& rng_;
  std::function<Term()> fresh_nonce_;
};

/// Delivers any pool message accepted by the receiver's filter, chosen
/// uniformly.
struct Passive {};

/// Like Passive, but each delivery is replaced, with the given probability, by
/// a derivable term composed from the attacker's knowledge (replays, field
/// substitutions, re-sealing, fresh nonces, DH shares).
struct Mutating {
  unsigned depth = 3;
  double probability = 0.25;
  std::vector<std::string> tags = {"m1", "m2", "m3", "rpc.resp", "rpc.close", "rpc.error",
                                   "db.load", "db.create", "db.store", "db.close", "dh.g"};
};

struct ScriptStep {
  std::string label;
  Pid target = kAttackerPid;
  /// Builds the message for `target`, or nullopt while it cannot be built yet.
  std::function<std::optional<Term>(const AttackerView&)> produce;
};

/// A fixed attack: terms leaked to the attacker up front, then an ordered list
/// of deliveries. Processes not named by the current step receive nothing.
struct Scripted {
  std::vector<Term> initial_knowledge;
  std::vector<ScriptStep> steps;
};

using AttackerStrategy = std::variant<Passive, Mutating, Scripted>;

std::string_view strategy_name(const AttackerStrategy& s);

/// Composes a random derivable term. Every construction step only combines
/// terms the attacker can already derive.
Term mutate(const AttackerView& view, const Mutating& config);

}  // namespace dyrun::sim
