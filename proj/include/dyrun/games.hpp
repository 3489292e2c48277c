#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dyrun/attacker.hpp"
#include "dyrun/protocols.hpp"
#include "dyrun/runtime.hpp"
#include "dyrun/trace.hpp"

namespace dyrun::games {

enum class AttackerKind : std::uint8_t {
  passive,
  mutating,
  mixed,  // passive on even seeds, mutating on odd ones
};

std::string_view to_string(AttackerKind kind);
std::optional<AttackerKind> attacker_kind_from_string(std::string_view name);

struct GameConfig {
  std::uint64_t seed = 0;
  std::uint64_t runs = 1;        // sweeps seed .. seed + runs - 1
  unsigned max_sessions = 4;     // per role; bounds the recursive forks
  AttackerKind attacker = AttackerKind::passive;
  std::uint64_t step_budget = sim::kDefaultStepBudget;
  std::optional<std::string> trace_path;
  sim::Mutating mutation;
  bool keep_traces = false;      // retain per-run traces in sweep results
};

/// Throws std::invalid_argument unless runs >= 1 and max_sessions >= 1.
void validate(const GameConfig& cfg);

/// The attacker used for a given seed under `cfg`.
sim::AttackerStrategy strategy_for(const GameConfig& cfg, std::uint64_t seed);

struct OracleCheck {
  std::string label;
  Term target;
  Verdict expected;
  Verdict actual;
  bool ok() const noexcept { return expected == actual; }
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string attacker;
  sim::RunStatus status = sim::RunStatus::ok;
  std::uint64_t steps = 0;
  bool deadlocked = false;
  std::uint64_t asserts_ok = 0;
  std::vector<std::string> failures;  // "label: detail" of each assert_fail, plus post-run findings
  std::vector<OracleCheck> oracles;
  std::map<std::string, std::int64_t> counters;  // game-specific observations
  Trace trace;

  bool pass() const;
  /// One-line JSON summary (the trace is not included).
  std::string to_json() const;
};

struct GameResult {
  std::vector<RunRecord> runs;
  bool pass() const;
  std::int64_t total(const std::string& counter) const;
};

/// Queries the oracle on the runtime's trace, appends an oracle_verdict event
/// and returns the comparison with `expected`.
OracleCheck check_secrecy(sim::Runtime& rt, std::string label, const Term& target, Verdict expected);

// --- Games ---------------------------------------------------------------------

enum class NslLeak : std::uint8_t { none, init, resp, both };

struct NslOptions {
  proto::NsVariant variant = proto::NsVariant::nsl;
  /// Long-term keys appended to the trace as leaks once the run is over. Any
  /// leak flips the expected verdict of honest session keys to derivable.
  NslLeak leak = NslLeak::none;
};

/// Bounded do_init/do_resp sessions between an honest initiator and
/// responder. Every completed session asserts key freshness; sessions with
/// the honest peer face a guess and an underivability check.
RunRecord nsl_run(const GameConfig& cfg, std::uint64_t seed, NslOptions opts = {});

/// Same shape over ISO with a compromise flag. The compromiser waits for the
/// first honest session, then sets the flag and sends both signing keys.
/// Keys completed before the flag are checked underivable on the full trace.
RunRecord iso_run(const GameConfig& cfg, std::uint64_t seed);

/// Client creates an attacker-chosen entry, closes and publishes the first
/// session key, reconnects, publishes both long-term keys and reads the
/// entry back.
RunRecord kv_run(const GameConfig& cfg, std::uint64_t seed);

/// Two signing principals open a connection and one streams `messages`
/// frames with random tags to the other. The receiver checks every accepted
/// frame against what was sent; after the run the receiver's deliveries are
/// replayed from the trace to count byte-identical replays of frames it had
/// already accepted, which must all have been skipped.
RunRecord channel_run(const GameConfig& cfg, std::uint64_t seed, unsigned messages = 6);

struct LoweOptions {
  proto::NsVariant variant = proto::NsVariant::ns_original;
  /// M is the responder itself: every relay step is a plain forward.
  bool degenerate = false;
};

/// The scripted relay against an initiator that talks to M. Expects the
/// responder's key to be derivable against the original protocol and
/// underivable against the fixed one.
RunRecord lowe_run(std::uint64_t seed, LoweOptions opts = {}, std::uint64_t step_budget = sim::kDefaultStepBudget);

// --- Sweeps ----------------------------------------------------------------------

using RunFn = std::function<RunRecord(std::uint64_t seed)>;

/// Runs seeds cfg.seed .. cfg.seed + cfg.runs - 1 one after another.
GameResult sweep_serial(const GameConfig& cfg, const RunFn& fn);
/// Same runs distributed over OpenMP threads; results are ordered by seed and
/// identical to sweep_serial.
GameResult sweep_parallel(const GameConfig& cfg, const RunFn& fn);

}  // namespace dyrun::games
