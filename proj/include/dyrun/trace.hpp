#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dyrun/term.hpp"

namespace dyrun {

using Pid = std::int32_t;
inline constexpr Pid kAttackerPid = -1;

enum class EventKind : std::uint8_t {
  send,
  recv,
  fork,
  nonce_created,
  assert_ok,
  assert_fail,
  leak,
  oracle_verdict,
};

enum class Verdict : std::uint8_t { derivable, underivable };

std::string_view to_string(EventKind kind);
std::string_view to_string(Verdict verdict);
std::optional<EventKind> event_kind_from_string(std::string_view name);
std::optional<Verdict> verdict_from_string(std::string_view name);

struct TraceEvent {
  std::uint64_t step = 0;
  EventKind kind = EventKind::send;
  Pid pid = kAttackerPid;
  /// send/recv/leak: the message; nonce_created: the nonce; oracle_verdict: the target.
  std::optional<Term> term;
  Pid child = kAttackerPid;                    // fork
  NonceOrigin origin = NonceOrigin::honest;    // nonce_created
  std::string label;                           // assert_ok/assert_fail/oracle_verdict
  std::string detail;                          // assert_fail
  Verdict verdict = Verdict::underivable;      // oracle_verdict

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Append-only event log. Step indices are assigned on append and strictly
/// increase.
class Trace {
 public:
  const TraceEvent& append(TraceEvent event);

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  /// One JSON object per line with fields step, kind, pid, term and, where
  /// relevant, child, origin, label, detail, verdict.
  std::string to_jsonl() const;
  void write_jsonl(std::ostream& out) const;
  static Trace from_jsonl(std::string_view text);

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace dyrun
