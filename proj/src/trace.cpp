#include "dyrun/trace.hpp"

#include <ostream>
#include <sstream>

#include "dyrun/text.hpp"
#include "json.hpp"

namespace dyrun {

namespace {
constexpr std::string_view kKindNames[] = {"send", "recv", "fork", "nonce_created",
                                           "assert_ok", "assert_fail", "leak", "oracle_verdict"};
}

std::string_view to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::derivable ? "derivable" : "underivable";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::optional<Verdict> verdict_from_string(std::string_view name) {
  if (name == "derivable") return Verdict::derivable;
  if (name == "underivable") return Verdict::underivable;
  return std::nullopt;
}

const TraceEvent& Trace::append(TraceEvent event) {
  event.step = events_.size();
  events_.push_back(std::move(event));
  return events_.back();
}

void Trace::write_jsonl(std::ostream& out) const {
  for (const auto& e : events_) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["kind"] = to_string(e.kind);
    j["pid"] = e.pid;
    j["term"] = e.term ? to_text(*e.term) : std::string();
    switch (e.kind) {
      case EventKind::fork: j["child"] = e.child; break;
      case EventKind::nonce_created: j["origin"] = to_string(e.origin); break;
      case EventKind::assert_ok: j["label"] = e.label; break;
      case EventKind::assert_fail:
        j["label"] = e.label;
        j["detail"] = e.detail;
        break;
      case EventKind::oracle_verdict:
        j["label"] = e.label;
        j["verdict"] = to_string(e.verdict);
        break;
      default: break;
    }
    out << j.dump() << '\n';
  }
}

std::string Trace::to_jsonl() const {
  std::ostringstream out;
  write_jsonl(out);
  return out.str();
}

Trace Trace::from_jsonl(std::string_view text) {
  Trace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      TraceEvent e;
      auto kind = event_kind_from_string(j.at("kind").get<std::string>());
      if (!kind) throw std::runtime_error("unknown event kind");
      e.kind = *kind;
      e.pid = j.at("pid").get<Pid>();
      auto term_text = j.at("term").get<std::string>();
      if (!term_text.empty()) e.term = parse_term(term_text);
      if (j.contains("child")) e.child = j["child"].get<Pid>();
      if (j.contains("origin")) {
        e.origin = j["origin"].get<std::string>() == "attacker" ? NonceOrigin::attacker : NonceOrigin::honest;
      }
      if (j.contains("label")) e.label = j["label"].get<std::string>();
      if (j.contains("detail")) e.detail = j["detail"].get<std::string>();
      if (j.contains("verdict")) {
        auto v = verdict_from_string(j["verdict"].get<std::string>());
        if (!v) throw std::runtime_error("unknown verdict");
        e.verdict = *v;
      }
      auto step = j.at("step").get<std::uint64_t>();
      if (step != trace.size()) throw std::runtime_error("non-consecutive step index");
      trace.append(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return trace;
}

}  // namespace dyrun
