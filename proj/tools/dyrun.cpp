// Command-line front end: security games, the scripted Lowe attack and
// one-off derivability queries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dyrun/deduction.hpp"
#include "dyrun/games.hpp"
#include "dyrun/text.hpp"

namespace {

using namespace dyrun;

// foo/trace.jsonl -> foo/trace.<seed>.jsonl
std::string per_seed_path(const std::string& path, std::uint64_t seed) {
  std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + "." + std::to_string(seed) + p.extension().string());
  return out.string();
}

void write_trace(const std::string& path, const Trace& trace) {
  auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  trace.write_jsonl(out);
}

int run_game(const std::string& game, games::GameConfig cfg) {
  games::RunFn fn;
  if (game == "nsl") {
    fn = [&cfg](std::uint64_t s) { return games::nsl_run(cfg, s); };
  } else if (game == "iso") {
    fn = [&cfg](std::uint64_t s) { return games::iso_run(cfg, s); };
  } else if (game == "kv") {
    fn = [&cfg](std::uint64_t s) { return games::kv_run(cfg, s); };
  } else {
    fn = [&cfg](std::uint64_t s) { return games::channel_run(cfg, s); };
  }
  cfg.keep_traces = cfg.trace_path.has_value();
  auto result = games::sweep_parallel(cfg, fn);
  for (const auto& r : result.runs) {
    std::cout << r.to_json() << "\n";
    if (cfg.trace_path) write_trace(cfg.runs == 1 ? *cfg.trace_path : per_seed_path(*cfg.trace_path, r.seed), r.trace);
  }
  return result.pass() ? 0 : 1;
}

int run_lowe(const std::string& variant, std::uint64_t seed, bool degenerate, const std::string& trace_path,
             std::uint64_t budget) {
  games::LoweOptions opts;
  opts.variant = variant == "nsl" ? proto::NsVariant::nsl : proto::NsVariant::ns_original;
  opts.degenerate = degenerate;
  auto r = games::lowe_run(seed, opts, budget);
  if (!trace_path.empty()) write_trace(trace_path, r.trace);
  if (r.oracles.empty()) {
    std::cout << "no-target\n";
  } else {
    std::cout << to_string(r.oracles.front().actual) << "\n";
  }
  std::cout << r.to_json() << "\n";
  return r.pass() ? 0 : 1;
}

int run_derive(const std::string& knowledge_path, const std::string& target_text,
               const std::vector<std::uint64_t>& attacker_nonces) {
  std::ifstream in(knowledge_path);
  if (!in) throw std::runtime_error("cannot read " + knowledge_path);
  NonceRegistry registry;
  for (auto id : attacker_nonces) registry.record(id, NonceOrigin::attacker);
  Knowledge k(registry);
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    k.add(parse_term(line));
  }
  bool ok = k.derivable(parse_term(target_text));
  std::cout << (ok ? "derivable" : "underivable") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic protocol simulator"};
  app.require_subcommand(1);

  auto* game = app.add_subcommand("game", "Run a security game over a range of seeds");
  std::string game_name;
  games::GameConfig cfg;
  std::string attacker = "passive";
  std::string game_trace;
  game->add_option("name", game_name, "Game")->required()->check(CLI::IsMember({"nsl", "iso", "kv", "channel"}));
  game->add_option("--seed", cfg.seed, "First seed");
  game->add_option("--runs", cfg.runs, "Number of seeds")->check(CLI::PositiveNumber);
  game->add_option("--sessions", cfg.max_sessions, "Sessions per role")->check(CLI::PositiveNumber);
  game->add_option("--attacker", attacker, "Attacker strategy")
      ->check(CLI::IsMember({"passive", "mutating", "mixed"}));
  game->add_option("--budget", cfg.step_budget, "Step budget per run")->check(CLI::PositiveNumber);
  game->add_option("--trace", game_trace, "Trace output (one file per seed when --runs > 1)");

  auto* attack = app.add_subcommand("attack", "Run a scripted attack");
  std::string attack_name;
  std::string variant = "ns";
  std::uint64_t attack_seed = 0;
  std::uint64_t attack_budget = sim::kDefaultStepBudget;
  bool degenerate = false;
  std::string attack_trace;
  attack->add_option("name", attack_name, "Attack")->required()->check(CLI::IsMember({"lowe"}));
  attack->add_option("--variant", variant, "Protocol variant")->check(CLI::IsMember({"ns", "nsl"}));
  attack->add_option("--seed", attack_seed, "Seed");
  attack->add_option("--budget", attack_budget, "Step budget")->check(CLI::PositiveNumber);
  attack->add_flag("--degenerate", degenerate, "The attacker is the responder itself");
  attack->add_option("--trace", attack_trace, "Trace output");

  auto* derive = app.add_subcommand("derive", "Decide derivability of a term");
  std::string knowledge_path;
  std::string target;
  std::vector<std::uint64_t> attacker_nonces;
  derive->add_option("--knowledge", knowledge_path, "File with one term per line")->required();
  derive->add_option("--target", target, "Target term")->required();
  derive->add_option("--attacker-nonce", attacker_nonces, "Nonce ids the attacker created");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*game) {
      cfg.attacker = *games::attacker_kind_from_string(attacker);
      if (!game_trace.empty()) cfg.trace_path = game_trace;
      return run_game(game_name, cfg);
    }
    if (*attack) return run_lowe(variant, attack_seed, degenerate, attack_trace, attack_budget);
    return run_derive(knowledge_path, target, attacker_nonces);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
