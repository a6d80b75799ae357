#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "corps/netsim.hpp"
#include "corps/nicheck.hpp"
#include "corps/normalize.hpp"
#include "corps/parser.hpp"
#include "corps/pipeline.hpp"
#include "corps/project.hpp"
#include "corps/typecheck.hpp"

using namespace corps;

namespace {

enum Exit { kOk = 0, kTypeError = 1, kParseError = 2, kFinding = 3, kUsage = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A parse error carrying the text it refers to, so that spans can be
/// rendered as line:column.
struct LocatedParseError {
  std::string file;
  std::string text;
  ParseError err;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string where(const std::string& file, const std::string& text, SourceSpan span) {
  auto [line, col] = line_col(text, span.begin);
  return file + ":" + std::to_string(line) + ":" + std::to_string(col);
}

struct Loaded {
  std::string file;
  std::string text;
  Program program;
  Topology topology;
};

Loaded load(const std::string& file, const std::optional<std::string>& topo_flag) {
  Loaded l{file, read_file(file), {}, {}};
  try {
    l.program = parse_program(l.text);
  } catch (const ParseError& e) {
    throw LocatedParseError{file, l.text, e};
  }
  try {
    l.topology = resolve_topology(l.program, topo_flag, std::filesystem::path(file).parent_path());
  } catch (const TopologyError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return l;
}

std::map<std::string, ExprPtr> parse_bindings(const std::vector<std::string>& sets) {
  std::map<std::string, ExprPtr> out;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects name=value, got '" + s + "'");
    std::string value = s.substr(eq + 1);
    try {
      out[s.substr(0, eq)] = parse_expr(value);
    } catch (const ParseError& e) {
      throw LocatedParseError{"--set " + s.substr(0, eq), value, e};
    }
  }
  return out;
}

/// An error already printed; carries the exit code.
struct Reported {
  int code;
};

void report_type_error(const Loaded& l, const TypeError& e) {
  std::cerr << where(l.file, l.text, e.span()) << ": type error [" << e.rule() << "] at viewpoint "
            << e.viewpoint().str() << ": " << e.message() << "\n";
}

Compiled compile_or_throw(const Loaded& l, const std::map<std::string, ExprPtr>& bindings) {
  try {
    return compile(l.program, l.topology, bindings);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const TypeError& e) {
    report_type_error(l, e);
    throw Reported{kTypeError};
  }
}

Path parse_path_flag(const std::string& flag, const std::string& text) {
  try {
    return parse_path(text);
  } catch (const ParseError& e) {
    throw LocatedParseError{flag, text, e};
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << content;
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& file, const std::optional<std::string>& topo, bool derivation) {
  auto l = load(file, topo);
  auto report = check_program(l.program, l.topology);
  for (const auto& e : report.errors) report_type_error(l, e);
  if (!report.ok()) return kTypeError;
  if (derivation) {
    for (std::size_t i = 0; i < l.program.defs.size(); ++i)
      std::cout << "def " << l.program.defs[i].name << ":\n" << render_derivation(report.defs[i]);
    std::cout << "main:\n" << render_derivation(report.main);
  }
  std::cout << "OK : " << print_type(l.program.main_type) << "\n";
  return kOk;
}

int cmd_normalize(const std::string& file, const std::optional<std::string>& topo, const std::string& mode_text,
                  std::size_t fuel, const std::optional<std::string>& trace_file, const std::vector<std::string>& sets) {
  if (fuel == 0) throw UsageError("--fuel must be positive");
  auto l = load(file, topo);
  auto c = compile_or_throw(l, parse_bindings(sets));
  EvalMode mode = mode_text == "comm-free" ? EvalMode::CommFree : EvalMode::PositiveComm;
  Normalized n;
  try {
    n = normalize(mode, c.main, fuel, trace_file.has_value());
  } catch (const FuelExhausted& e) {
    std::cerr << "fuel exhausted after " << e.steps() << " steps; last term:\n"
              << print_expr(erase_annotations(e.last())) << "\n";
    std::cerr << "replay: corps normalize " << file << " --mode " << mode_text << " --fuel " << fuel << "\n";
    return kFinding;
  } catch (const StuckUnexpected& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "replay: corps normalize " << file << " --mode " << mode_text << " --fuel " << fuel << "\n";
    return kFinding;
  }
  if (trace_file) write_text(*trace_file, trace_to_jsonl(n.trace));
  std::cout << print_expr(erase_annotations(n.term)) << "\n";
  std::cout << "class: " << class_name(n.cls) << "\n";
  std::cout << "steps: " << n.steps << "\n";
  return kOk;
}

int cmd_project(const std::string& file, const std::optional<std::string>& topo, const std::optional<std::string>& agent,
                bool all, bool emit, const std::vector<std::string>& sets) {
  if (agent.has_value() == all) throw UsageError("give exactly one of --agent PATH or --all");
  auto l = load(file, topo);
  auto c = compile_or_throw(l, parse_bindings(sets));
  if (agent) {
    Path p = parse_path_flag("--agent", *agent);
    auto local = project(c.derivation, p);
    std::cout << (emit ? emit_process(p, local) : print_expr(local)) << "\n";
    return kOk;
  }
  auto net = project_network(c.derivation);
  for (const auto& [p, local] : net.processes)
    std::cout << (emit ? emit_process(p, local) : p.str() + ": " + print_expr(local)) << "\n";
  if (!emit) std::cout << "result at " << net.result_address.str() << "\n";
  if (net.lambda_payload) std::cerr << "note: this program sends functions between processes\n";
  return kOk;
}

std::vector<Scheduler> schedules_for(const std::string& kind, std::uint64_t seed, std::size_t runs) {
  std::vector<Scheduler> out;
  for (std::size_t i = 0; i < runs; ++i) {
    if (kind == "rr") {
      out.push_back(Scheduler::round_robin());
    } else if (kind == "random") {
      out.push_back(Scheduler::random(seed + i));
    } else {
      out.push_back(i == 0 ? Scheduler::round_robin() : Scheduler::random(seed + i - 1));
    }
  }
  return out;
}

std::string simulate_replay(const std::string& source, const Scheduler& s) {
  std::string cmd = "corps simulate " + source;
  if (s.kind == Scheduler::Kind::RoundRobin) return cmd + " --schedule rr --runs 1";
  return cmd + " --schedule random --seed " + std::to_string(s.seed) + " --runs 1";
}

void print_finals(const RunResult& r) {
  for (const auto& [p, v] : r.finals) std::cout << "  " << p.str() << " = " << print_expr(v) << "\n";
}

/// Returns true when the run is a finding.
bool report_bad_run(const RunResult& r, const Scheduler& s, const std::string& replay_source) {
  if (r.status == RunStatus::Completed) return false;
  std::cout << status_name(r.status) << " under " << s.str() << " after " << r.steps << " steps\n";
  if (r.status == RunStatus::Deadlock) {
    std::cout << "waiting graph:\n";
    for (const auto& [from, to] : r.waiting) std::cout << "  " << from.str() << " -> " << to.str() << "\n";
    for (const auto& cycle : waiting_cycles(r.waiting)) {
      std::cout << "cycle:";
      for (const auto& p : cycle) std::cout << " " << p.str();
      std::cout << " " << cycle.front().str() << "\n";
    }
  }
  if (r.stuck_at) std::cout << "stuck process: " << r.stuck_at->str() << "\n";
  for (const auto& [chan, n] : r.undelivered)
    std::cout << "undelivered: " << n << " on " << chan.first.str() << " -> " << chan.second.str() << "\n";
  print_finals(r);
  std::cout << "replay: " << simulate_replay(replay_source, s) << "\n";
  return true;
}

int cmd_simulate(const std::optional<std::string>& file, const std::optional<std::string>& network_file,
                 const std::optional<std::string>& topo, const std::string& sched_kind, std::uint64_t seed,
                 std::size_t runs, std::size_t fuel, const std::optional<std::string>& trace_file,
                 const std::vector<std::string>& sets) {
  if (file.has_value() == network_file.has_value()) throw UsageError("give exactly one of FILE or --network FILE");
  if (runs == 0 || fuel == 0) throw UsageError("--runs and --fuel must be positive");
  auto schedules = schedules_for(sched_kind, seed, runs);

  if (network_file) {
    auto text = read_file(*network_file);
    Network net;
    try {
      net = parse_network(text);
    } catch (const ParseError& e) {
      throw LocatedParseError{*network_file, text, e};
    }
    std::string source = "--network " + *network_file;
    for (const auto& s : schedules) {
      auto r = run_network(net, s, fuel);
      if (trace_file && (&s == &schedules.front() || r.status != RunStatus::Completed))
        write_text(*trace_file, trace_to_jsonl(r.trace));
      if (report_bad_run(r, s, source)) return kFinding;
    }
    std::cout << "completed " << runs << " run(s)\n";
    return kOk;
  }

  auto l = load(*file, topo);
  auto c = compile_or_throw(l, parse_bindings(sets));
  auto net = project_network(c.derivation);
  std::string source = *file;
  if (topo) source += " --topology " + *topo;
  for (const auto& s : sets) source += " --set '" + s + "'";

  std::optional<AgreementReport> agreement;
  std::string skipped;
  try {
    agreement = epp_agreement(c, schedules, fuel);
  } catch (const PreconditionError& e) {
    skipped = e.what();
  }

  std::optional<RunResult> first;
  for (const auto& s : schedules) {
    auto r = run_network(net, s, fuel);
    bool bad = r.status != RunStatus::Completed;
    bool disagrees = agreement && !agreement->agree && agreement->failing.str() == s.str();
    if (trace_file && (!first || bad || disagrees)) write_text(*trace_file, trace_to_jsonl(r.trace));
    if (!first) first = r;
    if (report_bad_run(r, s, source)) return kFinding;
    if (disagrees) {
      std::cout << "DISAGREE: " << agreement->reason << "\n";
      print_finals(r);
      std::cout << "replay: " << simulate_replay(source, s) << "\n";
      return kFinding;
    }
  }
  std::cout << "results (" << first->steps << " steps under " << schedules.front().str() << "):\n";
  print_finals(*first);
  std::cout << "result at " << net.result_address.str() << "\n";
  if (agreement) {
    std::cout << "AGREE with " << print_expr(erase_annotations(agreement->normal_form)) << " over " << runs
              << " run(s)\n";
  } else {
    std::cout << "agreement not checked: " << skipped << "\n";
  }
  return kOk;
}

int cmd_ni(const std::string& file, const std::optional<std::string>& topo, const std::string& input,
           const std::string& observe_text, const std::string& values_text, std::size_t trials, std::uint64_t seed,
           bool force) {
  if (trials == 0) throw UsageError("--trials must be positive");
  auto l = load(file, topo);
  NIConfig cfg;
  cfg.input = input;
  cfg.observer = parse_path_flag("--observe", observe_text);
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.force = force;
  for (const auto& v : split_top_level(values_text)) {
    try {
      cfg.values.push_back(parse_expr(v));
    } catch (const ParseError& e) {
      throw LocatedParseError{"--values", v, e};
    }
  }
  NIVerdict verdict;
  try {
    verdict = ni_check(l.program, l.topology, cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::cout << verdict_name(verdict.kind) << "\n";
  switch (verdict.kind) {
    case NIVerdict::Kind::FlowPermitted:
      std::cout << "the topology lets " << verdict.source.str() << " flow to " << cfg.observer.str()
                << "; no claim is made\n";
      return kOk;
    case NIVerdict::Kind::Secure:
      std::cout << "observer " << cfg.observer.str() << " saw the same run for all " << cfg.values.size()
                << " values of " << input << " under " << trials << " schedule(s)\n";
      return kOk;
    case NIVerdict::Kind::InterferenceFound: {
      auto show = [&](std::size_t i, const Observation& o) {
        std::cout << "  " << input << " = " << print_expr(cfg.values[i]) << ": " << o.status << ", final "
                  << o.final_value << "\n";
        for (const auto& ev : o.events) std::cout << "    " << ev << "\n";
      };
      std::cout << "observer " << cfg.observer.str() << " under " << verdict.schedule.str() << ":\n";
      show(verdict.value_a, verdict.obs_a);
      show(verdict.value_b, verdict.obs_b);
      std::cout << "replay: " << replay_command(file, topo, cfg, verdict) << "\n";
      return kFinding;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corps: check, normalize, project and simulate hierarchical choreographies"};
  app.require_subcommand(1);

  std::optional<std::string> topo;
  std::string file;
  std::vector<std::string> sets;

  auto* check = app.add_subcommand("check", "typecheck a program");
  bool derivation = false;
  check->add_option("file", file, "program file")->required();
  check->add_option("--topology", topo, "preset name or topology file");
  check->add_flag("--derivation", derivation, "print the proof tree");

  auto* norm = app.add_subcommand("normalize", "evaluate main choreographically");
  std::string mode = "positive";
  std::size_t fuel = 100000;
  std::optional<std::string> trace_file;
  norm->add_option("file", file, "program file")->required();
  norm->add_option("--topology", topo, "preset name or topology file");
  norm->add_option("--mode", mode, "comm-free or positive")->check(CLI::IsMember({"comm-free", "positive"}));
  norm->add_option("--fuel", fuel, "maximum number of steps");
  norm->add_option("--trace", trace_file, "write step records as JSON Lines");
  norm->add_option("--set", sets, "bind an input: name=value");

  auto* proj = app.add_subcommand("project", "endpoint projection");
  std::optional<std::string> agent;
  bool all = false, emit = false;
  proj->add_option("file", file, "program file")->required();
  proj->add_option("--topology", topo, "preset name or topology file");
  proj->add_option("--agent", agent, "address to project at, e.g. [A.B]");
  proj->add_flag("--all", all, "project at every address of the program");
  proj->add_flag("--emit", emit, "print as `process [g]: term` lines");
  proj->add_option("--set", sets, "bind an input: name=value");

  auto* sim = app.add_subcommand("simulate", "run the projected network");
  std::optional<std::string> sim_file, network_file;
  std::string sched = "mixed";
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  sim->add_option("file", sim_file, "program file");
  sim->add_option("--network", network_file, "hand-written network instead of a program");
  sim->add_option("--topology", topo, "preset name or topology file");
  sim->add_option("--schedule", sched, "rr, random, or mixed (rr first, then random)")
      ->check(CLI::IsMember({"rr", "random", "mixed"}));
  sim->add_option("--seed", seed, "first random seed");
  sim->add_option("--runs", runs, "number of runs");
  sim->add_option("--fuel", fuel, "maximum steps per run");
  sim->add_option("--trace", trace_file, "write the first (or first failing) run as JSON Lines");
  sim->add_option("--set", sets, "bind an input: name=value");

  auto* ni = app.add_subcommand("ni", "noninterference check");
  std::string input, observe, values;
  std::size_t trials = 8;
  bool force = false;
  ni->add_option("file", file, "program file")->required();
  ni->add_option("--topology", topo, "preset name or topology file");
  ni->add_option("--input", input, "declared input to vary")->required();
  ni->add_option("--observe", observe, "observer address")->required();
  ni->add_option("--values", values, "comma-separated closed values")->required();
  ni->add_option("--trials", trials, "schedules per value");
  ni->add_option("--seed", seed, "first random seed");
  ni->add_flag("--force", force, "compare runs even when the topology permits the flow");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*check) return cmd_check(file, topo, derivation);
    if (*norm) return cmd_normalize(file, topo, mode, fuel, trace_file, sets);
    if (*proj) return cmd_project(file, topo, agent, all, emit, sets);
    if (*sim) return cmd_simulate(sim_file, network_file, topo, sched, seed, runs, fuel, trace_file, sets);
    if (*ni) return cmd_ni(file, topo, input, observe, values, trials, seed, force);
  } catch (const Reported& r) {
    return r.code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const LocatedParseError& e) {
    std::cerr << where(e.file, e.text, e.err.span()) << ": parse error: " << e.err.message();
    if (!e.err.expected().empty()) {
      std::cerr << " (expected";
      for (std::size_t i = 0; i < e.err.expected().size(); ++i)
        std::cerr << (i ? ", " : " ") << e.err.expected()[i];
      std::cerr << ")";
    }
    std::cerr << "\n";
    return kParseError;
  } catch (const TopologyError& e) {
    std::cerr << "topology parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const TypeError& e) {
    std::cerr << "type error [" << e.rule() << "] at viewpoint " << e.viewpoint().str() << ": " << e.message()
              << "\n";
    return kTypeError;
  } catch (const NotProjectable& e) {
    std::cerr << "not projectable at " << e.address().str() << ": " << e.what() << "\n";
    return kTypeError;
  }
  return kUsage;
}
