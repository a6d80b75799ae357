#include "corps/nicheck.hpp"

#include <stdexcept>

#include "corps/pipeline.hpp"

namespace corps {

const char* verdict_name(NIVerdict::Kind k) {
  switch (k) {
    case NIVerdict::Kind::Secure: return "Secure";
    case NIVerdict::Kind::InterferenceFound: return "InterferenceFound";
    case NIVerdict::Kind::FlowPermitted: return "FlowPermitted";
  }
  return "?";
}

Observation observe(const RunResult& r, const Path& observer) {
  Observation o;
  o.status = status_name(r.status);
  auto it = r.finals.find(observer);
  o.final_value = it == r.finals.end() ? "skip" : print_expr(it->second);
  for (const auto& ev : r.trace) {
    if (ev.address != observer) continue;
    if (ev.action != TraceEvent::Action::Send && ev.action != TraceEvent::Action::Recv) continue;
    o.events.push_back(std::string(action_name(ev.action)) + " " + ev.peer->str() + " " + print_expr(ev.payload));
  }
  return o;
}

Scheduler ni_schedule(const NIConfig& cfg, std::size_t trial) {
  return trial == 0 ? Scheduler::round_robin() : Scheduler::random(cfg.seed + trial - 1);
}

NIVerdict ni_check(const Program& p, const Topology& t, const NIConfig& cfg) {
  const InputDecl* decl = nullptr;
  for (const auto& in : p.inputs)
    if (in.name == cfg.input) decl = &in;
  if (!decl) throw std::invalid_argument("no input named '" + cfg.input + "'");
  if (cfg.values.size() < 2) throw std::invalid_argument("need at least two input values to compare");

  for (const auto& in : p.inputs)
    if (in.name != cfg.input) throw std::invalid_argument("input '" + in.name + "' has no value");

  NIVerdict v;
  v.source = modality_prefix(decl->type);

  std::vector<Network> nets;
  for (const auto& value : cfg.values) {
    std::map<std::string, ExprPtr> bind{{cfg.input, value}};
    auto c = compile(p, t, bind);
    auto u = address_universe(c.derivation);
    v.universe.insert(u.begin(), u.end());
    nets.push_back(project_network(c.derivation));
  }
  for (std::size_t n = 0; n <= v.source.size(); ++n) v.universe.insert(v.source.prefix(n));
  for (std::size_t n = 0; n <= cfg.observer.size(); ++n) v.universe.insert(cfg.observer.prefix(n));

  if (!cfg.force && flow_reachable(t, v.source, cfg.observer, v.universe)) {
    v.kind = NIVerdict::Kind::FlowPermitted;
    return v;
  }

  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    auto sched = ni_schedule(cfg, trial);
    auto base = observe(run_network(nets[0], sched, cfg.fuel), cfg.observer);
    for (std::size_t i = 1; i < nets.size(); ++i) {
      auto other = observe(run_network(nets[i], sched, cfg.fuel), cfg.observer);
      if (other == base) continue;
      v.kind = NIVerdict::Kind::InterferenceFound;
      v.value_a = 0;
      v.value_b = i;
      v.trial = trial;
      v.schedule = sched;
      v.obs_a = base;
      v.obs_b = other;
      return v;
    }
  }
  v.kind = NIVerdict::Kind::Secure;
  return v;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

}  // namespace

std::string replay_command(const std::string& file, const std::optional<std::string>& topology_flag,
                           const NIConfig& cfg, const NIVerdict& v) {
  std::string cmd = "corps ni " + shell_quote(file);
  if (topology_flag) cmd += " --topology " + shell_quote(*topology_flag);
  cmd += " --input " + cfg.input + " --observe " + shell_quote(cfg.observer.str());
  cmd += " --values " + shell_quote(print_expr(cfg.values[v.value_a]) + "," + print_expr(cfg.values[v.value_b]));
  cmd += " --seed " + std::to_string(cfg.seed) + " --trials " + std::to_string(v.trial + 1);
  if (cfg.force) cmd += " --force";
  return cmd;
}

std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  out.push_back(cur);
  return out;
}

}  // namespace corps
