#include "corps/netsim.hpp"

#include <algorithm>
#include <deque>
#include <random>

#include <json.hpp>

#include "corps/normalize.hpp"
#include "corps/parser.hpp"

namespace corps {

std::string Scheduler::str() const {
  return kind == Kind::RoundRobin ? "rr" : "random(" + std::to_string(seed) + ")";
}

const char* action_name(TraceEvent::Action a) {
  switch (a) {
    case TraceEvent::Action::Local: return "local";
    case TraceEvent::Action::Send: return "send";
    case TraceEvent::Action::Recv: return "recv";
    case TraceEvent::Action::Blocked: return "blocked";
    case TraceEvent::Action::Done: return "done";
  }
  return "?";
}

const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "Completed";
    case RunStatus::Deadlock: return "Deadlock";
    case RunStatus::FuelExhausted: return "FuelExhausted";
    case RunStatus::LocalStuck: return "LocalStuck";
    case RunStatus::UndeliveredMessages: return "UndeliveredMessages";
  }
  return "?";
}

namespace {

using Channels = std::map<std::pair<Path, Path>, std::deque<ExprPtr>>;

enum class Status { Value, Runnable, Blocked, Stuck };

/// Outcome of trying one local step. Never mutates the channels; the
/// caller applies `sent` / `received`.
struct LocalStep {
  Status status = Status::Stuck;
  ExprPtr term;
  std::optional<Path> peer;  // destination of a send, source of a recv or of the block
  ExprPtr payload;
  bool sent = false;
  bool received = false;
};

class Stepper {
 public:
  Stepper(const Path& self, const Channels& chans) : self_(self), chans_(chans) {}

  LocalStep run(const ExprPtr& e) {
    LocalStep out;
    if (is_local_value(e)) {
      out.status = Status::Value;
      out.term = e;
      return out;
    }
    out.status = Status::Runnable;
    out.term = go(e, out);
    return out;
  }

 private:
  const Path& self_;
  const Channels& chans_;

  /// Steps the first non-value child of e among `order`; returns nullptr
  /// when all of them are values.
  ExprPtr child(const ExprPtr& e, std::initializer_list<std::size_t> order, LocalStep& out) {
    for (auto i : order) {
      if (is_local_value(e->kid(i))) continue;
      auto next = go(e->kid(i), out);
      if (!next) return nullptr;
      auto kids = e->kids;
      kids[i] = std::move(next);
      return with_kids(e, std::move(kids));
    }
    return e;  // sentinel meaning "all values"
  }

  ExprPtr stuck(LocalStep& out) {
    out.status = Status::Stuck;
    return nullptr;
  }

  ExprPtr go(const ExprPtr& e, LocalStep& out) {
    switch (e->kind) {
      case ExprKind::App: {
        auto r = child(e, {0, 1}, out);
        if (r != e) return r;
        const auto& f = e->kid(0);
        if (f->kind == ExprKind::Lam) return substitute(f->kid(0), f->name, e->kid(1));
        if (f->kind == ExprKind::Skip) return f;
        return stuck(out);
      }
      case ExprKind::Pair: {
        auto r = child(e, {0, 1}, out);
        return r == e ? stuck(out) : r;
      }
      case ExprKind::Inl:
      case ExprKind::Inr: {
        auto r = child(e, {0}, out);
        return r == e ? stuck(out) : r;
      }
      case ExprKind::Fst:
      case ExprKind::Snd: {
        auto r = child(e, {0}, out);
        if (r != e) return r;
        const auto& p = e->kid(0);
        if (p->kind == ExprKind::Skip) return p;
        if (p->kind == ExprKind::Pair) return p->kid(e->kind == ExprKind::Fst ? 0 : 1);
        return stuck(out);
      }
      case ExprKind::Case: {
        auto r = child(e, {0}, out);
        if (r != e) return r;
        const auto& s = e->kid(0);
        if (s->kind == ExprKind::Inl) return substitute(e->kid(1), e->name, s->kid(0));
        if (s->kind == ExprKind::Inr) return substitute(e->kid(2), e->name2, s->kid(0));
        return stuck(out);
      }
      case ExprKind::Seq: {
        auto r = child(e, {0}, out);
        return r == e ? e->kid(1) : r;
      }
      case ExprKind::SendTo: {
        auto r = child(e, {0}, out);
        if (r != e) return r;
        out.sent = true;
        out.peer = e->path;
        out.payload = e->kid(0);
        return mk::skip();
      }
      case ExprKind::RecvFrom: {
        out.peer = e->path;
        auto it = chans_.find({e->path, self_});
        if (it == chans_.end() || it->second.empty()) {
          out.status = Status::Blocked;
          return nullptr;
        }
        out.received = true;
        out.payload = it->second.front();
        return out.payload;
      }
      default: return stuck(out);
    }
  }
};

}  // namespace

RunResult run_network(const Network& n, const Scheduler& sched, std::size_t fuel) {
  RunResult res;
  std::vector<Path> addrs;
  std::vector<ExprPtr> procs;
  for (const auto& [p, e] : n.processes) {
    addrs.push_back(p);
    procs.push_back(e);
  }
  const std::size_t count = addrs.size();
  Channels chans;
  std::mt19937_64 rng(sched.seed);
  std::size_t rr_next = 0;
  std::vector<Status> last(count, Status::Runnable);
  std::vector<LocalStep> tries(count);

  auto event = [&](std::size_t i, TraceEvent::Action a, std::optional<Path> peer = std::nullopt, ExprPtr payload = {}) {
    res.trace.push_back({res.steps, addrs[i], a, std::move(peer), std::move(payload)});
  };

  for (;;) {
    std::vector<std::size_t> runnable;
    for (std::size_t i = 0; i < count; ++i) {
      tries[i] = Stepper(addrs[i], chans).run(procs[i]);
      Status s = tries[i].status;
      if (s != last[i]) {
        if (s == Status::Blocked) event(i, TraceEvent::Action::Blocked, tries[i].peer);
        if (s == Status::Value) event(i, TraceEvent::Action::Done);
        last[i] = s;
      }
      if (s == Status::Runnable) runnable.push_back(i);
    }
    if (runnable.empty()) break;
    if (res.steps >= fuel) {
      res.status = RunStatus::FuelExhausted;
      for (std::size_t i = 0; i < count; ++i) res.finals[addrs[i]] = procs[i];
      return res;
    }

    std::size_t pick;
    if (sched.kind == Scheduler::Kind::RoundRobin) {
      pick = runnable.front();
      for (auto i : runnable)
        if (i >= rr_next) {
          pick = i;
          break;
        }
      rr_next = pick + 1;
    } else {
      pick = runnable[rng() % runnable.size()];
    }

    auto& t = tries[pick];
    if (t.sent) {
      chans[{addrs[pick], *t.peer}].push_back(t.payload);
      event(pick, TraceEvent::Action::Send, t.peer, t.payload);
    } else if (t.received) {
      chans[{*t.peer, addrs[pick]}].pop_front();
      event(pick, TraceEvent::Action::Recv, t.peer, t.payload);
    } else {
      event(pick, TraceEvent::Action::Local);
    }
    procs[pick] = t.term;
    ++res.steps;
  }

  for (std::size_t i = 0; i < count; ++i) res.finals[addrs[i]] = procs[i];
  for (std::size_t i = 0; i < count; ++i)
    if (tries[i].status == Status::Stuck) {
      res.status = RunStatus::LocalStuck;
      res.stuck_at = addrs[i];
      return res;
    }
  for (std::size_t i = 0; i < count; ++i)
    if (tries[i].status == Status::Blocked) res.waiting.push_back({addrs[i], *tries[i].peer});
  if (!res.waiting.empty()) {
    res.status = RunStatus::Deadlock;
    return res;
  }
  for (const auto& [chan, q] : chans)
    if (!q.empty()) res.undelivered[chan] = q.size();
  res.status = res.undelivered.empty() ? RunStatus::Completed : RunStatus::UndeliveredMessages;
  return res;
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
  std::string out;
  for (const auto& ev : trace) {
    nlohmann::ordered_json j;
    j["step"] = ev.step;
    j["address"] = ev.address.dotted();
    j["action"] = action_name(ev.action);
    if (ev.peer) j["peer"] = ev.peer->dotted();
    if (ev.payload) j["payload"] = print_expr(ev.payload);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<std::vector<Path>> waiting_cycles(const std::vector<std::pair<Path, Path>>& waiting) {
  std::map<Path, Path> next(waiting.begin(), waiting.end());
  std::set<Path> reported;
  std::vector<std::vector<Path>> cycles;
  for (const auto& [start, _] : next) {
    std::vector<Path> walk;
    std::set<Path> on_walk;
    Path cur = start;
    while (next.count(cur) && !on_walk.count(cur)) {
      on_walk.insert(cur);
      walk.push_back(cur);
      cur = next.at(cur);
    }
    if (!on_walk.count(cur) || reported.count(cur)) continue;
    auto from = std::find(walk.begin(), walk.end(), cur);
    std::vector<Path> cycle(from, walk.end());
    std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
    for (const auto& p : cycle) reported.insert(p);
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

std::vector<Scheduler> standard_schedules(std::size_t randoms, std::uint64_t seed0) {
  std::vector<Scheduler> out{Scheduler::round_robin()};
  for (std::size_t i = 0; i < randoms; ++i) out.push_back(Scheduler::random(seed0 + i));
  return out;
}

namespace {

bool mentions_arrow_or_void(const TypePtr& t) {
  switch (t->kind) {
    case TypeKind::Unit: return false;
    case TypeKind::Void:
    case TypeKind::Arrow: return true;
    case TypeKind::Believes: return mentions_arrow_or_void(t->left);
    default: return mentions_arrow_or_void(t->left) || mentions_arrow_or_void(t->right);
  }
}

bool modality_free(const TypePtr& t) {
  switch (t->kind) {
    case TypeKind::Believes: return false;
    case TypeKind::Unit:
    case TypeKind::Void: return true;
    default: return modality_free(t->left) && modality_free(t->right);
  }
}

}  // namespace

AgreementReport epp_agreement(const Compiled& c, const std::vector<Scheduler>& schedules, std::size_t fuel) {
  if (!c.context.entries.empty()) throw PreconditionError("program has unbound inputs");
  if (mentions_arrow_or_void(c.type))
    throw PreconditionError("main type " + print_type(c.type) + " is not built from unit, products, sums and beliefs");
  Network net;
  try {
    net = project_network(c.derivation);
  } catch (const NotProjectable& err) {
    throw PreconditionError(std::string("not projectable: ") + err.what());
  }
  if (net.lambda_payload) throw PreconditionError("program communicates functions");

  AgreementReport rep;
  rep.normal_form = normalize(EvalMode::PositiveComm, c.main, fuel).term;

  std::map<Path, ExprPtr> expected;
  for (const auto& [p, _] : net.processes) {
    auto v = expected_local_value(rep.normal_form, c.type, Path{}, p);
    if (!v) throw PreconditionError("normal form " + print_expr(rep.normal_form) + " does not match the main type");
    expected[p] = *v;
  }
  ExprPtr stripped = strip_all_located(rep.normal_form);
  TypePtr residual = c.type;
  while (residual->kind == TypeKind::Believes) residual = residual->left;

  auto fail = [&](const Scheduler& s, std::string why) {
    rep.agree = false;
    rep.failing = s;
    rep.reason = s.str() + ": " + std::move(why);
    return rep;
  };

  for (const auto& s : schedules) {
    ++rep.runs;
    auto r = run_network(net, s, fuel);
    if (r.status != RunStatus::Completed) return fail(s, std::string("run ended with ") + status_name(r.status));
    for (const auto& [p, want] : expected) {
      if (!expr_equal(r.finals.at(p), want))
        return fail(s, "process " + p.str() + " ended with " + print_expr(r.finals.at(p)) + ", expected " +
                           print_expr(want));
    }
    if (modality_free(residual) && !expr_equal(r.finals.at(net.result_address), stripped))
      return fail(s, "result address " + net.result_address.str() + " holds " +
                         print_expr(r.finals.at(net.result_address)) + ", normal form is " + print_expr(stripped));
  }
  return rep;
}

DeadlockReport check_deadlock_free(const Network& n, std::size_t trials, std::uint64_t seed0, std::size_t fuel) {
  DeadlockReport rep;
  for (std::size_t i = 0; i < trials; ++i) {
    auto s = Scheduler::random(seed0 + i);
    auto r = run_network(n, s, fuel);
    ++rep.trials;
    if (r.status == RunStatus::Deadlock) rep.deadlocks.push_back({s, std::move(r)});
  }
  return rep;
}

}  // namespace corps
