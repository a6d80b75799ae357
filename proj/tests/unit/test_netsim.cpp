#include <doctest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "corps/netsim.hpp"
#include "corps/parser.hpp"
#include "corps/pipeline.hpp"
#include "corps/project.hpp"
#include "generators.hpp"

using namespace corps;

namespace {

Compiled compile_text(const std::string& text, const char* preset = "choreo") {
  return compile(parse_program(text), load_preset(preset));
}

std::size_t count(const RunResult& r, TraceEvent::Action a) {
  std::size_t n = 0;
  for (const auto& ev : r.trace) n += ev.action == a;
  return n;
}

std::vector<Compiled> projectable_suite(std::size_t n) {
  std::vector<Compiled> out;
  for (std::uint64_t seed = 1; out.size() < n; ++seed) {
    const char* preset = seed % 2 ? "choreo" : "doxastic";
    auto topo = load_preset(preset);
    corps::testing::TypedGenConfig cfg;
    cfg.positive_main = true;
    corps::testing::TypedGen gen(seed + 20000, topo, cfg);
    auto c = compile(gen.program(preset), topo);
    try {
      if (project_network(c.derivation).lambda_payload) continue;
    } catch (const NotProjectable&) {
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("single message network") {
  auto c = compile_text("main : [B] unit = send A.() to [B];");
  auto n = project_network(c.derivation);
  auto r = run_network(n, Scheduler::round_robin());
  CHECK(r.status == RunStatus::Completed);
  // The sender holds no share of a [B] unit result, so it ends as skip.
  CHECK(print_expr(r.finals.at(Path{"A"})) == "skip");
  CHECK(print_expr(r.finals.at(Path{"B"})) == "()");
  CHECK(count(r, TraceEvent::Action::Send) == 1);
  CHECK(count(r, TraceEvent::Action::Recv) == 1);
  CHECK(r.undelivered.empty());
}

TEST_CASE("an all-skip network completes at once") {
  Network n;
  n.processes = {{Path{}, mk::skip()}, {Path{"A"}, mk::skip()}};
  auto r = run_network(n, Scheduler::round_robin());
  CHECK(r.status == RunStatus::Completed);
  CHECK(r.steps == 0);
  CHECK(count(r, TraceEvent::Action::Send) == 0);
}

TEST_CASE("the cyclic wait fixture deadlocks") {
  std::ifstream in(std::filesystem::path(CORPS_GOLDEN_DIR) / "networks" / "cycle.net");
  std::stringstream ss;
  ss << in.rdbuf();
  auto n = parse_network(ss.str());
  for (const auto& s : standard_schedules(5)) {
    auto r = run_network(n, s);
    CHECK(r.status == RunStatus::Deadlock);
    auto cycles = waiting_cycles(r.waiting);
    REQUIRE(cycles.size() == 1);
    std::set<Path> nodes(cycles[0].begin(), cycles[0].end());
    CHECK(nodes == std::set<Path>{Path{"A"}, Path{"B"}});
  }
  auto report = check_deadlock_free(n, 10, 1);
  CHECK(report.trials == 10);
  CHECK(report.deadlocks.size() == 10);
  CHECK(check_deadlock_free(n, 0, 1).deadlocks.empty());
}

TEST_CASE("other failure statuses") {
  Network stuck;
  stuck.processes = {{Path{"A"}, parse_local_expr("fst ()")}};
  auto s = run_network(stuck, Scheduler::round_robin());
  CHECK(s.status == RunStatus::LocalStuck);
  CHECK(s.stuck_at == Path{"A"});

  Network leftover;
  leftover.processes = {{Path{"A"}, parse_local_expr("send_to [B] ()")}, {Path{"B"}, mk::skip()}};
  auto l = run_network(leftover, Scheduler::round_robin());
  CHECK(l.status == RunStatus::UndeliveredMessages);
  CHECK(l.undelivered.at({Path{"A"}, Path{"B"}}) == 1);

  Network slow;
  slow.processes = {{Path{"A"}, parse_local_expr("fst (fst (((), ()), ()))")}};
  CHECK(run_network(slow, Scheduler::round_robin(), 1).status == RunStatus::FuelExhausted);
  CHECK(run_network(slow, Scheduler::round_robin(), 2).status == RunStatus::Completed);
}

TEST_CASE("runs are reproducible byte for byte") {
  for (const auto& c : projectable_suite(40)) {
    auto n = project_network(c.derivation);
    for (auto s : {Scheduler::round_robin(), Scheduler::random(17), Scheduler::random(99)}) {
      auto a = trace_to_jsonl(run_network(n, s).trace);
      auto b = trace_to_jsonl(run_network(n, s).trace);
      CHECK(a == b);
    }
  }
}

TEST_CASE("channels are FIFO and every send is received") {
  Network n = parse_network(
      "process [A]: send_to [B] inl () ; send_to [B] inr () ; send_to [B] ()\n"
      "process [B]: (recv_from [A], (recv_from [A], recv_from [A]))\n");
  for (const auto& s : standard_schedules(20)) {
    auto r = run_network(n, s);
    REQUIRE(r.status == RunStatus::Completed);
    CHECK(print_expr(r.finals.at(Path{"B"})) == "(inl (), (inr (), ()))");
  }
  for (const auto& c : projectable_suite(60)) {
    auto net = project_network(c.derivation);
    for (const auto& s : standard_schedules(5)) {
      auto r = run_network(net, s);
      REQUIRE(r.status == RunStatus::Completed);
      std::map<std::pair<Path, Path>, std::deque<std::string>> queues;
      for (const auto& ev : r.trace) {
        if (ev.action == TraceEvent::Action::Send) queues[{ev.address, *ev.peer}].push_back(print_expr(ev.payload));
        if (ev.action == TraceEvent::Action::Recv) {
          auto& q = queues[{*ev.peer, ev.address}];
          REQUIRE_FALSE(q.empty());
          CHECK(q.front() == print_expr(ev.payload));
          q.pop_front();
        }
      }
      for (const auto& [_, q] : queues) CHECK(q.empty());
      CHECK(count(r, TraceEvent::Action::Send) == count(r, TraceEvent::Action::Recv));
    }
  }
}

TEST_CASE("all schedules reach the same final state") {
  for (const auto& c : projectable_suite(60)) {
    auto net = project_network(c.derivation);
    auto base = run_network(net, Scheduler::round_robin());
    REQUIRE(base.status == RunStatus::Completed);
    for (const auto& s : standard_schedules(10, 100)) {
      auto r = run_network(net, s);
      REQUIRE(r.status == RunStatus::Completed);
      for (const auto& [p, v] : base.finals) CHECK(expr_equal(r.finals.at(p), v));
    }
  }
}

TEST_CASE("agreement examples") {
  auto schedules = standard_schedules(50);
  auto p4 = epp_agreement(compile_text("main : [B] unit = send A.() to [B];"), schedules);
  CHECK(p4.agree);
  CHECK(p4.runs == 51);
  auto p3 = epp_agreement(
      compile_text("main : [A] unit = let [] [A] x = A.(up [A] ()) in A.(down [A] x);", "doxastic"), schedules);
  CHECK(p3.agree);
  CHECK_THROWS_AS(epp_agreement(compile_text("main : [A] unit = let [] [A] c = A.(inl () : unit + unit) in"
                                             " A.(case c of inl u -> (let [] [A] w = up [A] () in ()) | inr v -> ());"),
                                schedules),
                  PreconditionError);
  CHECK_THROWS_AS(epp_agreement(compile_text("main : [B] (unit -> unit) = send (A.(fun x -> x) : [A] (unit -> unit)) to [B];"), schedules),
                  PreconditionError);
  CHECK_THROWS_AS(epp_agreement(compile_text("main : unit -> unit = fun x -> x;"), schedules), PreconditionError);
}

TEST_CASE("generated programs agree with the choreography and never deadlock") {
  for (const auto& c : projectable_suite(80)) {
    auto r = epp_agreement(c, standard_schedules(10));
    INFO(print_expr(c.main), "\n", r.reason);
    CHECK(r.agree);
    CHECK(check_deadlock_free(project_network(c.derivation), 10, 1).deadlocks.empty());
  }
}

TEST_CASE("trace JSON lines") {
  auto n = project_network(compile_text("main : [B.B] unit = send A.B.() to [B.B];").derivation);
  auto r = run_network(n, Scheduler::round_robin());
  std::istringstream in(trace_to_jsonl(r.trace));
  std::string line;
  bool saw_send = false;
  std::size_t prev = 0, lines = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    CHECK(j.contains("address"));
    CHECK(j.contains("action"));
    CHECK(j["step"].get<std::size_t>() >= prev);
    prev = j["step"].get<std::size_t>();
    if (j["action"] == "send") {
      saw_send = true;
      CHECK(j["address"] == "A.B");
      CHECK(j["peer"] == "B.B");
      CHECK(j["payload"] == "()");
    }
    ++lines;
  }
  CHECK(saw_send);
  CHECK(lines == r.trace.size());
}

TEST_CASE("scheduler names") {
  CHECK(Scheduler::round_robin().str() == "rr");
  CHECK(Scheduler::random(5).str() == "random(5)");
  auto s = standard_schedules(3, 10);
  REQUIRE(s.size() == 4);
  CHECK(s[1].str() == "random(10)");
  CHECK(s[3].str() == "random(12)");
}
