#pragma once

// Interleaving simulator for projected networks: asynchronous sends into
// unbounded FIFO channels, blocking receives.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corps/pipeline.hpp"
#include "corps/project.hpp"

namespace corps {

struct Scheduler {
  enum class Kind { RoundRobin, Random };
  Kind kind = Kind::RoundRobin;
  std::uint64_t seed = 0;

  static Scheduler round_robin() { return {Kind::RoundRobin, 0}; }
  static Scheduler random(std::uint64_t seed) { return {Kind::Random, seed}; }
  std::string str() const;  // "rr" or "random(<seed>)"
};

struct TraceEvent {
  enum class Action { Local, Send, Recv, Blocked, Done };
  std::size_t step;
  Path address;
  Action action;
  std::optional<Path> peer;
  ExprPtr payload;  // Send/Recv only
};

const char* action_name(TraceEvent::Action a);

enum class RunStatus { Completed, Deadlock, FuelExhausted, LocalStuck, UndeliveredMessages };
const char* status_name(RunStatus s);

struct RunResult {
  RunStatus status;
  std::map<Path, ExprPtr> finals;  // residual term per address
  std::vector<TraceEvent> trace;
  std::size_t steps = 0;
  /// Deadlock: blocked address -> the address it waits on.
  std::vector<std::pair<Path, Path>> waiting;
  std::map<std::pair<Path, Path>, std::size_t> undelivered;
  std::optional<Path> stuck_at;
};

RunResult run_network(const Network& n, const Scheduler& sched, std::size_t fuel = 100000);

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace);

/// Waiting-graph cycles, each listed from its smallest address.
std::vector<std::vector<Path>> waiting_cycles(const std::vector<std::pair<Path, Path>>& waiting);

/// RoundRobin followed by Random(seed0), ..., Random(seed0 + randoms - 1).
std::vector<Scheduler> standard_schedules(std::size_t randoms, std::uint64_t seed0 = 1);

struct AgreementReport {
  bool agree = true;
  std::string reason;  // first failure, empty on success
  Scheduler failing;   // meaningful when !agree
  std::size_t runs = 0;
  ExprPtr normal_form;
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks that every schedule completes and that every address ends with
/// the local share of the positive-comm normal form of main. Throws
/// PreconditionError when the program is not projectable, communicates
/// functions, or has a main type mentioning functions or void.
AgreementReport epp_agreement(const Compiled& c, const std::vector<Scheduler>& schedules, std::size_t fuel = 100000);

struct DeadlockReport {
  std::size_t trials = 0;
  std::vector<std::pair<Scheduler, RunResult>> deadlocks;
};

DeadlockReport check_deadlock_free(const Network& n, std::size_t trials, std::uint64_t seed0,
                                   std::size_t fuel = 100000);

}  // namespace corps
