#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "corps/netsim.hpp"
#include "corps/parser.hpp"
#include "corps/topology.hpp"

namespace corps {

struct NIConfig {
  std::string input;
  Path observer;
  std::vector<ExprPtr> values;  // closed values of the input's declared type
  std::size_t trials = 8;       // schedules per value: round-robin then random seeds
  std::uint64_t seed = 1;
  std::size_t fuel = 100000;
  /// Run the comparison even when the topology permits a flow.
  bool force = false;
};

/// What the observer sees in one run: its final term and its own
/// send/recv events (peer and payload, no global step numbers).
struct Observation {
  std::string status;
  std::string final_value;
  std::vector<std::string> events;
  bool operator==(const Observation&) const = default;
};

struct NIVerdict {
  enum class Kind { Secure, InterferenceFound, FlowPermitted };
  Kind kind = Kind::Secure;
  Path source;
  std::set<Path> universe;
  // InterferenceFound only:
  std::size_t value_a = 0, value_b = 0;
  std::size_t trial = 0;
  Scheduler schedule;
  Observation obs_a, obs_b;
};

const char* verdict_name(NIVerdict::Kind k);

Observation observe(const RunResult& r, const Path& observer);

/// The schedule used for trial t: round-robin for t = 0, else Random(seed + t - 1).
Scheduler ni_schedule(const NIConfig& cfg, std::size_t trial);

NIVerdict ni_check(const Program& p, const Topology& t, const NIConfig& cfg);

/// `corps ni <file> --input ... --values a,b --seed S --trials N [--force]`
/// reproducing exactly the witness of an InterferenceFound verdict.
std::string replay_command(const std::string& file, const std::optional<std::string>& topology_flag,
                           const NIConfig& cfg, const NIVerdict& v);

/// Splits a `--values` argument on commas that are not nested in brackets
/// or parentheses.
std::vector<std::string> split_top_level(const std::string& s);

}  // namespace corps
