#pragma once

// Communication policies: the CanDown, CanUp and CanSend relations over
// absolute tree addresses, as disjunctive pattern rules.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corps/syntax.hpp"

namespace corps {

enum class Relation { CanDown, CanUp, CanSend };

const char* relation_name(Relation r);

struct PatternAtom {
  bool is_var = false;  // `$name` when true, literal agent otherwise
  std::string name;
};

/// `*` (optional, head only) followed by literal agents and `$vars`.
struct PathPattern {
  bool wildcard = false;
  std::vector<PatternAtom> atoms;

  std::string str() const;
};

struct TopoRule {
  enum class Form { Match, True, False };
  Relation kind;
  Form form = Form::Match;
  PathPattern lhs;
  PathPattern rhs;

  std::string str() const;
};

class TopologyError : public std::runtime_error {
 public:
  TopologyError(std::string message, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class Topology {
 public:
  Topology() = default;
  Topology(std::vector<TopoRule> rules, std::optional<std::string> name = std::nullopt)
      : rules_(std::move(rules)), name_(std::move(name)) {}

  const std::vector<TopoRule>& rules() const { return rules_; }
  const std::optional<std::string>& name() const { return name_; }

  /// True iff some rule of `kind` matches (a, b).
  bool holds(Relation kind, const Path& a, const Path& b) const;

  Topology with_rule(TopoRule rule) const;

  std::string str() const;

 private:
  std::vector<TopoRule> rules_;
  std::optional<std::string> name_;
};

bool relation_holds(const Topology& t, Relation kind, const Path& a, const Path& b);

bool rule_matches(const TopoRule& rule, const Path& a, const Path& b);

/// `doxastic`, `choreo` or `siblings`; throws std::invalid_argument otherwise.
Topology load_preset(std::string_view name);
bool is_preset_name(std::string_view name);

Topology parse_topology(std::string_view text);

/// Directed reachability over `universe` with edges a->b for cansend(a,b),
/// q->p for candown(p,q) and p->q for canup(p,q), where p is a strict
/// prefix of q.
bool flow_reachable(const Topology& t, const Path& src, const Path& dst, const std::set<Path>& universe);

}  // namespace corps
