#pragma once

// Endpoint projection: one local process per tree address, computed from the
// typing derivation of an elaborated main term.
//
// Ownership drives everything. A process p "owns" a value of type t typed at
// viewpoint L when p holds some piece of it: unit at L itself, [A]t at the
// owners of t seen from L.A, products and sums at the owners of either
// side (sums also at L, which knows the tag), functions at every address
// under L. A process that owns nothing of a subterm's type computes `skip`.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "corps/syntax.hpp"
#include "corps/typecheck.hpp"

namespace corps {

class NotProjectable : public std::runtime_error {
 public:
  NotProjectable(std::string message, SourceSpan span, Path address)
      : std::runtime_error(std::move(message)), span_(span), address_(std::move(address)) {}
  SourceSpan span() const { return span_; }
  const Path& address() const { return address_; }

 private:
  SourceSpan span_;
  Path address_;
};

class MergeConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool owns(const TypePtr& t, const Path& viewpoint, const Path& p);

/// Relative addresses below the viewpoint that hold a piece of a value of
/// type t. Function types contribute only the viewpoint itself.
std::set<Path> type_parts(const TypePtr& t);

/// Equality merge of two branch projections.
ExprPtr merge(const ExprPtr& l1, const ExprPtr& l2);

/// Local cleanup that only performs steps the local semantics would take
/// anyway (beta with a skip argument, `skip ; e`, projections of skip) plus
/// `fun x -> skip` to `skip`.
ExprPtr simplify_local(const ExprPtr& e);

/// Local values: (), skip, fun, and pairs and injections of local values.
bool is_local_value(const ExprPtr& e);

ExprPtr project(const DerivPtr& main, const Path& p);

struct Network {
  std::map<Path, ExprPtr> processes;
  Path result_address;
  std::set<std::pair<Path, Path>> channels;
  bool lambda_payload = false;
};

std::set<Path> address_universe(const DerivPtr& main);

Network project_network(const DerivPtr& main);

/// The local value process p must end with when the choreography evaluates
/// to the closed positive value v of type t at viewpoint L. Nullopt when t
/// mentions a function or void.
std::optional<ExprPtr> expected_local_value(const ExprPtr& v, const TypePtr& t, const Path& viewpoint, const Path& p);

/// `process [A.B]: <local term>` per line.
std::string emit_network(const Network& n);
std::string emit_process(const Path& p, const ExprPtr& local);

/// Reads the `emit_network` format (`//` and `#` comments allowed).
Network parse_network(std::string_view text);

}  // namespace corps
