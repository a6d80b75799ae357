#pragma once

// Bidirectional typechecking for Corps terms. A successful check returns a
// derivation tree whose nodes record the absolute viewpoint at which each
// subterm was typed; projection and the CLI's `--derivation` output walk it.

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corps/parser.hpp"
#include "corps/syntax.hpp"
#include "corps/topology.hpp"

namespace corps {

struct RelationQuery {
  Relation kind;
  Path from;
  Path to;
  bool holds = false;

  std::string str() const;  // e.g. "candown([], [A])"
};

class TypeError : public std::runtime_error {
 public:
  TypeError(std::string rule, std::string message, SourceSpan span, Path viewpoint,
            std::optional<RelationQuery> query = std::nullopt);

  const std::string& rule() const { return rule_; }
  const std::string& message() const { return message_; }
  SourceSpan span() const { return span_; }
  const Path& viewpoint() const { return viewpoint_; }
  const std::optional<RelationQuery>& query() const { return query_; }

 private:
  std::string rule_;
  std::string message_;
  SourceSpan span_;
  Path viewpoint_;
  std::optional<RelationQuery> query_;
};

struct Derivation;
using DerivPtr = std::shared_ptr<const Derivation>;

/// One node per expression node; `premises` line up with `expr->kids`.
struct Derivation {
  std::string rule;
  ExprPtr expr;
  Path viewpoint;  // locks of the context the node was typed in
  TypePtr type;
  std::optional<RelationQuery> query;
  std::vector<DerivPtr> premises;
};

/// Called for every relation query, with the viewpoint of the query site.
using QueryObserver = std::function<void(const RelationQuery&, const Path& viewpoint)>;

DerivPtr derive_infer(const Topology& t, const TypingContext& ctx, const ExprPtr& e,
                      const QueryObserver& obs = {});
DerivPtr derive_check(const Topology& t, const TypingContext& ctx, const ExprPtr& e, const TypePtr& ty,
                      const QueryObserver& obs = {});

TypePtr infer(const Topology& t, const TypingContext& ctx, const ExprPtr& e);
void check(const Topology& t, const TypingContext& ctx, const ExprPtr& e, const TypePtr& ty);

/// Indented proof tree, one judgement per line.
std::string render_derivation(const DerivPtr& d);

/// Rebuilds the checked term with every Lam, Inl, Inr and Absurd wrapped in
/// an annotation of the type it was checked at, so that every subterm
/// (and every substitution instance of one) is inferable.
ExprPtr elaborate(const DerivPtr& d);

struct ProgramCheck {
  std::vector<TypeError> errors;
  DerivPtr main;  // null unless main checked
  std::vector<DerivPtr> defs;
  bool ok() const { return errors.empty(); }
};

/// Context holding the inputs and every def, in declaration order, tagged [].
TypingContext program_context(const Program& p, std::size_t defs_visible);

ProgramCheck check_program(const Program& p, const Topology& t);

}  // namespace corps
