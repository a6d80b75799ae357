#pragma once

// Small-step choreographic semantics: call-by-value, leftmost-outermost,
// never under `fun` bodies, case branches or the body of a modal let.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corps/syntax.hpp"

namespace corps {

enum class EvalMode { CommFree, PositiveComm };

enum class NormalFormClass { Value, CommNeutral, Open };

const char* mode_name(EvalMode m);
const char* class_name(NormalFormClass c);

bool is_value(const ExprPtr& e);
/// A value with no `fun` anywhere inside.
bool is_positive_value(const ExprPtr& e);

struct StepResult {
  ExprPtr term;
  std::string rule;  // beta, fst, snd, case, modal-let, send, up, down
  SourceSpan redex;
};

/// One reduction step, or nullopt on a normal form.
std::optional<StepResult> step(EvalMode mode, const ExprPtr& e);

class StuckUnexpected : public std::runtime_error {
 public:
  explicit StuckUnexpected(ExprPtr term);
  const ExprPtr& term() const { return term_; }

 private:
  ExprPtr term_;
};

class FuelExhausted : public std::runtime_error {
 public:
  FuelExhausted(ExprPtr last, std::size_t steps);
  const ExprPtr& last() const { return last_; }
  std::size_t steps() const { return steps_; }

 private:
  ExprPtr last_;
  std::size_t steps_;
};

/// Classifies a term with no step. Throws StuckUnexpected when it is none
/// of the three classes.
NormalFormClass classify(EvalMode mode, const ExprPtr& normal_form);

struct TraceRecord {
  std::size_t index;
  std::string rule;
  SourceSpan span;
};

struct Normalized {
  ExprPtr term;
  NormalFormClass cls;
  std::size_t steps;
  std::vector<TraceRecord> trace;  // filled only when requested
};

Normalized normalize(EvalMode mode, const ExprPtr& e, std::size_t fuel, bool record_trace = false);

/// Removes `n` located layers (looking through annotations); nullopt if the
/// value is not such a stack.
std::optional<ExprPtr> strip_located(const ExprPtr& v, std::size_t n);

/// Removes the whole located stack of a value, and all annotations.
ExprPtr strip_all_located(const ExprPtr& v);

/// Communications whose payload is a positive value (should not survive
/// positive-comm normalization).
std::vector<ExprPtr> positive_comm_residuals(const ExprPtr& e);

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);

}  // namespace corps
