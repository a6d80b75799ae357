#include "corps/normalize.hpp"

#include <json.hpp>

#include "corps/parser.hpp"

namespace corps {

const char* mode_name(EvalMode m) { return m == EvalMode::CommFree ? "comm-free" : "positive"; }

const char* class_name(NormalFormClass c) {
  switch (c) {
    case NormalFormClass::Value: return "Value";
    case NormalFormClass::CommNeutral: return "CommNeutral";
    case NormalFormClass::Open: return "Open";
  }
  return "?";
}

namespace {

const ExprPtr& peel(const ExprPtr& e) {
  const ExprPtr* cur = &e;
  while ((*cur)->kind == ExprKind::Annot) cur = &(*cur)->kid(0);
  return *cur;
}

bool mentions_lam(const ExprPtr& e) {
  if (e->kind == ExprKind::Lam) return true;
  for (const auto& k : e->kids)
    if (mentions_lam(k)) return true;
  return false;
}

/// Child positions that are evaluation contexts, left to right.
std::vector<std::size_t> eval_positions(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::App:
    case ExprKind::Pair: return {0, 1};
    case ExprKind::Located:
    case ExprKind::ModalLet:
    case ExprKind::Send:
    case ExprKind::Up:
    case ExprKind::Down:
    case ExprKind::Fst:
    case ExprKind::Snd:
    case ExprKind::Inl:
    case ExprKind::Inr:
    case ExprKind::Absurd:
    case ExprKind::Annot:
    case ExprKind::Case: return {0};
    default: return {};
  }
}

bool is_comm(ExprKind k) { return k == ExprKind::Send || k == ExprKind::Up || k == ExprKind::Down; }

/// Strips located layers whose agents must spell `g` (any agents when
/// `g` is null).
std::optional<ExprPtr> strip_agents(const ExprPtr& v, std::size_t n, const Path* g) {
  ExprPtr cur = v;
  for (std::size_t i = 0; i < n; ++i) {
    const ExprPtr& p = peel(cur);
    if (p->kind != ExprKind::Located) return std::nullopt;
    if (g && (*g)[i] != p->agent) return std::nullopt;
    cur = p->kid(0);
  }
  return cur;
}

ExprPtr relocate(const Path& g, ExprPtr v, SourceSpan span) {
  for (std::size_t i = g.size(); i-- > 0;) v = mk::located(g[i], std::move(v), span);
  return v;
}

std::optional<StepResult> head_step(EvalMode mode, const ExprPtr& e) {
  auto done = [&](ExprPtr t, const char* rule) { return StepResult{std::move(t), rule, e->span}; };
  switch (e->kind) {
    case ExprKind::App: {
      if (!is_value(e->kid(0)) || !is_value(e->kid(1))) return std::nullopt;
      const auto& f = peel(e->kid(0));
      if (f->kind != ExprKind::Lam) return std::nullopt;
      return done(substitute(f->kid(0), f->name, e->kid(1)), "beta");
    }
    case ExprKind::Fst:
    case ExprKind::Snd: {
      if (!is_value(e->kid(0))) return std::nullopt;
      const auto& p = peel(e->kid(0));
      if (p->kind != ExprKind::Pair) return std::nullopt;
      bool first = e->kind == ExprKind::Fst;
      return done(p->kid(first ? 0 : 1), first ? "fst" : "snd");
    }
    case ExprKind::Case: {
      if (!is_value(e->kid(0))) return std::nullopt;
      const auto& s = peel(e->kid(0));
      if (s->kind == ExprKind::Inl) return done(substitute(e->kid(1), e->name, s->kid(0)), "case");
      if (s->kind == ExprKind::Inr) return done(substitute(e->kid(2), e->name2, s->kid(0)), "case");
      return std::nullopt;
    }
    case ExprKind::ModalLet: {
      if (!is_value(e->kid(0))) return std::nullopt;
      auto inner = strip_agents(e->kid(0), e->path2.size(), &e->path2);
      if (!inner) return std::nullopt;
      return done(substitute(e->kid(1), e->name, *inner), "modal-let");
    }
    case ExprKind::Send: {
      if (mode != EvalMode::PositiveComm || !is_value(e->kid(0))) return std::nullopt;
      auto inner = strip_agents(e->kid(0), e->path.size(), nullptr);
      if (!inner || !is_positive_value(*inner)) return std::nullopt;
      return done(relocate(e->path, *inner, e->span), "send");
    }
    case ExprKind::Up: {
      if (mode != EvalMode::PositiveComm || !is_positive_value(e->kid(0))) return std::nullopt;
      return done(relocate(e->path, e->kid(0), e->span), "up");
    }
    case ExprKind::Down: {
      if (mode != EvalMode::PositiveComm || !is_value(e->kid(0))) return std::nullopt;
      auto inner = strip_agents(e->kid(0), e->path.size(), &e->path);
      if (!inner || !is_positive_value(*inner)) return std::nullopt;
      return done(*inner, "down");
    }
    default: return std::nullopt;
  }
}

bool frozen_comm_in_eval_position(const ExprPtr& e) {
  if (is_comm(e->kind) && is_value(e->kid(0))) return true;
  for (auto i : eval_positions(e))
    if (frozen_comm_in_eval_position(e->kid(i))) return true;
  return false;
}

void collect_residuals(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (is_comm(e->kind)) {
    const ExprPtr& payload = e->kid(0);
    if (e->kind == ExprKind::Up) {
      if (is_positive_value(payload)) out.push_back(e);
    } else if (is_value(payload)) {
      auto inner = strip_agents(payload, e->path.size(), nullptr);
      if (inner && is_positive_value(*inner)) out.push_back(e);
    }
  }
  for (auto i : eval_positions(e)) collect_residuals(e->kid(i), out);
}

}  // namespace

bool is_value(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Unit:
    case ExprKind::Lam: return true;
    case ExprKind::Pair: return is_value(e->kid(0)) && is_value(e->kid(1));
    case ExprKind::Inl:
    case ExprKind::Inr:
    case ExprKind::Located:
    case ExprKind::Annot: return is_value(e->kid(0));
    default: return false;
  }
}

bool is_positive_value(const ExprPtr& e) { return is_value(e) && !mentions_lam(e); }

std::optional<StepResult> step(EvalMode mode, const ExprPtr& e) {
  if (auto r = head_step(mode, e)) return r;
  for (auto i : eval_positions(e)) {
    if (auto r = step(mode, e->kid(i))) {
      auto kids = e->kids;
      kids[i] = std::move(r->term);
      r->term = with_kids(e, std::move(kids));
      return r;
    }
  }
  return std::nullopt;
}

StuckUnexpected::StuckUnexpected(ExprPtr term)
    : std::runtime_error("stuck term that is neither a value, communication-neutral nor open: " + print_expr(term)),
      term_(std::move(term)) {}

FuelExhausted::FuelExhausted(ExprPtr last, std::size_t steps)
    : std::runtime_error("fuel exhausted after " + std::to_string(steps) + " steps"),
      last_(std::move(last)),
      steps_(steps) {}

NormalFormClass classify(EvalMode, const ExprPtr& nf) {
  if (is_value(nf)) return NormalFormClass::Value;
  if (frozen_comm_in_eval_position(nf)) return NormalFormClass::CommNeutral;
  if (!free_vars(nf).empty()) return NormalFormClass::Open;
  throw StuckUnexpected(nf);
}

Normalized normalize(EvalMode mode, const ExprPtr& e, std::size_t fuel, bool record_trace) {
  Normalized out{e, NormalFormClass::Value, 0, {}};
  for (;;) {
    auto r = step(mode, out.term);
    if (!r) break;
    if (out.steps == fuel) throw FuelExhausted(out.term, out.steps);
    if (record_trace) out.trace.push_back({out.steps, r->rule, r->redex});
    out.term = std::move(r->term);
    ++out.steps;
  }
  out.cls = classify(mode, out.term);
  return out;
}

std::optional<ExprPtr> strip_located(const ExprPtr& v, std::size_t n) { return strip_agents(v, n, nullptr); }

ExprPtr strip_all_located(const ExprPtr& v) {
  ExprPtr cur = peel(v);
  while (cur->kind == ExprKind::Located) cur = peel(cur->kid(0));
  return erase_annotations(cur);
}

std::vector<ExprPtr> positive_comm_residuals(const ExprPtr& e) {
  std::vector<ExprPtr> out;
  collect_residuals(e, out);
  return out;
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    nlohmann::json j = {{"index", r.index}, {"rule", r.rule}, {"span", {r.span.begin, r.span.end}}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace corps
