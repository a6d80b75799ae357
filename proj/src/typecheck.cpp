#include "corps/typecheck.hpp"

#include <sstream>

namespace corps {

std::string RelationQuery::str() const {
  return std::string(relation_name(kind)) + "(" + from.str() + ", " + to.str() + ")";
}

TypeError::TypeError(std::string rule, std::string message, SourceSpan span, Path viewpoint,
                     std::optional<RelationQuery> query)
    : std::runtime_error(rule + ": " + message),
      rule_(std::move(rule)),
      message_(std::move(message)),
      span_(span),
      viewpoint_(std::move(viewpoint)),
      query_(std::move(query)) {}

namespace {

class Checker {
 public:
  Checker(const Topology& t, const QueryObserver& obs) : topo_(t), obs_(obs) {}

  DerivPtr infer(const TypingContext& ctx, const ExprPtr& e) {
    const Path L = locks_of(ctx);
    switch (e->kind) {
      case ExprKind::Var: return axiom(ctx, e, L);

      case ExprKind::Located: {
        auto body = infer(ctx.with_lock(Path{e->agent}), e->kid(0));
        return node("BelievesI", e, L, ty::believes(e->agent, body->type), {body});
      }

      case ExprKind::ModalLet: {
        auto [bound, inner] = let_bound(ctx, e, L);
        auto body = infer(ctx.with_binding(e->name, inner, e->path + e->path2), e->kid(1));
        return node("BelievesE", e, L, body->type, {bound, body});
      }

      case ExprKind::Send: {
        auto payload = infer(ctx, e->kid(0));
        const Path& g2 = e->path;
        Path prefix = modality_prefix(payload->type);
        if (g2.empty())
          throw TypeError("Send", "destination path must be nonempty", e->span, L);
        if (prefix.size() < g2.size())
          throw TypeError("Send",
                          "payload has type " + print_type(payload->type) + ", which is not a stack of " +
                              std::to_string(g2.size()) + " modalities",
                          e->span, L);
        Path g1 = prefix.prefix(g2.size());
        TypePtr inner = *peel_stack(g1, payload->type);
        auto q = query(Relation::CanSend, L + g1, L + g2, L);
        if (!q.holds)
          throw TypeError("Send", q.str() + " does not hold at viewpoint " + L.str(), e->span, L, q);
        return node("Send", e, L, ty::stack(g2, inner), {payload}, q);
      }

      case ExprKind::Up: {
        auto body = infer(ctx, e->kid(0));
        return up_node(e, L, body, body->type);
      }

      case ExprKind::Down: {
        auto body = infer(ctx, e->kid(0));
        auto inner = peel_stack(e->path, body->type);
        if (!inner)
          throw TypeError("Down",
                          "operand has type " + print_type(body->type) + ", expected a " + e->path.str() + " stack",
                          e->span, L);
        return down_node(e, L, body, *inner);
      }

      case ExprKind::App: {
        auto fn = infer(ctx, e->kid(0));
        if (fn->type->kind != TypeKind::Arrow)
          throw TypeError("App", "applying a term of non-function type " + print_type(fn->type), e->span, L);
        auto arg = check(ctx, e->kid(1), fn->type->left);
        return node("App", e, L, fn->type->right, {fn, arg});
      }

      case ExprKind::Pair: {
        auto l = infer(ctx, e->kid(0));
        auto r = infer(ctx, e->kid(1));
        return node("Pair", e, L, ty::product(l->type, r->type), {l, r});
      }

      case ExprKind::Fst:
      case ExprKind::Snd: {
        bool first = e->kind == ExprKind::Fst;
        const char* rule = first ? "Fst" : "Snd";
        auto p = infer(ctx, e->kid(0));
        if (p->type->kind != TypeKind::Product)
          throw TypeError(rule, "projection from non-product type " + print_type(p->type), e->span, L);
        return node(rule, e, L, first ? p->type->left : p->type->right, {p});
      }

      case ExprKind::Case: {
        auto [scrut, tl, tr] = case_scrutinee(ctx, e, L);
        auto left = infer(ctx.with_binding(e->name, tl, Path{}), e->kid(1));
        auto right = check(ctx.with_binding(e->name2, tr, Path{}), e->kid(2), left->type);
        return node("Case", e, L, left->type, {scrut, left, right});
      }

      case ExprKind::Unit: return node("UnitI", e, L, ty::unit(), {});

      case ExprKind::Annot: {
        auto inner = check(ctx, e->kid(0), e->type);
        return node("Annot", e, L, e->type, {inner});
      }

      case ExprKind::Lam:
      case ExprKind::Inl:
      case ExprKind::Inr:
      case ExprKind::Absurd:
        throw TypeError(rule_of(e->kind),
                        std::string("cannot infer a type for ") + kind_name(e->kind) + "; add a type annotation",
                        e->span, L);

      default:
        throw TypeError("Mismatch", std::string(kind_name(e->kind)) + " is not a choreographic term", e->span, L);
    }
  }

  DerivPtr check(const TypingContext& ctx, const ExprPtr& e, const TypePtr& want) {
    const Path L = locks_of(ctx);
    switch (e->kind) {
      case ExprKind::Lam: {
        if (want->kind != TypeKind::Arrow)
          throw TypeError("Lam", "function checked against non-function type " + print_type(want), e->span, L);
        auto body = check(ctx.with_binding(e->name, want->left, Path{}), e->kid(0), want->right);
        return node("Lam", e, L, want, {body});
      }

      case ExprKind::Inl:
      case ExprKind::Inr: {
        bool left = e->kind == ExprKind::Inl;
        const char* rule = left ? "Inl" : "Inr";
        if (want->kind != TypeKind::Sum)
          throw TypeError(rule, "injection checked against non-sum type " + print_type(want), e->span, L);
        auto inner = check(ctx, e->kid(0), left ? want->left : want->right);
        return node(rule, e, L, want, {inner});
      }

      case ExprKind::Absurd: {
        auto inner = infer(ctx, e->kid(0));
        if (inner->type->kind != TypeKind::Void)
          throw TypeError("Absurd", "operand has type " + print_type(inner->type) + ", expected void", e->span, L);
        return node("Absurd", e, L, want, {inner});
      }

      case ExprKind::Located: {
        if (want->kind != TypeKind::Believes || want->agent != e->agent)
          throw TypeError("BelievesI",
                          "located term " + e->agent + ".e checked against " + print_type(want) +
                              ", expected [" + e->agent + "] _",
                          e->span, L);
        auto body = check(ctx.with_lock(Path{e->agent}), e->kid(0), want->left);
        return node("BelievesI", e, L, want, {body});
      }

      case ExprKind::ModalLet: {
        auto [bound, inner] = let_bound(ctx, e, L);
        auto body = check(ctx.with_binding(e->name, inner, e->path + e->path2), e->kid(1), want);
        return node("BelievesE", e, L, want, {bound, body});
      }

      case ExprKind::Case: {
        auto [scrut, tl, tr] = case_scrutinee(ctx, e, L);
        auto left = check(ctx.with_binding(e->name, tl, Path{}), e->kid(1), want);
        auto right = check(ctx.with_binding(e->name2, tr, Path{}), e->kid(2), want);
        return node("Case", e, L, want, {scrut, left, right});
      }

      case ExprKind::Pair: {
        if (want->kind != TypeKind::Product) break;
        auto l = check(ctx, e->kid(0), want->left);
        auto r = check(ctx, e->kid(1), want->right);
        return node("Pair", e, L, want, {l, r});
      }

      case ExprKind::Up: {
        auto inner = peel_stack(e->path, want);
        if (!inner)
          throw TypeError("Up", "result type " + print_type(want) + " is not a " + e->path.str() + " stack", e->span,
                          L);
        auto body = check(ctx, e->kid(0), *inner);
        return up_node(e, L, body, *inner);
      }

      case ExprKind::Down: {
        auto body = check(ctx, e->kid(0), ty::stack(e->path, want));
        return down_node(e, L, body, want);
      }

      default: break;
    }
    auto got = infer(ctx, e);
    if (!type_equal(got->type, want))
      throw TypeError("Mismatch", "expected " + print_type(want) + " but found " + print_type(got->type), e->span, L);
    return got;
  }

 private:
  const Topology& topo_;
  const QueryObserver& obs_;

  static const char* rule_of(ExprKind k) {
    switch (k) {
      case ExprKind::Lam: return "Lam";
      case ExprKind::Inl: return "Inl";
      case ExprKind::Inr: return "Inr";
      case ExprKind::Absurd: return "Absurd";
      default: return "Mismatch";
    }
  }

  static DerivPtr node(std::string rule, const ExprPtr& e, const Path& L, TypePtr type, std::vector<DerivPtr> premises,
                       std::optional<RelationQuery> q = std::nullopt) {
    auto d = std::make_shared<Derivation>();
    d->rule = std::move(rule);
    d->expr = e;
    d->viewpoint = L;
    d->type = std::move(type);
    d->query = std::move(q);
    d->premises = std::move(premises);
    return d;
  }

  RelationQuery query(Relation kind, const Path& a, const Path& b, const Path& viewpoint) {
    RelationQuery q{kind, a, b, topo_.holds(kind, a, b)};
    if (obs_) obs_(q, viewpoint);
    return q;
  }

  DerivPtr axiom(const TypingContext& ctx, const ExprPtr& e, const Path& L) {
    std::vector<const Path*> after;  // locks to the right of the candidate binding, innermost last
    for (auto it = ctx.entries.rbegin(); it != ctx.entries.rend(); ++it) {
      if (const auto* lock = std::get_if<Lock>(&*it)) {
        after.push_back(&lock->path);
        continue;
      }
      const auto& b = std::get<Binding>(*it);
      if (b.name != e->name) continue;
      Path seg;
      for (auto r = after.rbegin(); r != after.rend(); ++r) seg = seg + **r;
      if (seg != b.tag)
        throw TypeError("Axiom",
                        "variable '" + e->name + "' is tagged " + b.tag.str() + " but the locks since its binding are " +
                            seg.str(),
                        e->span, L);
      return node("Axiom", e, L, b.type, {});
    }
    throw TypeError("Axiom", "unbound variable '" + e->name + "'", e->span, L);
  }

  std::pair<DerivPtr, TypePtr> let_bound(const TypingContext& ctx, const ExprPtr& e, const Path& L) {
    auto bound = infer(ctx.with_lock(e->path), e->kid(0));
    auto inner = peel_stack(e->path2, bound->type);
    if (!inner)
      throw TypeError("BelievesE",
                      "bound term has type " + print_type(bound->type) + ", expected a " + e->path2.str() + " stack",
                      e->kid(0)->span, L);
    return {bound, *inner};
  }

  std::tuple<DerivPtr, TypePtr, TypePtr> case_scrutinee(const TypingContext& ctx, const ExprPtr& e, const Path& L) {
    auto scrut = infer(ctx, e->kid(0));
    if (scrut->type->kind != TypeKind::Sum)
      throw TypeError("Case", "scrutinee has non-sum type " + print_type(scrut->type), e->span, L);
    return {scrut, scrut->type->left, scrut->type->right};
  }

  DerivPtr up_node(const ExprPtr& e, const Path& L, const DerivPtr& body, const TypePtr& inner) {
    if (e->path.empty()) throw TypeError("Up", "path must be nonempty", e->span, L);
    auto q = query(Relation::CanUp, L, L + e->path, L);
    if (!q.holds) throw TypeError("Up", q.str() + " does not hold at viewpoint " + L.str(), e->span, L, q);
    return node("Up", e, L, ty::stack(e->path, inner), {body}, q);
  }

  DerivPtr down_node(const ExprPtr& e, const Path& L, const DerivPtr& body, const TypePtr& inner) {
    if (e->path.empty()) throw TypeError("Down", "path must be nonempty", e->span, L);
    auto q = query(Relation::CanDown, L, L + e->path, L);
    if (!q.holds) throw TypeError("Down", q.str() + " does not hold at viewpoint " + L.str(), e->span, L, q);
    return node("Down", e, L, inner, {body}, q);
  }
};

}  // namespace

DerivPtr derive_infer(const Topology& t, const TypingContext& ctx, const ExprPtr& e, const QueryObserver& obs) {
  Checker c(t, obs);
  return c.infer(normalize_context(ctx), e);
}

DerivPtr derive_check(const Topology& t, const TypingContext& ctx, const ExprPtr& e, const TypePtr& ty,
                      const QueryObserver& obs) {
  Checker c(t, obs);
  return c.check(normalize_context(ctx), e, ty);
}

TypePtr infer(const Topology& t, const TypingContext& ctx, const ExprPtr& e) { return derive_infer(t, ctx, e)->type; }

void check(const Topology& t, const TypingContext& ctx, const ExprPtr& e, const TypePtr& ty) {
  derive_check(t, ctx, e, ty);
}

namespace {

std::string head_text(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Var: return e->name;
    case ExprKind::Unit: return "()";
    case ExprKind::Located: return e->agent + ".(...)";
    case ExprKind::ModalLet: return "let " + e->path.str() + " " + e->path2.str() + " " + e->name + " = ... in ...";
    case ExprKind::Send: return "send ... to " + e->path.str();
    case ExprKind::Up: return "up " + e->path.str() + " ...";
    case ExprKind::Down: return "down " + e->path.str() + " ...";
    case ExprKind::Lam: return "fun " + e->name + " -> ...";
    case ExprKind::Case: return "case ... of inl " + e->name + " -> ... | inr " + e->name2 + " -> ...";
    default: break;
  }
  std::string s = print_expr(e);
  if (s.size() > 48) s = s.substr(0, 45) + "...";
  return s;
}

void render(std::ostringstream& out, const DerivPtr& d, int depth) {
  out << std::string(2 * depth, ' ') << d->rule << "  from " << d->viewpoint.str() << "'s point of view: "
      << head_text(d->expr) << " : " << print_type(d->type);
  if (d->query) out << "  [" << d->query->str() << "]";
  out << '\n';
  for (const auto& p : d->premises) render(out, p, depth + 1);
}

ExprPtr elaborate_at(const DerivPtr& d, bool under_annot) {
  std::vector<ExprPtr> kids;
  kids.reserve(d->premises.size());
  bool is_annot = d->expr->kind == ExprKind::Annot;
  for (const auto& p : d->premises) kids.push_back(elaborate_at(p, is_annot));
  ExprPtr rebuilt = with_kids(d->expr, std::move(kids));
  switch (d->expr->kind) {
    case ExprKind::Lam:
    case ExprKind::Inl:
    case ExprKind::Inr:
    case ExprKind::Absurd:
      if (!under_annot) return mk::annot(rebuilt, d->type, d->expr->span);
      break;
    default: break;
  }
  return rebuilt;
}

}  // namespace

std::string render_derivation(const DerivPtr& d) {
  std::ostringstream out;
  render(out, d, 0);
  return out.str();
}

ExprPtr elaborate(const DerivPtr& d) { return elaborate_at(d, false); }

TypingContext program_context(const Program& p, std::size_t defs_visible) {
  TypingContext ctx;
  for (const auto& in : p.inputs) ctx = ctx.with_binding(in.name, in.type, Path{});
  for (std::size_t i = 0; i < defs_visible && i < p.defs.size(); ++i)
    ctx = ctx.with_binding(p.defs[i].name, p.defs[i].type, Path{});
  return ctx;
}

ProgramCheck check_program(const Program& p, const Topology& t) {
  ProgramCheck result;
  for (std::size_t i = 0; i < p.defs.size(); ++i) {
    try {
      result.defs.push_back(derive_check(t, program_context(p, i), p.defs[i].body, p.defs[i].type));
    } catch (const TypeError& err) {
      result.errors.push_back(err);
      result.defs.push_back(nullptr);
    }
  }
  try {
    result.main = derive_check(t, program_context(p, p.defs.size()), p.main, p.main_type);
  } catch (const TypeError& err) {
    result.errors.push_back(err);
  }
  return result;
}

}  // namespace corps
