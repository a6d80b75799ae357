#include "corps/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <utility>

namespace corps {

// ---------------------------------------------------------------------------
// Path

Path Path::snoc(const Agent& a) const {
  auto segs = segments_;
  segs.push_back(a);
  return Path(std::move(segs));
}

Path Path::prefix(std::size_t n) const {
  n = std::min(n, segments_.size());
  return Path(std::vector<Agent>(segments_.begin(), segments_.begin() + n));
}

Path Path::suffix_from(std::size_t n) const {
  n = std::min(n, segments_.size());
  return Path(std::vector<Agent>(segments_.begin() + n, segments_.end()));
}

bool Path::is_prefix_of(const Path& other) const {
  if (segments_.size() > other.segments_.size()) return false;
  return std::equal(segments_.begin(), segments_.end(), other.segments_.begin());
}

std::string Path::dotted() const {
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i) out += '.';
    out += segments_[i];
  }
  return out;
}

std::string Path::str() const { return "[" + dotted() + "]"; }

Path path_concat(const Path& g1, const Path& g2) {
  if (g2.empty()) return g1;
  auto segs = g1.segments();
  segs.insert(segs.end(), g2.segments().begin(), g2.segments().end());
  return Path(std::move(segs));
}

// ---------------------------------------------------------------------------
// Types

namespace ty {

TypePtr unit() {
  static const TypePtr t = std::make_shared<const Type>(Type{TypeKind::Unit, {}, nullptr, nullptr});
  return t;
}

TypePtr void_() {
  static const TypePtr t = std::make_shared<const Type>(Type{TypeKind::Void, {}, nullptr, nullptr});
  return t;
}

TypePtr believes(const Agent& a, TypePtr body) {
  return std::make_shared<const Type>(Type{TypeKind::Believes, a, std::move(body), nullptr});
}

TypePtr product(TypePtr l, TypePtr r) {
  return std::make_shared<const Type>(Type{TypeKind::Product, {}, std::move(l), std::move(r)});
}

TypePtr sum(TypePtr l, TypePtr r) {
  return std::make_shared<const Type>(Type{TypeKind::Sum, {}, std::move(l), std::move(r)});
}

TypePtr arrow(TypePtr dom, TypePtr cod) {
  return std::make_shared<const Type>(Type{TypeKind::Arrow, {}, std::move(dom), std::move(cod)});
}

TypePtr stack(const Path& g, TypePtr body) {
  for (std::size_t i = g.size(); i-- > 0;) body = believes(g[i], std::move(body));
  return body;
}

}  // namespace ty

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case TypeKind::Unit:
    case TypeKind::Void:
      return true;
    case TypeKind::Believes:
      return a->agent == b->agent && type_equal(a->left, b->left);
    case TypeKind::Product:
    case TypeKind::Sum:
    case TypeKind::Arrow:
      return type_equal(a->left, b->left) && type_equal(a->right, b->right);
  }
  return false;
}

std::optional<TypePtr> peel_stack(const Path& g, const TypePtr& t) {
  TypePtr cur = t;
  for (const auto& a : g.segments()) {
    if (cur->kind != TypeKind::Believes || cur->agent != a) return std::nullopt;
    cur = cur->left;
  }
  return cur;
}

Path modality_prefix(const TypePtr& t) {
  std::vector<Agent> segs;
  for (TypePtr cur = t; cur->kind == TypeKind::Believes; cur = cur->left) segs.push_back(cur->agent);
  return Path(std::move(segs));
}

bool is_positive_type(const TypePtr& t) {
  switch (t->kind) {
    case TypeKind::Unit:
    case TypeKind::Void:
      return true;
    case TypeKind::Believes:
      return is_positive_type(t->left);
    case TypeKind::Product:
    case TypeKind::Sum:
      return is_positive_type(t->left) && is_positive_type(t->right);
    case TypeKind::Arrow:
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Terms

const char* kind_name(ExprKind k) {
  switch (k) {
    case ExprKind::Var: return "Var";
    case ExprKind::Located: return "Located";
    case ExprKind::ModalLet: return "ModalLet";
    case ExprKind::Send: return "Send";
    case ExprKind::Up: return "Up";
    case ExprKind::Down: return "Down";
    case ExprKind::Lam: return "Lam";
    case ExprKind::App: return "App";
    case ExprKind::Pair: return "Pair";
    case ExprKind::Fst: return "Fst";
    case ExprKind::Snd: return "Snd";
    case ExprKind::Inl: return "Inl";
    case ExprKind::Inr: return "Inr";
    case ExprKind::Case: return "Case";
    case ExprKind::Unit: return "Unit";
    case ExprKind::Absurd: return "Absurd";
    case ExprKind::Annot: return "Annot";
    case ExprKind::SendTo: return "SendTo";
    case ExprKind::RecvFrom: return "RecvFrom";
    case ExprKind::Seq: return "Seq";
    case ExprKind::Skip: return "Skip";
  }
  return "?";
}

namespace {

ExprPtr node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

Expr base(ExprKind k, SourceSpan s) {
  Expr e{};
  e.kind = k;
  e.span = s;
  return e;
}

}  // namespace

namespace mk {

ExprPtr var(std::string x, SourceSpan s) {
  auto e = base(ExprKind::Var, s);
  e.name = std::move(x);
  return node(std::move(e));
}

ExprPtr located(Agent a, ExprPtr body, SourceSpan s) {
  auto e = base(ExprKind::Located, s);
  e.agent = std::move(a);
  e.kids = {std::move(body)};
  return node(std::move(e));
}

ExprPtr modal_let(Path g1, Path g2, std::string x, ExprPtr bound, ExprPtr body, SourceSpan s) {
  auto e = base(ExprKind::ModalLet, s);
  e.path = std::move(g1);
  e.path2 = std::move(g2);
  e.name = std::move(x);
  e.kids = {std::move(bound), std::move(body)};
  return node(std::move(e));
}

ExprPtr send(ExprPtr payload, Path dest, SourceSpan s) {
  auto e = base(ExprKind::Send, s);
  e.path = std::move(dest);
  e.kids = {std::move(payload)};
  return node(std::move(e));
}

ExprPtr up(Path g, ExprPtr body, SourceSpan s) {
  auto e = base(ExprKind::Up, s);
  e.path = std::move(g);
  e.kids = {std::move(body)};
  return node(std::move(e));
}

ExprPtr down(Path g, ExprPtr body, SourceSpan s) {
  auto e = base(ExprKind::Down, s);
  e.path = std::move(g);
  e.kids = {std::move(body)};
  return node(std::move(e));
}

ExprPtr lam(std::string x, ExprPtr body, SourceSpan s) {
  auto e = base(ExprKind::Lam, s);
  e.name = std::move(x);
  e.kids = {std::move(body)};
  return node(std::move(e));
}

ExprPtr app(ExprPtr f, ExprPtr a, SourceSpan s) {
  auto e = base(ExprKind::App, s);
  e.kids = {std::move(f), std::move(a)};
  return node(std::move(e));
}

ExprPtr pair(ExprPtr l, ExprPtr r, SourceSpan s) {
  auto e = base(ExprKind::Pair, s);
  e.kids = {std::move(l), std::move(r)};
  return node(std::move(e));
}

#define CORPS_UNARY(fn, K)                 \
  ExprPtr fn(ExprPtr inner, SourceSpan s) {  \
    auto e = base(ExprKind::K, s);         \
    e.kids = {std::move(inner)};           \
    return node(std::move(e));             \
  }
CORPS_UNARY(fst, Fst)
CORPS_UNARY(snd, Snd)
CORPS_UNARY(inl, Inl)
CORPS_UNARY(inr, Inr)
CORPS_UNARY(absurd, Absurd)
#undef CORPS_UNARY

ExprPtr case_(ExprPtr scrut, std::string xl, ExprPtr el, std::string xr, ExprPtr er, SourceSpan s) {
  auto e = base(ExprKind::Case, s);
  e.name = std::move(xl);
  e.name2 = std::move(xr);
  e.kids = {std::move(scrut), std::move(el), std::move(er)};
  return node(std::move(e));
}

ExprPtr unit(SourceSpan s) { return node(base(ExprKind::Unit, s)); }

ExprPtr annot(ExprPtr inner, TypePtr t, SourceSpan s) {
  auto e = base(ExprKind::Annot, s);
  e.kids = {std::move(inner)};
  e.type = std::move(t);
  return node(std::move(e));
}

ExprPtr send_to(Path dest, ExprPtr payload, SourceSpan s) {
  auto e = base(ExprKind::SendTo, s);
  e.path = std::move(dest);
  e.kids = {std::move(payload)};
  return node(std::move(e));
}

ExprPtr recv_from(Path src, SourceSpan s) {
  auto e = base(ExprKind::RecvFrom, s);
  e.path = std::move(src);
  return node(std::move(e));
}

ExprPtr seq(ExprPtr first, ExprPtr second, SourceSpan s) {
  auto e = base(ExprKind::Seq, s);
  e.kids = {std::move(first), std::move(second)};
  return node(std::move(e));
}

ExprPtr skip(SourceSpan s) { return node(base(ExprKind::Skip, s)); }

}  // namespace mk

ExprPtr with_kids(const ExprPtr& e, std::vector<ExprPtr> kids) {
  Expr copy = *e;
  copy.kids = std::move(kids);
  return node(std::move(copy));
}

namespace {

// Which children sit under which binder.
struct BinderSlot {
  std::size_t kid;
  const std::string* name;
};

std::vector<BinderSlot> binder_slots(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Lam:
      return {{0, &e.name}};
    case ExprKind::ModalLet:
      return {{1, &e.name}};
    case ExprKind::Case:
      return {{1, &e.name}, {2, &e.name2}};
    default:
      return {};
  }
}

const std::string* binder_for(const Expr& e, std::size_t kid) {
  for (const auto& slot : binder_slots(e))
    if (slot.kid == kid) return slot.name;
  return nullptr;
}

void collect_free(const ExprPtr& e, std::vector<std::string>& bound, std::set<std::string>& out) {
  if (e->kind == ExprKind::Var) {
    if (std::find(bound.begin(), bound.end(), e->name) == bound.end()) out.insert(e->name);
    return;
  }
  for (std::size_t i = 0; i < e->kids.size(); ++i) {
    const std::string* b = binder_for(*e, i);
    if (b) bound.push_back(*b);
    collect_free(e->kids[i], bound, out);
    if (b) bound.pop_back();
  }
}

bool free_in(const std::string& x, const ExprPtr& e) {
  if (e->kind == ExprKind::Var) return e->name == x;
  for (std::size_t i = 0; i < e->kids.size(); ++i) {
    const std::string* b = binder_for(*e, i);
    if (b && *b == x) continue;
    if (free_in(x, e->kids[i])) return true;
  }
  return false;
}

}  // namespace

std::set<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  collect_free(e, bound, out);
  return out;
}

bool occurs_free(const std::string& x, const ExprPtr& e) { return free_in(x, e); }

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  std::string stem = base;
  while (!stem.empty() && std::isdigit(static_cast<unsigned char>(stem.back()))) stem.pop_back();
  if (stem.empty()) stem = "v";
  for (std::size_t i = 1;; ++i) {
    auto candidate = stem + std::to_string(i);
    if (!avoid.count(candidate)) return candidate;
  }
}

namespace {

ExprPtr subst(const ExprPtr& e, const std::string& x, const ExprPtr& v, const std::set<std::string>& fv_v) {
  if (e->kind == ExprKind::Var) return e->name == x ? v : e;
  if (!free_in(x, e)) return e;

  Expr copy = *e;
  for (std::size_t i = 0; i < copy.kids.size(); ++i) {
    const std::string* b = binder_for(*e, i);
    if (!b) {
      copy.kids[i] = subst(copy.kids[i], x, v, fv_v);
      continue;
    }
    if (*b == x) continue;  // shadowed
    ExprPtr kid = copy.kids[i];
    std::string* target = (e->kind == ExprKind::Case && i == 2) ? &copy.name2 : &copy.name;
    if (fv_v.count(*b)) {
      std::set<std::string> avoid = fv_v;
      auto fv_kid = free_vars(kid);
      avoid.insert(fv_kid.begin(), fv_kid.end());
      avoid.insert(x);
      std::string renamed = fresh_name(*b, avoid);
      kid = subst(kid, *b, mk::var(renamed), {renamed});
      *target = renamed;
    }
    copy.kids[i] = subst(kid, x, v, fv_v);
  }
  return node(std::move(copy));
}

using NameEnv = std::vector<std::pair<std::string, std::string>>;

bool alpha(const ExprPtr& a, const ExprPtr& b, NameEnv& env) {
  if (a->kind != b->kind) return false;
  if (a->kind == ExprKind::Var) {
    for (std::size_t i = env.size(); i-- > 0;) {
      bool la = env[i].first == a->name;
      bool lb = env[i].second == b->name;
      if (la || lb) return la && lb;
    }
    return a->name == b->name;
  }
  if (a->agent != b->agent || a->path != b->path || a->path2 != b->path2) return false;
  if (a->kind == ExprKind::Annot && !type_equal(a->type, b->type)) return false;
  if (a->kids.size() != b->kids.size()) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i) {
    const std::string* ba = binder_for(*a, i);
    const std::string* bb = binder_for(*b, i);
    if (ba) env.emplace_back(*ba, *bb);
    bool ok = alpha(a->kids[i], b->kids[i], env);
    if (ba) env.pop_back();
    if (!ok) return false;
  }
  return true;
}

}  // namespace

ExprPtr substitute(const ExprPtr& e, const std::string& x, const ExprPtr& v) {
  return subst(e, x, v, free_vars(v));
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  NameEnv env;
  return alpha(a, b, env);
}

ExprPtr erase_annotations(const ExprPtr& e) {
  if (e->kind == ExprKind::Annot) return erase_annotations(e->kid(0));
  if (e->kids.empty()) return e;
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  bool changed = false;
  for (const auto& k : e->kids) {
    kids.push_back(erase_annotations(k));
    changed = changed || kids.back() != k;
  }
  return changed ? with_kids(e, std::move(kids)) : e;
}

// ---------------------------------------------------------------------------
// Contexts

Path locks_of(const TypingContext& ctx) {
  Path out;
  for (const auto& entry : ctx.entries)
    if (const auto* lock = std::get_if<Lock>(&entry)) out = out + lock->path;
  return out;
}

TypingContext normalize_context(const TypingContext& ctx) {
  TypingContext out;
  out.entries.reserve(ctx.entries.size());
  for (const auto& entry : ctx.entries) {
    if (const auto* lock = std::get_if<Lock>(&entry)) {
      if (lock->path.empty()) continue;
      if (!out.entries.empty()) {
        if (auto* prev = std::get_if<Lock>(&out.entries.back())) {
          prev->path = prev->path + lock->path;
          continue;
        }
      }
    }
    out.entries.push_back(entry);
  }
  return out;
}

bool is_canonical(const TypingContext& ctx) {
  bool prev_lock = false;
  for (const auto& entry : ctx.entries) {
    const auto* lock = std::get_if<Lock>(&entry);
    if (lock && (lock->path.empty() || prev_lock)) return false;
    prev_lock = lock != nullptr;
  }
  return true;
}

TypingContext TypingContext::with_lock(const Path& g) const {
  TypingContext out = *this;
  if (g.empty()) return out;
  if (!out.entries.empty())
    if (auto* prev = std::get_if<Lock>(&out.entries.back())) {
      prev->path = prev->path + g;
      return out;
    }
  out.entries.emplace_back(Lock{g});
  return out;
}

TypingContext TypingContext::with_binding(std::string x, TypePtr t, Path tag) const {
  TypingContext out = *this;
  out.entries.emplace_back(Binding{std::move(x), std::move(t), std::move(tag)});
  return out;
}

}  // namespace corps
