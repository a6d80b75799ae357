#include "corps/project.hpp"

#include <sstream>

#include "corps/parser.hpp"

namespace corps {

bool owns(const TypePtr& t, const Path& L, const Path& p) {
  switch (t->kind) {
    case TypeKind::Unit:
    case TypeKind::Void: return p == L;
    case TypeKind::Believes: return owns(t->left, L.snoc(t->agent), p);
    case TypeKind::Product: return owns(t->left, L, p) || owns(t->right, L, p);
    case TypeKind::Sum: return p == L || owns(t->left, L, p) || owns(t->right, L, p);
    case TypeKind::Arrow: return L.is_prefix_of(p);
  }
  return false;
}

namespace {

void collect_parts(const TypePtr& t, const Path& here, std::set<Path>& out, bool& arrow) {
  switch (t->kind) {
    case TypeKind::Unit:
    case TypeKind::Void: out.insert(here); return;
    case TypeKind::Arrow:
      arrow = true;
      out.insert(here);
      return;
    case TypeKind::Believes: collect_parts(t->left, here.snoc(t->agent), out, arrow); return;
    case TypeKind::Sum: out.insert(here); [[fallthrough]];
    case TypeKind::Product:
      collect_parts(t->left, here, out, arrow);
      collect_parts(t->right, here, out, arrow);
      return;
  }
}

bool mentions_arrow(const TypePtr& t) {
  std::set<Path> ignored;
  bool arrow = false;
  collect_parts(t, Path{}, ignored, arrow);
  return arrow;
}

const ExprPtr& peel(const ExprPtr& e) {
  const ExprPtr* cur = &e;
  while ((*cur)->kind == ExprKind::Annot) cur = &(*cur)->kid(0);
  return *cur;
}

bool is_skip(const ExprPtr& e) { return e->kind == ExprKind::Skip; }

/// `a ; b` where a's value is irrelevant.
ExprPtr then(const ExprPtr& a, const ExprPtr& b) { return is_skip(a) ? b : mk::seq(a, b); }

/// Sequencing of two computations that both end in skip.
ExprPtr both(const ExprPtr& a, const ExprPtr& b) {
  if (is_skip(a)) return b;
  if (is_skip(b)) return a;
  return mk::seq(a, b);
}

struct Transfer {
  Path sender;
  Path receiver;
  TypePtr inner;
};

Transfer transfer_of(const DerivPtr& d) {
  const auto& e = d->expr;
  const Path& L = d->viewpoint;
  const auto& payload = d->premises[0]->type;
  switch (e->kind) {
    case ExprKind::Send: {
      Path g1 = modality_prefix(payload).prefix(e->path.size());
      return {L + g1, L + e->path, *peel_stack(g1, payload)};
    }
    case ExprKind::Up: return {L, L + e->path, payload};
    default: return {L + e->path, L, *peel_stack(e->path, payload)};
  }
}

std::optional<Path> relative(const Path& base, const Path& p) {
  if (!base.is_prefix_of(p)) return std::nullopt;
  return p.suffix_from(base.size());
}

class Projector {
 public:
  explicit Projector(Path p) : p_(std::move(p)) {}

  ExprPtr run(const DerivPtr& d) {
    const Path& L = d->viewpoint;
    if (!L.is_prefix_of(p_)) return mk::skip();
    const auto& e = d->expr;
    auto sub = [&](std::size_t i) { return run(d->premises[i]); };

    switch (e->kind) {
      case ExprKind::Var: return owns(d->type, L, p_) ? mk::var(e->name) : mk::skip();
      case ExprKind::Unit: return p_ == L ? mk::unit() : mk::skip();
      case ExprKind::Located:
      case ExprKind::Annot: return sub(0);

      case ExprKind::Pair: {
        auto a = sub(0), b = sub(1);
        return owns(d->type, L, p_) ? mk::pair(a, b) : both(a, b);
      }

      case ExprKind::Fst:
      case ExprKind::Snd: {
        auto t = sub(0);
        const auto& prod = d->premises[0]->type;
        if (owns(d->type, L, p_)) return e->kind == ExprKind::Fst ? mk::fst(t) : mk::snd(t);
        return owns(prod, L, p_) ? mk::seq(t, mk::skip()) : t;
      }

      case ExprKind::Inl:
      case ExprKind::Inr: {
        auto t = sub(0);
        if (!owns(d->type, L, p_)) return t;
        return e->kind == ExprKind::Inl ? mk::inl(t) : mk::inr(t);
      }

      case ExprKind::Case: {
        auto s = sub(0), l = sub(1), r = sub(2);
        if (owns(d->premises[0]->type, L, p_)) return mk::case_(s, e->name, l, e->name2, r);
        try {
          return both(s, merge(l, r));
        } catch (const MergeConflict& m) {
          throw NotProjectable("case branches disagree at " + p_.str() + ", which does not know the choice: " +
                                   m.what(),
                               e->span, p_);
        }
      }

      case ExprKind::Lam: {
        auto body = sub(0);
        return is_skip(body) ? body : mk::lam(e->name, body);
      }

      case ExprKind::App: {
        auto f = sub(0), a = sub(1);
        return is_skip(f) && is_skip(a) ? f : mk::app(f, a);
      }

      case ExprKind::Absurd: {
        auto t = sub(0);
        return p_ == L ? mk::absurd(t) : t;
      }

      case ExprKind::ModalLet: {
        auto bound = sub(0), body = sub(1);
        if (occurs_free(e->name, body)) return mk::app(mk::lam(e->name, body), bound);
        return then(bound, body);
      }

      case ExprKind::Send:
      case ExprKind::Up:
      case ExprKind::Down: {
        auto t = sub(0);
        auto tr = transfer_of(d);
        auto parts = type_parts(tr.inner);
        ExprPtr code = t;
        if (auto h = relative(tr.sender, p_); h && parts.count(*h)) code = mk::send_to(tr.receiver + *h, t);
        if (auto h = relative(tr.receiver, p_); h && parts.count(*h))
          code = then(code, mk::recv_from(tr.sender + *h));
        return code;
      }

      default:
        throw NotProjectable(std::string("cannot project ") + kind_name(e->kind), e->span, p_);
    }
  }

 private:
  Path p_;
};

void add_prefixes(std::set<Path>& out, const Path& p) {
  for (std::size_t n = 0; n <= p.size(); ++n) out.insert(p.prefix(n));
}

void walk_universe(const DerivPtr& d, std::set<Path>& out, Network* net) {
  const Path& L = d->viewpoint;
  add_prefixes(out, L);
  if (d->type)
    for (const auto& h : type_parts(d->type)) add_prefixes(out, L + h);
  auto kind = d->expr->kind;
  if (kind == ExprKind::Send || kind == ExprKind::Up || kind == ExprKind::Down) {
    auto tr = transfer_of(d);
    for (const auto& h : type_parts(tr.inner)) {
      add_prefixes(out, tr.sender + h);
      add_prefixes(out, tr.receiver + h);
      if (net) net->channels.insert({tr.sender + h, tr.receiver + h});
    }
    if (net && mentions_arrow(tr.inner)) net->lambda_payload = true;
  }
  for (const auto& p : d->premises) walk_universe(p, out, net);
}

}  // namespace

bool is_local_value(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Unit:
    case ExprKind::Lam:
    case ExprKind::Skip: return true;
    case ExprKind::Pair: return is_local_value(e->kid(0)) && is_local_value(e->kid(1));
    case ExprKind::Inl:
    case ExprKind::Inr: return is_local_value(e->kid(0));
    default: return false;
  }
}

std::set<Path> type_parts(const TypePtr& t) {
  std::set<Path> out;
  bool arrow = false;
  collect_parts(t, Path{}, out, arrow);
  return out;
}

ExprPtr merge(const ExprPtr& l1, const ExprPtr& l2) {
  if (expr_equal(l1, l2)) return l1;
  throw MergeConflict("'" + print_expr(l1) + "' vs '" + print_expr(l2) + "'");
}

ExprPtr simplify_local(const ExprPtr& e) {
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  for (const auto& k : e->kids) kids.push_back(simplify_local(k));
  ExprPtr s = e->kids.empty() ? e : with_kids(e, kids);
  switch (s->kind) {
    case ExprKind::Lam:
      if (is_skip(s->kid(0))) return s->kid(0);
      break;
    case ExprKind::App:
      if (is_skip(s->kid(1))) {
        if (is_skip(s->kid(0))) return s->kid(0);
        if (s->kid(0)->kind == ExprKind::Lam) return simplify_local(substitute(s->kid(0)->kid(0), s->kid(0)->name, s->kid(1)));
      }
      break;
    case ExprKind::Seq:
      if (is_local_value(s->kid(0))) return s->kid(1);
      break;
    case ExprKind::Fst:
    case ExprKind::Snd:
      if (is_skip(s->kid(0))) return s->kid(0);
      break;
    default: break;
  }
  return s;
}

std::set<Path> address_universe(const DerivPtr& main) {
  std::set<Path> out;
  walk_universe(main, out, nullptr);
  return out;
}

// Function types are owned below their viewpoint wherever a body might run,
// so without this cut an uninvolved address would keep a shell such as
// `inl skip` around a lambda it never uses.
ExprPtr project(const DerivPtr& main, const Path& p) {
  if (!address_universe(main).count(p)) return mk::skip();
  return simplify_local(Projector(p).run(main));
}

Network project_network(const DerivPtr& main) {
  Network net;
  std::set<Path> universe;
  walk_universe(main, universe, &net);
  for (const auto& p : universe) net.processes.emplace(p, project(main, p));
  net.result_address = modality_prefix(main->type);
  return net;
}

std::optional<ExprPtr> expected_local_value(const ExprPtr& v, const TypePtr& t, const Path& L, const Path& p) {
  if (mentions_arrow(t) || t->kind == TypeKind::Void) return std::nullopt;
  if (!owns(t, L, p)) return mk::skip();
  const ExprPtr& w = peel(v);
  switch (t->kind) {
    case TypeKind::Unit:
      if (w->kind != ExprKind::Unit) return std::nullopt;
      return mk::unit();
    case TypeKind::Believes:
      if (w->kind != ExprKind::Located || w->agent != t->agent) return std::nullopt;
      return expected_local_value(w->kid(0), t->left, L.snoc(t->agent), p);
    case TypeKind::Product: {
      if (w->kind != ExprKind::Pair) return std::nullopt;
      auto a = expected_local_value(w->kid(0), t->left, L, p);
      auto b = expected_local_value(w->kid(1), t->right, L, p);
      if (!a || !b) return std::nullopt;
      return mk::pair(*a, *b);
    }
    case TypeKind::Sum: {
      bool left = w->kind == ExprKind::Inl;
      if (!left && w->kind != ExprKind::Inr) return std::nullopt;
      auto inner = expected_local_value(w->kid(0), left ? t->left : t->right, L, p);
      if (!inner) return std::nullopt;
      return left ? mk::inl(*inner) : mk::inr(*inner);
    }
    default: return std::nullopt;
  }
}

std::string emit_process(const Path& p, const ExprPtr& local) { return "process " + p.str() + ": " + print_expr(local); }

std::string emit_network(const Network& n) {
  std::string out;
  for (const auto& [p, local] : n.processes) out += emit_process(p, local) + "\n";
  return out;
}

Network parse_network(std::string_view text) {
  Network net;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    std::size_t line_start = offset;
    offset += line.size() + 1;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line.compare(first, 2, "//") == 0) continue;
    if (line.compare(first, 8, "process ") != 0)
      throw ParseError("expected 'process [path]: term'", {line_start + first, line_start + line.size()});
    auto close = line.find(']', first);
    auto colon = close == std::string::npos ? close : line.find(':', close);
    if (colon == std::string::npos)
      throw ParseError("expected 'process [path]: term'", {line_start + first, line_start + line.size()});
    auto shift = [&](const ParseError& err, std::size_t base) {
      return ParseError(err.message(), {line_start + base + err.span().begin, line_start + base + err.span().end},
                        err.expected());
    };
    Path addr;
    try {
      addr = parse_path(line.substr(first + 8, colon - first - 8));
    } catch (const ParseError& err) {
      throw shift(err, first + 8);
    }
    try {
      net.processes[addr] = parse_local_expr(line.substr(colon + 1));
    } catch (const ParseError& err) {
      throw shift(err, colon + 1);
    }
  }
  return net;
}

}  // namespace corps
