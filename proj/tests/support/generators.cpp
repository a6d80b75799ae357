#include "generators.hpp"

#include <algorithm>
#include <tuple>

namespace corps::testing {

const char* const kAToBTopologyText =
    "candown: *.$a => *.$a.$a\n"
    "canup: *.$a => *.$a.$a\n"
    "cansend: A => B\n";

Topology a_to_b_topology() { return parse_topology(kAToBTopologyText); }

bool inferable(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Lam:
    case ExprKind::Inl:
    case ExprKind::Inr:
    case ExprKind::Absurd: return false;
    case ExprKind::Case: return inferable(e->kid(1));
    case ExprKind::ModalLet: return inferable(e->kid(1));
    case ExprKind::Located:
    case ExprKind::Up:
    case ExprKind::Down: return inferable(e->kid(0));
    case ExprKind::Pair: return inferable(e->kid(0)) && inferable(e->kid(1));
    default: return true;
  }
}

TypedGen::TypedGen(std::uint64_t seed, Topology topo, TypedGenConfig cfg)
    : rng_(seed), topo_(std::move(topo)), cfg_(std::move(cfg)) {}

bool TypedGen::coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
std::size_t TypedGen::pick(std::size_t n) { return rng_() % n; }
const std::string& TypedGen::agent() { return cfg_.agents[pick(cfg_.agents.size())]; }
std::string TypedGen::fresh() { return "v" + std::to_string(++counter_); }

TypePtr TypedGen::type(int depth, bool positive) {
  if (depth <= 0) return coin(0.6) ? ty::unit() : ty::believes(agent(), ty::unit());
  switch (pick(positive ? 4 : 5)) {
    case 0: return ty::unit();
    case 1: return ty::believes(agent(), type(depth - 1, positive));
    case 2: return ty::product(type(depth - 1, positive), type(depth - 1, positive));
    case 3: return ty::sum(type(depth - 1, positive), type(depth - 1, positive));
    default: {
      TypePtr dom = coin(0.1) ? ty::void_() : type(depth - 1, false);
      return ty::arrow(dom, type(depth - 1, false));
    }
  }
}

std::vector<const TypedGen::Var*> TypedGen::usable(const Env& env, const TypePtr& t) const {
  std::vector<const Var*> out;
  std::vector<std::string> seen;
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    if (std::find(seen.begin(), seen.end(), it->name) != seen.end()) continue;
    seen.push_back(it->name);
    if (it->since == it->tag && (!t || type_equal(it->type, t))) out.push_back(&*it);
  }
  return out;
}

namespace {

TypedGen::Env with_lock(const std::vector<TypedGen::Var>& env, const Path& g) {
  auto out = env;
  for (auto& v : out) v.since = v.since + g;
  return out;
}

}  // namespace

ExprPtr TypedGen::infer(const Env& env, const Path& L, const TypePtr& t, int depth) {
  auto e = check(env, L, t, depth);
  return inferable(e) ? e : mk::annot(e, t);
}

ExprPtr TypedGen::intro(const Env& env, const Path& L, const TypePtr& t, int depth) {
  switch (t->kind) {
    case TypeKind::Unit: return mk::unit();
    case TypeKind::Believes:
      return mk::located(t->agent, check(with_lock(env, Path{t->agent}), L.snoc(t->agent), t->left, depth - 1));
    case TypeKind::Product: return mk::pair(check(env, L, t->left, depth - 1), check(env, L, t->right, depth - 1));
    case TypeKind::Sum: {
      bool left = t->right->kind == TypeKind::Void || (t->left->kind != TypeKind::Void && coin(0.5));
      return left ? mk::inl(check(env, L, t->left, depth - 1)) : mk::inr(check(env, L, t->right, depth - 1));
    }
    case TypeKind::Arrow: {
      auto x = fresh();
      auto inner = env;
      inner.push_back({x, t->left, Path{}, Path{}});
      return mk::lam(x, check(inner, L, t->right, depth - 1));
    }
    case TypeKind::Void: break;
  }
  auto voids = usable(env, ty::void_());
  if (!voids.empty()) return mk::absurd(mk::var(voids.front()->name));
  throw std::logic_error("generator asked for an uninhabited type");
}

ExprPtr TypedGen::check(const Env& env, const Path& L, const TypePtr& t, int depth) {
  ++nodes_;
  auto vars = usable(env, t);
  bool budget = depth > 0 && nodes_ < cfg_.max_nodes;

  if (!vars.empty()) {
    int input_weight = 0;
    for (const auto* v : vars)
      for (const auto& in : cfg_.inputs)
        if (in.name == v->name) input_weight = cfg_.input_bias;
    if (coin(budget ? 0.3 + 0.1 * input_weight : 0.7)) return mk::var(vars[pick(vars.size())]->name);
  }
  auto voids = usable(env, ty::void_());
  if (!voids.empty() && coin(0.2)) return mk::absurd(mk::var(voids[pick(voids.size())]->name));
  if (!budget || coin(0.35)) return intro(env, L, t, depth);

  // Eliminations and communications; fall back to an introduction when the
  // chosen form does not apply here.
  for (int attempt = 0; attempt < 4; ++attempt) {
    switch (attempt == 0 && coin(cfg_.held_sum_bias) ? 7 : pick(9)) {
      case 0: {  // application
        auto arg_t = type(1, cfg_.positive_payloads);
        auto f = infer(env, L, ty::arrow(arg_t, t), depth - 1);
        return mk::app(f, check(env, L, arg_t, depth - 1));
      }
      case 1: {  // projection
        auto other = type(1, true);
        bool first = coin(0.5);
        auto prod = first ? ty::product(t, other) : ty::product(other, t);
        auto p = infer(env, L, prod, depth - 1);
        return first ? mk::fst(p) : mk::snd(p);
      }
      case 2: {  // case analysis
        // Prefer branching on a sum already in scope: that is how inputs
        // end up influencing control flow.
        auto sums = usable(env, nullptr);
        sums.erase(std::remove_if(sums.begin(), sums.end(),
                                  [](const Var* v) { return v->type->kind != TypeKind::Sum; }),
                   sums.end());
        TypePtr sum;
        ExprPtr scrut;
        if (!sums.empty() && coin(0.7)) {
          const Var* v = sums[pick(sums.size())];
          sum = v->type;
          scrut = mk::var(v->name);
        } else {
          sum = ty::sum(type(1, true), type(1, true));
          scrut = infer(env, L, sum, depth - 1);
        }
        auto x = fresh(), y = fresh();
        auto el = env, er = env;
        el.push_back({x, sum->left, Path{}, Path{}});
        er.push_back({y, sum->right, Path{}, Path{}});
        return mk::case_(scrut, x, check(el, L, t, depth - 1), y, check(er, L, t, depth - 1));
      }
      case 3: {  // modal let, either on a belief already in scope or on a fresh one
        auto beliefs = usable(env, nullptr);
        beliefs.erase(std::remove_if(beliefs.begin(), beliefs.end(),
                                     [](const Var* v) { return v->type->kind != TypeKind::Believes; }),
                      beliefs.end());
        auto x = fresh();
        ExprPtr bound;
        Path g1, g2;
        TypePtr inner;
        if (!beliefs.empty() && coin(0.5 + 0.1 * cfg_.input_bias)) {
          const Var* v = beliefs[pick(beliefs.size())];
          g2 = Path{v->type->agent};
          inner = v->type->left;
          bound = mk::var(v->name);
        } else {
          if (coin(0.3)) g1 = Path{agent()};
          if (coin(0.85)) g2 = Path{agent()};
          inner = type(1, true);
          bound = infer(with_lock(env, g1), L + g1, ty::stack(g2, inner), depth - 1);
        }
        auto body_env = env;
        body_env.push_back({x, inner, g1 + g2, Path{}});
        return mk::modal_let(g1, g2, x, bound, check(body_env, L, t, depth - 1));
      }
      case 4: {  // down from one of L's children
        std::vector<std::string> ok;
        for (const auto& a : cfg_.agents)
          if (topo_.holds(Relation::CanDown, L, L.snoc(a))) ok.push_back(a);
        if (ok.empty() || (cfg_.positive_payloads && !is_positive_type(t))) break;
        Path g{ok[pick(ok.size())]};
        return mk::down(g, check(env, L, ty::stack(g, t), depth - 1));
      }
      case 5: {  // up into a child
        if (t->kind != TypeKind::Believes || !topo_.holds(Relation::CanUp, L, L.snoc(t->agent))) break;
        if (cfg_.positive_payloads && !is_positive_type(t->left)) break;
        return mk::up(Path{t->agent}, check(env, L, t->left, depth - 1));
      }
      case 6: {  // send between siblings
        if (t->kind != TypeKind::Believes) break;
        if (cfg_.positive_payloads && !is_positive_type(t->left)) break;
        std::vector<std::string> ok;
        for (const auto& a : cfg_.agents)
          if (topo_.holds(Relation::CanSend, L.snoc(a), L.snoc(t->agent))) ok.push_back(a);
        if (ok.empty()) break;
        Path g1{ok[pick(ok.size())]};
        auto payload = infer(env, L, ty::stack(g1, t->left), depth - 1);
        return mk::send(payload, Path{t->agent});
      }
      case 7: {  // step into an agent that holds a sum and branch on it there
        std::vector<const Var*> held;
        for (const auto& v : env)
          if (v.type->kind == TypeKind::Sum && v.tag.size() == v.since.size() + 1 && v.since.is_prefix_of(v.tag))
            held.push_back(&v);
        if (held.empty()) break;
        const Var* v = held[pick(held.size())];
        const std::string& a = v->tag.back();
        auto inner_env = with_lock(env, Path{a});
        // A later binding of the same name shadows it.
        bool visible = false;
        for (const auto* u : usable(inner_env, v->type)) visible |= u->name == v->name;
        if (!visible) break;
        auto result = type(1, true);
        auto x = fresh(), y = fresh(), w = fresh();
        auto el = inner_env, er = inner_env;
        el.push_back({x, v->type->left, Path{}, Path{}});
        er.push_back({y, v->type->right, Path{}, Path{}});
        auto branch = mk::case_(mk::var(v->name), x, check(el, L.snoc(a), result, depth - 1), y,
                                check(er, L.snoc(a), result, depth - 1));
        auto arg_t = ty::believes(a, result);
        auto body_env = env;
        body_env.push_back({w, arg_t, Path{}, Path{}});
        auto fn = mk::annot(mk::lam(w, check(body_env, L, t, depth - 1)), ty::arrow(arg_t, t));
        return mk::app(fn, mk::located(a, branch));
      }
      default: return intro(env, L, t, depth);
    }
  }
  return intro(env, L, t, depth);
}

ExprPtr TypedGen::term(const TypePtr& t) {
  nodes_ = 0;
  Env env;
  for (const auto& in : cfg_.inputs) env.push_back({in.name, in.type, Path{}, Path{}});
  return check(env, Path{}, t, cfg_.depth);
}

Program TypedGen::program(const std::string& topo_ref) {
  nodes_ = 0;
  counter_ = 0;
  Program p;
  p.topology_ref = topo_ref;
  p.inputs = cfg_.inputs;
  Env env;
  for (const auto& in : cfg_.inputs) env.push_back({in.name, in.type, Path{}, Path{}});
  p.main_type = type(3, cfg_.positive_main);
  std::vector<std::tuple<std::string, Path, std::string>> unpacked;
  if (cfg_.unpack_inputs)
    for (const auto& in : cfg_.inputs) {
      if (in.type->kind != TypeKind::Believes) continue;
      auto x = fresh();
      Path g{in.type->agent};
      env.push_back({x, in.type->left, g, Path{}});
      unpacked.emplace_back(x, g, in.name);
    }
  p.main = check(env, Path{}, p.main_type, cfg_.depth);
  for (auto it = unpacked.rbegin(); it != unpacked.rend(); ++it)
    p.main = mk::modal_let(Path{}, std::get<1>(*it), std::get<0>(*it), mk::var(std::get<2>(*it)), p.main);
  return p;
}

// ---------------------------------------------------------------------------

std::string SyntaxGen::var() {
  static const char* const names[] = {"x", "y", "z", "f", "x1", "go'", "_t"};
  return names[rng_() % 7];
}

Path SyntaxGen::path(std::size_t max_len) {
  static const char* const agents[] = {"A", "B", "C", "Alice", "B2"};
  std::vector<std::string> segs;
  std::size_t n = rng_() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) segs.push_back(agents[rng_() % 5]);
  return Path(segs);
}

TypePtr SyntaxGen::type(int depth) {
  if (depth <= 0) return rng_() % 4 == 0 ? ty::void_() : ty::unit();
  switch (rng_() % 6) {
    case 0: return ty::unit();
    case 1: return ty::stack(path(2), type(depth - 1));
    case 2: return ty::product(type(depth - 1), type(depth - 1));
    case 3: return ty::sum(type(depth - 1), type(depth - 1));
    case 4: return ty::arrow(type(depth - 1), type(depth - 1));
    default: return ty::believes("A", type(depth - 1));
  }
}

ExprPtr SyntaxGen::expr(int depth) {
  if (depth <= 0) return rng_() % 2 ? mk::unit() : mk::var(var());
  auto sub = [&] { return expr(depth - 1); };
  switch (rng_() % 18) {
    case 0: return mk::var(var());
    case 1: {
      Path a = path(1);
      return mk::located(a.empty() ? "A" : a[0], sub());
    }
    case 2: return mk::modal_let(path(2), path(2), var(), sub(), sub());
    case 3: {
      Path g = path(2);
      return mk::send(sub(), g.empty() ? Path{"B"} : g);
    }
    case 4: return mk::up(path(2), sub());
    case 5: return mk::down(path(2), sub());
    case 6: return mk::lam(var(), sub());
    case 7: return mk::app(sub(), sub());
    case 8: return mk::pair(sub(), sub());
    case 9: return mk::fst(sub());
    case 10: return mk::snd(sub());
    case 11: return mk::inl(sub());
    case 12: return mk::inr(sub());
    case 13: return mk::case_(sub(), var(), sub(), var(), sub());
    case 14: return mk::unit();
    case 15: return mk::absurd(sub());
    case 16: return mk::annot(sub(), type(2));
    default: return mk::app(mk::app(sub(), sub()), sub());
  }
}

ExprPtr SyntaxGen::local_expr(int depth) {
  if (depth <= 0) {
    switch (rng_() % 4) {
      case 0: return mk::skip();
      case 1: return mk::recv_from(path(2));
      case 2: return mk::var(var());
      default: return mk::unit();
    }
  }
  auto sub = [&] { return local_expr(depth - 1); };
  switch (rng_() % 12) {
    case 0: return mk::send_to(path(2), sub());
    case 1: return mk::seq(sub(), sub());
    case 2: return mk::lam(var(), sub());
    case 3: return mk::app(sub(), sub());
    case 4: return mk::pair(sub(), sub());
    case 5: return mk::fst(sub());
    case 6: return mk::inl(sub());
    case 7: return mk::case_(sub(), var(), sub(), var(), sub());
    case 8: return mk::absurd(sub());
    case 9: return mk::snd(sub());
    case 10: return mk::inr(sub());
    default: return mk::skip();
  }
}

Program SyntaxGen::program() {
  Program p;
  switch (rng_() % 4) {
    case 0: break;
    case 1: p.topology_ref = "doxastic"; break;
    case 2: p.topology_ref = "policies/a b.topo"; break;
    default: p.topology_ref = "choreo"; break;
  }
  std::size_t inputs = rng_() % 3, defs = rng_() % 3;
  for (std::size_t i = 0; i < inputs; ++i) p.inputs.push_back({"in" + std::to_string(i), type(2), {}});
  for (std::size_t i = 0; i < defs; ++i) p.defs.push_back({"d" + std::to_string(i), type(2), expr(4), {}});
  p.main_type = type(3);
  p.main = expr(6);
  return p;
}

std::vector<Path> all_paths(const std::vector<std::string>& agents, std::size_t max_len) {
  std::vector<Path> out{Path{}};
  std::size_t level_start = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::size_t level_end = out.size();
    for (std::size_t i = level_start; i < level_end; ++i)
      for (const auto& a : agents) out.push_back(out[i].snoc(a));
    level_start = level_end;
  }
  return out;
}

}  // namespace corps::testing
