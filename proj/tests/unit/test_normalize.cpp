#include <doctest.h>

#include <json.hpp>

#include "corps/normalize.hpp"
#include "corps/parser.hpp"
#include "corps/pipeline.hpp"
#include "corps/typecheck.hpp"
#include "generators.hpp"

using namespace corps;

namespace {

ExprPtr E(const char* s) { return parse_expr(s); }

bool same(const ExprPtr& a, const char* b) { return expr_equal(a, parse_expr(b)); }

std::vector<Compiled> suite(std::size_t n) {
  std::vector<Compiled> out;
  for (std::uint64_t seed = 1; out.size() < n; ++seed) {
    const char* preset = seed % 2 ? "choreo" : "doxastic";
    auto topo = load_preset(preset);
    corps::testing::TypedGen gen(seed + 5000, topo);
    out.push_back(compile(gen.program(preset), topo));
  }
  return out;
}

}  // namespace

TEST_CASE("value predicates") {
  CHECK(is_value(E("A.((), ())")));
  CHECK(is_positive_value(E("A.((), ())")));
  CHECK(is_value(E("fun x -> x")));
  CHECK_FALSE(is_positive_value(E("fun x -> x")));
  CHECK_FALSE(is_value(E("fst ((), ())")));
  CHECK(is_value(E("inl (inr ())")));
  CHECK_FALSE(is_positive_value(E("(inl (fun x -> x), ())")));
  CHECK_FALSE(is_value(E("send A.() to [B]")));
  CHECK_FALSE(is_value(E("x")));
}

TEST_CASE("step examples") {
  for (auto mode : {EvalMode::CommFree, EvalMode::PositiveComm}) {
    auto r = step(mode, E("let [] [A] x = A.() in A.x"));
    REQUIRE(r);
    CHECK(same(r->term, "A.()"));
    CHECK(r->rule == "modal-let");
  }
  auto s = step(EvalMode::PositiveComm, E("send A.() to [B]"));
  REQUIRE(s);
  CHECK(same(s->term, "B.()"));
  CHECK(s->rule == "send");
  CHECK_FALSE(step(EvalMode::CommFree, E("send A.() to [B]")));
}

TEST_CASE("normalize examples") {
  auto e = E("send (A.(fst ((), ()))) to [B]");
  auto p = normalize(EvalMode::PositiveComm, e, 100);
  CHECK(same(p.term, "B.()"));
  CHECK(p.cls == NormalFormClass::Value);
  CHECK(p.steps == 2);
  auto c = normalize(EvalMode::CommFree, e, 100);
  CHECK(same(c.term, "send A.() to [B]"));
  CHECK(c.cls == NormalFormClass::CommNeutral);
  CHECK(c.steps == 1);
  auto u = normalize(EvalMode::PositiveComm, E("()"), 1);
  CHECK(u.cls == NormalFormClass::Value);
  CHECK(u.steps == 0);
}

TEST_CASE("communication rules") {
  auto pc = EvalMode::PositiveComm;
  CHECK(same(normalize(pc, E("up [A.B] ()"), 10).term, "A.B.()"));
  CHECK(same(normalize(pc, E("down [A.B] A.B.(inl ())"), 10).term, "inl ()"));
  CHECK(same(normalize(pc, E("send A.B.() to [C.D]"), 10).term, "C.D.()"));
  // Payloads below the split stay located.
  CHECK(same(normalize(pc, E("send A.B.() to [C]"), 10).term, "C.B.()"));
  // Functions are never communicated.
  auto lam = normalize(pc, E("send A.(fun x -> x) to [B]"), 10);
  CHECK(lam.cls == NormalFormClass::CommNeutral);
  CHECK(lam.steps == 0);
  // Down only strips the agents it names.
  CHECK_FALSE(step(pc, E("down [A] B.()")));
}

TEST_CASE("evaluation is call-by-value and left to right") {
  auto r = step(EvalMode::CommFree, E("((fun x -> x : unit -> unit) (fst ((), ())), snd ((), ()))"));
  REQUIRE(r);
  CHECK(r->rule == "fst");
  CHECK(same(r->term, "((fun x -> x : unit -> unit) (), snd ((), ()))"));
  // No reduction under binders or in case branches.
  CHECK_FALSE(step(EvalMode::CommFree, E("fun x -> fst ((), ())")));
  auto c = step(EvalMode::CommFree, E("case inl () of inl a -> fst (a, a) | inr b -> b"));
  REQUIRE(c);
  CHECK(c->rule == "case");
  CHECK(same(c->term, "fst ((), ())"));
}

TEST_CASE("a stuck communication does not block its neighbours") {
  auto n = normalize(EvalMode::CommFree, E("(send A.() to [B], fst ((), ()))"), 10);
  CHECK(same(n.term, "(send A.() to [B], ())"));
  CHECK(n.cls == NormalFormClass::CommNeutral);
}

TEST_CASE("classification") {
  CHECK(classify(EvalMode::PositiveComm, E("A.()")) == NormalFormClass::Value);
  CHECK(classify(EvalMode::CommFree, E("(send A.() to [B], ())")) == NormalFormClass::CommNeutral);
  CHECK(classify(EvalMode::PositiveComm, E("fst x")) == NormalFormClass::Open);
  CHECK_THROWS_AS(classify(EvalMode::PositiveComm, E("fst ()")), StuckUnexpected);
}

TEST_CASE("fuel") {
  auto e = E("fst (fst ((fst (((), ()), ()), ()), ()))");
  CHECK_THROWS_AS(normalize(EvalMode::CommFree, e, 1), FuelExhausted);
  auto n = normalize(EvalMode::CommFree, e, 3);
  CHECK(n.steps == 3);
  auto two = step(EvalMode::CommFree, step(EvalMode::CommFree, e)->term)->term;
  try {
    normalize(EvalMode::CommFree, e, 2);
    FAIL("no exhaustion");
  } catch (const FuelExhausted& f) {
    CHECK(expr_equal(f.last(), two));
    CHECK(f.steps() == 2);
  }
}

TEST_CASE("located stripping") {
  auto v = E("A.B.(inl C.())");
  REQUIRE(strip_located(v, 2));
  CHECK(same(*strip_located(v, 2), "inl C.()"));
  CHECK_FALSE(strip_located(v, 3));
  // Only the outer stack goes; located values inside the payload stay.
  CHECK(same(strip_all_located(v), "inl C.()"));
}

TEST_CASE("the step trace is JSON lines with rule and span") {
  auto text = std::string("send (A.(fst ((), ()))) to [B]");
  auto n = normalize(EvalMode::PositiveComm, parse_expr(text), 100, true);
  REQUIRE(n.trace.size() == 2);
  auto jsonl = trace_to_jsonl(n.trace);
  std::istringstream in(jsonl);
  std::string line;
  std::vector<nlohmann::json> recs;
  while (std::getline(in, line))
    if (!line.empty()) recs.push_back(nlohmann::json::parse(line));
  REQUIRE(recs.size() == 2);
  CHECK(recs[0]["index"] == 0);
  CHECK(recs[0]["rule"] == "fst");
  CHECK(recs[1]["rule"] == "send");
  auto b = recs[0]["span"][0].get<std::size_t>(), e = recs[0]["span"][1].get<std::size_t>();
  CHECK(text.substr(b, e - b) == "fst ((), ())");
}

TEST_CASE("generated programs: subject reduction, progress and containment") {
  for (const auto& c : suite(300)) {
    INFO(print_expr(c.main));
    for (auto mode : {EvalMode::CommFree, EvalMode::PositiveComm}) {
      ExprPtr cur = c.main;
      while (auto r = step(mode, cur)) {
        REQUIRE_NOTHROW(check(c.topology, c.context, r->term, c.type));
        cur = r->term;
      }
      auto cls = classify(mode, cur);
      CHECK((cls == NormalFormClass::Value || cls == NormalFormClass::CommNeutral));
    }
    auto direct = normalize(EvalMode::PositiveComm, c.main, 100000).term;
    auto staged = normalize(EvalMode::CommFree, c.main, 100000).term;
    CHECK(expr_equal(normalize(EvalMode::PositiveComm, staged, 100000).term, direct));
  }
}

TEST_CASE("every comm-free redex is also a positive-comm redex") {
  for (const auto& c : suite(200)) {
    ExprPtr cur = c.main;
    while (auto r = step(EvalMode::CommFree, cur)) {
      auto p = step(EvalMode::PositiveComm, cur);
      REQUIRE(p);
      // Both modes take the same redex when the comm-free one is not preceded
      // by a communication positive mode would fire first.
      if (p->rule == r->rule) CHECK(expr_equal(p->term, r->term));
      cur = r->term;
    }
  }
}

TEST_CASE("positive-comm normal forms have no positive payloads left") {
  for (const auto& c : suite(300)) {
    auto n = normalize(EvalMode::PositiveComm, c.main, 100000);
    INFO(print_expr(n.term));
    CHECK(positive_comm_residuals(n.term).empty());
  }
}

TEST_CASE("normalization is deterministic") {
  for (const auto& c : suite(50)) {
    auto a = normalize(EvalMode::PositiveComm, c.main, 100000, true);
    auto b = normalize(EvalMode::PositiveComm, c.main, 100000, true);
    CHECK(expr_equal(a.term, b.term));
    CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));
  }
}
