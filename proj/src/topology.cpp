#include "corps/topology.hpp"

#include <cctype>
#include <deque>
#include <map>
#include <sstream>

namespace corps {

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::CanDown: return "candown";
    case Relation::CanUp: return "canup";
    case Relation::CanSend: return "cansend";
  }
  return "?";
}

std::string PathPattern::str() const {
  std::string out = wildcard ? "*" : "";
  for (const auto& a : atoms) {
    if (!out.empty()) out += '.';
    out += a.is_var ? "$" + a.name : a.name;
  }
  return out.empty() ? "[]" : out;
}

std::string TopoRule::str() const {
  std::string out = std::string(relation_name(kind)) + ": ";
  switch (form) {
    case Form::True: return out + "true";
    case Form::False: return out + "false";
    case Form::Match: return out + lhs.str() + " => " + rhs.str();
  }
  return out;
}

namespace {

struct Bindings {
  std::optional<Path> prefix;
  std::map<std::string, Agent> vars;
};

bool match_pattern(const PathPattern& pat, const Path& p, Bindings& b) {
  std::size_t n = pat.atoms.size();
  if (pat.wildcard ? p.size() < n : p.size() != n) return false;
  std::size_t head = p.size() - n;
  if (pat.wildcard) {
    Path pre = p.prefix(head);
    if (b.prefix && *b.prefix != pre) return false;
    b.prefix = pre;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& atom = pat.atoms[i];
    const Agent& actual = p[head + i];
    if (!atom.is_var) {
      if (atom.name != actual) return false;
      continue;
    }
    auto [it, inserted] = b.vars.emplace(atom.name, actual);
    if (!inserted && it->second != actual) return false;
  }
  return true;
}

}  // namespace

bool rule_matches(const TopoRule& rule, const Path& a, const Path& b) {
  switch (rule.form) {
    case TopoRule::Form::True: return true;
    case TopoRule::Form::False: return false;
    case TopoRule::Form::Match: break;
  }
  Bindings binds;
  return match_pattern(rule.lhs, a, binds) && match_pattern(rule.rhs, b, binds);
}

bool Topology::holds(Relation kind, const Path& a, const Path& b) const {
  for (const auto& rule : rules_)
    if (rule.kind == kind && rule_matches(rule, a, b)) return true;
  return false;
}

Topology Topology::with_rule(TopoRule rule) const {
  auto rules = rules_;
  rules.push_back(std::move(rule));
  return Topology(std::move(rules));
}

std::string Topology::str() const {
  std::string out;
  for (const auto& r : rules_) out += r.str() + "\n";
  return out;
}

bool relation_holds(const Topology& t, Relation kind, const Path& a, const Path& b) { return t.holds(kind, a, b); }

namespace {

TopoRule self_rule(Relation kind) {
  TopoRule r{kind};
  r.lhs = PathPattern{true, {{true, "a"}}};
  r.rhs = PathPattern{true, {{true, "a"}, {true, "a"}}};
  return r;
}

}  // namespace

bool is_preset_name(std::string_view name) { return name == "doxastic" || name == "choreo" || name == "siblings"; }

Topology load_preset(std::string_view name) {
  std::vector<TopoRule> rules = {self_rule(Relation::CanDown), self_rule(Relation::CanUp)};
  if (name == "doxastic") {
    rules.push_back(TopoRule{Relation::CanSend, TopoRule::Form::False});
  } else if (name == "choreo") {
    rules.push_back(TopoRule{Relation::CanSend, TopoRule::Form::True});
  } else if (name == "siblings") {
    TopoRule r{Relation::CanSend};
    r.lhs = PathPattern{true, {{true, "a"}}};
    r.rhs = PathPattern{true, {{true, "b"}}};
    rules.push_back(r);
  } else {
    throw std::invalid_argument("unknown topology preset '" + std::string(name) + "'");
  }
  return Topology(std::move(rules), std::string(name));
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

PathPattern parse_pattern(const std::string& text, std::size_t line) {
  PathPattern pat;
  if (text == "[]") return pat;
  if (text.empty()) throw TopologyError("empty pattern", line);
  std::size_t i = 0;
  bool first = true;
  while (i <= text.size()) {
    std::size_t dot = text.find('.', i);
    std::string seg = trim(std::string_view(text).substr(i, dot == std::string::npos ? std::string::npos : dot - i));
    if (seg == "*") {
      if (!first) throw TopologyError("'*' may only appear at the head of a pattern", line);
      pat.wildcard = true;
    } else if (!seg.empty() && seg[0] == '$') {
      std::string v = seg.substr(1);
      if (v.empty() || !std::isalpha(static_cast<unsigned char>(v[0])))
        throw TopologyError("bad pattern variable '" + seg + "'", line);
      pat.atoms.push_back({true, v});
    } else if (!seg.empty() && std::isupper(static_cast<unsigned char>(seg[0]))) {
      for (char c : seg)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
          throw TopologyError("bad agent name '" + seg + "'", line);
      pat.atoms.push_back({false, seg});
    } else {
      throw TopologyError("bad pattern segment '" + seg + "'", line);
    }
    first = false;
    if (dot == std::string::npos) break;
    i = dot + 1;
  }
  return pat;
}

}  // namespace

Topology parse_topology(std::string_view text) {
  std::vector<TopoRule> rules;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string body = trim(raw);
    if (body.empty()) continue;
    auto colon = body.find(':');
    if (colon == std::string::npos) throw TopologyError("expected 'kind:'", line);
    std::string kind_text = trim(std::string_view(body).substr(0, colon));
    std::string rest = trim(std::string_view(body).substr(colon + 1));
    Relation kind;
    if (kind_text == "candown") {
      kind = Relation::CanDown;
    } else if (kind_text == "canup") {
      kind = Relation::CanUp;
    } else if (kind_text == "cansend") {
      kind = Relation::CanSend;
    } else {
      throw TopologyError("unknown relation '" + kind_text + "' (expected candown, canup or cansend)", line);
    }
    TopoRule rule{kind};
    if (rest == "true") {
      rule.form = TopoRule::Form::True;
    } else if (rest == "false") {
      rule.form = TopoRule::Form::False;
    } else {
      auto arrow = rest.find("=>");
      if (arrow == std::string::npos) throw TopologyError("expected 'pattern => pattern', 'true' or 'false'", line);
      rule.lhs = parse_pattern(trim(std::string_view(rest).substr(0, arrow)), line);
      rule.rhs = parse_pattern(trim(std::string_view(rest).substr(arrow + 2)), line);
    }
    rules.push_back(std::move(rule));
  }
  return Topology(std::move(rules));
}

bool flow_reachable(const Topology& t, const Path& src, const Path& dst, const std::set<Path>& universe) {
  if (src == dst) return true;
  std::set<Path> nodes = universe;
  nodes.insert(src);
  nodes.insert(dst);

  auto successors = [&](const Path& a) {
    std::vector<Path> out;
    for (const auto& b : nodes) {
      if (b == a) continue;
      bool edge = t.holds(Relation::CanSend, a, b);
      // a = p, b = p ++ g: p flows up into b when canup(p, b).
      if (!edge && a.is_prefix_of(b)) edge = t.holds(Relation::CanUp, a, b);
      // a = p ++ g, b = p: a flows down into p when candown(p, a).
      if (!edge && b.is_prefix_of(a)) edge = t.holds(Relation::CanDown, b, a);
      if (edge) out.push_back(b);
    }
    return out;
  };

  std::set<Path> seen{src};
  std::deque<Path> work{src};
  while (!work.empty()) {
    Path cur = work.front();
    work.pop_front();
    for (auto& next : successors(cur)) {
      if (next == dst) return true;
      if (seen.insert(next).second) work.push_back(std::move(next));
    }
  }
  return false;
}

}  // namespace corps
